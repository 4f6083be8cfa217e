#include <iostream>
#include <string>
#include <vector>

#include "pcacouple_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pcacouple::cli::run(args, std::cout, std::cerr);
}
