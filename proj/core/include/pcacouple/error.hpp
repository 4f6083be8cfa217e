#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pcacouple {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: unknown labels, cyclic orders, bad parameters, shape mismatches.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A configurable size limit (up-set count, pattern pairs, state space...) was exceeded.
class CapExceeded : public Error {
 public:
  CapExceeded(const std::string& what, std::uint64_t requested, std::uint64_t cap)
      : Error(what + ": requested " + std::to_string(requested) + " exceeds cap " +
              std::to_string(cap)),
        requested_(requested),
        cap_(cap) {}

  std::uint64_t requested() const noexcept { return requested_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t requested_;
  std::uint64_t cap_;
};

/// Raised by the coupling engine when a tuple certified increasing loses its
/// pathwise order. This is an implementation bug, never a runtime condition.
class OrderViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace pcacouple
