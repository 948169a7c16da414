#pragma once

#include <stdexcept>
#include <string>

namespace cskl {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or input violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Kernel construction produced an unusable matrix (non-finite entry, bad trace).
class KernelError : public Error {
 public:
  using Error::Error;
};

/// I/O failure on a path (open, write, rename).
class IoError : public Error {
 public:
  using Error::Error;
};

/// nu is larger than the class balance allows.
class InfeasibleNu : public Error {
 public:
  using Error::Error;
};

/// SMO ran out of iterations. Carries the last maximal KKT violation.
class SvmNonConvergence : public Error {
 public:
  SvmNonConvergence(const std::string& what, double violation)
      : Error(what), violation_(violation) {}
  double violation() const { return violation_; }

 private:
  double violation_;
};

}  // namespace cskl
