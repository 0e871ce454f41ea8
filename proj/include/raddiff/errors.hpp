#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace raddiff {

/// Bad input: a precondition of the called operation does not hold.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested expansion order exceeds what the recursion supports.
class UnsupportedOrder : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// An iterative solve did not converge or produced an inadmissible state.
/// The trace holds the last recorded iteration measures (changes or residuals).
class SolverFailure : public std::runtime_error {
 public:
  explicit SolverFailure(const std::string& what, std::vector<double> trace = {})
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// A consistency check on assembled data failed; indicates a bug.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace raddiff
