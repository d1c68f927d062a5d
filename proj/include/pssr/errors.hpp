#pragma once

#include <stdexcept>
#include <string>

namespace pssr {

/// Base class for every error raised by the library. The CLI maps each
/// subclass onto its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad instance parameters, unreadable files, bad JSON.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Instance collapses under normalization (trivially solvable outside the model).
class DegenerateInstance : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A search or solve ran out of its node / permutation / time budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A program that must be feasible was not, or a requested L admits no scheme.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// Subpacket indexing could not complete for a given count assignment.
class SynthesisFailure : public Error {
 public:
  using Error::Error;
};

/// Decoding recovered a value different from the stored subpacket.
class CorrectnessFailure : public Error {
 public:
  using Error::Error;
};

class PrivacyFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace pssr
