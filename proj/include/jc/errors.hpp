#pragma once

#include <stdexcept>
#include <string>

namespace jc {

/// Base class for all typed errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An answer string became empty after normalization.
struct InvalidAnswer : Error {
  explicit InvalidAnswer(const std::string& msg) : Error(msg) {}
};

/// A judge reply contained no usable score literal.
struct ParseFailure : Error {
  explicit ParseFailure(const std::string& msg) : Error(msg) {}
};

/// Every replicate of a judge query failed parsing after retries.
struct ScoreUnavailable : Error {
  explicit ScoreUnavailable(const std::string& msg) : Error(msg) {}
};

/// A trace is missing the intrinsic signal required by a field builder.
struct IntrinsicUnavailable : Error {
  explicit IntrinsicUnavailable(const std::string& msg) : Error(msg) {}
};

/// An answer group has no row in the restricted beta matrix.
struct CandidateNotScored : Error {
  explicit CandidateNotScored(const std::string& msg) : Error(msg) {}
};

/// The solver was handed an empty set of eligible groups.
struct EmptyCandidateSet : Error {
  explicit EmptyCandidateSet(const std::string& msg) : Error(msg) {}
};

/// A subsample request exceeded the pool size.
struct InsufficientTraces : Error {
  explicit InsufficientTraces(const std::string& msg) : Error(msg) {}
};

}  // namespace jc
