#pragma once

#include <stdexcept>
#include <string>

namespace talkmoves {

// Root of every error the library raises. `kind()` is a stable identifier
// used by the CLI when reporting failures.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message);
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define TALKMOVES_DECLARE_ERROR(Name)                                     \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

// Input / validation
TALKMOVES_DECLARE_ERROR(ValidationError);
TALKMOVES_DECLARE_ERROR(SessionMismatchError);
TALKMOVES_DECLARE_ERROR(ZeroDurationError);
TALKMOVES_DECLARE_ERROR(IOError);
TALKMOVES_DECLARE_ERROR(JoinError);
TALKMOVES_DECLARE_ERROR(DomainError);
TALKMOVES_DECLARE_ERROR(EmptyInputError);
TALKMOVES_DECLARE_ERROR(UnknownMoveError);

// Dataset construction
TALKMOVES_DECLARE_ERROR(NotInstructorError);
TALKMOVES_DECLARE_ERROR(TargetTooLongError);
TALKMOVES_DECLARE_ERROR(NoPositivesError);
TALKMOVES_DECLARE_ERROR(InsufficientDataError);

// Annotation
TALKMOVES_DECLARE_ERROR(MissingPairError);
TALKMOVES_DECLARE_ERROR(EmptyReferenceError);

// Classifier / inference
TALKMOVES_DECLARE_ERROR(BackendError);
TALKMOVES_DECLARE_ERROR(EmptyTestSetError);
TALKMOVES_DECLARE_ERROR(AuthError);
TALKMOVES_DECLARE_ERROR(RemoteJobFailed);
TALKMOVES_DECLARE_ERROR(TimeoutError);
TALKMOVES_DECLARE_ERROR(CorruptCheckpointError);
// Inference stopped early or left sessions failed; the checkpoint is kept.
TALKMOVES_DECLARE_ERROR(IncompleteRunError);

// Regression
TALKMOVES_DECLARE_ERROR(RankDeficientError);
TALKMOVES_DECLARE_ERROR(DimensionMismatchError);
TALKMOVES_DECLARE_ERROR(TooFewClustersError);

#undef TALKMOVES_DECLARE_ERROR

// Line-oriented parse failure; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace talkmoves
