#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bandit_icl {

enum class ErrorKind {
  InvalidArgument,
  IndexOutOfRange,
  MissingLatentShared,
  NoNewActions,
  SingularGram,
  EmptyTrajectory,
  InsufficientData,
  BadSplit,
  UnexploredArm,
  ParseError,
  TooFewItems,
  VersionMismatch,
  Truncated,
  ContextOverflow,
  ShapeMismatch,
  StaleTrace,
  EmptyDataset,
  HeterogeneousShapes,
  CorruptCheckpoint,
  Validation,
  Io,
  EmptyList,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace bandit_icl
