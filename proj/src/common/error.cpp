#include "bandit_icl/error.hpp"

namespace bandit_icl {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::MissingLatentShared: return "MissingLatentShared";
    case ErrorKind::NoNewActions: return "NoNewActions";
    case ErrorKind::SingularGram: return "SingularGram";
    case ErrorKind::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::BadSplit: return "BadSplit";
    case ErrorKind::UnexploredArm: return "UnexploredArm";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::TooFewItems: return "TooFewItems";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::Truncated: return "Truncated";
    case ErrorKind::ContextOverflow: return "ContextOverflow";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::StaleTrace: return "StaleTrace";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::HeterogeneousShapes: return "HeterogeneousShapes";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::Io: return "Io";
    case ErrorKind::EmptyList: return "EmptyList";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace bandit_icl
