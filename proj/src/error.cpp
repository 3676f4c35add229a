#include "hierflow/error.hpp"

namespace hierflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateCode: return "DuplicateCode";
    case ErrorCode::MissingParent: return "MissingParent";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnknownCode: return "UnknownCode";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownTypeCode: return "UnknownTypeCode";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EntityWithoutEvents: return "EntityWithoutEvents";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::UnknownSelection: return "UnknownSelection";
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::LeafNode: return "LeafNode";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::OutOfBoundsInitial: return "OutOfBoundsInitial";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownEdge: return "UnknownEdge";
    case ErrorCode::NoMatchingEntities: return "NoMatchingEntities";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace hierflow
