#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hierflow {

enum class ErrorCode {
  DuplicateCode,
  MissingParent,
  MultipleRoots,
  NoRoot,
  CycleDetected,
  EmptyInput,
  UnknownCode,
  ParseError,
  UnknownTypeCode,
  EmptyDataset,
  EntityWithoutEvents,
  InvalidSpec,
  UnknownAttribute,
  UnknownSelection,
  EmptyCohort,
  LeafNode,
  InvalidAlpha,
  OutOfBoundsInitial,
  InvalidArgument,
  UnknownEdge,
  NoMatchingEntities,
  NotFound,
  IoError,
  PortInUse,
  BadConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hierflow
