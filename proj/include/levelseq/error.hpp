#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace levelseq {

enum class ErrorCode {
  RaggedLines,
  BadHeight,
  UnknownChar,
  BadCharMap,
  BadArcTable,
  NotCompletable,
  PathsRequestedButAbsent,
  UnencodableTile,
  MalformedColumn,
  BadDepthCount,
  TruncatedSequence,
  MalformedSequence,
  ShapeMismatch,
  BadCheckpoint,
  EmptyCorpus,
  DivergedLoss,
  InvalidConfig,
  EmptyBatch,
  MissingStd,
  Io,
};

std::string_view to_string(ErrorCode code);

// Domain failure carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace levelseq
