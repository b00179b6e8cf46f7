#include "levelseq/error.hpp"

namespace levelseq {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RaggedLines: return "RaggedLines";
    case ErrorCode::BadHeight: return "BadHeight";
    case ErrorCode::UnknownChar: return "UnknownChar";
    case ErrorCode::BadCharMap: return "BadCharMap";
    case ErrorCode::BadArcTable: return "BadArcTable";
    case ErrorCode::NotCompletable: return "NotCompletable";
    case ErrorCode::PathsRequestedButAbsent: return "PathsRequestedButAbsent";
    case ErrorCode::UnencodableTile: return "UnencodableTile";
    case ErrorCode::MalformedColumn: return "MalformedColumn";
    case ErrorCode::BadDepthCount: return "BadDepthCount";
    case ErrorCode::TruncatedSequence: return "TruncatedSequence";
    case ErrorCode::MalformedSequence: return "MalformedSequence";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::MissingStd: return "MissingStd";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace levelseq
