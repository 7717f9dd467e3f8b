#include "hotinfer/errors.hpp"

namespace hotinfer {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::RankDeficientFreeSet: return "RankDeficientFreeSet";
    case ErrorCode::RankDeficientScreenSet: return "RankDeficientScreenSet";
    case ErrorCode::AllRankDeficient: return "AllRankDeficient";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::SigmaCollapse: return "SigmaCollapse";
    case ErrorCode::AllFitsFailed: return "AllFitsFailed";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::DegenerateInnerProduct: return "DegenerateInnerProduct";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidPattern: return "InvalidPattern";
    case ErrorCode::FatalSimFailure: return "FatalSimFailure";
    case ErrorCode::CsvError: return "CsvError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace hotinfer
