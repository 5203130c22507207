#include "wxv/error.hpp"

namespace wxv {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateGrid: return "DegenerateGrid";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::MissingStep: return "MissingStep";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::UnsupportedVariable: return "UnsupportedVariable";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
    case ErrorCode::NonSmoothPoint: return "NonSmoothPoint";
    case ErrorCode::LeadGridMismatch: return "LeadGridMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace wxv
