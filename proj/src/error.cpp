#include "prfcw/error.hpp"

namespace prfcw {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::NonFiniteMoment: return "NonFiniteMoment";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::FlatnessUndetectable: return "FlatnessUndetectable";
    case ErrorCode::DegenerateField: return "DegenerateField";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::GridUnderflow: return "GridUnderflow";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::BadSubset: return "BadSubset";
    case ErrorCode::ScanTooLarge: return "ScanTooLarge";
    case ErrorCode::OddSampleCount: return "OddSampleCount";
    case ErrorCode::EigFailure: return "EigFailure";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NotReached: return "NotReached";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace prfcw
