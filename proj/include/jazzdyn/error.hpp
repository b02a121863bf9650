#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jazzdyn {

enum class Errc {
  // corpus
  MalformedHeader,
  UnsupportedTimeDivision,
  TruncatedTrack,
  MalformedTrack,
  MissingColumn,
  UnparsableRow,
  EmptyPiece,
  TooFewEvents,
  PieceMismatch,
  // hbsl
  InvalidSymbol,
  NonpositiveProbability,
  AlphabetMismatch,
  AbsoluteContinuityViolation,
  EmptySequence,
  // dynamics
  EmptyInput,
  InsufficientPieces,
  // embedding
  TooFewRows,
  NonFiniteInput,
  // acoustics
  ZeroVariance,
  CutoffTooHigh,
  TooShort,
  EmptyGroup,
  TooFewCycles,
  BadWav,
  // pipeline
  UnknownKey,
  MissingRequired,
  BadValue,
  Io,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnsupportedTimeDivision: return "UnsupportedTimeDivision";
    case Errc::TruncatedTrack: return "TruncatedTrack";
    case Errc::MalformedTrack: return "MalformedTrack";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::UnparsableRow: return "UnparsableRow";
    case Errc::EmptyPiece: return "EmptyPiece";
    case Errc::TooFewEvents: return "TooFewEvents";
    case Errc::PieceMismatch: return "PieceMismatch";
    case Errc::InvalidSymbol: return "InvalidSymbol";
    case Errc::NonpositiveProbability: return "NonpositiveProbability";
    case Errc::AlphabetMismatch: return "AlphabetMismatch";
    case Errc::AbsoluteContinuityViolation: return "AbsoluteContinuityViolation";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::InsufficientPieces: return "InsufficientPieces";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::CutoffTooHigh: return "CutoffTooHigh";
    case Errc::TooShort: return "TooShort";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::TooFewCycles: return "TooFewCycles";
    case Errc::BadWav: return "BadWav";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::MissingRequired: return "MissingRequired";
    case Errc::BadValue: return "BadValue";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace jazzdyn
