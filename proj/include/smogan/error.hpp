#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smogan {

enum class Errc {
  MissingColumn,
  ParseError,
  EmptyData,
  DimensionMismatch,
  TooFewRows,
  TooFewValues,
  DegenerateDistribution,
  EmptyRareSet,
  NotEnoughNeighbours,
  RareSetTooSmall,
  BadWidths,
  ShapeMismatch,
  NonScalarOutput,
  UnknownLossSpec,
  BatchTooSmall,
  BadBandwidth,
  InsufficientData,
  DivergedTraining,
  LengthMismatch,
  BadComponentCount,
  KTooLarge,
  BadConfig,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the Errc kinds so
/// callers (the CLI in particular) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace smogan
