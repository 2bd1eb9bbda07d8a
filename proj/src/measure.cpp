#include "recfair/measure.hpp"

namespace recfair {

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::HigherIsFairer: return "higher-is-fairer";
    case Direction::LowerIsFairer: return "lower-is-fairer";
    case Direction::HigherIsBetter: return "higher-is-better";
  }
  return "?";
}

const char* variant_name(Variant variant) {
  switch (variant) {
    case Variant::Original: return "original";
    case Variant::Defined: return "defined";
    case Variant::Corrected: return "corrected";
  }
  return "?";
}

}  // namespace recfair
