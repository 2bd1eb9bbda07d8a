#pragma once
// Common result carrier for every measure. Undefinedness is a value-level
// flag (reports show "nan"), never an exception, so batch evaluation can
// proceed past incomputable entries.

#include <map>
#include <string>
#include <vector>

namespace recfair {

enum class Direction { HigherIsFairer, LowerIsFairer, HigherIsBetter };

const char* direction_name(Direction d);

enum class Variant {
  Original,
  Defined,    // entropy only: sum restricted to recommended items
  Corrected,  // min-max normalized against the achievable extremes
};

const char* variant_name(Variant variant);

// Machine-readable warning codes.
namespace warn {
inline const char* kUndefined = "UNDEFINED";
inline const char* kAlwaysFair = "ALWAYS_FAIR";
inline const char* kConstant = "CONSTANT";
inline const char* kDegenerate = "DEGENERATE";
inline const char* kSingleRelevant = "SINGLE_RELEVANT_USERS";
}  // namespace warn

struct MeasureResult {
  std::string id;
  std::string variant;      // "original", "corrected", "defined", ...
  double score = 0.0;
  Direction direction = Direction::LowerIsFairer;
  bool undefined = false;
  std::vector<std::string> warnings;
  std::map<std::string, double> params;           // recorded numeric parameters
  std::map<std::string, std::string> str_params;  // e.g. examination-function kind
  std::map<std::string, double> per_user;         // optional breakdown, keyed by user id

  MeasureResult& warn_code(const std::string& code) {
    warnings.push_back(code);
    return *this;
  }
  MeasureResult& mark_undefined() {
    undefined = true;
    warnings.push_back(warn::kUndefined);
    return *this;
  }
};

}  // namespace recfair
