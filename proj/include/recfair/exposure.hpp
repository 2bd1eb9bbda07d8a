#pragma once
// Exposure-based individual-item fairness: Jain, QF, Ent, Gini/Gini-w, FSat,
// VoCD, and the expected-exposure disparities II-D/AI-D, plus closed-form
// most-fair/most-unfair bounds and min-max corrected variants.

#include <cstdint>
#include <vector>

#include "recfair/core.hpp"
#include "recfair/measure.hpp"

namespace recfair {

enum class BoundedMeasure { Jain, QF, Ent, Gini, GiniW, FSat, VoCD };

const char* bounded_measure_name(BoundedMeasure measure);

struct BoundsParams {
  double log_base = 0.0;  // entropy; 0 selects base n
  double beta = 0.0;      // vocd tolerance
  ExamFn exam;            // gini exam weights; Uniform selects the unweighted bounds
};

struct BoundsResult {
  double most_unfair = 0.0;
  double most_fair = 0.0;
  std::string formula;
};

// Closed-form bounds @k for m full-length lists over n items. GiniW with
// km > n has no closed-form fairest value and throws.
BoundsResult exposure_bounds(BoundedMeasure measure, int k, int m, int n,
                             const BoundsParams& params = {});

MeasureResult jain(const RunSet& run, const Catalog& catalog, int k, Variant variant);
MeasureResult qf(const RunSet& run, const Catalog& catalog, int k, Variant variant);
// log_base 0 selects base n. The original form is flagged undefined whenever
// some catalog item is never recommended.
MeasureResult entropy(const RunSet& run, const Catalog& catalog, int k, Variant variant,
                      double log_base = 0.0);
// Uniform exam weights give Gini, Dcg weights give Gini-w. The corrected
// weighted form uses both bounds only when km <= n, otherwise it divides by
// the most-unfair bound alone.
MeasureResult gini(const std::vector<RunSet>& rounds, const Catalog& catalog, int k,
                   Variant variant, const ExamFn& exam);
MeasureResult gini(const RunSet& run, const Catalog& catalog, int k, Variant variant,
                   const ExamFn& exam);
MeasureResult fsat(const RunSet& run, const Catalog& catalog, int k, Variant variant);
// Mean coverage-disparity violation over alpha-similar recommended item
// pairs. Null similarity with the default alpha treats every pair as
// similar; an empty pair set flags the result undefined.
MeasureResult vocd(const RunSet& run, const Catalog& catalog, int k,
                   const PairSim* similarity = nullptr, double alpha = 2.0,
                   double beta = 0.0);

enum class DisparityKind { IID, AID };

// Squared deviation from the uniform exposure target under RBP browsing.
// IID averages per (user, item); AID averages per item after aggregating
// over users. Rounds beyond the first must cover the same users.
MeasureResult expected_exposure_disparity(DisparityKind kind, const std::vector<RunSet>& rounds,
                                          const Catalog& catalog, int k, double gamma = 0.8);
MeasureResult expected_exposure_disparity(DisparityKind kind, const RunSet& run,
                                          const Catalog& catalog, int k, double gamma = 0.8);

// Per-user sums of squared deviation (E_ui - target)^2 over the catalog;
// lists[u] holds one ranked list per round, aligned by user. Both
// implementations fill the same per-user slots; callers reduce in user index
// order so parallel results match the serial ones bit for bit.
namespace serial {
std::vector<double> disparity_user_sums(const std::vector<std::vector<const std::vector<int>*>>& lists,
                                        int k, int n, double gamma, double target);
}
namespace parallel {
std::vector<double> disparity_user_sums(const std::vector<std::vector<const std::vector<int>*>>& lists,
                                        int k, int n, double gamma, double target);
}

}  // namespace recfair
