#pragma once
// Relevance-aware individual-item fairness: IAA, IFD (division and
// multiplication), HD, MME, IBO/IWO, and the expected-exposure family
// II-F/AI-F. Corrected variants min-max normalize per user against the
// extreme-strategy rankings, so a run that realizes a strategy scores
// exactly 0 or 1.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "recfair/core.hpp"
#include "recfair/measure.hpp"

namespace recfair {

// Per-user relevance over the whole catalog, min-max normalized per user.
// Users whose raw values are all equal cannot be normalized; from_qrels
// records them in `rejected`, from_raw refuses them outright.
struct NormalizedRelevance {
  std::vector<std::string> user_ids;  // included users, ascending
  std::unordered_map<std::string, int> user_index;
  std::vector<std::vector<double>> values;  // dense over catalog indices
  std::vector<std::string> rejected;

  int n() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }
  bool has(const std::string& user) const;
  const std::vector<double>& of(const std::string& user) const;
  void add(const std::string& user, std::vector<double> normalized);

  static NormalizedRelevance from_qrels(const Qrels& qrels, const Catalog& catalog);
  static NormalizedRelevance from_raw(
      const Catalog& catalog,
      const std::vector<std::pair<std::string, std::vector<double>>>& raw);
};

// Truncated examination weight at `position` under cutoff k: zero beyond k,
// and the linear-normalized-original kind throws at k=1.
double exam_weight(const ExamFn& fn, int position, int k);

// Full rankings realizing a per-user fairness extreme. Relevant items keep
// ascending index order inside their block, irrelevant items likewise.
enum class ExtremeStrategy { Top, Bottom, HalfHalf, Split };

std::vector<int> extreme_ranking(const std::string& measure, ExtremeStrategy strategy,
                                 const std::vector<int>& relevant, int n, int k,
                                 int split_top = 0);

// The split size a for which a-at-top/(r-a)-at-bottom maximizes IFD-mul(u);
// a = r is the all-at-top strategy. Smallest maximizer wins ties.
int ifd_mul_unfairest_split(int k, int n, int r);

// IAA. `exam_variant` selects the linear-normalized examination function
// (original or corrected); original with k=1 yields an undefined result.
// Requires full rankings.
MeasureResult iaa(const RunSet& full_run, const NormalizedRelevance& rel, int k,
                  ExamKind exam_variant, Variant variant);
MeasureResult iaa(const std::vector<RunSet>& rounds,
                  const std::vector<NormalizedRelevance>& rel_rounds, int k,
                  ExamKind exam_variant, Variant variant);

// IFD with division. The original combiner ignores the cutoff unless
// `include_topk_indicator` is set; the corrected variant always applies it.
// Users with one relevant item score 0 under the corrected variant (or are
// excluded when `exclude_single_relevant` is set) and are counted in a
// warning either way. Requires full rankings.
MeasureResult ifd_div(const RunSet& full_run, const Qrels& qrels, int k, Variant variant,
                      bool include_topk_indicator = false,
                      bool exclude_single_relevant = false);
MeasureResult ifd_div(const std::vector<RunSet>& rounds, const Qrels& qrels, int k,
                      Variant variant, bool include_topk_indicator = false,
                      bool exclude_single_relevant = false);

// IFD with multiplication. Requires full rankings and n >= 2.
MeasureResult ifd_mul(const RunSet& full_run, const Qrels& qrels, int k, Variant variant);
MeasureResult ifd_mul(const std::vector<RunSet>& rounds, const Qrels& qrels, int k,
                      Variant variant);

// Hellinger distance between the aggregated relevance and interaction
// distributions over reference positions 1..k. Single-round by definition.
// Ground-truth ordering is deterministic: relevance descending, item index
// ascending. Users with no relevant items are excluded and reported.
MeasureResult hd(const RunSet& run, const Qrels& qrels, int k, double gamma = 0.9);

// Mean max envy across items under inverse positional examination.
// Requires full rankings.
MeasureResult mme(const RunSet& full_run, const Qrels& qrels, int k);
MeasureResult mme(const std::vector<RunSet>& rounds, const Qrels& qrels, int k);

// Share of items whose own impact beats (IBO) or trails (IWO) the
// thresholded uniform-policy impact, rescaled to [0,1]. The original variant
// is undefined whenever an item is relevant to no user; the corrected
// variant restricts to items relevant to at least one user. Requires full
// rankings.
std::pair<MeasureResult, MeasureResult> ibo_iwo(const RunSet& full_run, const Qrels& qrels,
                                                int k, Variant variant,
                                                double better_threshold = 1.1,
                                                double worse_threshold = 0.9);

// Squared deviation between realized and target expected exposure: II-F per
// user-item pair, AI-F after averaging each side across users. AI-F has no
// corrected variant (its extremes have no known formulation).
enum class TargetKind { IIF, AIF };

const char* target_kind_name(TargetKind kind);

MeasureResult expected_exposure_fairness(TargetKind kind, const std::vector<RunSet>& rounds,
                                         const Qrels& qrels, const Catalog& catalog, int k,
                                         double gamma, Variant variant);
MeasureResult expected_exposure_fairness(TargetKind kind, const RunSet& run,
                                         const Qrels& qrels, const Catalog& catalog, int k,
                                         double gamma, Variant variant);

// Independent per-slot evaluation; the parallel kernel partitions slots
// across threads and must be bit-identical to the serial one.
namespace serial {
std::vector<double> fill_slots(int count, const std::function<double(int)>& fn);
}  // namespace serial

namespace parallel {
std::vector<double> fill_slots(int count, const std::function<double(int)>& fn);
}  // namespace parallel

}  // namespace recfair
