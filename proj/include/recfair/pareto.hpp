#pragma once
// Relevance-fairness trade-off frontiers. Builds the most relevant run a
// recommender could produce under the judgements, walks it toward uniform
// item exposure one slot replacement at a time, and scores model runs by
// Euclidean distance to a reference point on the resulting frontier.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "recfair/core.hpp"
#include "recfair/effectiveness.hpp"
#include "recfair/exposure.hpp"
#include "recfair/measure.hpp"

namespace recfair {

// Most relevant reachable run. Users with exactly k relevant items get them
// verbatim; users with more keep the k least exposed of them; users with
// fewer get their relevant items on top and unexposed fillers below, falling
// back to the least exposed already-recommended item when the fresh pool
// runs dry. Fillers never touch the user's history, and a relevant item
// inside the history is rejected outright. Exposure ties break toward the
// lexicographically smallest item id, user ties toward the smallest user id.
RunSet oracle_run(const Qrels& qrels, const Interactions& hist, const Catalog& catalog, int k);

// Measures recorded at every checkpoint. Fairness defaults to the corrected
// exposure measures; `disparities` appends the expected-exposure disparity
// pair, which rides along as extra fairness columns.
struct CheckpointMeasures {
  std::vector<EffMeasure> rel = {EffMeasure::P, EffMeasure::MAP, EffMeasure::R, EffMeasure::NDCG};
  std::vector<BoundedMeasure> fair = {BoundedMeasure::Jain, BoundedMeasure::Ent,
                                      BoundedMeasure::Gini};
  Variant fair_variant = Variant::Corrected;
  double log_base = 0.0;  // entropy; 0 selects base n
  ExamFn exam;            // gini examination weights; depth is aligned to the sweep's k
  bool disparities = false;
  double gamma = 0.8;     // disparity browsing parameter
};

// One score row per checkpoint, columns fixed by CheckpointMeasures. Row 0 is
// the untouched oracle run and the last row is always the terminal state.
struct FrontierTable {
  int k = 0;
  int m = 0;
  int n = 0;
  int64_t cap = 0;                  // ceil(k*m/n), the per-item exposure target
  int64_t total_replacements = 0;
  int64_t max_count_final = 0;
  std::vector<std::string> rel_ids;
  std::vector<std::string> fair_ids;
  std::vector<Direction> fair_dirs;
  std::vector<int64_t> checkpoints;              // replacements done at each row
  std::vector<std::vector<double>> rel_scores;   // [row][rel column]
  std::vector<std::vector<double>> fair_scores;  // [row][fair column]
  std::vector<std::string> notes;                // skipped placements, early stops
  RunSet final_run;                              // terminal lists; not serialized
};

// Walks the oracle run toward uniform exposure: each step hands one slot of
// the currently most exposed item to a less exposed item, preferring the
// holder who ranks it lowest and receivers for whom the newcomer is relevant,
// then restores relevant-before-filler order in the touched list. Unexposed
// items are drained first; afterwards slots move onto items below the cap
// until every count fits or nothing can move. An item nobody may take is
// skipped and noted rather than looped on. Scores a checkpoint every `every`
// replacements plus the terminal state.
FrontierTable oracle2fair(const Qrels& qrels, const Interactions& hist, const Catalog& catalog,
                          int k, const CheckpointMeasures& measures = {}, int64_t every = 1);

// Slots of over-exposure: sum over items of count - cap where positive. The
// minimum number of replacements a sweep needs to reach the cap.
int64_t excess_exposure(const RunSet& run, const Catalog& catalog, int k);

// Sparse sweep for large inputs: stride excess/(p-1) so about p checkpoints
// cover the walk, one before the first replacement and the terminal state
// forced. Zero excess skips the walk and returns the oracle point alone,
// with a note.
FrontierTable estimate_frontier(const Qrels& qrels, const Interactions& hist,
                                const Catalog& catalog, int k, int p,
                                const CheckpointMeasures& measures = {});

struct FrontierPoint {
  double rel = 0.0;
  double fair = 0.0;
  int64_t checkpoint = 0;  // replacements done when the point was scored
};

// Pareto front for one relevance/fairness measure pair. Points keep raw
// scores, lower-is-fairer measures are not flipped; `fair_dir` says which way
// improves. After dedupe_frontier the points run from the relevance-best end
// to the fairness-best end with rel strictly decreasing; fairness measures
// that improve strictly along the walk come out strictly improving too, so
// the points are mutually non-dominated, while a flat fairness column keeps
// its distinct rel values and shows up as a zero gradient.
struct Frontier {
  std::string rel_id;
  std::string fair_id;
  Direction fair_dir = Direction::HigherIsFairer;
  std::vector<FrontierPoint> points;
  double gradient = 0.0;  // endpoint slope, fair per rel
  bool gradient_defined = false;
  bool fit = false;       // defined and non-zero
};

struct PairGradient {
  double value = 0.0;
  bool defined = false;  // needs two points with distinct rel
  bool fit = false;
};

// Endpoint slope between the first and last stored point.
PairGradient pair_gradient(const Frontier& frontier);

// Sorts by descending rel, keeps the fairness-best point per distinct rel
// value (exact equality, earliest checkpoint on full ties), recomputes the
// gradient.
Frontier dedupe_frontier(Frontier frontier);

// Projects one measure pair out of a table and dedupes it. Unknown column
// ids throw.
Frontier frontier_for(const FrontierTable& table, const std::string& rel_id,
                      const std::string& fair_id);

struct ReferencePoint {
  FrontierPoint point;
  int index = 0;            // position in the frontier's point list
  double arc_length = 0.0;  // cumulative Euclidean length up to `point`
  double total_length = 0.0;
  bool degenerate = false;  // single-point frontier
};

// The point whose cumulative arc length from the relevance-best end is
// nearest to alpha * total length, ties toward the relevance-best end.
// alpha must lie in [0, 1]; a single-point frontier returns that point
// flagged degenerate.
ReferencePoint reference_point(const Frontier& frontier, double alpha);

// Euclidean distance from a model's (rel, fair) scores to the reference
// point, in raw score coordinates. Lower means closer to the frontier.
double dpfr(double model_rel, double model_fair, const FrontierPoint& ref);

// Tab-separated round-trip for scoring offline against a cached frontier.
// Metadata rides in '#' comment lines, scores keep full precision, and the
// terminal run is not serialized.
void write_frontier_tsv(std::ostream& os, const FrontierTable& table);
FrontierTable read_frontier_tsv(std::istream& is);

}  // namespace recfair
