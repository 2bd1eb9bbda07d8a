#pragma once
// Per-user and mean effectiveness (HR, MRR, P, R, MAP, NDCG). NDCG and MAP
// normalize by min(|R*_u|, k); NDCG uses the log2 discount.

#include <map>
#include <string>
#include <vector>

#include "recfair/core.hpp"

namespace recfair {

enum class EffMeasure { HR, MRR, P, R, MAP, NDCG };

const char* eff_measure_name(EffMeasure m);
EffMeasure eff_measure_from_name(const std::string& name);

struct PerUserScores {
  std::string measure;
  int k = 0;
  std::map<std::string, double> score;   // user -> value in [0,1]
  std::vector<std::string> excluded;     // |R*_u| = 0, not scored
  std::vector<std::string> missing;      // judged but absent from the run, scored 0
};

// Score one already-joined user; `list` may be empty (user missing from run).
double effectiveness_for_user(EffMeasure measure, const std::vector<int>& list,
                              const std::vector<int>& rel, int k);

namespace serial {
// lists[i] may be null (user missing from the run); rels[i] never is.
std::vector<double> effectiveness_kernel(EffMeasure measure,
                                         const std::vector<const std::vector<int>*>& lists,
                                         const std::vector<const std::vector<int>*>& rels, int k);
}  // namespace serial

namespace parallel {
std::vector<double> effectiveness_kernel(EffMeasure measure,
                                         const std::vector<const std::vector<int>*>& lists,
                                         const std::vector<const std::vector<int>*>& rels, int k);
}  // namespace parallel

// Evaluates every judged user with at least one relevant item; throws
// ValidationError("no evaluable users") when there is none.
PerUserScores per_user_effectiveness(EffMeasure measure, const RunSet& run, const Qrels& qrels,
                                     int k);

struct MeanScore {
  double mean = 0.0;
  int count = 0;
};

MeanScore mean_effectiveness(const PerUserScores& scores);

}  // namespace recfair
