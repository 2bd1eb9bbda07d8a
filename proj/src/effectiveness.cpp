#include "recfair/effectiveness.hpp"

#include <algorithm>
#include <cmath>

namespace recfair {

const char* eff_measure_name(EffMeasure m) {
  switch (m) {
    case EffMeasure::HR: return "HR";
    case EffMeasure::MRR: return "MRR";
    case EffMeasure::P: return "P";
    case EffMeasure::R: return "R";
    case EffMeasure::MAP: return "MAP";
    case EffMeasure::NDCG: return "NDCG";
  }
  return "?";
}

EffMeasure eff_measure_from_name(const std::string& name) {
  if (name == "HR") return EffMeasure::HR;
  if (name == "MRR") return EffMeasure::MRR;
  if (name == "P") return EffMeasure::P;
  if (name == "R") return EffMeasure::R;
  if (name == "MAP") return EffMeasure::MAP;
  if (name == "NDCG") return EffMeasure::NDCG;
  throw ValidationError("unknown effectiveness measure '" + name + "'");
}

double effectiveness_for_user(EffMeasure measure, const std::vector<int>& list,
                              const std::vector<int>& rel, int k) {
  const int total_rel = static_cast<int>(rel.size());
  const int depth = std::min<int>(k, static_cast<int>(list.size()));
  const int ideal = std::min(total_rel, k);

  int hits = 0;
  int first_hit = 0;  // 1-based rank of the first relevant item, 0 = none
  double ap_sum = 0.0;
  double dcg = 0.0;
  for (int z = 0; z < depth; ++z) {
    if (!std::binary_search(rel.begin(), rel.end(), list[z])) continue;
    ++hits;
    if (first_hit == 0) first_hit = z + 1;
    ap_sum += static_cast<double>(hits) / static_cast<double>(z + 1);
    dcg += 1.0 / std::log2(static_cast<double>(z) + 2.0);
  }

  switch (measure) {
    case EffMeasure::HR: return hits > 0 ? 1.0 : 0.0;
    case EffMeasure::MRR: return first_hit > 0 ? 1.0 / first_hit : 0.0;
    case EffMeasure::P: return static_cast<double>(hits) / static_cast<double>(k);
    case EffMeasure::R: return static_cast<double>(hits) / static_cast<double>(total_rel);
    case EffMeasure::MAP: return ap_sum / static_cast<double>(ideal);
    case EffMeasure::NDCG: {
      double idcg = 0.0;
      for (int z = 1; z <= ideal; ++z) idcg += 1.0 / std::log2(static_cast<double>(z) + 1.0);
      return dcg / idcg;
    }
  }
  return 0.0;
}

namespace serial {

std::vector<double> effectiveness_kernel(EffMeasure measure,
                                         const std::vector<const std::vector<int>*>& lists,
                                         const std::vector<const std::vector<int>*>& rels, int k) {
  static const std::vector<int> kEmpty;
  std::vector<double> out(lists.size(), 0.0);
  for (size_t i = 0; i < lists.size(); ++i)
    out[i] = effectiveness_for_user(measure, lists[i] ? *lists[i] : kEmpty, *rels[i], k);
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> effectiveness_kernel(EffMeasure measure,
                                         const std::vector<const std::vector<int>*>& lists,
                                         const std::vector<const std::vector<int>*>& rels, int k) {
  static const std::vector<int> kEmpty;
  std::vector<double> out(lists.size(), 0.0);
  const int64_t count = static_cast<int64_t>(lists.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < count; ++i)
    out[i] = effectiveness_for_user(measure, lists[i] ? *lists[i] : kEmpty, *rels[i], k);
  return out;
}

}  // namespace parallel

PerUserScores per_user_effectiveness(EffMeasure measure, const RunSet& run, const Qrels& qrels,
                                     int k) {
  PerUserScores result;
  result.measure = eff_measure_name(measure);
  result.k = k;

  std::vector<std::string> users;
  std::vector<const std::vector<int>*> lists;
  std::vector<const std::vector<int>*> rels;
  for (const auto& [user, rel] : qrels.rel) {
    if (rel.empty()) {
      result.excluded.push_back(user);
      continue;
    }
    const int u = run.user_of(user);
    if (u < 0) result.missing.push_back(user);
    users.push_back(user);
    lists.push_back(u < 0 ? nullptr : &run.lists[u]);
    rels.push_back(&rel);
  }
  for (const auto& user : run.user_ids) {
    const auto* rel = qrels.relevant_items(user);
    if (!rel) result.excluded.push_back(user);  // unjudged, |R*_u| = 0
  }
  if (users.empty()) throw ValidationError("no evaluable users");

  const std::vector<double> values = parallel::effectiveness_kernel(measure, lists, rels, k);
  for (size_t i = 0; i < users.size(); ++i) result.score.emplace(users[i], values[i]);
  return result;
}

MeanScore mean_effectiveness(const PerUserScores& scores) {
  if (scores.score.empty()) throw ValidationError("mean effectiveness over an empty score map");
  MeanScore ms;
  for (const auto& [user, value] : scores.score) ms.mean += value;
  ms.count = static_cast<int>(scores.score.size());
  ms.mean /= ms.count;
  return ms;
}

}  // namespace recfair
