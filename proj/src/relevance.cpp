#include "recfair/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>

namespace recfair {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MeasureResult base_result(const char* id, Variant variant, Direction direction, int k, int m,
                          int n) {
  MeasureResult r;
  r.id = id;
  r.variant = variant_name(variant);
  r.direction = direction;
  r.params["k"] = static_cast<double>(k);
  r.params["m"] = static_cast<double>(m);
  r.params["n"] = static_cast<double>(n);
  return r;
}

void reject_defined(Variant variant, const char* id) {
  if (variant == Variant::Defined)
    throw ValidationError(std::string(id) + ": variant 'defined' only applies to entropy");
}

// Per-user ranked lists aligned across rounds. Users follow first-appearance
// order. With allow_partial, a user keeps lists only for the rounds that
// contain them; otherwise every round must cover the same users.
struct Aligned {
  int w = 0;
  std::vector<std::string> users;
  std::vector<std::vector<const std::vector<int>*>> lists;  // [user][covered round]
};

Aligned align_rounds(const std::vector<RunSet>& rounds, const std::string& id,
                     bool allow_partial) {
  if (rounds.empty()) throw ValidationError(id + ": needs at least one round");
  Aligned a;
  a.w = static_cast<int>(rounds.size());
  std::unordered_map<std::string, int> slot;
  for (const auto& round : rounds)
    for (const auto& user : round.user_ids)
      if (slot.emplace(user, static_cast<int>(a.users.size())).second) a.users.push_back(user);
  if (a.users.empty()) throw ValidationError(id + ": run has no users");
  a.lists.resize(a.users.size());
  for (size_t ri = 0; ri < rounds.size(); ++ri) {
    const RunSet& round = rounds[ri];
    if (!allow_partial && round.m() != static_cast<int>(a.users.size()))
      throw ValidationError("multi-round: rounds cover different user sets");
    for (size_t u = 0; u < a.users.size(); ++u) {
      const int idx = round.user_of(a.users[u]);
      if (idx < 0) {
        if (!allow_partial)
          throw ValidationError("multi-round: user '" + a.users[u] + "' missing from round " +
                                std::to_string(ri + 1));
        continue;
      }
      a.lists[u].push_back(&round.lists[idx]);
    }
  }
  return a;
}

// Full rankings: every list permutes the same n items.
int require_full(const Aligned& a, const std::string& id) {
  int n = -1;
  for (size_t u = 0; u < a.users.size(); ++u) {
    for (const auto* list : a.lists[u]) {
      if (n < 0) n = static_cast<int>(list->size());
      if (static_cast<int>(list->size()) != n || n == 0)
        throw ValidationError(id + ": user '" + a.users[u] + "' must rank the full catalog");
      for (int item : *list)
        if (item < 0 || item >= n)
          throw ValidationError(id + ": user '" + a.users[u] + "' ranks an unknown item");
    }
  }
  if (n <= 0) throw ValidationError(id + ": empty rankings");
  return n;
}

void require_in_catalog(const Aligned& a, int n, const std::string& id) {
  for (size_t u = 0; u < a.users.size(); ++u)
    for (const auto* list : a.lists[u])
      for (int item : *list)
        if (item < 0 || item >= n)
          throw ValidationError(id + ": user '" + a.users[u] + "' ranks an unknown item");
}

bool identical_rounds(const Aligned& a) {
  for (const auto& per_user : a.lists)
    for (size_t i = 1; i < per_user.size(); ++i)
      if (*per_user[i] != *per_user[0]) return false;
  return true;
}

const std::vector<int>* relevant_of(const Qrels& qrels, const std::string& user, int n,
                                    const std::string& id) {
  const auto* items = qrels.relevant_items(user);
  if (items && !items->empty() && (items->front() < 0 || items->back() >= n))
    throw ValidationError(id + ": relevance names an item outside the catalog for user '" +
                          user + "'");
  return items;
}

// Relevance values read off in rank order; the corrected variants evaluate
// strategy rankings through the same vector shape, which is what makes a run
// realizing a strategy score exactly 0 or 1.
std::vector<double> rel_by_rank(const std::vector<int>& list, const std::vector<double>& rel) {
  std::vector<double> out(list.size());
  for (size_t z = 0; z < list.size(); ++z) out[z] = rel[static_cast<size_t>(list[z])];
  return out;
}

// Binary relevance as seen from the top: `top` ones, zeros, `bottom` ones.
std::vector<double> relevance_pattern(int n, int top, int bottom) {
  std::vector<double> rel(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < top; ++i) rel[static_cast<size_t>(i)] = 1.0;
  for (int i = 0; i < bottom; ++i) rel[static_cast<size_t>(n - 1 - i)] = 1.0;
  return rel;
}

// Mean absolute gap between examination and normalized relevance per rank.
double iaa_user(const std::vector<double>& rel, const std::vector<double>& wts) {
  double acc = 0.0;
  for (size_t z = 0; z < rel.size(); ++z) {
    const double e = z < wts.size() ? wts[z] : 0.0;
    acc += std::fabs(e - rel[z]);
  }
  return acc / static_cast<double>(rel.size());
}

// Mean positive gap of relevance-adjusted exposure over ordered item pairs
// whose first grade is at least the second; self-pairs count.
double ifd_div_user(const std::vector<double>& rel, const ExamFn& dcg, bool indicator) {
  std::vector<double> js;
  std::vector<double> grades;
  for (size_t z = 0; z < rel.size(); ++z) {
    if (rel[z] <= 0.0) continue;
    const int rank = static_cast<int>(z) + 1;
    const double e = indicator ? dcg.weight(rank) : dcg.weight_full(rank);
    js.push_back(e / rel[z]);
    grades.push_back(rel[z]);
  }
  if (js.size() < 2) return 0.0;
  double acc = 0.0;
  int64_t pairs = 0;
  for (size_t p = 0; p < js.size(); ++p)
    for (size_t q = 0; q < js.size(); ++q) {
      if (grades[p] < grades[q]) continue;
      ++pairs;
      const double d = js[p] - js[q];
      if (d > 0.0) acc += d;
    }
  return acc / static_cast<double>(pairs);
}

// Mean squared gap of relevance-weighted exposure over all ordered item
// pairs, expanded to avoid the explicit double loop. Unranked items carry
// zero exposure and stay inside the pair count.
double ifd_mul_user(const std::vector<double>& rel, const ExamFn& dcg, int n) {
  double s = 0.0;
  double s2 = 0.0;
  for (size_t z = 0; z < rel.size(); ++z) {
    const double j = rel[z] * dcg.weight(static_cast<int>(z) + 1);
    s += j;
    s2 += j * j;
  }
  return (2.0 * static_cast<double>(n) * s2 - 2.0 * s * s) /
         (static_cast<double>(n) * static_cast<double>(n - 1));
}

// Squared gap between realized and target exposure, averaged over the
// catalog. Relevant items share the user's exposure budget evenly; items the
// list never shows contribute their full target.
double iif_user(const std::vector<double>& rel, int r_total, int n, double t,
                const ExamFn& rbp) {
  double acc = 0.0;
  int listed_rel = 0;
  for (size_t z = 0; z < rel.size(); ++z) {
    const double e = rbp.weight(static_cast<int>(z) + 1);
    double target = 0.0;
    if (rel[z] > 0.0) {
      ++listed_rel;
      target = t;
    }
    const double d = e - target;
    acc += d * d;
  }
  acc += static_cast<double>(r_total - listed_rel) * (t * t);
  return acc / static_cast<double>(n);
}

double target_level(int r_total, double gamma) {
  if (r_total <= 0) return 0.0;
  return (1.0 - std::pow(gamma, static_cast<double>(r_total))) /
         ((1.0 - gamma) * static_cast<double>(r_total));
}

}  // namespace

bool NormalizedRelevance::has(const std::string& user) const {
  return user_index.find(user) != user_index.end();
}

const std::vector<double>& NormalizedRelevance::of(const std::string& user) const {
  const auto it = user_index.find(user);
  if (it == user_index.end())
    throw ValidationError("normalized relevance: unknown user '" + user + "'");
  return values[static_cast<size_t>(it->second)];
}

void NormalizedRelevance::add(const std::string& user, std::vector<double> normalized) {
  if (user_index.find(user) != user_index.end())
    throw ValidationError("normalized relevance: duplicate user '" + user + "'");
  user_index.emplace(user, static_cast<int>(user_ids.size()));
  user_ids.push_back(user);
  values.push_back(std::move(normalized));
}

NormalizedRelevance NormalizedRelevance::from_qrels(const Qrels& qrels, const Catalog& catalog) {
  NormalizedRelevance out;
  const int n = catalog.n();
  for (const auto& [user, items] : qrels.rel) {
    const int r = static_cast<int>(items.size());
    if (r == 0 || r == n) {
      out.rejected.push_back(user);  // flat relevance cannot be normalized
      continue;
    }
    std::vector<double> rel(static_cast<size_t>(n), 0.0);
    for (int i : items) {
      if (i < 0 || i >= n)
        throw ValidationError("normalized relevance: item outside the catalog for user '" +
                              user + "'");
      rel[static_cast<size_t>(i)] = 1.0;
    }
    out.add(user, std::move(rel));
  }
  return out;
}

NormalizedRelevance NormalizedRelevance::from_raw(
    const Catalog& catalog, const std::vector<std::pair<std::string, std::vector<double>>>& raw) {
  std::vector<std::pair<std::string, std::vector<double>>> rows = raw;
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  NormalizedRelevance out;
  const int n = catalog.n();
  for (auto& [user, vals] : rows) {
    if (static_cast<int>(vals.size()) != n)
      throw ValidationError("normalized relevance: user '" + user +
                            "' must grade every catalog item");
    const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
    if (!(*hi > *lo)) {
      out.rejected.push_back(user);
      continue;
    }
    std::vector<double> norm(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) norm[i] = (vals[i] - *lo) / (*hi - *lo);
    out.add(user, std::move(norm));
  }
  return out;
}

double exam_weight(const ExamFn& fn, int position, int k) {
  if (position < 1) throw ValidationError("exam weight: position must be at least 1");
  if (k < 1) throw ValidationError("exam weight: k must be at least 1");
  ExamFn f = fn;
  f.k = k;
  return f.weight(position);
}

const char* target_kind_name(TargetKind kind) {
  return kind == TargetKind::IIF ? "ii-f" : "ai-f";
}

std::vector<int> extreme_ranking(const std::string& measure, ExtremeStrategy strategy,
                                 const std::vector<int>& relevant, int n, int k, int split_top) {
  if (measure != "iaa" && measure != "ifd-div" && measure != "ifd-mul" && measure != "ii-f")
    throw ValidationError("extreme-ranking: unknown measure '" + measure + "'");
  if (n < 1) throw ValidationError("extreme-ranking: catalog is empty");
  if (k < 1 || k > n) throw ValidationError("extreme-ranking: k must lie in [1, n]");
  std::vector<int> rel = relevant;
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
  if (!rel.empty() && (rel.front() < 0 || rel.back() >= n))
    throw ValidationError("extreme-ranking: relevant item outside the catalog");
  const int r = static_cast<int>(rel.size());

  int top = 0;
  switch (strategy) {
    case ExtremeStrategy::Top: top = r; break;
    case ExtremeStrategy::Bottom: top = 0; break;
    case ExtremeStrategy::HalfHalf: top = (r + 1) / 2; break;
    case ExtremeStrategy::Split:
      if (split_top < 0 || split_top > r)
        throw ValidationError("extreme-ranking: split size must lie in [0, r]");
      top = split_top;
      break;
  }

  // Ties inside a block break by ascending item id.
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < top; ++i) out.push_back(rel[static_cast<size_t>(i)]);
  std::vector<char> is_rel(static_cast<size_t>(n), 0);
  for (int i : rel) is_rel[static_cast<size_t>(i)] = 1;
  for (int i = 0; i < n; ++i)
    if (!is_rel[static_cast<size_t>(i)]) out.push_back(i);
  for (int i = top; i < r; ++i) out.push_back(rel[static_cast<size_t>(i)]);
  return out;
}

int ifd_mul_unfairest_split(int k, int n, int r) {
  if (n < 2) throw ValidationError("ifd-mul: needs at least two items");
  if (k < 1 || k > n) throw ValidationError("ifd-mul: k must lie in [1, n]");
  if (r < 1 || r > n) throw ValidationError("ifd-mul: r must lie in [1, n]");
  const ExamFn dcg{ExamKind::Dcg, k};
  int best = 1;
  double best_score = ifd_mul_user(relevance_pattern(n, 1, r - 1), dcg, n);
  for (int a = 2; a <= r; ++a) {
    const double score = ifd_mul_user(relevance_pattern(n, a, r - a), dcg, n);
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

namespace serial {

std::vector<double> fill_slots(int count, const std::function<double(int)>& fn) {
  std::vector<double> out(static_cast<size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out[static_cast<size_t>(i)] = fn(i);
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> fill_slots(int count, const std::function<double(int)>& fn) {
#ifdef _OPENMP
  std::vector<double> out(static_cast<size_t>(std::max(count, 0)));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i) out[static_cast<size_t>(i)] = fn(i);
  return out;
#else
  return serial::fill_slots(count, fn);
#endif
}

}  // namespace parallel

MeasureResult iaa(const std::vector<RunSet>& rounds,
                  const std::vector<NormalizedRelevance>& rel_rounds, int k,
                  ExamKind exam_variant, Variant variant) {
  reject_defined(variant, "iaa");
  if (exam_variant != ExamKind::LinearNormOriginal &&
      exam_variant != ExamKind::LinearNormCorrected)
    throw ValidationError("iaa: examination must be a linear-normalized kind");
  const Aligned a = align_rounds(rounds, "iaa", false);
  const int w = a.w;
  const int m_total = static_cast<int>(a.users.size());
  const int n = require_full(a, "iaa");
  if (k < 1) throw ValidationError("iaa: k must be at least 1");
  if (k > n) throw ValidationError("iaa: k exceeds the catalog size");
  if (rel_rounds.empty() || (rel_rounds.size() != 1 && static_cast<int>(rel_rounds.size()) != w))
    throw ValidationError("iaa: relevance tables must number one or one per round");

  MeasureResult r =
      base_result("iaa", variant, Direction::LowerIsFairer, k, m_total, n);
  r.str_params["exam"] = exam_kind_name(exam_variant);
  r.params["W"] = static_cast<double>(w);
  if (exam_variant == ExamKind::LinearNormOriginal && k == 1) {
    r.score = kNaN;
    return r.mark_undefined();  // (k-z)/(k-1) has no value at k = 1
  }
  if (variant == Variant::Corrected && w > 1 &&
      (rel_rounds.size() != 1 || !identical_rounds(a)))
    throw ValidationError("iaa: corrected variant needs identical rounds");

  const ExamFn exam{exam_variant, k};
  std::vector<double> wts(static_cast<size_t>(k));
  for (int z = 1; z <= k; ++z) wts[static_cast<size_t>(z - 1)] = exam.weight(z);

  std::vector<int> included;
  int missing = 0;
  for (int u = 0; u < m_total; ++u) {
    bool ok = true;
    for (const auto& table : rel_rounds) {
      if (!table.has(a.users[static_cast<size_t>(u)])) {
        ok = false;
        break;
      }
      if (static_cast<int>(table.of(a.users[static_cast<size_t>(u)]).size()) != n)
        throw ValidationError("iaa: relevance for user '" + a.users[static_cast<size_t>(u)] +
                              "' does not cover the catalog");
    }
    if (ok)
      included.push_back(u);
    else
      ++missing;
  }
  if (included.empty()) throw ValidationError("iaa: no evaluable users");
  const int mi = static_cast<int>(included.size());

  const bool single = w == 1 || variant == Variant::Corrected;
  std::vector<double> scores;
  int degenerate = 0;
  if (single) {
    const NormalizedRelevance& table = rel_rounds.front();
    std::vector<const std::vector<double>*> rels(static_cast<size_t>(mi));
    std::vector<const std::vector<int>*> lsts(static_cast<size_t>(mi));
    for (int j = 0; j < mi; ++j) {
      rels[static_cast<size_t>(j)] = &table.of(a.users[static_cast<size_t>(included[j])]);
      lsts[static_cast<size_t>(j)] = a.lists[static_cast<size_t>(included[j])].front();
    }
    scores = parallel::fill_slots(mi, [&](int j) {
      return iaa_user(rel_by_rank(*lsts[static_cast<size_t>(j)], *rels[static_cast<size_t>(j)]),
                      wts);
    });
    if (variant == Variant::Corrected) {
      for (int j = 0; j < mi; ++j) {
        std::vector<double> lo = *rels[static_cast<size_t>(j)];
        std::vector<double> hi = lo;
        std::sort(lo.begin(), lo.end(), std::greater<double>());
        std::sort(hi.begin(), hi.end());
        const double mn = iaa_user(lo, wts);
        const double mx = iaa_user(hi, wts);
        const double den = mx - mn;
        if (den == 0.0) {
          scores[static_cast<size_t>(j)] = kNaN;
          ++degenerate;
          continue;
        }
        scores[static_cast<size_t>(j)] = (scores[static_cast<size_t>(j)] - mn) / den;
      }
    }
  } else {
    scores = parallel::fill_slots(mi, [&](int j) {
      const size_t u = static_cast<size_t>(included[static_cast<size_t>(j)]);
      std::vector<double> acc(static_cast<size_t>(n), 0.0);
      for (int ri = 0; ri < w; ++ri) {
        const auto& list = *a.lists[u][static_cast<size_t>(ri)];
        const auto& rel = rel_rounds.size() == 1
                              ? rel_rounds.front().of(a.users[u])
                              : rel_rounds[static_cast<size_t>(ri)].of(a.users[u]);
        for (int z = 1; z <= k; ++z)
          acc[static_cast<size_t>(list[static_cast<size_t>(z - 1)])] +=
              wts[static_cast<size_t>(z - 1)];
        for (int i = 0; i < n; ++i) acc[static_cast<size_t>(i)] -= rel[static_cast<size_t>(i)];
      }
      double s = 0.0;
      for (double v : acc) s += std::fabs(v);
      return s / (static_cast<double>(n) * static_cast<double>(w));
    });
  }

  double sum = 0.0;
  int counted = 0;
  for (int j = 0; j < mi; ++j) {
    const double s = scores[static_cast<size_t>(j)];
    if (std::isnan(s)) continue;
    sum += s;
    ++counted;
    r.per_user[a.users[static_cast<size_t>(included[static_cast<size_t>(j)])]] = s;
  }
  if (counted == 0) throw ValidationError("iaa: no evaluable users");
  r.score = sum / static_cast<double>(counted);
  r.params["m"] = static_cast<double>(counted);
  if (missing + degenerate > 0)
    r.params["excluded_users"] = static_cast<double>(missing + degenerate);
  if (degenerate > 0) {
    r.params["degenerate_users"] = static_cast<double>(degenerate);
    r.warn_code(warn::kDegenerate);
  }
  return r;
}

MeasureResult iaa(const RunSet& full_run, const NormalizedRelevance& rel, int k,
                  ExamKind exam_variant, Variant variant) {
  return iaa(std::vector<RunSet>{full_run}, std::vector<NormalizedRelevance>{rel}, k,
             exam_variant, variant);
}

MeasureResult ifd_div(const std::vector<RunSet>& rounds, const Qrels& qrels, int k,
                      Variant variant, bool include_topk_indicator,
                      bool exclude_single_relevant) {
  reject_defined(variant, "ifd-div");
  const Aligned a = align_rounds(rounds, "ifd-div", true);
  const int w = a.w;
  const int m_total = static_cast<int>(a.users.size());
  const int n = require_full(a, "ifd-div");
  if (k < 1) throw ValidationError("ifd-div: k must be at least 1");
  if (k > n) throw ValidationError("ifd-div: k exceeds the catalog size");
  if (variant == Variant::Corrected && w > 1 && !identical_rounds(a))
    throw ValidationError("ifd-div: corrected variant needs identical rounds");

  // The corrected variant always restricts exposure to the examined top-k;
  // the original may keep the full discount, which makes it k-invariant.
  const bool indicator = variant == Variant::Corrected || include_topk_indicator;
  const ExamFn dcg{ExamKind::Dcg, k};

  struct Plan {
    int u = 0;
    const std::vector<int>* items = nullptr;
  };
  std::vector<Plan> plan;
  int zero_rel = 0;
  int single_rel = 0;
  for (int u = 0; u < m_total; ++u) {
    const auto* items = relevant_of(qrels, a.users[static_cast<size_t>(u)], n, "ifd-div");
    const int rr = items ? static_cast<int>(items->size()) : 0;
    if (rr == 0) {
      ++zero_rel;  // no pair has a positive lower grade
      continue;
    }
    if (rr == 1) {
      ++single_rel;
      if (exclude_single_relevant) continue;
    }
    plan.push_back({u, items});
  }
  if (plan.empty()) throw ValidationError("ifd-div: no evaluable users");
  const int mi = static_cast<int>(plan.size());

  const bool single = w == 1 || variant == Variant::Corrected;
  std::vector<double> scores;
  if (single) {
    scores = parallel::fill_slots(mi, [&](int j) {
      const Plan& p = plan[static_cast<size_t>(j)];
      std::vector<double> rel(static_cast<size_t>(n), 0.0);
      for (int i : *p.items) rel[static_cast<size_t>(i)] = 1.0;
      return ifd_div_user(rel_by_rank(*a.lists[static_cast<size_t>(p.u)].front(), rel), dcg,
                          indicator);
    });
  } else {
    scores = parallel::fill_slots(mi, [&](int j) {
      const Plan& p = plan[static_cast<size_t>(j)];
      const int rr = static_cast<int>(p.items->size());
      if (rr < 2) return 0.0;
      std::vector<int> slot(static_cast<size_t>(n), -1);
      for (int s = 0; s < rr; ++s)
        slot[static_cast<size_t>((*p.items)[static_cast<size_t>(s)])] = s;
      std::vector<double> js(static_cast<size_t>(rr), 0.0);
      const auto& covered = a.lists[static_cast<size_t>(p.u)];
      for (const auto* list : covered) {
        for (int z = 1; z <= n; ++z) {
          const int s = slot[static_cast<size_t>((*list)[static_cast<size_t>(z - 1)])];
          if (s >= 0) js[static_cast<size_t>(s)] += indicator ? dcg.weight(z) : dcg.weight_full(z);
        }
      }
      for (double& v : js) v /= static_cast<double>(covered.size());
      double acc = 0.0;
      for (int p1 = 0; p1 < rr; ++p1)
        for (int q1 = 0; q1 < rr; ++q1) {
          const double d = js[static_cast<size_t>(p1)] - js[static_cast<size_t>(q1)];
          if (d > 0.0) acc += d;
        }
      return acc / (static_cast<double>(rr) * static_cast<double>(rr));
    });
  }

  int degenerate = 0;
  if (variant == Variant::Corrected) {
    std::map<int, std::pair<double, double>> extremes;
    for (int j = 0; j < mi; ++j) {
      const int rr = static_cast<int>(plan[static_cast<size_t>(j)].items->size());
      if (rr == 1) {
        scores[static_cast<size_t>(j)] = 0.0;  // nothing to redistribute
        continue;
      }
      auto it = extremes.find(rr);
      if (it == extremes.end()) {
        const int top = (rr + 1) / 2;
        const double mn = ifd_div_user(relevance_pattern(n, 0, rr), dcg, true);
        const double mx = ifd_div_user(relevance_pattern(n, top, rr - top), dcg, true);
        it = extremes.emplace(rr, std::make_pair(mn, mx)).first;
      }
      const double den = it->second.second - it->second.first;
      if (den == 0.0) {
        scores[static_cast<size_t>(j)] = kNaN;
        ++degenerate;
        continue;
      }
      scores[static_cast<size_t>(j)] = (scores[static_cast<size_t>(j)] - it->second.first) / den;
    }
  }

  MeasureResult r = base_result("ifd-div", variant, Direction::LowerIsFairer, k, m_total, n);
  r.params["W"] = static_cast<double>(w);
  r.params["topk_indicator"] = indicator ? 1.0 : 0.0;
  double sum = 0.0;
  int counted = 0;
  for (int j = 0; j < mi; ++j) {
    const double s = scores[static_cast<size_t>(j)];
    if (std::isnan(s)) continue;
    sum += s;
    ++counted;
    r.per_user[a.users[static_cast<size_t>(plan[static_cast<size_t>(j)].u)]] = s;
  }
  if (counted == 0) throw ValidationError("ifd-div: no evaluable users");
  r.score = sum / static_cast<double>(counted);
  r.params["m"] = static_cast<double>(counted);
  if (zero_rel > 0) r.params["users_without_relevant"] = static_cast<double>(zero_rel);
  if (single_rel > 0) {
    r.params["single_relevant_users"] = static_cast<double>(single_rel);
    r.warn_code(warn::kSingleRelevant);
  }
  if (degenerate > 0) {
    r.params["degenerate_users"] = static_cast<double>(degenerate);
    r.warn_code(warn::kDegenerate);
  }
  int partial = 0;
  for (const Plan& p : plan)
    if (static_cast<int>(a.lists[static_cast<size_t>(p.u)].size()) < w) ++partial;
  if (partial > 0) r.params["partial_round_users"] = static_cast<double>(partial);
  return r;
}

MeasureResult ifd_div(const RunSet& full_run, const Qrels& qrels, int k, Variant variant,
                      bool include_topk_indicator, bool exclude_single_relevant) {
  return ifd_div(std::vector<RunSet>{full_run}, qrels, k, variant, include_topk_indicator,
                 exclude_single_relevant);
}

MeasureResult ifd_mul(const std::vector<RunSet>& rounds, const Qrels& qrels, int k,
                      Variant variant) {
  reject_defined(variant, "ifd-mul");
  const Aligned a = align_rounds(rounds, "ifd-mul", true);
  const int w = a.w;
  const int m_total = static_cast<int>(a.users.size());
  const int n = require_full(a, "ifd-mul");
  if (n < 2) throw ValidationError("ifd-mul: needs at least two items");
  if (k < 1) throw ValidationError("ifd-mul: k must be at least 1");
  if (k > n) throw ValidationError("ifd-mul: k exceeds the catalog size");
  if (variant == Variant::Corrected && w > 1 && !identical_rounds(a))
    throw ValidationError("ifd-mul: corrected variant needs identical rounds");

  const ExamFn dcg{ExamKind::Dcg, k};

  struct Plan {
    int u = 0;
    const std::vector<int>* items = nullptr;
  };
  std::vector<Plan> plan;
  int zero_rel = 0;
  for (int u = 0; u < m_total; ++u) {
    const auto* items = relevant_of(qrels, a.users[static_cast<size_t>(u)], n, "ifd-mul");
    const int rr = items ? static_cast<int>(items->size()) : 0;
    if (rr == 0) {
      ++zero_rel;
      continue;
    }
    plan.push_back({u, items});
  }
  if (plan.empty()) throw ValidationError("ifd-mul: no evaluable users");
  const int mi = static_cast<int>(plan.size());

  const bool single = w == 1 || variant == Variant::Corrected;
  std::vector<double> scores;
  if (single) {
    scores = parallel::fill_slots(mi, [&](int j) {
      const Plan& p = plan[static_cast<size_t>(j)];
      std::vector<double> rel(static_cast<size_t>(n), 0.0);
      for (int i : *p.items) rel[static_cast<size_t>(i)] = 1.0;
      return ifd_mul_user(rel_by_rank(*a.lists[static_cast<size_t>(p.u)].front(), rel), dcg, n);
    });
  } else {
    scores = parallel::fill_slots(mi, [&](int j) {
      const Plan& p = plan[static_cast<size_t>(j)];
      const int rr = static_cast<int>(p.items->size());
      std::vector<int> slot(static_cast<size_t>(n), -1);
      for (int s = 0; s < rr; ++s)
        slot[static_cast<size_t>((*p.items)[static_cast<size_t>(s)])] = s;
      std::vector<double> js(static_cast<size_t>(rr), 0.0);
      const auto& covered = a.lists[static_cast<size_t>(p.u)];
      for (const auto* list : covered) {
        const int depth = std::min(k, n);
        for (int z = 1; z <= depth; ++z) {
          const int s = slot[static_cast<size_t>((*list)[static_cast<size_t>(z - 1)])];
          if (s >= 0) js[static_cast<size_t>(s)] += dcg.weight(z);
        }
      }
      double sj = 0.0;
      double sj2 = 0.0;
      for (double v : js) {
        const double scaled = v / static_cast<double>(covered.size());
        sj += scaled;
        sj2 += scaled * scaled;
      }
      return (2.0 * static_cast<double>(n) * sj2 - 2.0 * sj * sj) /
             (static_cast<double>(n) * static_cast<double>(n - 1));
    });
  }

  int degenerate = 0;
  if (variant == Variant::Corrected) {
    std::map<int, std::pair<double, double>> extremes;
    for (int j = 0; j < mi; ++j) {
      const int rr = static_cast<int>(plan[static_cast<size_t>(j)].items->size());
      auto it = extremes.find(rr);
      if (it == extremes.end()) {
        const double mn = ifd_mul_user(relevance_pattern(n, 0, rr), dcg, n);
        double mx = mn;
        for (int split = 1; split <= rr; ++split)
          mx = std::max(mx, ifd_mul_user(relevance_pattern(n, split, rr - split), dcg, n));
        it = extremes.emplace(rr, std::make_pair(mn, mx)).first;
      }
      const double den = it->second.second - it->second.first;
      if (den == 0.0) {
        scores[static_cast<size_t>(j)] = kNaN;
        ++degenerate;
        continue;
      }
      scores[static_cast<size_t>(j)] = (scores[static_cast<size_t>(j)] - it->second.first) / den;
    }
  }

  MeasureResult r = base_result("ifd-mul", variant, Direction::LowerIsFairer, k, m_total, n);
  r.params["W"] = static_cast<double>(w);
  double sum = 0.0;
  int counted = 0;
  for (int j = 0; j < mi; ++j) {
    const double s = scores[static_cast<size_t>(j)];
    if (std::isnan(s)) continue;
    sum += s;
    ++counted;
    r.per_user[a.users[static_cast<size_t>(plan[static_cast<size_t>(j)].u)]] = s;
  }
  if (counted == 0) throw ValidationError("ifd-mul: no evaluable users");
  r.score = sum / static_cast<double>(counted);
  r.params["m"] = static_cast<double>(counted);
  if (zero_rel > 0) r.params["users_without_relevant"] = static_cast<double>(zero_rel);
  if (degenerate > 0) {
    r.params["degenerate_users"] = static_cast<double>(degenerate);
    r.warn_code(warn::kDegenerate);
  }
  int partial = 0;
  for (const Plan& p : plan)
    if (static_cast<int>(a.lists[static_cast<size_t>(p.u)].size()) < w) ++partial;
  if (partial > 0) r.params["partial_round_users"] = static_cast<double>(partial);
  return r;
}

MeasureResult ifd_mul(const RunSet& full_run, const Qrels& qrels, int k, Variant variant) {
  return ifd_mul(std::vector<RunSet>{full_run}, qrels, k, variant);
}

MeasureResult hd(const RunSet& run, const Qrels& qrels, int k, double gamma) {
  if (run.m() == 0) throw ValidationError("hd: run has no users");
  if (k < 1) throw ValidationError("hd: k must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("hd: gamma must lie in (0, 1)");

  // Under binary relevance the patience cascade collapses: examination stops
  // at the first relevant item, so a user's realized profile is a one-hot at
  // that item's position in the relevance-then-id reference ordering, or all
  // zero when no relevant item is examined.
  std::vector<double> qacc(static_cast<size_t>(k), 0.0);
  std::vector<double> cacc(static_cast<size_t>(k), 0.0);
  int included = 0;
  int excluded = 0;
  for (int u = 0; u < run.m(); ++u) {
    const auto* items = qrels.relevant_items(run.user_ids[static_cast<size_t>(u)]);
    const int rr = items ? static_cast<int>(items->size()) : 0;
    if (rr == 0) {
      ++excluded;
      continue;
    }
    ++included;
    for (int p = 1; p <= std::min(rr, k); ++p)
      qacc[static_cast<size_t>(p - 1)] += 1.0 / static_cast<double>(rr);
    const auto& list = run.lists[static_cast<size_t>(u)];
    const int depth = std::min(k, static_cast<int>(list.size()));
    int first_item = -1;
    for (int z = 1; z <= depth; ++z) {
      const int item = list[static_cast<size_t>(z - 1)];
      if (std::binary_search(items->begin(), items->end(), item)) {
        first_item = item;
        break;
      }
    }
    if (first_item < 0) continue;
    const int ref =
        1 + static_cast<int>(std::lower_bound(items->begin(), items->end(), first_item) -
                             items->begin());
    if (ref <= k) cacc[static_cast<size_t>(ref - 1)] += 1.0;
  }
  if (included == 0) throw ValidationError("hd: no evaluable users");

  double acc = 0.0;
  for (int p = 0; p < k; ++p) {
    const double q = qacc[static_cast<size_t>(p)] / static_cast<double>(included);
    const double c = cacc[static_cast<size_t>(p)] / static_cast<double>(included);
    const double d = std::sqrt(q) - std::sqrt(c);
    acc += d * d;
  }

  MeasureResult r;
  r.id = "hd";
  r.variant = variant_name(Variant::Original);
  r.direction = Direction::LowerIsFairer;
  r.score = std::sqrt(acc / 2.0);
  r.params["k"] = static_cast<double>(k);
  r.params["m"] = static_cast<double>(included);
  r.params["gamma"] = gamma;
  if (excluded > 0) r.params["excluded_users"] = static_cast<double>(excluded);
  return r;
}

MeasureResult mme(const std::vector<RunSet>& rounds, const Qrels& qrels, int k) {
  const Aligned a = align_rounds(rounds, "mme", false);
  const int w = a.w;
  const int m = static_cast<int>(a.users.size());
  const int n = require_full(a, "mme");
  if (k < 1) throw ValidationError("mme: k must be at least 1");
  if (k > n) throw ValidationError("mme: k exceeds the catalog size");

  const ExamFn inv{ExamKind::Inverse, k};
  std::vector<std::vector<double>> place(static_cast<size_t>(m),
                                         std::vector<double>(static_cast<size_t>(n), 0.0));
  for (int u = 0; u < m; ++u) {
    auto& row = place[static_cast<size_t>(u)];
    for (const auto* list : a.lists[static_cast<size_t>(u)])
      for (int z = 1; z <= k; ++z)
        row[static_cast<size_t>((*list)[static_cast<size_t>(z - 1)])] += inv.weight(z);
    if (w > 1)
      for (double& v : row) v /= static_cast<double>(w);
  }

  std::vector<std::vector<int>> fans(static_cast<size_t>(n));
  for (int u = 0; u < m; ++u) {
    const auto* items = relevant_of(qrels, a.users[static_cast<size_t>(u)], n, "mme");
    if (!items) continue;
    for (int i : *items) fans[static_cast<size_t>(i)].push_back(u);
  }

  // envy of item i: the best impact any item could draw from i's fans, less
  // what i itself draws
  const std::vector<double> envy = parallel::fill_slots(n, [&](int i) {
    std::vector<double> v(static_cast<size_t>(n), 0.0);
    for (int u : fans[static_cast<size_t>(i)]) {
      const auto& row = place[static_cast<size_t>(u)];
      for (int j = 0; j < n; ++j) v[static_cast<size_t>(j)] += row[static_cast<size_t>(j)];
    }
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, x);
    return (mx - v[static_cast<size_t>(i)]) / static_cast<double>(m);
  });

  double acc = 0.0;
  for (double e : envy) acc += e;
  MeasureResult r = base_result("mme", Variant::Original, Direction::LowerIsFairer, k, m, n);
  r.params["W"] = static_cast<double>(w);
  r.score = acc / static_cast<double>(n);
  return r;
}

MeasureResult mme(const RunSet& full_run, const Qrels& qrels, int k) {
  return mme(std::vector<RunSet>{full_run}, qrels, k);
}

std::pair<MeasureResult, MeasureResult> ibo_iwo(const RunSet& full_run, const Qrels& qrels,
                                                int k, Variant variant, double better_threshold,
                                                double worse_threshold) {
  reject_defined(variant, "ibo/iwo");
  if (!(worse_threshold < better_threshold))
    throw ValidationError("ibo/iwo: thresholds must satisfy worse < better");
  const int m = full_run.m();
  if (m == 0) throw ValidationError("ibo/iwo: run has no users");
  int n = -1;
  for (int u = 0; u < m; ++u) {
    const auto& list = full_run.lists[static_cast<size_t>(u)];
    if (n < 0) n = static_cast<int>(list.size());
    if (static_cast<int>(list.size()) != n || n == 0)
      throw ValidationError("ibo/iwo: user '" + full_run.user_ids[static_cast<size_t>(u)] +
                            "' must rank the full catalog");
    for (int item : list)
      if (item < 0 || item >= n)
        throw ValidationError("ibo/iwo: user '" + full_run.user_ids[static_cast<size_t>(u)] +
                              "' ranks an unknown item");
  }
  if (k < 1) throw ValidationError("ibo/iwo: k must be at least 1");
  if (k > n) throw ValidationError("ibo/iwo: k exceeds the catalog size");

  const ExamFn inv{ExamKind::Inverse, k};
  std::vector<double> own(static_cast<size_t>(n), 0.0);
  std::vector<int> cnt(static_cast<size_t>(n), 0);
  for (int u = 0; u < m; ++u) {
    const auto* items = relevant_of(qrels, full_run.user_ids[static_cast<size_t>(u)], n, "ibo/iwo");
    if (!items || items->empty()) continue;
    for (int i : *items) ++cnt[static_cast<size_t>(i)];
    const auto& list = full_run.lists[static_cast<size_t>(u)];
    for (int z = 1; z <= k; ++z) {
      const int item = list[static_cast<size_t>(z - 1)];
      if (std::binary_search(items->begin(), items->end(), item))
        own[static_cast<size_t>(item)] += inv.weight(z);
    }
  }
  double hk = 0.0;
  for (int p = 1; p <= k; ++p) hk += 1.0 / static_cast<double>(p);

  MeasureResult bo = base_result("ibo", variant, Direction::HigherIsFairer, k, m, n);
  MeasureResult wo = base_result("iwo", variant, Direction::LowerIsFairer, k, m, n);
  bo.params["threshold"] = better_threshold;
  wo.params["threshold"] = worse_threshold;

  if (variant == Variant::Original) {
    // ratio form: an item relevant to nobody has zero uniform impact and the
    // ratio divides by zero
    for (int i = 0; i < n; ++i)
      if (cnt[static_cast<size_t>(i)] == 0) {
        bo.score = kNaN;
        wo.score = kNaN;
        bo.mark_undefined();
        wo.mark_undefined();
        return {bo, wo};
      }
    int nb = 0;
    int nw = 0;
    for (int i = 0; i < n; ++i) {
      const double impact = own[static_cast<size_t>(i)] / static_cast<double>(m);
      const double unif = static_cast<double>(cnt[static_cast<size_t>(i)]) * hk /
                          (static_cast<double>(m) * static_cast<double>(n));
      const double ratio = impact / unif;
      if (ratio >= better_threshold) ++nb;
      if (ratio <= worse_threshold) ++nw;
    }
    bo.score = static_cast<double>(nb) / static_cast<double>(n);
    wo.score = static_cast<double>(nw) / static_cast<double>(n);
    return {bo, wo};
  }

  // corrected: product form, restricted to items somebody finds relevant
  int iminus = 0;
  int nb = 0;
  int nw = 0;
  for (int i = 0; i < n; ++i) {
    if (cnt[static_cast<size_t>(i)] == 0) continue;
    ++iminus;
    const double impact = own[static_cast<size_t>(i)] / static_cast<double>(m);
    const double unif = static_cast<double>(cnt[static_cast<size_t>(i)]) * hk /
                        (static_cast<double>(m) * static_cast<double>(n));
    if (impact >= better_threshold * unif) ++nb;
    if (impact <= worse_threshold * unif) ++nw;
  }
  bo.params["i_minus"] = static_cast<double>(iminus);
  wo.params["i_minus"] = static_cast<double>(iminus);
  if (iminus == 0) {
    bo.score = kNaN;
    wo.score = kNaN;
    bo.mark_undefined();
    wo.mark_undefined();
    return {bo, wo};
  }
  bo.score = static_cast<double>(nb) / static_cast<double>(iminus);
  wo.score = static_cast<double>(nw) / static_cast<double>(iminus);
  return {bo, wo};
}

MeasureResult expected_exposure_fairness(TargetKind kind, const std::vector<RunSet>& rounds,
                                         const Qrels& qrels, const Catalog& catalog, int k,
                                         double gamma, Variant variant) {
  const std::string id = target_kind_name(kind);
  reject_defined(variant, id.c_str());
  if (kind == TargetKind::AIF && variant == Variant::Corrected)
    throw ValidationError("ai-f: corrected variant is not defined");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ValidationError(id + ": gamma must lie in (0, 1)");
  const Aligned a = align_rounds(rounds, id, false);
  const int w = a.w;
  const int m = static_cast<int>(a.users.size());
  const int n = catalog.n();
  if (n < 1) throw ValidationError(id + ": catalog is empty");
  if (k < 1) throw ValidationError(id + ": k must be at least 1");
  if (k > n) throw ValidationError(id + ": k exceeds the catalog size");
  require_in_catalog(a, n, id);

  const ExamFn rbp{ExamKind::Rbp, k, gamma};
  std::vector<const std::vector<int>*> rel_items(static_cast<size_t>(m), nullptr);
  std::vector<int> rel_count(static_cast<size_t>(m), 0);
  std::vector<double> level(static_cast<size_t>(m), 0.0);
  for (int u = 0; u < m; ++u) {
    const auto* items = relevant_of(qrels, a.users[static_cast<size_t>(u)], n, id);
    rel_items[static_cast<size_t>(u)] = items;
    rel_count[static_cast<size_t>(u)] = items ? static_cast<int>(items->size()) : 0;
    level[static_cast<size_t>(u)] = target_level(rel_count[static_cast<size_t>(u)], gamma);
  }

  MeasureResult r = base_result(id.c_str(), variant, Direction::LowerIsFairer, k, m, n);
  r.params["gamma"] = gamma;
  r.params["W"] = static_cast<double>(w);

  if (kind == TargetKind::AIF) {
    std::vector<double> sum_e(static_cast<size_t>(n), 0.0);
    std::vector<double> sum_t(static_cast<size_t>(n), 0.0);
    for (int u = 0; u < m; ++u) {
      for (const auto* list : a.lists[static_cast<size_t>(u)]) {
        const int depth = std::min(k, static_cast<int>(list->size()));
        for (int z = 1; z <= depth; ++z)
          sum_e[static_cast<size_t>((*list)[static_cast<size_t>(z - 1)])] += rbp.weight(z);
      }
      if (rel_items[static_cast<size_t>(u)])
        for (int i : *rel_items[static_cast<size_t>(u)])
          sum_t[static_cast<size_t>(i)] += level[static_cast<size_t>(u)];
    }
    double acc = 0.0;
    const double mw = static_cast<double>(m) * static_cast<double>(w);
    for (int i = 0; i < n; ++i) {
      const double d =
          sum_e[static_cast<size_t>(i)] / mw - sum_t[static_cast<size_t>(i)] / static_cast<double>(m);
      acc += d * d;
    }
    r.score = acc / static_cast<double>(n);
    return r;
  }

  if (variant == Variant::Corrected && w > 1 && !identical_rounds(a))
    throw ValidationError("ii-f: corrected variant needs identical rounds");
  const bool single = w == 1 || variant == Variant::Corrected;

  std::vector<double> scores;
  if (single) {
    scores = parallel::fill_slots(m, [&](int u) {
      std::vector<double> rel(static_cast<size_t>(n), 0.0);
      if (rel_items[static_cast<size_t>(u)])
        for (int i : *rel_items[static_cast<size_t>(u)]) rel[static_cast<size_t>(i)] = 1.0;
      return iif_user(rel_by_rank(*a.lists[static_cast<size_t>(u)].front(), rel),
                      rel_count[static_cast<size_t>(u)], n, level[static_cast<size_t>(u)], rbp);
    });
  } else {
    scores = parallel::fill_slots(m, [&](int u) {
      std::vector<double> expo(static_cast<size_t>(n), 0.0);
      for (const auto* list : a.lists[static_cast<size_t>(u)]) {
        const int depth = std::min(k, static_cast<int>(list->size()));
        for (int z = 1; z <= depth; ++z)
          expo[static_cast<size_t>((*list)[static_cast<size_t>(z - 1)])] += rbp.weight(z);
      }
      std::vector<double> rel(static_cast<size_t>(n), 0.0);
      if (rel_items[static_cast<size_t>(u)])
        for (int i : *rel_items[static_cast<size_t>(u)]) rel[static_cast<size_t>(i)] = 1.0;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double target = rel[static_cast<size_t>(i)] > 0.0 ? level[static_cast<size_t>(u)] : 0.0;
        const double d = expo[static_cast<size_t>(i)] / static_cast<double>(w) - target;
        acc += d * d;
      }
      return acc / static_cast<double>(n);
    });
  }

  int degenerate = 0;
  if (variant == Variant::Corrected) {
    std::map<int, std::pair<double, double>> extremes;
    for (int u = 0; u < m; ++u) {
      const int rr = rel_count[static_cast<size_t>(u)];
      auto it = extremes.find(rr);
      if (it == extremes.end()) {
        const double t = target_level(rr, gamma);
        const double mn = iif_user(relevance_pattern(n, rr, 0), rr, n, t, rbp);
        const double mx = iif_user(relevance_pattern(n, 0, rr), rr, n, t, rbp);
        it = extremes.emplace(rr, std::make_pair(mn, mx)).first;
      }
      const double den = it->second.second - it->second.first;
      if (den == 0.0) {
        scores[static_cast<size_t>(u)] = kNaN;
        ++degenerate;
        continue;
      }
      scores[static_cast<size_t>(u)] = (scores[static_cast<size_t>(u)] - it->second.first) / den;
    }
  }

  double sum = 0.0;
  int counted = 0;
  for (int u = 0; u < m; ++u) {
    const double s = scores[static_cast<size_t>(u)];
    if (std::isnan(s)) continue;
    sum += s;
    ++counted;
    r.per_user[a.users[static_cast<size_t>(u)]] = s;
  }
  if (counted == 0) throw ValidationError("ii-f: no evaluable users");
  r.score = sum / static_cast<double>(counted);
  r.params["m"] = static_cast<double>(counted);
  if (degenerate > 0) {
    r.params["degenerate_users"] = static_cast<double>(degenerate);
    r.warn_code(warn::kDegenerate);
  }
  return r;
}

MeasureResult expected_exposure_fairness(TargetKind kind, const RunSet& run, const Qrels& qrels,
                                         const Catalog& catalog, int k, double gamma,
                                         Variant variant) {
  return expected_exposure_fairness(kind, std::vector<RunSet>{run}, qrels, catalog, k, gamma,
                                    variant);
}

}  // namespace recfair
