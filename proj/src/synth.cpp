#include "recfair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace recfair {

namespace {

// "mt19937_64/v1": uniform doubles take the top 53 engine bits, index draws
// reduce modulo the bound, shuffles are descending Fisher-Yates, Weibull is
// inverse-CDF, normal is Box-Muller with the sine branch discarded. These
// are fixed by hand so seeded outputs are identical across standard
// libraries.
double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t draw_index(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>(rng() % bound);
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[draw_index(rng, i)]);
  }
}

// Random count-subset of the pool, in selection order.
std::vector<int> sample_prefix(std::vector<int> pool, std::size_t count, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pool[i], pool[i + draw_index(rng, pool.size() - i)]);
  }
  pool.resize(count);
  return pool;
}

double weibull_draw(std::mt19937_64& rng, double shape) {
  return std::pow(-std::log1p(-u01(rng)), 1.0 / shape);
}

double normal_draw(std::mt19937_64& rng) {
  const double u1 = u01(rng);
  const double u2 = u01(rng);
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void check_users(const std::string& what, const std::vector<std::string>& users) {
  if (users.empty()) throw ValidationError(what + ": no users");
  std::unordered_set<std::string> seen;
  for (const auto& u : users) {
    if (!seen.insert(u).second) throw ValidationError(what + ": duplicate user '" + u + "'");
  }
}

void push_list(RunSet& run, const std::string& id, std::vector<int> list) {
  const int u = run.add_user(id);
  run.lists[u] = std::move(list);
}

}  // namespace

RunSet most_fair_run(RepeatMode mode, const std::vector<std::string>& users,
                     const Interactions& hist, const Catalog& catalog, int k) {
  check_users("most fair", users);
  if (k < 1) throw ValidationError("most fair: k must be positive");
  const int n = catalog.n();
  RunSet run;

  if (mode == RepeatMode::Repeatable) {
    if (k > n) throw ValidationError("most fair: k exceeds the catalog size");
    for (std::size_t u = 0; u < users.size(); ++u) {
      std::vector<int> list(k);
      for (int j = 0; j < k; ++j) {
        list[j] = static_cast<int>((static_cast<int64_t>(u) * k + j) % n);
      }
      push_list(run, users[u], std::move(list));
    }
    return run;
  }

  // Greedy per user: the k least-exposed items outside their history, live
  // counts, ties to the lower index. Buckets keep items grouped by count.
  std::vector<int64_t> count(n, 0);
  std::map<int64_t, std::set<int>> buckets;
  for (int i = 0; i < n; ++i) buckets[0].insert(i);
  for (const auto& id : users) {
    const std::vector<int>* h = hist.items_of(id);
    std::unordered_set<int> banned;
    if (h != nullptr) banned.insert(h->begin(), h->end());
    std::vector<int> list;
    list.reserve(k);
    for (const auto& [c, items] : buckets) {
      for (int item : items) {
        if (banned.count(item) != 0) continue;
        list.push_back(item);
        if (static_cast<int>(list.size()) == k) break;
      }
      if (static_cast<int>(list.size()) == k) break;
    }
    if (static_cast<int>(list.size()) < k) {
      throw ValidationError("most fair: user '" + id + "' has fewer than k recommendable items");
    }
    for (int item : list) {
      auto at = buckets.find(count[item]);
      at->second.erase(item);
      if (at->second.empty()) buckets.erase(at);
      ++count[item];
      buckets[count[item]].insert(item);
    }
    push_list(run, id, std::move(list));
  }
  return run;
}

RunSet most_unfair_run(RepeatMode mode, const std::vector<std::string>& users,
                       const Interactions& hist, const Catalog& catalog, int k) {
  check_users("most unfair", users);
  if (k < 1) throw ValidationError("most unfair: k must be positive");
  const int n = catalog.n();
  if (k > n) throw ValidationError("most unfair: k exceeds the catalog size");
  RunSet run;
  for (const auto& id : users) {
    std::vector<int> list(k);
    std::iota(list.begin(), list.end(), 0);
    if (mode == RepeatMode::Nonrepeatable) {
      std::unordered_set<int> in_list(list.begin(), list.end());
      for (int p = 0; p < k; ++p) {
        if (!hist.contains(id, list[p])) continue;
        int sub = -1;
        for (int i = 0; i < n; ++i) {
          if (in_list.count(i) != 0 || hist.contains(id, i)) continue;
          sub = i;
          break;
        }
        if (sub < 0) {
          throw ValidationError("most unfair: user '" + id + "' has no recommendable substitute");
        }
        in_list.erase(list[p]);
        in_list.insert(sub);
        list[p] = sub;
      }
    }
    push_list(run, id, std::move(list));
  }
  return run;
}

LeInsertScenario insert_le_relevant(int m, int k) {
  if (m < 2) throw ValidationError("le insert: at least two users required");
  if (k < 1) throw ValidationError("le insert: k must be positive");
  const int64_t wide = static_cast<int64_t>(m) * k;
  if (wide > std::numeric_limits<int>::max()) {
    throw ValidationError("le insert: catalog m*k overflows");
  }
  const int n = static_cast<int>(wide);

  LeInsertScenario sc;
  std::vector<std::string> item_ids(n);
  for (int i = 0; i < n; ++i) item_ids[i] = "i" + std::to_string(i + 1);
  sc.catalog = Catalog::from_ids(item_ids);

  std::vector<std::string> user_ids(m);
  for (int j = 0; j < m; ++j) {
    user_ids[j] = "u" + std::to_string(j + 1);
    for (int t = 0; t < k; ++t) sc.qrels.add(user_ids[j], j * k + t);
  }

  // Step t: user j > 0 keeps positions 0..k-t-1 of the shared prefix and
  // carries its own items at the bottom, newest highest.
  for (int t = 0; t <= k; ++t) {
    sc.fractions.push_back(static_cast<double>(t) / k);
    RunSet run;
    for (int j = 0; j < m; ++j) {
      std::vector<int> list(k);
      for (int p = 0; p < k; ++p) {
        const bool replaced = j > 0 && p >= k - t;
        list[p] = replaced ? j * k + (k - p) - 1 : p;
      }
      push_list(run, user_ids[j], std::move(list));
    }
    sc.runs.push_back(std::move(run));
  }
  return sc;
}

RunSet sliding_window(const RunSet& run, int width, int start) {
  if (width < 1) throw ValidationError("sliding window: width must be positive");
  if (start < 1) throw ValidationError("sliding window: start must be positive");
  const std::size_t lo = static_cast<std::size_t>(start) - 1;
  RunSet out;
  for (int u = 0; u < run.m(); ++u) {
    const auto& list = run.lists[u];
    if (lo + width > list.size()) {
      throw ValidationError("sliding window: window exceeds the list for user '" +
                            run.user_ids[u] + "'");
    }
    const int at = out.add_user(run.user_ids[u]);
    out.lists[at].assign(list.begin() + lo, list.begin() + lo + width);
    if (!run.scores[u].empty()) {
      out.scores[at].assign(run.scores[u].begin() + lo, run.scores[u].begin() + lo + width);
    }
  }
  return out;
}

FlipSteps add_relevant_beyond_topk(const RunSet& run, const Qrels& qrels, FlipSide side,
                                   int count, int k) {
  if (count < 0) throw ValidationError("beyond top-k: count must be non-negative");
  if (k < 0) throw ValidationError("beyond top-k: k must be non-negative");
  const int m = run.m();

  // Candidate items per user in flip order; the cursor skips items that are
  // already relevant, whether from the input or an earlier round.
  std::vector<std::vector<int>> cand(m);
  std::vector<std::size_t> cursor(m, 0);
  for (int u = 0; u < m; ++u) {
    const auto& list = run.lists[u];
    if (static_cast<int>(list.size()) <= k) continue;
    if (side == FlipSide::Top) {
      cand[u].assign(list.begin() + k, list.end());
    } else {
      cand[u].assign(list.rbegin(), list.rend() - k);
    }
  }

  FlipSteps out;
  out.steps.push_back(qrels);
  Qrels cur = qrels;
  for (int round = 0; round < count; ++round) {
    std::vector<int> pick(m, -1);
    bool feasible = true;
    for (int u = 0; u < m; ++u) {
      std::size_t& i = cursor[u];
      while (i < cand[u].size() && cur.is_relevant(run.user_ids[u], cand[u][i])) ++i;
      if (i == cand[u].size()) {
        feasible = false;
        break;
      }
      pick[u] = cand[u][i];
    }
    if (!feasible) {
      out.exhausted = true;
      break;
    }
    for (int u = 0; u < m; ++u) {
      cur.add(run.user_ids[u], pick[u]);
      ++cursor[u];
    }
    out.steps.push_back(cur);
    ++out.completed;
  }
  return out;
}

SimilarityMatrix sample_similarity(SimDist dist, double shape,
                                   const std::vector<std::string>& users, uint64_t seed) {
  check_users("similarity sample", users);
  if (users.size() < 2) throw ValidationError("similarity sample: at least two users required");
  if (dist == SimDist::Weibull && !(shape > 0.0)) {
    throw ValidationError("similarity sample: shape must be positive");
  }
  SimilarityMatrix sims = SimilarityMatrix::blank(users);
  std::mt19937_64 rng(seed);
  for (auto& value : sims.values) {
    value = dist == SimDist::Weibull ? weibull_draw(rng, shape) : normal_draw(rng);
  }
  sims.minmax_normalize();
  return sims;
}

SimilarityMatrix assign_similarity(const SimilarityMatrix& sims, const PerUserScores& scores,
                                   AssignMode mode) {
  const int m = sims.m();
  std::vector<double> user_score(m);
  for (int u = 0; u < m; ++u) {
    auto it = scores.score.find(sims.users[u]);
    if (it == scores.score.end()) {
      throw ValidationError("similarity assign: user '" + sims.users[u] + "' has no score");
    }
    user_score[u] = it->second;
  }

  const std::size_t pair_count = static_cast<std::size_t>(sims.pairs());
  std::vector<double> diff(pair_count);
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      diff[static_cast<std::size_t>(sims.offset(a, b))] = std::abs(user_score[a] - user_score[b]);
    }
  }

  std::vector<std::size_t> order(pair_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (mode == AssignMode::MostFair) {
    std::sort(order.begin(), order.end(), [&diff](std::size_t x, std::size_t y) {
      if (diff[x] != diff[y]) return diff[x] < diff[y];
      return x < y;
    });
  } else {
    std::sort(order.begin(), order.end(), [&diff](std::size_t x, std::size_t y) {
      if (diff[x] != diff[y]) return diff[x] > diff[y];
      return x < y;
    });
  }

  std::vector<double> pool = sims.values;
  std::sort(pool.begin(), pool.end(), std::greater<>());
  SimilarityMatrix out = sims;
  for (std::size_t r = 0; r < pair_count; ++r) out.values[order[r]] = pool[r];
  return out;
}

std::pair<RunSet, Qrels> vary_relevance(const Qrels& qrels, const Catalog& catalog, int k,
                                        double frac_zero, uint64_t seed) {
  if (k < 1) throw ValidationError("vary relevance: k must be positive");
  const double tenths = frac_zero * 10.0;
  const int64_t step = std::llround(tenths);
  if (step < 0 || step > 10 || std::abs(tenths - static_cast<double>(step)) > 1e-9) {
    throw ValidationError("vary relevance: fraction must be a tenth in [0, 1]");
  }
  if (qrels.rel.empty()) throw ValidationError("vary relevance: no judged users");

  std::vector<std::string> users;
  users.reserve(qrels.rel.size());
  for (const auto& [id, items] : qrels.rel) users.push_back(id);
  const int m = static_cast<int>(users.size());
  const int n = catalog.n();

  // One stream, consumed identically for every fraction: per user the base
  // draw then the zero draw, then the user shuffle. Only the cutoff depends
  // on the fraction, so zeroed sets nest across fractions under one seed.
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> base(m);
  std::vector<std::vector<int>> zero(m);
  std::vector<char> zero_ok(m, 1);
  for (int u = 0; u < m; ++u) {
    const std::vector<int>& rel = qrels.rel.at(users[u]);
    std::vector<int> irrelevant;
    irrelevant.reserve(static_cast<std::size_t>(n));
    std::size_t r = 0;
    for (int i = 0; i < n; ++i) {
      if (r < rel.size() && rel[r] == i) {
        ++r;
        continue;
      }
      irrelevant.push_back(i);
    }
    if (static_cast<int>(rel.size()) >= k) {
      base[u] = sample_prefix(rel, static_cast<std::size_t>(k), rng);
    } else {
      const std::size_t pad = static_cast<std::size_t>(k) - rel.size();
      if (irrelevant.size() < pad) {
        throw ValidationError("vary relevance: catalog cannot pad user '" + users[u] +
                              "' to k items");
      }
      base[u] = rel;
      std::vector<int> extra = sample_prefix(irrelevant, pad, rng);
      base[u].insert(base[u].end(), extra.begin(), extra.end());
    }
    if (irrelevant.size() < static_cast<std::size_t>(k)) {
      zero_ok[u] = 0;
    } else {
      zero[u] = sample_prefix(std::move(irrelevant), static_cast<std::size_t>(k), rng);
    }
  }

  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle_in_place(perm, rng);
  const int zeroed_count = static_cast<int>(std::llround(frac_zero * m));
  std::vector<char> zeroed(m, 0);
  for (int i = 0; i < zeroed_count; ++i) zeroed[perm[i]] = 1;

  RunSet run;
  for (int u = 0; u < m; ++u) {
    if (zeroed[u] != 0 && zero_ok[u] == 0) {
      throw ValidationError("vary relevance: user '" + users[u] + "' has no k irrelevant items");
    }
    push_list(run, users[u], zeroed[u] != 0 ? zero[u] : base[u]);
  }
  validate_run(run, catalog);
  return {std::move(run), qrels};
}

const char* reranker_name(Reranker method) {
  switch (method) {
    case Reranker::CombMnz: return "combmnz";
    case Reranker::Borda: return "borda";
    case Reranker::GreedySubstitution: return "greedy-substitution";
  }
  throw std::logic_error("unknown reranker");
}

namespace {

int prefix_len(const std::vector<int>& list, int k_prime) {
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k_prime), list.size()));
}

// Ranks prefix positions by key, stable on the original order, and returns
// each position's rank.
template <typename Key>
std::vector<int> rank_of_positions(int c, Key key, bool ascending) {
  std::vector<int> by_key(c);
  std::iota(by_key.begin(), by_key.end(), 0);
  std::stable_sort(by_key.begin(), by_key.end(), [&key, ascending](int x, int y) {
    return ascending ? key(x) < key(y) : key(x) > key(y);
  });
  std::vector<int> rank(c);
  for (int r = 0; r < c; ++r) rank[by_key[r]] = r;
  return rank;
}

RunSet rerank_fused(Reranker method, const RunSet& run, const Catalog& catalog,
                    const RerankConfig& cfg, const std::function<double(int, int)>& predicted) {
  const int n = catalog.n();
  const std::vector<int64_t> cov = exposure_counts(run, cfg.k, n);

  // CombMnz normalizes coverage over the union of all re-ranked prefixes.
  double cov_min = std::numeric_limits<double>::infinity();
  double cov_max = -std::numeric_limits<double>::infinity();
  if (method == Reranker::CombMnz) {
    for (int u = 0; u < run.m(); ++u) {
      const auto& list = run.lists[u];
      const int c = prefix_len(list, cfg.k_prime);
      for (int p = 0; p < c; ++p) {
        cov_min = std::min(cov_min, static_cast<double>(cov[list[p]]));
        cov_max = std::max(cov_max, static_cast<double>(cov[list[p]]));
      }
    }
  }
  const auto norm_cov = [&cov, cov_min, cov_max](int item) {
    if (!(cov_max > cov_min)) return 0.0;
    return (static_cast<double>(cov[item]) - cov_min) / (cov_max - cov_min);
  };

  RunSet out;
  for (int u = 0; u < run.m(); ++u) {
    const auto& list = run.lists[u];
    const int c = prefix_len(list, cfg.k_prime);
    std::vector<int> order(c);
    std::iota(order.begin(), order.end(), 0);

    if (method == Reranker::Borda) {
      // Points from the original order plus points from the coverage-
      // ascending order; c - rank each.
      const std::vector<int> fair_rank =
          rank_of_positions(c, [&](int p) { return cov[list[p]]; }, true);
      std::vector<int> points(c);
      for (int p = 0; p < c; ++p) points[p] = (c - p) + (c - fair_rank[p]);
      std::stable_sort(order.begin(), order.end(),
                       [&points](int x, int y) { return points[x] > points[y]; });
    } else {
      std::vector<double> pred(c);
      for (int p = 0; p < c; ++p) pred[p] = predicted(u, list[p]);
      const auto [pmin, pmax] = std::minmax_element(pred.begin(), pred.end());
      std::vector<double> nrel(c, 0.0);
      if (c > 0 && *pmax > *pmin) {
        for (int p = 0; p < c; ++p) nrel[p] = (pred[p] - *pmin) / (*pmax - *pmin);
      }
      const std::vector<int> rel_rank =
          rank_of_positions(c, [&nrel](int p) { return nrel[p]; }, false);
      const std::vector<int> fair_rank =
          rank_of_positions(c, [&](int p) { return norm_cov(list[p]); }, true);
      std::vector<double> fused(c);
      for (int p = 0; p < c; ++p) {
        const int hits = (rel_rank[p] < cfg.k ? 1 : 0) + (fair_rank[p] < cfg.k ? 1 : 0);
        fused[p] = (nrel[p] + 1.0 - norm_cov(list[p])) * hits;
      }
      std::stable_sort(order.begin(), order.end(),
                       [&fused](int x, int y) { return fused[x] > fused[y]; });
    }

    const int at = out.add_user(run.user_ids[u]);
    out.lists[at].reserve(list.size());
    for (int p = 0; p < c; ++p) out.lists[at].push_back(list[order[p]]);
    out.lists[at].insert(out.lists[at].end(), list.begin() + c, list.end());
  }
  return out;
}

RunSet rerank_greedy(const RunSet& run, const Catalog& catalog, const RerankConfig& cfg,
                     const std::function<double(int, int)>& predicted) {
  const int n = catalog.n();
  const int m = run.m();
  const std::vector<int64_t> cov = exposure_counts(run, cfg.k_prime, n);

  std::vector<int> pool;
  for (int i = 0; i < n; ++i) {
    if (cov[i] > 0) pool.push_back(i);
  }
  std::size_t h = static_cast<std::size_t>(std::ceil(cfg.beta * static_cast<double>(pool.size())));
  h = std::min(h, pool.size() / 2);

  std::vector<int> by_cov = pool;
  std::sort(by_cov.begin(), by_cov.end(), [&cov](int x, int y) {
    if (cov[x] != cov[y]) return cov[x] > cov[y];
    return x < y;
  });
  const std::vector<int> most(by_cov.begin(), by_cov.begin() + h);
  std::sort(by_cov.begin(), by_cov.end(), [&cov](int x, int y) {
    if (cov[x] != cov[y]) return cov[x] < cov[y];
    return x < y;
  });
  const std::vector<int> least(by_cov.begin(), by_cov.begin() + h);

  // Every (popular item, unpopular item, holder) triple, priced by the
  // holder's predicted-score loss.
  struct Swap {
    double loss;
    int user;
    int out_item;
    int in_item;
  };
  std::vector<Swap> saved;
  int64_t slots = 0;
  for (int u = 0; u < m; ++u) slots += prefix_len(run.lists[u], cfg.k_prime);
  for (int out_item : most) {
    for (int in_item : least) {
      for (int u = 0; u < m; ++u) {
        const auto& list = run.lists[u];
        const int c = prefix_len(list, cfg.k_prime);
        if (std::find(list.begin(), list.begin() + c, out_item) == list.begin() + c) continue;
        saved.push_back({predicted(u, out_item) - predicted(u, in_item), u, out_item, in_item});
      }
    }
  }
  std::stable_sort(saved.begin(), saved.end(),
                   [](const Swap& x, const Swap& y) { return x.loss < y.loss; });

  std::vector<std::vector<int>> lists = run.lists;
  std::vector<std::unordered_set<int>> member(m);
  for (int u = 0; u < m; ++u) member[u].insert(lists[u].begin(), lists[u].end());

  // Attempts, applied or skipped, consume the budget.
  int64_t budget = static_cast<int64_t>(std::floor(cfg.cap * static_cast<double>(slots)));
  for (const Swap& s : saved) {
    if (budget == 0) break;
    --budget;
    auto& list = lists[s.user];
    const int c = prefix_len(list, cfg.k_prime);
    const auto at = std::find(list.begin(), list.begin() + c, s.out_item);
    if (at == list.begin() + c) continue;           // already swapped away
    if (member[s.user].count(s.in_item) != 0) continue;  // target already listed
    member[s.user].erase(s.out_item);
    member[s.user].insert(s.in_item);
    *at = s.in_item;
  }

  RunSet out;
  for (int u = 0; u < m; ++u) {
    const int at = out.add_user(run.user_ids[u]);
    out.lists[at] = std::move(lists[u]);
  }
  return out;
}

}  // namespace

RunSet rerank(Reranker method, const RunSet& run, const Catalog& catalog,
              const RerankConfig& cfg, const std::function<double(int, int)>& predicted) {
  if (cfg.k < 1) throw ValidationError("rerank: k must be positive");
  if (cfg.k_prime < cfg.k) throw ValidationError("rerank: k-prime must be at least k");
  if (!(cfg.beta > 0.0) || cfg.beta > 1.0) throw ValidationError("rerank: beta must be in (0, 1]");
  if (cfg.cap < 0.0 || cfg.cap > 1.0) throw ValidationError("rerank: cap must be in [0, 1]");
  if (method != Reranker::Borda && !predicted) {
    throw ValidationError(std::string("rerank: predicted scores required for ") +
                          reranker_name(method));
  }
  validate_run(run, catalog);
  if (method == Reranker::GreedySubstitution) {
    return rerank_greedy(run, catalog, cfg, predicted);
  }
  return rerank_fused(method, run, catalog, cfg, predicted);
}

}  // namespace recfair
