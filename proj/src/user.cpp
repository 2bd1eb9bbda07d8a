#include "recfair/user.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "recfair/relevance.hpp"

namespace recfair {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int64_t row_start(int64_t row, int64_t m) { return row * m - row * (row + 1) / 2; }

// Inverse of the condensed upper-triangle offset.
std::pair<int, int> pair_at(int64_t t, int m) {
  const double m2 = 2.0 * m - 1.0;
  int a = static_cast<int>((m2 - std::sqrt(m2 * m2 - 8.0 * static_cast<double>(t))) / 2.0);
  a = std::max(a, 0);
  while (a > 0 && row_start(a, m) > t) --a;
  while (row_start(a + 1, m) <= t) ++a;
  const int b = static_cast<int>(t - row_start(a, m)) + a + 1;
  return {a, b};
}

MeasureResult base_result(std::string id, Direction direction) {
  MeasureResult r;
  r.id = std::move(id);
  r.variant = variant_name(Variant::Original);
  r.direction = direction;
  return r;
}

const std::vector<int>& hist_of(const Interactions& hist, const std::string& user) {
  static const std::vector<int> kEmpty;
  const auto* items = hist.items_of(user);
  return items ? *items : kEmpty;
}

int64_t intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
  int64_t inter = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else { ++inter; ++i; ++j; }
  }
  return inter;
}

double jaccard_of(const std::vector<int>& a, const std::vector<int>& b) {
  const int64_t inter = intersection_size(a, b);
  const int64_t uni = static_cast<int64_t>(a.size() + b.size()) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double cosine_of(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() || b.empty()) return 0.0;
  const int64_t inter = intersection_size(a, b);
  return static_cast<double>(inter) /
         std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

// Base-2 Jensen-Shannon divergence between two category densities, in [0,1].
double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0.0;
  for (size_t c = 0; c < p.size(); ++c) {
    const double mid = 0.5 * (p[c] + q[c]);
    if (p[c] > 0.0) acc += 0.5 * p[c] * std::log2(p[c] / mid);
    if (q[c] > 0.0) acc += 0.5 * q[c] * std::log2(q[c] / mid);
  }
  return acc;
}

double population_sd(const std::vector<double>& xs) {
  const double mean =
      std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

// Owner's ideal top-k: relevant items first, then filler, ids ascending
// inside each block. Fixes the denominator under relevance ties.
std::vector<int> ideal_topk(const std::vector<int>& rel, int k, int n) {
  std::vector<int> ideal;
  ideal.reserve(k);
  for (int i : rel) {
    if (static_cast<int>(ideal.size()) == k) return ideal;
    ideal.push_back(i);
  }
  for (int i = 0; i < n && static_cast<int>(ideal.size()) < k; ++i)
    if (!std::binary_search(rel.begin(), rel.end(), i)) ideal.push_back(i);
  return ideal;
}

int count_relevant(const std::vector<int>& items, const std::vector<char>& is_rel, int k) {
  int hits = 0;
  const int depth = std::min<int>(k, static_cast<int>(items.size()));
  for (int z = 0; z < depth; ++z)
    if (is_rel[items[z]]) ++hits;
  return hits;
}

struct EnvyContext {
  std::vector<int> users;                       // run indices included
  std::vector<const std::vector<int>*> rel;     // per included user
  std::vector<std::vector<char>> is_rel;
  std::vector<std::vector<int>> ideal;          // per owner, phi only
};

// utility of `u` evaluated on owner's list; NaN when undefined.
double utility_of(const EnvyContext& ctx, const RunSet& run, const UtilityConfig& util,
                  int u, int owner) {
  const auto& list = run.lists[ctx.users[owner]];
  if (!util.phi)
    return effectiveness_for_user(util.measure, list, *ctx.rel[u], util.k);
  const int den = count_relevant(ctx.ideal[owner], ctx.is_rel[u], util.k);
  if (den == 0) return kNaN;
  return static_cast<double>(count_relevant(list, ctx.is_rel[u], util.k)) / den;
}

}  // namespace

int64_t SimilarityMatrix::pairs() const {
  const int64_t mm = m();
  return mm * (mm - 1) / 2;
}

int64_t SimilarityMatrix::offset(int a, int b) const {
  if (a > b) std::swap(a, b);
  if (a < 0 || b >= m() || a == b)
    throw ValidationError("similarity: pair index out of range");
  return row_start(a, m()) + (b - a - 1);
}

double SimilarityMatrix::at(int a, int b) const { return values[offset(a, b)]; }

double SimilarityMatrix::at(const std::string& a, const std::string& b) const {
  const auto ia = index.find(a);
  const auto ib = index.find(b);
  if (ia == index.end() || ib == index.end())
    throw ValidationError("similarity: unknown user '" + (ia == index.end() ? a : b) + "'");
  return at(ia->second, ib->second);
}

void SimilarityMatrix::set(int a, int b, double value) { values[offset(a, b)] = value; }

SimilarityMatrix SimilarityMatrix::blank(const std::vector<std::string>& users) {
  SimilarityMatrix sim;
  sim.users = users;
  for (size_t i = 0; i < users.size(); ++i) {
    if (!sim.index.emplace(users[i], static_cast<int>(i)).second)
      throw ValidationError("similarity: duplicate user '" + users[i] + "'");
  }
  sim.values.assign(static_cast<size_t>(sim.pairs()), 0.0);
  return sim;
}

void SimilarityMatrix::minmax_normalize() {
  if (!values.empty()) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*hi == *lo) {
      degenerate = true;
      return;
    }
    const double span = *hi - *lo;
    const double base = *lo;
    for (double& v : values) v = (v - base) / span;
  }
  normalized = true;
}

const char* sim_kind_name(SimKind kind) {
  switch (kind) {
    case SimKind::Cosine: return "cosine";
    case SimKind::Jaccard: return "jaccard";
    case SimKind::UFBlend: return "uf-blend";
  }
  return "?";
}

SimilarityMatrix similarity(SimKind kind, const std::vector<std::string>& users,
                            const Interactions& hist, int n, double gamma,
                            const std::vector<int>* item_category, bool normalize) {
  if (users.empty()) throw ValidationError("similarity: no users");
  if (kind == SimKind::UFBlend) {
    if (gamma < 0.0 || gamma > 1.0)
      throw ValidationError("similarity: gamma must lie in [0, 1]");
    if (gamma < 1.0 && item_category == nullptr)
      throw ValidationError("similarity: uf-blend needs item categories");
  }
  SimilarityMatrix sim = SimilarityMatrix::blank(users);
  const int m = sim.m();

  std::vector<const std::vector<int>*> rows(m);
  for (int u = 0; u < m; ++u) {
    rows[u] = &hist_of(hist, users[u]);
    for (int i : *rows[u])
      if (i < 0 || i >= n)
        throw ValidationError("similarity: history of '" + users[u] +
                              "' names an item outside the catalog");
    if (rows[u]->empty()) sim.empty_history.push_back(users[u]);
  }

  int categories = 0;
  std::vector<std::vector<double>> density;
  if (kind == SimKind::UFBlend && item_category != nullptr) {
    if (static_cast<int>(item_category->size()) != n)
      throw ValidationError("similarity: item categories must cover the catalog");
    for (int c : *item_category) {
      if (c < 0) throw ValidationError("similarity: negative item category");
      categories = std::max(categories, c + 1);
    }
    density.assign(m, {});
    for (int u = 0; u < m; ++u) {
      density[u].assign(categories, 0.0);
      for (int i : *rows[u]) density[u][(*item_category)[i]] += 1.0;
      for (double& d : density[u]) d /= std::max<size_t>(rows[u]->size(), 1);
    }
  }

  sim.values = parallel::fill_slots(static_cast<int>(sim.pairs()), [&](int t) {
    const auto [a, b] = pair_at(t, m);
    if (rows[a]->empty() || rows[b]->empty()) return 0.0;
    switch (kind) {
      case SimKind::Cosine: return cosine_of(*rows[a], *rows[b]);
      case SimKind::Jaccard: return jaccard_of(*rows[a], *rows[b]);
      case SimKind::UFBlend: {
        const double jacc = jaccard_of(*rows[a], *rows[b]);
        if (gamma == 1.0) return jacc;
        const double feat = 1.0 - js_divergence(density[a], density[b]);
        return gamma * jacc + (1.0 - gamma) * feat;
      }
    }
    return 0.0;
  });
  if (normalize) sim.minmax_normalize();
  return sim;
}

void write_similarity_tsv(std::ostream& out, const SimilarityMatrix& sim) {
  out << "# user\tuser\tsimilarity\n";
  out << std::setprecision(17);
  for (int a = 0; a < sim.m(); ++a)
    for (int b = a + 1; b < sim.m(); ++b)
      out << sim.users[a] << '\t' << sim.users[b] << '\t' << sim.at(a, b) << '\n';
}

SimilarityMatrix read_similarity_tsv(std::istream& in) {
  std::vector<std::string> users;
  std::unordered_map<std::string, int> index;
  std::vector<std::pair<std::pair<int, int>, double>> triples;
  const auto intern = [&](const std::string& id) {
    const auto it = index.find(id);
    if (it != index.end()) return it->second;
    const int idx = static_cast<int>(users.size());
    users.push_back(id);
    index.emplace(id, idx);
    return idx;
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto at = [&] { return " at line " + std::to_string(lineno); };
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string a, b;
    double value = 0.0;
    if (!(row >> a >> b >> value))
      throw ValidationError("similarity: malformed triple" + at());
    if (a == b) throw ValidationError("similarity: self pair '" + a + "'" + at());
    if (value < 0.0 || value > 1.0 || !std::isfinite(value))
      throw ValidationError("similarity: value outside [0, 1]" + at());
    triples.push_back({{intern(a), intern(b)}, value});
  }
  if (users.size() < 2) throw ValidationError("similarity: needs at least two users");
  SimilarityMatrix sim = SimilarityMatrix::blank(users);
  std::vector<char> seen(static_cast<size_t>(sim.pairs()), 0);
  for (const auto& [pair, value] : triples) {
    const int64_t off = sim.offset(pair.first, pair.second);
    if (seen[off])
      throw ValidationError("similarity: duplicate pair '" + users[pair.first] + "', '" +
                            users[pair.second] + "'");
    seen[off] = 1;
    sim.values[off] = value;
  }
  return sim;
}

MeasureResult user_dispersion(DispersionKind kind, const PerUserScores& scores) {
  std::vector<double> xs;
  xs.reserve(scores.score.size());
  for (const auto& [user, score] : scores.score) xs.push_back(score);
  const int m = static_cast<int>(xs.size());
  if (m < 2) throw ValidationError("dispersion: needs at least two scored users");
  MeasureResult r = base_result(
      (kind == DispersionKind::SD ? "sd-" : "gini-") + scores.measure,
      Direction::LowerIsFairer);
  r.params["m"] = static_cast<double>(m);
  r.params["k"] = static_cast<double>(scores.k);
  r.str_params["scores"] = scores.measure;
  if (kind == DispersionKind::SD) {
    r.score = population_sd(xs);
    return r;
  }
  std::sort(xs.begin(), xs.end());
  double num = 0.0;
  double den = 0.0;
  for (int j = 1; j <= m; ++j) {
    num += static_cast<double>(2 * j - m - 1) * xs[j - 1];
    den += xs[j - 1];
  }
  if (den == 0.0) {
    r.score = kNaN;
    return r.mark_undefined();
  }
  r.score = num / (den * static_cast<double>(m));
  return r;
}

double phi_utility(const std::string& user, const std::string& owner, const RunSet& run,
                   const Qrels& qrels, const Catalog& catalog, int k) {
  if (k < 1) throw ValidationError("phi: k must be at least 1");
  const int o = run.user_of(owner);
  if (o < 0) throw ValidationError("phi: owner '" + owner + "' is not in the run");
  const auto* rel_u = qrels.relevant_items(user);
  if (rel_u == nullptr || rel_u->empty())
    throw ValidationError("phi: user '" + user + "' has no relevant items");
  const auto* rel_o = qrels.relevant_items(owner);
  const int n = catalog.n();
  std::vector<char> is_rel(static_cast<size_t>(n), 0);
  for (int i : *rel_u) {
    if (i < 0 || i >= n)
      throw ValidationError("phi: relevance names an item outside the catalog");
    is_rel[i] = 1;
  }
  static const std::vector<int> kNone;
  const std::vector<int> ideal = ideal_topk(rel_o ? *rel_o : kNone, k, n);
  const int den = count_relevant(ideal, is_rel, k);
  if (den == 0) return kNaN;
  return static_cast<double>(count_relevant(run.lists[o], is_rel, k)) / den;
}

MeasureResult envy_family(EnvyKind kind, const RunSet& run, const Qrels& qrels,
                          const Catalog& catalog, const UtilityConfig& util,
                          double epsilon) {
  if (util.k < 1) throw ValidationError("envy: k must be at least 1");
  const int n = catalog.n();
  EnvyContext ctx;
  int excluded = 0;
  for (int u = 0; u < run.m(); ++u) {
    const auto* rel = qrels.relevant_items(run.user_ids[u]);
    if (rel == nullptr || rel->empty()) {
      ++excluded;
      continue;
    }
    for (int i : *rel)
      if (i < 0 || i >= n)
        throw ValidationError("envy: relevance names an item outside the catalog for user '" +
                              run.user_ids[u] + "'");
    ctx.users.push_back(u);
    ctx.rel.push_back(rel);
  }
  const int m = static_cast<int>(ctx.users.size());
  if (m < 2) throw ValidationError("envy: needs at least two users with defined utility");
  ctx.is_rel.assign(m, {});
  for (int u = 0; u < m; ++u) {
    ctx.is_rel[u].assign(static_cast<size_t>(n), 0);
    for (int i : *ctx.rel[u]) ctx.is_rel[u][i] = 1;
  }
  if (util.phi) {
    ctx.ideal.resize(m);
    for (int o = 0; o < m; ++o) ctx.ideal[o] = ideal_topk(*ctx.rel[o], util.k, n);
  }

  // envy matrix, NaN marking pairs whose cross utility is undefined
  const std::vector<double> envy = parallel::fill_slots(m * m, [&](int t) {
    const int u = t / m;
    const int o = t % m;
    if (u == o) return 0.0;
    const double cross = utility_of(ctx, run, util, u, o);
    if (std::isnan(cross)) return kNaN;
    const double own = utility_of(ctx, run, util, u, u);
    return std::max(cross - own, 0.0);
  });

  const char* id = kind == EnvyKind::ME ? "me" : (kind == EnvyKind::MME ? "mme-user" : "peu");
  MeasureResult r = base_result(id, Direction::LowerIsFairer);
  double pair_sum = 0.0;
  int64_t defined_pairs = 0;
  int64_t undefined_pairs = 0;
  int covered_users = 0;
  int envious = 0;
  double max_sum = 0.0;
  for (int u = 0; u < m; ++u) {
    double row_max = kNaN;
    for (int o = 0; o < m; ++o) {
      if (u == o) continue;
      const double e = envy[u * m + o];
      if (std::isnan(e)) {
        ++undefined_pairs;
        continue;
      }
      ++defined_pairs;
      pair_sum += e;
      if (std::isnan(row_max) || e > row_max) row_max = e;
    }
    if (std::isnan(row_max)) continue;
    ++covered_users;
    max_sum += row_max;
    if (row_max > epsilon) ++envious;
    r.per_user[run.user_ids[ctx.users[u]]] = row_max;
  }
  r.params["m"] = static_cast<double>(m);
  r.params["k"] = static_cast<double>(util.k);
  r.params["excluded_users"] = static_cast<double>(excluded);
  r.params["undefined_pairs"] = static_cast<double>(undefined_pairs);
  r.str_params["utility"] = util.phi ? "phi" : eff_measure_name(util.measure);
  if (kind == EnvyKind::ME) {
    if (defined_pairs == 0) {
      r.score = kNaN;
      return r.mark_undefined();
    }
    r.score = 2.0 * pair_sum / static_cast<double>(defined_pairs);
    return r;
  }
  if (covered_users == 0) {
    r.score = kNaN;
    return r.mark_undefined();
  }
  if (kind == EnvyKind::PEU) {
    r.params["epsilon"] = epsilon;
    r.score = static_cast<double>(envious) / covered_users;
  } else {
    r.score = max_sum / covered_users;
  }
  return r;
}

MeasureResult puf(const PerUserScores& scores, const SimilarityMatrix& sim) {
  std::vector<int> picked;        // sim indices, matrix order
  std::vector<double> value;      // aligned scores
  for (int u = 0; u < sim.m(); ++u) {
    const auto it = scores.score.find(sim.users[u]);
    if (it == scores.score.end()) continue;
    picked.push_back(u);
    value.push_back(it->second);
  }
  const int m = static_cast<int>(picked.size());
  if (m < 2) throw ValidationError("puf: needs at least two users scored and in the matrix");
  const int64_t dropped =
      (sim.m() - m) + (static_cast<int64_t>(scores.score.size()) - m);

  const std::vector<double> terms =
      parallel::fill_slots(static_cast<int>(static_cast<int64_t>(m) * (m - 1) / 2), [&](int t) {
        const auto [a, b] = pair_at(t, m);
        return sim.at(picked[a], picked[b]) * std::abs(value[a] - value[b]);
      });
  MeasureResult r = base_result("puf", Direction::LowerIsFairer);
  r.params["m"] = static_cast<double>(m);
  r.params["k"] = static_cast<double>(scores.k);
  r.params["dropped_users"] = static_cast<double>(dropped);
  r.str_params["scores"] = scores.measure;
  double acc = 0.0;
  for (double term : terms) acc += term;
  r.score = acc / static_cast<double>(terms.size());
  return r;
}

namespace {

// Cosine distance with zero-vector conventions: two empty supports are
// identical, one empty support is maximally distant.
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t t = 0; t < a.size(); ++t) {
    dot += a[t] * b[t];
    na += a[t] * a[t];
    nb += b[t] * b[t];
  }
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

}  // namespace

MeasureResult uf(const RunSet& run, const SimilarityMatrix& sim,
                 const std::vector<std::vector<double>>& item_repr, int k,
                 std::optional<double> threshold, std::optional<double> log_base) {
  if (k < 1) throw ValidationError("uf: k must be at least 1");
  if (sim.m() < 2) throw ValidationError("uf: needs at least two users");
  const double base = log_base.value_or(static_cast<double>(sim.pairs()));
  double t = 0.0;
  if (threshold.has_value()) {
    t = *threshold;
  } else {
    const double mean = std::accumulate(sim.values.begin(), sim.values.end(), 0.0) /
                        static_cast<double>(sim.values.size());
    t = mean + population_sd(sim.values);
  }

  std::vector<std::pair<int, int>> similar;
  for (int64_t p = 0; p < sim.pairs(); ++p)
    if (sim.values[p] >= t) similar.push_back(pair_at(p, sim.m()));

  MeasureResult r = base_result("uf", Direction::LowerIsFairer);
  r.params["m"] = static_cast<double>(sim.m());
  r.params["k"] = static_cast<double>(k);
  r.params["threshold"] = t;
  r.params["log_base"] = base;
  r.params["contributing_pairs"] = static_cast<double>(similar.size());
  if (similar.empty()) {
    r.score = kNaN;
    return r.mark_undefined();
  }
  if (base <= 1.0) {
    r.score = kNaN;
    return r.mark_undefined();
  }

  const auto list_of = [&](int u) -> const std::vector<int>* {
    const int idx = run.user_of(sim.users[u]);
    return idx < 0 ? nullptr : &run.lists[idx];
  };
  for (const auto& [a, b] : similar)
    for (const auto* list : {list_of(a), list_of(b)}) {
      if (list == nullptr) continue;
      for (int z = 0; z < std::min<int>(k, static_cast<int>(list->size())); ++z)
        if ((*list)[z] < 0 || (*list)[z] >= static_cast<int>(item_repr.size()))
          throw ValidationError("uf: run names an item without a representation");
    }

  const std::vector<double> terms =
      parallel::fill_slots(static_cast<int>(similar.size()), [&](int s) {
        const auto [a, b] = similar[s];
        const auto* la = list_of(a);
        const auto* lb = list_of(b);
        if (la == nullptr || lb == nullptr) return 0.0;
        const int da = std::min<int>(k, static_cast<int>(la->size()));
        const int db = std::min<int>(k, static_cast<int>(lb->size()));
        double acc = 0.0;
        for (int x = 0; x < da; ++x)
          for (int y = 0; y < db; ++y)
            acc += cosine_distance(item_repr[(*la)[x]], item_repr[(*lb)[y]]);
        // fixed k^2 grid even when a list runs short
        const double d_l = acc / (static_cast<double>(k) * static_cast<double>(k));
        return sim.at(a, b) * d_l;
      });
  double sum = 0.0;
  for (double term : terms) sum += term;
  if (sum == 0.0) {
    r.score = -std::numeric_limits<double>::infinity();
    return r.mark_undefined();
  }
  r.score = std::log(sum) / std::log(base);
  return r;
}

std::vector<std::vector<double>> onehot_item_repr(const Interactions& hist, int n) {
  std::vector<std::vector<double>> repr(static_cast<size_t>(n));
  int users = 0;
  for ([[maybe_unused]] const auto& row : hist.hist) ++users;
  for (auto& v : repr) v.assign(static_cast<size_t>(users), 0.0);
  int u = 0;
  for (const auto& [user, items] : hist.hist) {
    for (int i : items) {
      if (i < 0 || i >= n)
        throw ValidationError("uf: history of '" + user + "' names an item outside the catalog");
      repr[i][u] = 1.0;
    }
    ++u;
  }
  return repr;
}

MeasureResult uf(const RunSet& run, const SimilarityMatrix& sim, const Interactions& hist,
                 int n, int k, std::optional<double> threshold,
                 std::optional<double> log_base) {
  return uf(run, sim, onehot_item_repr(hist, n), k, threshold, log_base);
}

}  // namespace recfair
