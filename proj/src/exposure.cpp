#include "recfair/exposure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace recfair {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_shape(int k, int m, int n) {
  if (n < 1) throw ValidationError("exposure: catalog is empty");
  if (m < 1) throw ValidationError("exposure: run has no users");
  if (k < 1) throw ValidationError("exposure: k must be at least 1");
  if (k > n) throw ValidationError("exposure: k exceeds the catalog size");
}

void reject_defined(Variant variant, const char* id) {
  if (variant == Variant::Defined)
    throw ValidationError(std::string(id) + ": variant 'defined' only applies to entropy");
}

[[noreturn]] void throw_degenerate() {
  throw ValidationError("normalization-degenerate: x_max = x_min");
}

// Count histogram over items with positive exposure. Grouping by count value
// makes the entropy sum independent of which items carry which count, so a
// realized extreme run reproduces its closed-form bound bit for bit.
std::map<int64_t, int64_t> positive_count_freq(const std::vector<int64_t>& counts) {
  std::map<int64_t, int64_t> freq;
  for (int64_t c : counts)
    if (c > 0) ++freq[c];
  return freq;
}

std::map<int64_t, int64_t> most_unfair_freq(int k, int m) {
  return {{static_cast<int64_t>(m), static_cast<int64_t>(k)}};
}

// Fairest feasible split of km slots: n - (km mod n) items exposed
// floor(km/n) times, the rest one more.
std::map<int64_t, int64_t> most_fair_freq(int k, int m, int n) {
  const int64_t km = static_cast<int64_t>(k) * m;
  const int64_t q = km / n;
  const int64_t r = km % n;
  std::map<int64_t, int64_t> freq;
  if (q > 0) freq[q] = n - r;
  if (r > 0) freq[q + 1] = r;
  return freq;
}

// Natural-log entropy of the grouped count distribution, iterated in
// ascending count order.
double entropy_nat(const std::map<int64_t, int64_t>& freq, double total) {
  double s = 0.0;
  for (const auto& [count, times] : freq) {
    const double p = static_cast<double>(count) / total;
    s += static_cast<double>(times) * (p * std::log(p));
  }
  return -s;
}

double resolve_log_base(double log_base, int n) {
  const double base = log_base > 0.0 ? log_base : static_cast<double>(n);
  if (base <= 1.0) throw ValidationError("entropy: log base must exceed 1");
  return base;
}

double giniw_max(int k, int n, const ExamFn& exam) {
  double num = 0.0;
  double den = 0.0;
  for (int l = 1; l <= k; ++l) {
    const double e = exam.weight(l);
    num += static_cast<double>(n - 2 * l + 1) * e;
    den += e;
  }
  return num / (static_cast<double>(n) * den);
}

// Fairest weighted exposure interleaves each rank's weight block across the
// m lists; only meaningful when km <= n so the blocks fit disjointly.
double giniw_min(int k, int m, int n, const ExamFn& exam) {
  double num = 0.0;
  double den = 0.0;
  for (int l = 1; l <= k; ++l) {
    const double e = exam.weight(l);
    den += e;
    const int64_t lo = static_cast<int64_t>(n) - static_cast<int64_t>(l) * m + 1;
    for (int64_t j = lo; j < lo + m; ++j) num += static_cast<double>(2 * j - n - 1) * e;
  }
  return num / (static_cast<double>(m) * static_cast<double>(n) * den);
}

std::vector<double> exposure_mass(const std::vector<RunSet>& rounds, int k, int n,
                                  const ExamFn& exam) {
  std::vector<double> mass(n, 0.0);
  for (const auto& run : rounds) {
    for (const auto& list : run.lists) {
      const int depth = std::min<int>(k, static_cast<int>(list.size()));
      for (int z = 1; z <= depth; ++z) mass[list[z - 1]] += exam.weight(z);
    }
  }
  return mass;
}

MeasureResult base_result(const char* id, Variant variant, Direction direction, int k, int m,
                          int n) {
  MeasureResult r;
  r.id = id;
  r.variant = variant_name(variant);
  r.direction = direction;
  r.params["k"] = k;
  r.params["m"] = m;
  r.params["n"] = n;
  return r;
}

}  // namespace

const char* bounded_measure_name(BoundedMeasure measure) {
  switch (measure) {
    case BoundedMeasure::Jain: return "jain";
    case BoundedMeasure::QF: return "qf";
    case BoundedMeasure::Ent: return "ent";
    case BoundedMeasure::Gini: return "gini";
    case BoundedMeasure::GiniW: return "gini-w";
    case BoundedMeasure::FSat: return "fsat";
    case BoundedMeasure::VoCD: return "vocd";
  }
  return "?";
}

BoundsResult exposure_bounds(BoundedMeasure measure, int k, int m, int n,
                             const BoundsParams& params) {
  require_shape(k, m, n);
  const int64_t km = static_cast<int64_t>(k) * m;
  const int64_t q = km / n;
  const int64_t r = km % n;
  BoundsResult b;
  b.formula = std::string(bounded_measure_name(measure)) + "@k";
  switch (measure) {
    case BoundedMeasure::Jain: {
      b.most_unfair = static_cast<double>(k) / n;
      const int64_t inner = n * q * q + r * (2 * q + 1);
      b.most_fair = (static_cast<double>(km) * static_cast<double>(km)) /
                    (static_cast<double>(n) * static_cast<double>(inner));
      break;
    }
    case BoundedMeasure::QF:
      b.most_unfair = static_cast<double>(k) / n;
      b.most_fair = std::min(static_cast<double>(km) / n, 1.0);
      break;
    case BoundedMeasure::Ent: {
      const double lnb = std::log(resolve_log_base(params.log_base, n));
      const double total = static_cast<double>(km);
      b.most_unfair = entropy_nat(most_unfair_freq(k, m), total) / lnb;
      b.most_fair = entropy_nat(most_fair_freq(k, m, n), total) / lnb;
      break;
    }
    case BoundedMeasure::Gini:
      b.most_unfair = static_cast<double>(n - k) / static_cast<double>(n);
      b.most_fair =
          static_cast<double>(r * (n - r)) / (static_cast<double>(n) * static_cast<double>(km));
      break;
    case BoundedMeasure::GiniW: {
      ExamFn exam = params.exam;
      exam.k = k;
      b.most_unfair = giniw_max(k, n, exam);
      if (km > n)
        throw ValidationError("gini-w: fairest bound with km > n is unsupported");
      b.most_fair = giniw_min(k, m, n, exam);
      break;
    }
    case BoundedMeasure::FSat:
      b.most_unfair = static_cast<double>(k) / n;
      b.most_fair = 1.0;
      break;
    case BoundedMeasure::VoCD:
      b.most_unfair = static_cast<double>(m - 1) / m - params.beta;
      b.most_fair = 0.0;
      break;
  }
  return b;
}

MeasureResult jain(const RunSet& run, const Catalog& catalog, int k, Variant variant) {
  reject_defined(variant, "jain");
  const int n = catalog.n();
  const int m = run.m();
  require_shape(k, m, n);
  MeasureResult r = base_result("jain", variant, Direction::HigherIsFairer, k, m, n);
  const auto counts = exposure_counts(run, k, n);
  double total = 0.0;
  double sumsq = 0.0;
  for (int64_t c : counts) {
    total += static_cast<double>(c);
    sumsq += static_cast<double>(c) * static_cast<double>(c);
  }
  if (total == 0.0) {
    r.score = kNaN;
    return r.mark_undefined();
  }
  const double ori = (total * total) / (static_cast<double>(n) * sumsq);
  if (variant == Variant::Original) {
    r.score = ori;
    return r;
  }
  const BoundsResult b = exposure_bounds(BoundedMeasure::Jain, k, m, n);
  const double range = b.most_fair - b.most_unfair;
  if (!(range > 0.0)) throw_degenerate();
  r.score = (ori - b.most_unfair) / range;
  return r;
}

MeasureResult qf(const RunSet& run, const Catalog& catalog, int k, Variant variant) {
  reject_defined(variant, "qf");
  const int n = catalog.n();
  const int m = run.m();
  require_shape(k, m, n);
  MeasureResult r = base_result("qf", variant, Direction::HigherIsFairer, k, m, n);
  const auto counts = exposure_counts(run, k, n);
  int64_t exposed = 0;
  for (int64_t c : counts)
    if (c > 0) ++exposed;
  if (variant == Variant::Original) {
    r.score = static_cast<double>(exposed) / n;
    return r;
  }
  const int64_t km = static_cast<int64_t>(k) * m;
  if (k == n || (km < n && m == 1)) throw_degenerate();
  if (km >= n)
    r.score = static_cast<double>(exposed - k) / static_cast<double>(n - k);
  else
    r.score = static_cast<double>(exposed - k) / (static_cast<double>(k) * (m - 1));
  return r;
}

MeasureResult entropy(const RunSet& run, const Catalog& catalog, int k, Variant variant,
                      double log_base) {
  const int n = catalog.n();
  const int m = run.m();
  require_shape(k, m, n);
  const double base = resolve_log_base(log_base, n);
  const double lnb = std::log(base);
  MeasureResult r = base_result("ent", variant, Direction::HigherIsFairer, k, m, n);
  r.params["log_base"] = base;
  const auto counts = exposure_counts(run, k, n);
  const auto freq = positive_count_freq(counts);
  int64_t exposed = 0;
  int64_t total = 0;
  for (const auto& [count, times] : freq) {
    exposed += times;
    total += count * times;
  }
  if (total == 0) {
    r.score = kNaN;
    return r.mark_undefined();
  }
  const double def_nat = entropy_nat(freq, static_cast<double>(total));
  switch (variant) {
    case Variant::Original:
      if (exposed < n) {
        r.score = kNaN;
        return r.mark_undefined();
      }
      r.score = def_nat / lnb;
      return r;
    case Variant::Defined:
      r.score = def_nat / lnb;
      return r;
    case Variant::Corrected: {
      const int64_t km = static_cast<int64_t>(k) * m;
      if (k == n || (km < n && m == 1)) throw_degenerate();
      const double lo = entropy_nat(most_unfair_freq(k, m), static_cast<double>(km));
      const double hi = entropy_nat(most_fair_freq(k, m, n), static_cast<double>(km));
      if (!(hi - lo > 0.0)) throw_degenerate();
      r.score = (def_nat - lo) / (hi - lo);
      return r;
    }
  }
  return r;
}

MeasureResult gini(const std::vector<RunSet>& rounds, const Catalog& catalog, int k,
                   Variant variant, const ExamFn& exam) {
  const char* id = exam.kind == ExamKind::Uniform ? "gini" : "gini-w";
  reject_defined(variant, id);
  if (rounds.empty()) throw ValidationError("gini: needs at least one round");
  const int n = catalog.n();
  int m = 0;
  for (const auto& run : rounds) m += run.m();
  require_shape(k, m, n);
  ExamFn ex = exam;
  ex.k = k;
  MeasureResult r = base_result(id, variant, Direction::LowerIsFairer, k, m, n);
  r.params["W"] = static_cast<double>(rounds.size());
  r.str_params["exam"] = exam_kind_name(exam.kind);
  std::vector<double> mass = exposure_mass(rounds, k, n, ex);
  std::sort(mass.begin(), mass.end());
  double num = 0.0;
  double den = 0.0;
  for (int j = 1; j <= n; ++j) {
    num += static_cast<double>(2 * j - n - 1) * mass[j - 1];
    den += mass[j - 1];
  }
  if (den == 0.0) {
    r.score = kNaN;
    return r.mark_undefined();
  }
  const double ori = num / (static_cast<double>(n) * den);
  if (variant == Variant::Original) {
    r.score = ori;
    return r;
  }
  const int64_t km = static_cast<int64_t>(k) * m;
  if (ex.kind == ExamKind::Uniform) {
    const BoundsResult b = exposure_bounds(BoundedMeasure::Gini, k, m, n);
    const double range = b.most_unfair - b.most_fair;
    if (!(range > 0.0)) throw_degenerate();
    r.score = (ori - b.most_fair) / range;
    return r;
  }
  const double hi = giniw_max(k, n, ex);
  if (km > n) {
    // No closed-form fairest value here, so only the most-unfair bound
    // rescales the score.
    r.score = ori / hi;
    return r;
  }
  const double lo = giniw_min(k, m, n, ex);
  if (!(hi - lo > 0.0)) throw_degenerate();
  r.score = (ori - lo) / (hi - lo);
  return r;
}

MeasureResult gini(const RunSet& run, const Catalog& catalog, int k, Variant variant,
                   const ExamFn& exam) {
  return gini(std::vector<RunSet>{run}, catalog, k, variant, exam);
}

MeasureResult fsat(const RunSet& run, const Catalog& catalog, int k, Variant variant) {
  reject_defined(variant, "fsat");
  const int n = catalog.n();
  const int m = run.m();
  require_shape(k, m, n);
  MeasureResult r = base_result("fsat", variant, Direction::HigherIsFairer, k, m, n);
  const int64_t km = static_cast<int64_t>(k) * m;
  const int64_t threshold = km / n;
  const auto counts = exposure_counts(run, k, n);
  int64_t satisfied = 0;
  for (int64_t c : counts)
    if (c >= threshold) ++satisfied;
  if (km < n) r.warn_code(warn::kAlwaysFair);
  if (variant == Variant::Original) {
    r.score = static_cast<double>(satisfied) / n;
    return r;
  }
  if (k == n) throw_degenerate();
  r.score = static_cast<double>(satisfied - k) / static_cast<double>(n - k);
  return r;
}

MeasureResult vocd(const RunSet& run, const Catalog& catalog, int k, const PairSim* similarity,
                   double alpha, double beta) {
  const int n = catalog.n();
  const int m = run.m();
  require_shape(k, m, n);
  if (alpha < 0.0 || alpha > 2.0) throw ValidationError("vocd: alpha must lie in [0, 2]");
  if (beta < 0.0 || beta >= 1.0) throw ValidationError("vocd: beta must lie in [0, 1)");
  MeasureResult r = base_result("vocd", Variant::Original, Direction::LowerIsFairer, k, m, n);
  r.params["alpha"] = alpha;
  r.params["beta"] = beta;
  const auto counts = exposure_counts(run, k, n);
  std::vector<int> recommended;
  for (int i = 0; i < n; ++i)
    if (counts[i] > 0) recommended.push_back(i);
  double acc = 0.0;
  int64_t pairs = 0;
  for (size_t a = 0; a < recommended.size(); ++a) {
    for (size_t b = a + 1; b < recommended.size(); ++b) {
      const int i = recommended[a];
      const int j = recommended[b];
      const double sim = similarity ? similarity->get(i, j) : 1.0;
      if (1.0 - sim > alpha) continue;
      const double ci = static_cast<double>(counts[i]);
      const double cj = static_cast<double>(counts[j]);
      const double cd = std::abs(ci - cj) / std::max(ci, cj);
      acc += std::max(cd - beta, 0.0);
      ++pairs;
    }
  }
  if (pairs == 0) {
    r.score = kNaN;
    return r.mark_undefined();
  }
  r.score = acc / static_cast<double>(pairs);
  return r;
}

namespace serial {

std::vector<double> disparity_user_sums(
    const std::vector<std::vector<const std::vector<int>*>>& lists, int k, int n, double gamma,
    double target) {
  const int m = static_cast<int>(lists.size());
  std::vector<double> sums(m, 0.0);
  std::vector<double> acc(n, 0.0);
  for (int u = 0; u < m; ++u) {
    const auto& rounds = lists[u];
    if (rounds.size() == 1) {
      // Single round: the deviation profile depends only on list depth, so
      // summing by rank keeps the result bit-identical across runs.
      const auto& list = *rounds[0];
      const int depth = std::min<int>(k, static_cast<int>(list.size()));
      double s = 0.0;
      double g = 1.0;
      for (int z = 1; z <= depth; ++z) {
        const double d = g - target;
        s += d * d;
        g *= gamma;
      }
      s += static_cast<double>(n - depth) * (target * target);
      sums[u] = s;
      continue;
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    const double w = static_cast<double>(rounds.size());
    for (const auto* list : rounds) {
      const int depth = std::min<int>(k, static_cast<int>(list->size()));
      double g = 1.0;
      for (int z = 1; z <= depth; ++z) {
        acc[(*list)[z - 1]] += g;
        g *= gamma;
      }
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = acc[i] / w - target;
      s += d * d;
    }
    sums[u] = s;
  }
  return sums;
}

}  // namespace serial

namespace parallel {

std::vector<double> disparity_user_sums(
    const std::vector<std::vector<const std::vector<int>*>>& lists, int k, int n, double gamma,
    double target) {
#ifdef _OPENMP
  const int m = static_cast<int>(lists.size());
  std::vector<double> sums(m, 0.0);
#pragma omp parallel
  {
    std::vector<double> acc(n, 0.0);
#pragma omp for schedule(static)
    for (int u = 0; u < m; ++u) {
      const auto& rounds = lists[u];
      if (rounds.size() == 1) {
        const auto& list = *rounds[0];
        const int depth = std::min<int>(k, static_cast<int>(list.size()));
        double s = 0.0;
        double g = 1.0;
        for (int z = 1; z <= depth; ++z) {
          const double d = g - target;
          s += d * d;
          g *= gamma;
        }
        s += static_cast<double>(n - depth) * (target * target);
        sums[u] = s;
        continue;
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      const double w = static_cast<double>(rounds.size());
      for (const auto* list : rounds) {
        const int depth = std::min<int>(k, static_cast<int>(list->size()));
        double g = 1.0;
        for (int z = 1; z <= depth; ++z) {
          acc[(*list)[z - 1]] += g;
          g *= gamma;
        }
      }
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = acc[i] / w - target;
        s += d * d;
      }
      sums[u] = s;
    }
  }
  return sums;
#else
  return serial::disparity_user_sums(lists, k, n, gamma, target);
#endif
}

}  // namespace parallel

MeasureResult expected_exposure_disparity(DisparityKind kind, const std::vector<RunSet>& rounds,
                                          const Catalog& catalog, int k, double gamma) {
  if (rounds.empty())
    throw ValidationError("expected-exposure disparity: needs at least one round");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ValidationError("expected-exposure disparity: gamma must lie in (0, 1)");
  const int n = catalog.n();
  const int m = rounds.front().m();
  require_shape(k, m, n);
  const int w = static_cast<int>(rounds.size());

  // Rounds after the first must cover the same users; lists are aligned to
  // the first round's user order.
  std::vector<std::vector<const std::vector<int>*>> lists(m);
  for (int u = 0; u < m; ++u) {
    lists[u].reserve(w);
    lists[u].push_back(&rounds.front().lists[u]);
  }
  for (int i = 1; i < w; ++i) {
    if (rounds[i].m() != m)
      throw ValidationError("multi-round: rounds cover different user sets");
    for (int u = 0; u < m; ++u) {
      const int idx = rounds[i].user_of(rounds.front().user_ids[u]);
      if (idx < 0)
        throw ValidationError("multi-round: user '" + rounds.front().user_ids[u] +
                              "' missing from round " + std::to_string(i + 1));
      lists[u].push_back(&rounds[i].lists[idx]);
    }
  }

  const char* id = kind == DisparityKind::IID ? "ii-d" : "ai-d";
  MeasureResult r = base_result(id, Variant::Original, Direction::LowerIsFairer, k, m, n);
  r.params["gamma"] = gamma;
  r.params["W"] = static_cast<double>(w);
  const double target =
      (1.0 - std::pow(gamma, static_cast<double>(k))) / (static_cast<double>(n) * (1.0 - gamma));

  if (kind == DisparityKind::IID) {
    const auto sums = parallel::disparity_user_sums(lists, k, n, gamma, target);
    double acc = 0.0;
    for (double s : sums) acc += s;
    r.score = acc / (static_cast<double>(m) * static_cast<double>(n));
    if (w == 1) {
      bool full = true;
      for (const auto& list : rounds.front().lists)
        if (static_cast<int>(list.size()) < k) full = false;
      // With one round the per-user deviation profile is fixed by (k, n,
      // gamma) alone, so every full run scores the same.
      if (full) r.warn_code(warn::kConstant);
    }
    return r;
  }

  std::vector<double> raw(n, 0.0);
  for (int u = 0; u < m; ++u) {
    for (const auto* list : lists[u]) {
      const int depth = std::min<int>(k, static_cast<int>(list->size()));
      double g = 1.0;
      for (int z = 1; z <= depth; ++z) {
        raw[(*list)[z - 1]] += g;
        g *= gamma;
      }
    }
  }
  double acc = 0.0;
  const double mw = static_cast<double>(m) * static_cast<double>(w);
  for (int i = 0; i < n; ++i) {
    const double d = raw[i] / mw - target;
    acc += d * d;
  }
  r.score = acc / static_cast<double>(n);
  return r;
}

MeasureResult expected_exposure_disparity(DisparityKind kind, const RunSet& run,
                                          const Catalog& catalog, int k, double gamma) {
  return expected_exposure_disparity(kind, std::vector<RunSet>{run}, catalog, k, gamma);
}

}  // namespace recfair
