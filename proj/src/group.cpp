#include "recfair/group.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace recfair {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MeasureResult base_result(const char* id, Direction direction) {
  MeasureResult r;
  r.id = id;
  r.variant = variant_name(Variant::Original);
  r.direction = direction;
  return r;
}

double vec_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_sd(const std::vector<double>& v) {
  const double mu = vec_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Sorted-rank form; NaN when the total is zero.
double gini_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const int n = static_cast<int>(v.size());
  double num = 0.0;
  double den = 0.0;
  for (int j = 1; j <= n; ++j) {
    num += (2.0 * j - n - 1) * v[j - 1];
    den += v[j - 1];
  }
  if (den == 0.0) return kNaN;
  return num / (den * n);
}

void check_epsilon(double eps) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw ValidationError("atk: epsilon must be in [0, 1)");
}

// Equally-distributed equivalent of non-negative values; null weights mean
// equal weights.
double ede_of(const std::vector<double>& x, const std::vector<double>* w, double eps) {
  double wsum = 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double wi = w ? (*w)[i] : 1.0;
    wsum += wi;
    acc += wi * std::pow(x[i], 1.0 - eps);
  }
  return std::pow(acc / wsum, 1.0 / (1.0 - eps));
}

// 0 on all-zero input. The mean uses the same weights as the equivalent, so
// the between/within decomposition multiplies out exactly.
double atkinson_of(const std::vector<double>& x, const std::vector<double>* w, double eps) {
  check_epsilon(eps);
  double wsum = 0.0;
  double mu = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double wi = w ? (*w)[i] : 1.0;
    wsum += wi;
    mu += wi * x[i];
  }
  mu /= wsum;
  if (mu == 0.0) return 0.0;
  return 1.0 - ede_of(x, w, eps) / mu;
}

// Inclusive linear-interpolation first quartile of sorted values.
double first_quartile(const std::vector<double>& sorted) {
  const int n = static_cast<int>(sorted.size());
  const double h = 0.25 * (n - 1);
  const int lo = static_cast<int>(h);
  const double frac = h - lo;
  if (lo + 1 >= n) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double share_weighted_dispersion(WithinKind kind, const GroupScores& gs, double eps) {
  double acc = 0.0;
  for (int j = 0; j < gs.groups(); ++j) {
    if (gs.share[j] == 0.0) continue;
    double d = 0.0;
    switch (kind) {
      case WithinKind::SD: d = population_sd(gs.scores[j]); break;
      case WithinKind::Gini: d = gini_of(gs.scores[j]); break;
      case WithinKind::Atk: d = atkinson_of(gs.scores[j], nullptr, eps); break;
    }
    acc += gs.share[j] * d;
  }
  return acc;
}

double atk_between_of(const GroupScores& gs, double eps) {
  const int ng = gs.groups();
  std::vector<double> equiv(ng);
  std::vector<double> size(ng);
  for (int j = 0; j < ng; ++j) {
    equiv[j] = ede_of(gs.scores[j], nullptr, eps);
    size[j] = static_cast<double>(gs.scores[j].size());
  }
  return atkinson_of(equiv, &size, eps);
}

}  // namespace

const char* between_kind_name(BetweenKind kind) {
  switch (kind) {
    case BetweenKind::Min25: return "min25";
    case BetweenKind::Range: return "range";
    case BetweenKind::SD: return "sd-bgroup";
    case BetweenKind::MAD: return "mad";
    case BetweenKind::Gini: return "gini-bgroup";
    case BetweenKind::Atk: return "atk-bgroup";
    case BetweenKind::CV: return "cv";
    case BetweenKind::FStat: return "fstat";
    case BetweenKind::KL: return "kl";
    case BetweenKind::GCE: return "gce";
  }
  return "";
}

const char* within_kind_name(WithinKind kind) {
  switch (kind) {
    case WithinKind::SD: return "sd-wgroup";
    case WithinKind::Gini: return "gini-wgroup";
    case WithinKind::Atk: return "atk-wgroup";
  }
  return "";
}

const char* individual_kind_name(IndividualKind kind) {
  switch (kind) {
    case IndividualKind::SD: return "sd-ind";
    case IndividualKind::Gini: return "gini-ind";
    case IndividualKind::Atk: return "atk-ind";
  }
  return "";
}

GroupScores group_scores(const PerUserScores& per_user, const GroupTable& table,
                         const std::vector<std::string>& attrs) {
  std::vector<std::string> users;
  users.reserve(per_user.score.size());
  for (const auto& [user, value] : per_user.score) {
    if (value < 0.0)
      throw ValidationError("group scores: negative score for user " + user);
    users.push_back(user);
  }
  auto part = table.partition(users, attrs);

  GroupScores gs;
  gs.labels = std::move(part.labels);
  gs.members = std::move(part.members);
  const int ng = gs.groups();
  gs.scores.resize(ng);
  gs.mean.resize(ng);
  gs.share.assign(ng, 0.0);
  std::vector<double> total(ng, 0.0);
  for (int j = 0; j < ng; ++j) {
    gs.scores[j].reserve(gs.members[j].size());
    for (const auto& user : gs.members[j]) {
      const double x = per_user.score.at(user);
      gs.scores[j].push_back(x);
      total[j] += x;
    }
    gs.mean[j] = total[j] / static_cast<double>(gs.scores[j].size());
    gs.grand_total += total[j];
    gs.users += static_cast<int>(gs.scores[j].size());
  }
  if (gs.grand_total > 0.0)
    for (int j = 0; j < ng; ++j) gs.share[j] = total[j] / gs.grand_total;
  return gs;
}

MeasureResult between_group(BetweenKind kind, const GroupScores& gs, const GroupParams& params) {
  const int ng = gs.groups();
  if (ng == 0) throw ValidationError("between-group: no groups");
  const Direction dir =
      kind == BetweenKind::Min25 ? Direction::HigherIsFairer : Direction::LowerIsFairer;
  MeasureResult r = base_result(between_kind_name(kind), dir);
  r.params["groups"] = ng;

  switch (kind) {
    case BetweenKind::Min25: {
      std::vector<double> sorted = gs.mean;
      std::sort(sorted.begin(), sorted.end());
      const double q1 = first_quartile(sorted);
      double acc = 0.0;
      int cnt = 0;
      for (double m : sorted) {
        if (m > q1) break;
        acc += m;
        ++cnt;
      }
      r.params["q1"] = q1;
      r.score = acc / cnt;
      break;
    }
    case BetweenKind::Range: {
      const auto [lo, hi] = std::minmax_element(gs.mean.begin(), gs.mean.end());
      r.score = *hi - *lo;
      break;
    }
    case BetweenKind::SD:
      r.score = population_sd(gs.mean);
      break;
    case BetweenKind::MAD: {
      double acc = 0.0;
      for (int j = 0; j < ng; ++j)
        for (int jp = j + 1; jp < ng; ++jp) acc += std::fabs(gs.mean[j] - gs.mean[jp]);
      r.score = ng < 2 ? 0.0 : 2.0 * acc / (static_cast<double>(ng) * (ng - 1));
      break;
    }
    case BetweenKind::Gini: {
      const double g = gini_of(gs.mean);
      if (std::isnan(g)) {
        r.score = kNaN;
        r.mark_undefined();
      } else {
        r.score = g;
      }
      break;
    }
    case BetweenKind::Atk:
      r.params["epsilon"] = params.epsilon;
      r.score = atk_between_of(gs, params.epsilon);
      break;
    case BetweenKind::CV: {
      const double sd = population_sd(gs.mean);
      const double mu = vec_mean(gs.mean);
      if (sd == 0.0) {
        r.score = 0.0;
      } else if (mu == 0.0) {
        r.score = kNaN;
        r.mark_undefined();
      } else {
        r.score = sd / mu;
      }
      break;
    }
    case BetweenKind::FStat: {
      // The 1/N factors inside both variance sums cancel in the ratio.
      if (ng < 2 || gs.users <= ng) {
        r.score = kNaN;
        r.mark_undefined();
        break;
      }
      const double mu = gs.grand_total / gs.users;
      double v = 0.0;
      double u = 0.0;
      for (int j = 0; j < ng; ++j) {
        const double d = gs.mean[j] - mu;
        v += gs.scores[j].size() * d * d;
        for (double x : gs.scores[j]) u += (x - gs.mean[j]) * (x - gs.mean[j]);
      }
      if (u == 0.0) {
        r.score = kNaN;
        r.mark_undefined();
      } else {
        r.score = (v / (ng - 1)) / (u / (gs.users - ng));
      }
      break;
    }
    case BetweenKind::KL: {
      double sum = 0.0;
      for (double m : gs.mean) sum += m;
      if (sum == 0.0) {
        r.score = kNaN;
        r.mark_undefined();
        break;
      }
      double kl = 0.0;
      for (int j = 0; j < ng; ++j) {
        const double p = gs.mean[j] / sum;
        if (p == 0.0) continue;
        const double q = gs.scores[j].size() / static_cast<double>(gs.users);
        kl += p * std::log2(p / q);
      }
      r.score = kl;
      break;
    }
    case BetweenKind::GCE: {
      if (params.b == 0.0 || params.b == 1.0)
        throw ValidationError("gce: exponent must differ from 0 and 1");
      if (!(params.lambda >= 0.0 && params.lambda <= 1.0))
        throw ValidationError("gce: lambda must be in [0, 1]");
      r.params["b"] = params.b;
      r.params["lambda"] = params.lambda;
      r.params["c"] = params.c;
      double sum = 0.0;
      for (double m : gs.mean) sum += m;
      if (sum == 0.0) {
        r.score = kNaN;
        r.mark_undefined();
        break;
      }
      std::vector<double> smoothed(ng);
      double norm = 0.0;
      for (int j = 0; j < ng; ++j) {
        smoothed[j] = params.lambda * (gs.mean[j] / sum) + (1.0 - params.lambda) * params.c;
        norm += smoothed[j];
      }
      const double pref = 1.0 / ng;
      double acc = 0.0;
      for (int j = 0; j < ng; ++j)
        acc += std::pow(pref, params.b) * std::pow(smoothed[j] / norm, 1.0 - params.b);
      const double score = -(acc - 1.0) / (params.b * (1.0 - params.b));
      if (!std::isfinite(score)) {
        r.score = kNaN;
        r.mark_undefined();
      } else {
        r.score = score;
      }
      break;
    }
  }
  return r;
}

MeasureResult within_group(WithinKind kind, const GroupScores& gs, const GroupParams& params) {
  const int ng = gs.groups();
  if (ng == 0) throw ValidationError("within-group: no groups");
  MeasureResult r = base_result(within_kind_name(kind), Direction::LowerIsFairer);
  r.params["groups"] = ng;
  if (kind == WithinKind::Atk) {
    check_epsilon(params.epsilon);
    r.params["epsilon"] = params.epsilon;
  }
  if (gs.grand_total == 0.0) {
    if (kind == WithinKind::Gini) {
      r.score = kNaN;
      r.mark_undefined();
    } else {
      r.score = 0.0;
    }
    return r;
  }
  r.score = share_weighted_dispersion(kind, gs, params.epsilon);
  return r;
}

MeasureResult individual_fairness(IndividualKind kind, const PerUserScores& per_user,
                                  const GroupParams& params) {
  std::vector<double> values;
  values.reserve(per_user.score.size());
  for (const auto& [user, x] : per_user.score) {
    if (x < 0.0)
      throw ValidationError("individual fairness: negative score for user " + user);
    values.push_back(x);
  }
  if (values.size() < 2)
    throw ValidationError("individual fairness: at least two scored users required");
  MeasureResult r = base_result(individual_kind_name(kind), Direction::LowerIsFairer);
  r.params["users"] = static_cast<double>(values.size());
  switch (kind) {
    case IndividualKind::SD:
      r.score = population_sd(values);
      break;
    case IndividualKind::Gini: {
      const double g = gini_of(values);
      if (std::isnan(g)) {
        r.score = kNaN;
        r.mark_undefined();
      } else {
        r.score = g;
      }
      break;
    }
    case IndividualKind::Atk:
      r.params["epsilon"] = params.epsilon;
      r.score = atkinson_of(values, nullptr, params.epsilon);
      break;
  }
  return r;
}

double atk_decomposition_residual(const PerUserScores& per_user, const GroupTable& table,
                                  const std::vector<std::string>& attrs, double epsilon) {
  check_epsilon(epsilon);
  const GroupScores gs = group_scores(per_user, table, attrs);
  if (gs.groups() == 0) throw ValidationError("atk decomposition: no scored users");
  std::vector<double> all;
  all.reserve(gs.users);
  for (const auto& group : gs.scores) all.insert(all.end(), group.begin(), group.end());
  const double ind = atkinson_of(all, nullptr, epsilon);
  const double between = atk_between_of(gs, epsilon);
  const double within =
      gs.grand_total == 0.0 ? 0.0 : share_weighted_dispersion(WithinKind::Atk, gs, epsilon);
  return std::fabs((1.0 - ind) - (1.0 - between) * (1.0 - within));
}

std::vector<std::vector<std::string>> attribute_subsets(const std::vector<std::string>& attrs,
                                                        int max_size) {
  const int na = static_cast<int>(attrs.size());
  const int cap = max_size <= 0 ? na : std::min(max_size, na);
  std::vector<std::vector<std::string>> out;
  std::vector<int> pick;
  auto rec = [&](auto&& self, int start, int want) -> void {
    if (want == 0) {
      std::vector<std::string> subset;
      subset.reserve(pick.size());
      for (int i : pick) subset.push_back(attrs[i]);
      out.push_back(std::move(subset));
      return;
    }
    for (int i = start; i + want <= na; ++i) {
      pick.push_back(i);
      self(self, i + 1, want - 1);
      pick.pop_back();
    }
  };
  for (int size = 1; size <= cap; ++size) rec(rec, 0, size);
  return out;
}

std::vector<GroupingSweepEntry> grouping_sweep(const PerUserScores& per_user,
                                               const GroupTable& table,
                                               const std::vector<std::vector<std::string>>& subsets,
                                               const GroupParams& params) {
  static constexpr BetweenKind kAll[] = {
      BetweenKind::Min25, BetweenKind::Range, BetweenKind::SD,    BetweenKind::MAD,
      BetweenKind::Gini,  BetweenKind::Atk,   BetweenKind::CV,    BetweenKind::FStat,
      BetweenKind::KL,    BetweenKind::GCE,
  };
  const int ns = static_cast<int>(subsets.size());
  std::vector<GroupingSweepEntry> out(ns);
  std::exception_ptr first_error;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < ns; ++i) {
    try {
      const GroupScores gs = group_scores(per_user, table, subsets[i]);
      GroupingSweepEntry entry;
      entry.attrs = subsets[i];
      entry.groups = gs.groups();
      entry.results.reserve(std::size(kAll));
      for (BetweenKind kind : kAll) entry.results.push_back(between_group(kind, gs, params));
      out[i] = std::move(entry);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace recfair
