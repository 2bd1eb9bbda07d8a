#pragma once
// Group-level fairness over per-user effectiveness scores: dispersion between
// group means, share-weighted dispersion within groups, and the same
// statistics over raw user scores. The Atkinson index ties the three levels
// together exactly: 1 - Atk_ind = (1 - Atk_between) * (1 - Atk_within).

#include <string>
#include <vector>

#include "recfair/core.hpp"
#include "recfair/effectiveness.hpp"
#include "recfair/measure.hpp"

namespace recfair {

// Scores split by intersectional group, one label per observed combination of
// the chosen attribute values (unobserved combinations never materialize).
// Groups are non-empty and sorted by label; shares sum to 1 unless every
// score is zero, in which case they are all zero and grand_total tells.
struct GroupScores {
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> members;  // user ids, sorted
  std::vector<std::vector<double>> scores;        // aligned with members
  std::vector<double> mean;
  std::vector<double> share;                      // group total / grand total
  double grand_total = 0.0;
  int users = 0;

  int groups() const { return static_cast<int>(labels.size()); }
};

// Splits the scored users by the chosen attributes. A scored user missing any
// requested attribute raises ValidationError listing the offenders, as do
// negative scores.
GroupScores group_scores(const PerUserScores& per_user, const GroupTable& table,
                         const std::vector<std::string>& attrs);

enum class BetweenKind { Min25, Range, SD, MAD, Gini, Atk, CV, FStat, KL, GCE };
enum class WithinKind { SD, Gini, Atk };
enum class IndividualKind { SD, Gini, Atk };

const char* between_kind_name(BetweenKind kind);    // e.g. "sd-bgroup"
const char* within_kind_name(WithinKind kind);      // e.g. "sd-wgroup"
const char* individual_kind_name(IndividualKind kind);  // e.g. "sd-ind"

struct GroupParams {
  double epsilon = 0.5;  // Atkinson aversion, in [0, 1)
  double b = 2.0;        // GCE exponent, != 0 and != 1
  double lambda = 0.95;  // GCE smoothing mix, in [0, 1]
  double c = 1e-4;       // GCE smoothing floor
};

// Dispersion of the group mean scores. Atk additionally sees within-group
// structure: each group enters as its equally-distributed equivalent score,
// weighted by group size. A single group collapses every kind to its
// perfect-equality value except FStat, which is undefined without residual
// degrees of freedom; KL and GCE are undefined when all means are zero.
MeasureResult between_group(BetweenKind kind, const GroupScores& gs,
                            const GroupParams& params = {});

// Share-weighted sum of per-group dispersion; zero-share groups contribute
// nothing. When every score is zero there are no shares: SD and Atk are 0,
// Gini is undefined.
MeasureResult within_group(WithinKind kind, const GroupScores& gs,
                           const GroupParams& params = {});

// Same statistics over the raw user scores, each user weighted equally.
// Requires at least two scored users. On all-zero scores Gini is undefined
// while Atk is 0 by definition.
MeasureResult individual_fairness(IndividualKind kind, const PerUserScores& per_user,
                                  const GroupParams& params = {});

// |(1 - Atk_ind) - (1 - Atk_between)(1 - Atk_within)| under one grouping.
// The decomposition is exact, so this stays at rounding error on any input.
double atk_decomposition_residual(const PerUserScores& per_user, const GroupTable& table,
                                  const std::vector<std::string>& attrs, double epsilon = 0.5);

// Non-empty attribute subsets up to max_size (0 = no cap), ordered by size
// then by position of the chosen attributes.
std::vector<std::vector<std::string>> attribute_subsets(const std::vector<std::string>& attrs,
                                                        int max_size);

struct GroupingSweepEntry {
  std::vector<std::string> attrs;
  int groups = 0;
  std::vector<MeasureResult> results;  // every BetweenKind, declaration order
};

// All between-group measures for every given subset, evaluated in parallel
// across subsets.
std::vector<GroupingSweepEntry> grouping_sweep(const PerUserScores& per_user,
                                               const GroupTable& table,
                                               const std::vector<std::vector<std::string>>& subsets,
                                               const GroupParams& params = {});

}  // namespace recfair
