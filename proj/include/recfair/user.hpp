#pragma once
// Individual user fairness. Dispersion (SD, Gini) over per-user
// effectiveness, the envy family (ME, MME, PEU) on a normalized utility,
// similarity-weighted effectiveness disparity (PUF), and the
// representation-distance UF score, plus the user-similarity kernels they
// share.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recfair/core.hpp"
#include "recfair/effectiveness.hpp"
#include "recfair/measure.hpp"

namespace recfair {

// Symmetric user-pair similarity, condensed upper triangle over a fixed user
// order. Values sit in [0,1]; the diagonal is never stored or read.
struct SimilarityMatrix {
  std::vector<std::string> users;
  std::unordered_map<std::string, int> index;
  std::vector<double> values;              // pair (a<b) at offset(a,b)
  bool normalized = false;                 // min-max over pairs applied
  bool degenerate = false;                 // min-max hit max == min, left as is
  std::vector<std::string> empty_history;  // users with no interactions

  int m() const { return static_cast<int>(users.size()); }
  int64_t pairs() const;
  int64_t offset(int a, int b) const;      // requires a != b
  double at(int a, int b) const;
  double at(const std::string& a, const std::string& b) const;
  void set(int a, int b, double value);

  static SimilarityMatrix blank(const std::vector<std::string>& users);

  // Min-max over all pair values. All-equal values are left untouched and
  // flagged degenerate instead of dividing by zero.
  void minmax_normalize();
};

enum class SimKind {
  Cosine,   // binarized interaction vectors
  Jaccard,  // interaction sets
  UFBlend,  // gamma * Jaccard + (1-gamma) * (1 - JS divergence of categories)
};

const char* sim_kind_name(SimKind kind);

// Builds the pairwise similarity over `users` from their interaction
// histories. UFBlend needs item_category (item index -> category id >= 0)
// for the feature-distribution component; JS divergence uses base-2 logs so
// the blend stays in [0,1]. Users without history are similar to nobody
// (all zero) and reported.
SimilarityMatrix similarity(SimKind kind, const std::vector<std::string>& users,
                            const Interactions& hist, int n, double gamma = 1.0,
                            const std::vector<int>* item_category = nullptr,
                            bool normalize = false);

// TSV triples (user, user, value) with #-comments; unseen pairs read as 0.
void write_similarity_tsv(std::ostream& out, const SimilarityMatrix& sim);
SimilarityMatrix read_similarity_tsv(std::istream& in);

enum class DispersionKind { SD, Gini };

// Population SD or Gini of the per-user scores. Gini over an all-zero score
// vector is undefined. Result ids carry the source measure, e.g. "sd-p".
MeasureResult user_dispersion(DispersionKind kind, const PerUserScores& scores);

// phi utility: u's ground-truth gain from the owner's top-k list, normalized
// by u's gain over the owner's ideal top-k (relevance desc, item id asc).
// NaN when the owner's ideal holds nothing u finds relevant.
double phi_utility(const std::string& user, const std::string& owner, const RunSet& run,
                   const Qrels& qrels, const Catalog& catalog, int k);

struct UtilityConfig {
  bool phi = true;                     // otherwise `measure` scored on swapped lists
  EffMeasure measure = EffMeasure::P;  // ignored when phi
  int k = 10;
};

enum class EnvyKind { ME, MME, PEU };

// envy(u,u') = max{utility_u(L_u') - utility_u(L_u), 0}. ME sums ordered
// pairs against a half-pair normalizer, MME averages per-user maxima, PEU
// counts users whose max envy strictly exceeds epsilon. Pairs whose utility
// is undefined are dropped from the aggregates and reported.
MeasureResult envy_family(EnvyKind kind, const RunSet& run, const Qrels& qrels,
                          const Catalog& catalog, const UtilityConfig& util,
                          double epsilon = 0.05);

// Mean over user pairs of sim(u,u') * |S(u) - S(u')|. Users absent from
// either input are dropped and reported.
MeasureResult puf(const PerUserScores& scores, const SimilarityMatrix& sim);

// UF: log of the similarity-weighted representation distance summed over the
// similar-pair set {sim >= threshold}. d_L averages pairwise cosine distance
// between the items of the two top-k lists over a fixed k^2 grid. threshold
// defaults to mean+SD of all pair similarities, log_base to the pair count.
MeasureResult uf(const RunSet& run, const SimilarityMatrix& sim,
                 const std::vector<std::vector<double>>& item_repr, int k,
                 std::optional<double> threshold = std::nullopt,
                 std::optional<double> log_base = std::nullopt);

// One-hot interaction representation: item vectors over the history's users.
std::vector<std::vector<double>> onehot_item_repr(const Interactions& hist, int n);

MeasureResult uf(const RunSet& run, const SimilarityMatrix& sim, const Interactions& hist,
                 int n, int k, std::optional<double> threshold = std::nullopt,
                 std::optional<double> log_base = std::nullopt);

}  // namespace recfair
