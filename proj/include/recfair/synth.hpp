#pragma once
// Deterministic scenario generators: extreme-exposure recommenders, scripted
// relevance and exposure sweeps, seeded similarity sampling and assignment,
// and the three fairness re-rankers. Stochastic generators are pure
// functions of their parameters and a 64-bit seed; the PRNG contract
// ("mt19937_64/v1") is std::mt19937_64 with the hand-rolled transforms
// documented in the implementation, so outputs are portable across standard
// libraries.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "recfair/core.hpp"
#include "recfair/effectiveness.hpp"
#include "recfair/user.hpp"

namespace recfair {

inline constexpr const char* kRngAlgorithm = "mt19937_64/v1";

// Repeatable recommenders may re-recommend history items; nonrepeatable ones
// must avoid each user's history.
enum class RepeatMode { Repeatable, Nonrepeatable };

// Spreads exposure as evenly as the slot count allows. Repeatable mode
// round-robins the catalog, so (km mod n) items land one count above the
// rest. Nonrepeatable mode serves users in the given order, handing each the
// k least-exposed items outside their history (ties to the lower item
// index). Throws when a user has fewer than k recommendable items.
RunSet most_fair_run(RepeatMode mode, const std::vector<std::string>& users,
                     const Interactions& hist, const Catalog& catalog, int k);

// Concentrates all exposure on the first k catalog items. Nonrepeatable mode
// swaps history conflicts for the lowest-indexed recommendable substitute
// and throws when none exists.
RunSet most_unfair_run(RepeatMode mode, const std::vector<std::string>& users,
                       const Interactions& hist, const Catalog& catalog, int k);

// Scripted insertion of never-exposed relevant items. Everyone starts with
// the same k items, relevant only to the anchor user u1, whose list never
// changes. Step t replaces the t bottom entries of every other list with
// that user's own never-recommended relevant items, one more per step, so
// the final step exposes each of the km catalog items exactly once.
struct LeInsertScenario {
  Catalog catalog;                // exactly k*m items
  Qrels qrels;                    // user j owns items [j*k, (j+1)*k)
  std::vector<double> fractions;  // t/k for t = 0..k
  std::vector<RunSet> runs;       // one run per fraction
};

LeInsertScenario insert_le_relevant(int m = 1000, int k = 10);

// Positions start..start+width-1 (1-based) kept in order and re-ranked as
// 1..width; scores travel with their items. Throws when any list is too
// short for the window.
RunSet sliding_window(const RunSet& run, int width, int start);

// Where flipped items are drawn from: the first irrelevant ranked items
// after rank k, or the last ones at the list tail.
enum class FlipSide { Top, Bottom };

struct FlipSteps {
  std::vector<Qrels> steps;  // steps[0] is the input; one entry per round
  int completed = 0;         // rounds applied (flips per user)
  bool exhausted = false;    // some user ran out of candidates early
};

// Per round, flips one irrelevant ranked item beyond rank k to relevant for
// every user. A round is applied only when every user still has a
// candidate; otherwise the generator stops and reports it.
FlipSteps add_relevant_beyond_topk(const RunSet& run, const Qrels& qrels, FlipSide side,
                                   int count, int k);

enum class SimDist { Weibull, Normal };

// Pair similarities drawn from Weibull(shape) (scale 1) or the standard
// normal, then min-max normalized over the pairs. Larger Weibull shapes give
// less right-skewed similarity populations. `shape` must be positive for
// Weibull and is ignored for Normal.
SimilarityMatrix sample_similarity(SimDist dist, double shape,
                                   const std::vector<std::string>& users, uint64_t seed);

enum class AssignMode { MostFair, MostUnfair };

// Redistributes the matrix's own values across its pairs: MostFair hands the
// largest similarities to the pairs with the smallest score differences,
// MostUnfair to the largest. Ties in difference resolve by pair order, so
// the result is deterministic. Every user in the matrix needs a score.
SimilarityMatrix assign_similarity(const SimilarityMatrix& sims, const PerUserScores& scores,
                                   AssignMode mode);

// Relevance sweep over the judged users. Every user is prepared an
// all-relevant top-k (their relevant items, chosen under the seed, padded
// with seeded irrelevant items when they have fewer than k) plus an
// all-irrelevant list; `frac_zero` of the users, in a seeded order, then
// receive the irrelevant list. Fractions are tenths; with a fixed seed the
// zeroed sets nest as the fraction grows. Returns the run and the untouched
// judgements.
std::pair<RunSet, Qrels> vary_relevance(const Qrels& qrels, const Catalog& catalog, int k,
                                        double frac_zero, uint64_t seed);

enum class Reranker { CombMnz, Borda, GreedySubstitution };

const char* reranker_name(Reranker method);

struct RerankConfig {
  int k = 10;          // coverage and fusion depth
  int k_prime = 25;    // re-ranked prefix length
  double beta = 0.05;  // greedy substitution: share of the pool treated as popular
  double cap = 0.25;   // greedy substitution: max replaced share of the slots
};

// Re-ranks each user's top-k' prefix toward exposure fairness; deeper list
// positions stay put. CombMnz and Borda fuse, per user, the predicted-score
// order with an inverse top-k-coverage order. Greedy substitution works
// across users: it pairs the most-covered top-k' items with the least
// covered, prices every in-list replacement by its predicted-score loss, and
// applies the cheapest swaps until the cap is spent, skipping swaps made
// stale by earlier ones. `predicted` maps (user index, item index) to the
// model score; CombMnz consults a user's own prefix, greedy substitution
// also consults every replacement candidate, and Borda needs no scores.
// Returned lists carry no scores since re-ranking makes them stale.
RunSet rerank(Reranker method, const RunSet& run, const Catalog& catalog,
              const RerankConfig& cfg = {},
              const std::function<double(int, int)>& predicted = {});

}  // namespace recfair
