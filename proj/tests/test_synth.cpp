#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "recfair/core.hpp"
#include "recfair/effectiveness.hpp"
#include "recfair/exposure.hpp"
#include "recfair/relevance.hpp"
#include "recfair/synth.hpp"
#include "recfair/user.hpp"

using namespace recfair;

namespace {

Catalog cat(int n) {
  std::vector<std::string> ids;
  for (int i = 1; i <= n; ++i) ids.push_back("i" + std::to_string(i));
  return Catalog::from_ids(ids);
}

RunSet run_of(const std::vector<std::vector<int>>& lists) {
  RunSet run;
  for (size_t u = 0; u < lists.size(); ++u) {
    const int idx = run.add_user("u" + std::to_string(u + 1));
    run.lists[idx] = lists[u];
  }
  return run;
}

Qrels qrels_of(const std::vector<std::vector<int>>& rel) {
  Qrels q;
  for (size_t u = 0; u < rel.size(); ++u) {
    const std::string user = "u" + std::to_string(u + 1);
    q.rel[user];
    for (int i : rel[u]) q.add(user, i);
  }
  return q;
}

Interactions hist_of(const std::vector<std::vector<int>>& items) {
  Interactions h;
  for (size_t u = 0; u < items.size(); ++u) {
    const std::string user = "u" + std::to_string(u + 1);
    h.hist[user];
    for (int i : items[u]) h.add(user, i);
  }
  return h;
}

std::vector<std::string> users_of(int m) {
  std::vector<std::string> ids;
  for (int u = 1; u <= m; ++u) ids.push_back("u" + std::to_string(u));
  return ids;
}

PerUserScores scores_of(const std::vector<double>& values) {
  PerUserScores s;
  s.measure = "p";
  s.k = 10;
  for (size_t u = 0; u < values.size(); ++u)
    s.score["u" + std::to_string(u + 1)] = values[u];
  return s;
}

double skewness(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  return m3 / std::pow(m2, 1.5);
}

bool weakly_less_fair(Direction dir, double later, double earlier) {
  if (dir == Direction::LowerIsFairer) return later >= earlier - 1e-12;
  return later <= earlier + 1e-12;
}

bool weakly_fairer(Direction dir, double later, double earlier) {
  if (dir == Direction::LowerIsFairer) return later <= earlier + 1e-12;
  return later >= earlier - 1e-12;
}

}  // namespace

TEST_CASE("repeatable most-fair run spreads counts within one of each other") {
  const Catalog c = cat(6);
  const RunSet run = most_fair_run(RepeatMode::Repeatable, users_of(4), {}, c, 3);
  CHECK_NOTHROW(validate_run(run, c));
  CHECK(run.lists[0] == std::vector<int>{0, 1, 2});
  CHECK(run.lists[1] == std::vector<int>{3, 4, 5});
  CHECK(run.lists[2] == std::vector<int>{0, 1, 2});
  CHECK(run.lists[3] == std::vector<int>{3, 4, 5});
  for (int64_t count : exposure_counts(run, 3, 6)) CHECK(count == 2);

  // km does not divide n: the first km mod n items carry the extra count
  const Catalog c5 = cat(5);
  const RunSet uneven = most_fair_run(RepeatMode::Repeatable, users_of(2), {}, c5, 2);
  CHECK(exposure_counts(uneven, 2, 5) == std::vector<int64_t>{1, 1, 1, 1, 0});
}

TEST_CASE("repeatable most-fair run sits at the corrected fair endpoints") {
  const Catalog c = cat(6);
  const ExamFn uniform{ExamKind::Uniform};
  const RunSet run = most_fair_run(RepeatMode::Repeatable, users_of(4), {}, c, 3);
  CHECK(jain(run, c, 3, Variant::Corrected).score == 1.0);
  CHECK(qf(run, c, 3, Variant::Corrected).score == 1.0);
  CHECK(entropy(run, c, 3, Variant::Corrected).score == 1.0);
  CHECK(gini(run, c, 3, Variant::Corrected, uniform).score == 0.0);
  CHECK(fsat(run, c, 3, Variant::Corrected).score == 1.0);

  const Catalog c5 = cat(5);
  const RunSet uneven = most_fair_run(RepeatMode::Repeatable, users_of(2), {}, c5, 2);
  CHECK(jain(uneven, c5, 2, Variant::Corrected).score == 1.0);
}

TEST_CASE("nonrepeatable most-fair run avoids history greedily") {
  const Catalog c = cat(4);
  const Interactions h = hist_of({{0}});
  const RunSet run = most_fair_run(RepeatMode::Nonrepeatable, users_of(3), h, c, 2);
  CHECK_NOTHROW(validate_run(run, c));
  CHECK(run.lists[0] == std::vector<int>{1, 2});
  CHECK(run.lists[1] == std::vector<int>{0, 3});
  CHECK(run.lists[2] == std::vector<int>{0, 1});
  for (int u = 0; u < run.m(); ++u) {
    for (int item : run.lists[u]) CHECK_FALSE(h.contains(run.user_ids[u], item));
  }
  const auto counts = exposure_counts(run, 2, 4);
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 1);
}

TEST_CASE("nonrepeatable most-fair run needs k recommendable items per user") {
  const Catalog c = cat(2);
  CHECK_THROWS_WITH_AS(
      most_fair_run(RepeatMode::Nonrepeatable, users_of(1), hist_of({{0}}), c, 2),
      "most fair: user 'u1' has fewer than k recommendable items", ValidationError);
}

TEST_CASE("repeatable most-unfair run gives everyone the same head items") {
  const Catalog c = cat(5);
  const RunSet run = most_unfair_run(RepeatMode::Repeatable, users_of(3), {}, c, 2);
  CHECK_NOTHROW(validate_run(run, c));
  for (int u = 0; u < 3; ++u) CHECK(run.lists[u] == std::vector<int>{0, 1});
  CHECK(exposure_counts(run, 2, 5) == std::vector<int64_t>{3, 3, 0, 0, 0});

  const ExamFn uniform{ExamKind::Uniform};
  CHECK(jain(run, c, 2, Variant::Corrected).score == 0.0);
  CHECK(qf(run, c, 2, Variant::Corrected).score == 0.0);
  CHECK(entropy(run, c, 2, Variant::Corrected).score == 0.0);
  CHECK(gini(run, c, 2, Variant::Corrected, uniform).score == 1.0);
  CHECK(fsat(run, c, 2, Variant::Corrected).score == 0.0);
}

TEST_CASE("most-unfair run under a low budget trips the always-fair saturation") {
  const Catalog c = cat(5);
  const RunSet run = most_unfair_run(RepeatMode::Repeatable, users_of(2), {}, c, 2);
  const MeasureResult r = fsat(run, c, 2, Variant::Original);
  CHECK(r.score == 1.0);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0] == warn::kAlwaysFair);
}

TEST_CASE("nonrepeatable most-unfair run substitutes the lowest free index") {
  const Catalog c = cat(5);
  const Interactions h = hist_of({{}, {1}, {0, 1}});
  const RunSet run = most_unfair_run(RepeatMode::Nonrepeatable, users_of(3), h, c, 2);
  CHECK_NOTHROW(validate_run(run, c));
  CHECK(run.lists[0] == std::vector<int>{0, 1});
  CHECK(run.lists[1] == std::vector<int>{0, 2});
  CHECK(run.lists[2] == std::vector<int>{2, 3});

  CHECK_THROWS_WITH_AS(
      most_unfair_run(RepeatMode::Nonrepeatable, users_of(1), hist_of({{0}}), cat(2), 2),
      "most unfair: user 'u1' has no recommendable substitute", ValidationError);
}

TEST_CASE("extreme run generators reject bad shapes") {
  CHECK_THROWS_WITH_AS(most_fair_run(RepeatMode::Repeatable, users_of(2), {}, cat(2), 3),
                       "most fair: k exceeds the catalog size", ValidationError);
  CHECK_THROWS_WITH_AS(most_unfair_run(RepeatMode::Repeatable, users_of(2), {}, cat(2), 3),
                       "most unfair: k exceeds the catalog size", ValidationError);
  CHECK_THROWS_WITH_AS(most_fair_run(RepeatMode::Repeatable, {}, {}, cat(2), 1),
                       "most fair: no users", ValidationError);
  CHECK_THROWS_WITH_AS(
      most_fair_run(RepeatMode::Repeatable, {"u1", "u1"}, {}, cat(2), 1),
      "most fair: duplicate user 'u1'", ValidationError);
  CHECK_THROWS_WITH_AS(most_fair_run(RepeatMode::Repeatable, users_of(2), {}, cat(2), 0),
                       "most fair: k must be positive", ValidationError);
}

TEST_CASE("scripted insertion walks from shared head items to full coverage") {
  const LeInsertScenario sc = insert_le_relevant(3, 2);
  CHECK(sc.catalog.n() == 6);
  CHECK(sc.fractions == std::vector<double>{0.0, 0.5, 1.0});
  REQUIRE(sc.runs.size() == 3);
  for (const RunSet& run : sc.runs) CHECK_NOTHROW(validate_run(run, sc.catalog));

  CHECK(sc.runs[0].lists[0] == std::vector<int>{0, 1});
  CHECK(sc.runs[0].lists[1] == std::vector<int>{0, 1});
  CHECK(sc.runs[0].lists[2] == std::vector<int>{0, 1});
  CHECK(sc.runs[1].lists[0] == std::vector<int>{0, 1});
  CHECK(sc.runs[1].lists[1] == std::vector<int>{0, 2});
  CHECK(sc.runs[1].lists[2] == std::vector<int>{0, 4});
  CHECK(sc.runs[2].lists[0] == std::vector<int>{0, 1});
  CHECK(sc.runs[2].lists[1] == std::vector<int>{3, 2});
  CHECK(sc.runs[2].lists[2] == std::vector<int>{5, 4});

  CHECK(*sc.qrels.relevant_items("u1") == std::vector<int>{0, 1});
  CHECK(*sc.qrels.relevant_items("u2") == std::vector<int>{2, 3});
  CHECK(*sc.qrels.relevant_items("u3") == std::vector<int>{4, 5});
}

TEST_CASE("scripted insertion changes one entry per non-anchor user per step") {
  const LeInsertScenario sc = insert_le_relevant(4, 3);
  for (size_t t = 0; t + 1 < sc.runs.size(); ++t) {
    int changed = 0;
    for (int u = 0; u < sc.runs[t].m(); ++u) {
      for (size_t p = 0; p < sc.runs[t].lists[u].size(); ++p) {
        if (sc.runs[t].lists[u][p] != sc.runs[t + 1].lists[u][p]) ++changed;
      }
    }
    CHECK(changed == 3);
    CHECK(sc.runs[t].lists[0] == sc.runs[t + 1].lists[0]);
  }
}

TEST_CASE("scripted insertion moves effectiveness and exposure fairness together") {
  const LeInsertScenario sc = insert_le_relevant(3, 2);
  std::vector<double> means;
  for (const RunSet& run : sc.runs) {
    means.push_back(
        mean_effectiveness(per_user_effectiveness(EffMeasure::P, run, sc.qrels, 2)).mean);
  }
  CHECK(means[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(means[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(means[2] == 1.0);

  CHECK(jain(sc.runs[0], sc.catalog, 2, Variant::Corrected).score == 0.0);
  CHECK(jain(sc.runs[2], sc.catalog, 2, Variant::Corrected).score == 1.0);
  const ExamFn uniform{ExamKind::Uniform};
  CHECK(gini(sc.runs[2], sc.catalog, 2, Variant::Corrected, uniform).score == 0.0);
  CHECK(exposure_counts(sc.runs[2], 2, 6) == std::vector<int64_t>(6, 1));

  // threshold floor(km/n) = 1 makes satisfaction equal distinct coverage
  for (const RunSet& run : sc.runs) {
    CHECK(qf(run, sc.catalog, 2, Variant::Original).score ==
          fsat(run, sc.catalog, 2, Variant::Original).score);
  }
}

TEST_CASE("scripted insertion at benchmark scale stays consistent") {
  const LeInsertScenario sc = insert_le_relevant();
  CHECK(sc.catalog.n() == 10000);
  REQUIRE(sc.runs.size() == 11);
  CHECK(sc.fractions[3] == doctest::Approx(0.3).epsilon(1e-12));
  for (size_t t = 0; t < sc.runs.size(); ++t) {
    const double mean =
        mean_effectiveness(per_user_effectiveness(EffMeasure::P, sc.runs[t], sc.qrels, 10)).mean;
    const double expect = (1.0 + 999.0 * (static_cast<double>(t) / 10.0)) / 1000.0;
    CHECK(mean == doctest::Approx(expect).epsilon(1e-12));
    CHECK(qf(sc.runs[t], sc.catalog, 10, Variant::Original).score ==
          fsat(sc.runs[t], sc.catalog, 10, Variant::Original).score);
  }
  CHECK(jain(sc.runs[0], sc.catalog, 10, Variant::Corrected).score == 0.0);
  CHECK(jain(sc.runs[10], sc.catalog, 10, Variant::Corrected).score == 1.0);
  CHECK_THROWS_WITH_AS(insert_le_relevant(1, 10), "le insert: at least two users required",
                       ValidationError);
}

TEST_CASE("sliding window slices ranks and scores in order") {
  RunSet run;
  const int u = run.add_user("u1");
  run.lists[u] = {4, 2, 7, 0, 8};
  run.scores[u] = {9.5, 7.0, 6.0, 2.0, 1.0};
  const Catalog c = cat(9);

  const RunSet first = sliding_window(run, 3, 1);
  CHECK(first.lists[0] == std::vector<int>{4, 2, 7});
  CHECK(first.scores[0] == std::vector<double>{9.5, 7.0, 6.0});
  const RunSet mid = sliding_window(run, 3, 2);
  CHECK(mid.lists[0] == std::vector<int>{2, 7, 0});
  const RunSet last = sliding_window(run, 3, 3);
  CHECK(last.lists[0] == std::vector<int>{7, 0, 8});
  CHECK(last.scores[0] == std::vector<double>{6.0, 2.0, 1.0});
  CHECK_NOTHROW(validate_run(last, c));

  CHECK_THROWS_WITH_AS(sliding_window(run, 3, 4),
                       "sliding window: window exceeds the list for user 'u1'", ValidationError);
  CHECK_THROWS_WITH_AS(sliding_window(run, 0, 1), "sliding window: width must be positive",
                       ValidationError);
  CHECK_THROWS_WITH_AS(sliding_window(run, 3, 0), "sliding window: start must be positive",
                       ValidationError);
}

TEST_CASE("sliding a window down an ideal ranking never raises effectiveness") {
  const RunSet run = run_of({{0, 1, 2, 3, 4, 5}, {4, 5, 6, 7, 1, 0}});
  const Qrels q = qrels_of({{0, 1, 2}, {4}});
  const std::vector<EffMeasure> measures = {EffMeasure::HR,  EffMeasure::MRR, EffMeasure::P,
                                            EffMeasure::R,   EffMeasure::MAP, EffMeasure::NDCG};
  for (EffMeasure measure : measures) {
    double prev = 2.0;
    for (int start = 1; start <= 4; ++start) {
      const RunSet window = sliding_window(run, 3, start);
      const double mean = mean_effectiveness(per_user_effectiveness(measure, window, q, 3)).mean;
      CHECK(mean <= prev + 1e-15);
      prev = mean;
    }
  }
}

TEST_CASE("beyond-top-k flips walk down the ranking from the chosen side") {
  const RunSet run = run_of({{0, 1, 2, 3, 4, 5, 6, 7}});
  const Qrels q = qrels_of({{0, 4}});

  const FlipSteps top = add_relevant_beyond_topk(run, q, FlipSide::Top, 2, 2);
  REQUIRE(top.steps.size() == 3);
  CHECK(top.completed == 2);
  CHECK_FALSE(top.exhausted);
  CHECK(top.steps[0].rel.at("u1") == std::vector<int>{0, 4});
  CHECK(top.steps[1].rel.at("u1") == std::vector<int>{0, 2, 4});
  CHECK(top.steps[2].rel.at("u1") == std::vector<int>{0, 2, 3, 4});

  const FlipSteps bottom = add_relevant_beyond_topk(run, q, FlipSide::Bottom, 2, 2);
  CHECK(bottom.steps[1].rel.at("u1") == std::vector<int>{0, 4, 7});
  CHECK(bottom.steps[2].rel.at("u1") == std::vector<int>{0, 4, 6, 7});

  const FlipSteps all = add_relevant_beyond_topk(run, q, FlipSide::Top, 10, 2);
  CHECK(all.completed == 5);
  CHECK(all.exhausted);
  CHECK(all.steps.size() == 6);
  // item at rank 2 never flips, everything beyond does
  CHECK(all.steps[5].rel.at("u1") == std::vector<int>{0, 2, 3, 4, 5, 6, 7});

  const FlipSteps none = add_relevant_beyond_topk(run, q, FlipSide::Top, 0, 2);
  CHECK(none.steps.size() == 1);
  CHECK(none.completed == 0);
  CHECK_FALSE(none.exhausted);
}

TEST_CASE("beyond-top-k flips stop before a round any user cannot fill") {
  const RunSet run = run_of({{0, 1, 2, 3, 4, 5, 6, 7}, {0, 1, 2}});
  const Qrels q = qrels_of({{0, 4}, {1}});
  const FlipSteps steps = add_relevant_beyond_topk(run, q, FlipSide::Top, 3, 2);
  CHECK(steps.completed == 1);
  CHECK(steps.exhausted);
  REQUIRE(steps.steps.size() == 2);
  CHECK(steps.steps[1].rel.at("u1") == std::vector<int>{0, 2, 4});
  CHECK(steps.steps[1].rel.at("u2") == std::vector<int>{1, 2});
  CHECK_THROWS_WITH_AS(add_relevant_beyond_topk(run, q, FlipSide::Top, -1, 2),
                       "beyond top-k: count must be non-negative", ValidationError);
}

namespace {

struct TrendTrack {
  std::vector<double> seq;
  Direction dir{};

  void push(const MeasureResult& r) {
    seq.push_back(r.score);
    dir = r.direction;
  }
};

}  // namespace

TEST_CASE("flipping unexposed relevance shifts the relevance-aware measures") {
  const Catalog c = cat(12);
  const RunSet run = run_of({{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11},
                             {2, 3, 0, 1, 4, 5, 6, 7, 8, 9, 10, 11},
                             {0, 5, 1, 2, 3, 4, 6, 7, 8, 9, 10, 11}});
  // each user starts with one relevant item already ranked beyond k
  const Qrels q = qrels_of({{0, 1, 8}, {2, 3, 9}, {0, 5, 10}});
  const int k = 3;

  for (FlipSide side : {FlipSide::Top, FlipSide::Bottom}) {
    const FlipSteps flips = add_relevant_beyond_topk(run, q, side, 5, k);
    REQUIRE(flips.completed == 5);
    TrendTrack iaa_t, iwo_t, iif_t, ifd_t, hd_t;
    for (const Qrels& step : flips.steps) {
      const auto rel = NormalizedRelevance::from_qrels(step, c);
      iaa_t.push(iaa(run, rel, k, ExamKind::LinearNormCorrected, Variant::Corrected));
      iwo_t.push(ibo_iwo(run, step, k, Variant::Corrected).second);
      iif_t.push(
          expected_exposure_fairness(TargetKind::IIF, run, step, c, k, 0.8, Variant::Corrected));
      ifd_t.push(ifd_div(run, step, k, Variant::Corrected));
      hd_t.push(hd(run, step, k));
    }
    // net effect of all flips, both insertion sides
    CHECK(weakly_less_fair(iaa_t.dir, iaa_t.seq.back(), iaa_t.seq.front()));
    CHECK(weakly_less_fair(iwo_t.dir, iwo_t.seq.back(), iwo_t.seq.front()));
    CHECK(weakly_less_fair(iif_t.dir, iif_t.seq.back(), iif_t.seq.front()));
    CHECK(weakly_fairer(ifd_t.dir, ifd_t.seq.back(), ifd_t.seq.front()));
    CHECK(weakly_fairer(hd_t.dir, hd_t.seq.back(), hd_t.seq.front()));
    if (side == FlipSide::Bottom) {
      // tail-side flips move every step in the claimed direction
      for (size_t t = 1; t < flips.steps.size(); ++t) {
        CHECK(weakly_less_fair(iaa_t.dir, iaa_t.seq[t], iaa_t.seq[t - 1]));
        CHECK(weakly_less_fair(iwo_t.dir, iwo_t.seq[t], iwo_t.seq[t - 1]));
        CHECK(weakly_less_fair(iif_t.dir, iif_t.seq[t], iif_t.seq[t - 1]));
        CHECK(weakly_fairer(ifd_t.dir, ifd_t.seq[t], ifd_t.seq[t - 1]));
        CHECK(weakly_fairer(hd_t.dir, hd_t.seq[t], hd_t.seq[t - 1]));
      }
    }
  }
}

TEST_CASE("similarity sampling is a pure function of users and seed") {
  const auto users = users_of(6);
  const SimilarityMatrix first = sample_similarity(SimDist::Weibull, 2.0, users, 7);
  const SimilarityMatrix again = sample_similarity(SimDist::Weibull, 2.0, users, 7);
  CHECK(first.values == again.values);
  const SimilarityMatrix other = sample_similarity(SimDist::Weibull, 2.0, users, 8);
  CHECK(first.values != other.values);

  CHECK(first.normalized);
  CHECK_FALSE(first.degenerate);
  CHECK(*std::min_element(first.values.begin(), first.values.end()) == 0.0);
  CHECK(*std::max_element(first.values.begin(), first.values.end()) == 1.0);

  CHECK_THROWS_WITH_AS(sample_similarity(SimDist::Weibull, 0.0, users, 7),
                       "similarity sample: shape must be positive", ValidationError);
  CHECK_THROWS_WITH_AS(sample_similarity(SimDist::Normal, 1.0, users_of(1), 7),
                       "similarity sample: at least two users required", ValidationError);
}

TEST_CASE("larger weibull shapes drain the right skew out of the similarities") {
  const auto users = users_of(448);  // 100128 pairs
  std::vector<double> skews;
  for (double shape : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
    skews.push_back(skewness(sample_similarity(SimDist::Weibull, shape, users, 42).values));
  }
  for (size_t i = 1; i < skews.size(); ++i) CHECK(skews[i] < skews[i - 1]);
  CHECK(skews[1] > 1.5);  // exponential case keeps a strong right tail
  CHECK(skews[1] < 2.5);
  CHECK(skews.back() < 0.0);

  const double normal_skew = skewness(sample_similarity(SimDist::Normal, 0.0, users, 42).values);
  CHECK(std::abs(normal_skew) < 0.08);
}

TEST_CASE("similarity assignment pairs magnitudes with score differences") {
  auto sims = SimilarityMatrix::blank(users_of(3));
  sims.set(0, 1, 0.9);
  sims.set(0, 2, 0.2);
  sims.set(1, 2, 0.6);
  const PerUserScores scores = scores_of({1.0, 0.5, 0.45});

  const SimilarityMatrix fair = assign_similarity(sims, scores, AssignMode::MostFair);
  CHECK(fair.at("u1", "u2") == 0.6);
  CHECK(fair.at("u1", "u3") == 0.2);
  CHECK(fair.at("u2", "u3") == 0.9);

  const SimilarityMatrix unfair = assign_similarity(sims, scores, AssignMode::MostUnfair);
  CHECK(unfair.at("u1", "u2") == 0.6);
  CHECK(unfair.at("u1", "u3") == 0.9);
  CHECK(unfair.at("u2", "u3") == 0.2);

  PerUserScores missing = scores;
  missing.score.erase("u3");
  CHECK_THROWS_WITH_AS(assign_similarity(sims, missing, AssignMode::MostFair),
                       "similarity assign: user 'u3' has no score", ValidationError);
}

TEST_CASE("extreme assignments bracket puf over random assignments") {
  for (uint64_t trial = 0; trial < 12; ++trial) {
    std::mt19937_64 rng(900 + trial);
    std::vector<double> values(6);
    for (double& v : values) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const PerUserScores scores = scores_of(values);
    const auto users = users_of(6);
    const SimilarityMatrix drawn = sample_similarity(SimDist::Weibull, 1.0, users, trial);
    const SimilarityMatrix fair = assign_similarity(drawn, scores, AssignMode::MostFair);
    const SimilarityMatrix unfair = assign_similarity(drawn, scores, AssignMode::MostUnfair);
    const double low = puf(scores, fair).score;
    const double mid = puf(scores, drawn).score;
    const double high = puf(scores, unfair).score;
    CHECK(low <= mid + 1e-12);
    CHECK(mid <= high + 1e-12);
  }

  // equal scores leave nothing to redistribute
  const PerUserScores flat = scores_of({0.4, 0.4, 0.4});
  auto sims = SimilarityMatrix::blank(users_of(3));
  sims.set(0, 1, 0.9);
  sims.set(0, 2, 0.2);
  sims.set(1, 2, 0.6);
  CHECK(puf(flat, assign_similarity(sims, flat, AssignMode::MostFair)).score == 0.0);
  CHECK(puf(flat, assign_similarity(sims, flat, AssignMode::MostUnfair)).score == 0.0);
}

TEST_CASE("relevance sweep hits the scripted dispersion points") {
  const Catalog c = cat(12);
  const Qrels q = qrels_of({{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11}});

  const auto [all_rel, q0] = vary_relevance(q, c, 3, 0.0, 11);
  CHECK_NOTHROW(validate_run(all_rel, c));
  CHECK(q0.rel == q.rel);
  const PerUserScores full = per_user_effectiveness(EffMeasure::P, all_rel, q0, 3);
  for (const auto& [user, score] : full.score) CHECK(score == 1.0);
  CHECK(user_dispersion(DispersionKind::SD, full).score == 0.0);

  const auto [half_run, qh] = vary_relevance(q, c, 3, 0.5, 11);
  const PerUserScores half = per_user_effectiveness(EffMeasure::P, half_run, qh, 3);
  CHECK(user_dispersion(DispersionKind::SD, half).score == 0.5);

  const auto [none_run, qn] = vary_relevance(q, c, 3, 1.0, 11);
  const PerUserScores none = per_user_effectiveness(EffMeasure::P, none_run, qn, 3);
  CHECK(user_dispersion(DispersionKind::SD, none).score == 0.0);
  CHECK(user_dispersion(DispersionKind::Gini, none).undefined);
}

TEST_CASE("relevance sweep nests its zeroed users as the fraction grows") {
  std::vector<std::vector<int>> blocks;
  for (int u = 0; u < 10; ++u) blocks.push_back({4 * u, 4 * u + 1, 4 * u + 2});
  const Catalog c = cat(40);
  const Qrels q = qrels_of(blocks);

  std::set<std::string> prev;
  for (int tenth = 0; tenth <= 10; ++tenth) {
    const auto [run, qq] = vary_relevance(q, c, 3, tenth / 10.0, 5);
    std::set<std::string> zeroed;
    for (int u = 0; u < run.m(); ++u) {
      bool any = false;
      for (int item : run.lists[u]) any = any || qq.is_relevant(run.user_ids[u], item);
      if (!any) zeroed.insert(run.user_ids[u]);
    }
    CHECK(zeroed.size() == static_cast<size_t>(tenth));
    CHECK(std::includes(zeroed.begin(), zeroed.end(), prev.begin(), prev.end()));
    prev = zeroed;
  }

  const auto [a, qa] = vary_relevance(q, c, 3, 0.3, 7);
  const auto [b, qb] = vary_relevance(q, c, 3, 0.3, 7);
  CHECK(a.lists == b.lists);
}

TEST_CASE("relevance sweep pads short profiles and rejects impossible draws") {
  const Catalog c = cat(6);
  const Qrels q = qrels_of({{0}});
  const auto [run, qq] = vary_relevance(q, c, 3, 0.0, 3);
  CHECK_NOTHROW(validate_run(run, c));
  REQUIRE(run.lists[0].size() == 3);
  CHECK(run.lists[0][0] == 0);
  CHECK(run.lists[0][1] != 0);
  CHECK(run.lists[0][2] != 0);

  const Catalog tiny = cat(3);
  CHECK_NOTHROW(vary_relevance(qrels_of({{0}}), tiny, 3, 0.0, 3));
  CHECK_THROWS_WITH_AS(vary_relevance(qrels_of({{0}}), tiny, 3, 1.0, 3),
                       "vary relevance: user 'u1' has no k irrelevant items", ValidationError);
  CHECK_THROWS_WITH_AS(vary_relevance(q, c, 3, 0.25, 3),
                       "vary relevance: fraction must be a tenth in [0, 1]", ValidationError);
  CHECK_THROWS_WITH_AS(vary_relevance(q, c, 3, 1.2, 3),
                       "vary relevance: fraction must be a tenth in [0, 1]", ValidationError);
  CHECK_THROWS_WITH_AS(vary_relevance(Qrels{}, c, 3, 0.0, 3), "vary relevance: no judged users",
                       ValidationError);
}

TEST_CASE("combmnz with flat coverage keeps the relevance order") {
  const Catalog c = cat(4);
  const RunSet run = run_of({{0, 1, 2, 3}, {3, 2, 1, 0}});
  const auto predicted = [](int u, int item) {
    return u == 0 ? 4.0 - item : item + 1.0;
  };
  const RunSet out = rerank(Reranker::CombMnz, run, c, RerankConfig{2, 4, 0.05, 0.25}, predicted);
  CHECK(out.lists == run.lists);
  CHECK(out.scores[0].empty());
  CHECK(out.scores[1].empty());
}

TEST_CASE("combmnz demotes the over-covered head item") {
  const Catalog c = cat(4);
  const RunSet run = run_of({{0, 1, 2}, {0, 1, 3}});
  const auto predicted = [](int u, int item) {
    if (u == 0) return 3.0 - item;
    return item == 0 ? 3.0 : (item == 1 ? 2.0 : 1.0);
  };
  const RunSet out = rerank(Reranker::CombMnz, run, c, RerankConfig{1, 3, 0.05, 0.25}, predicted);
  CHECK_NOTHROW(validate_run(out, c));
  CHECK(out.lists[0] == std::vector<int>{1, 0, 2});
  CHECK(out.lists[1] == std::vector<int>{1, 0, 3});
}

TEST_CASE("combmnz only touches the re-ranked prefix") {
  const Catalog c = cat(6);
  const RunSet run = run_of({{0, 1, 2, 3, 4, 5}});
  const auto predicted = [](int, int item) { return 6.0 - item; };
  const RunSet out = rerank(Reranker::CombMnz, run, c, RerankConfig{1, 3, 0.05, 0.25}, predicted);
  CHECK(out.lists[0] == std::vector<int>{1, 0, 2, 3, 4, 5});
}

TEST_CASE("borda fusion leaves coverage-aligned lists alone and fixes the rest") {
  const Catalog c = cat(3);
  const RunSet run = run_of({{0, 1, 2}, {1, 0, 2}, {2, 0, 1}, {2, 1, 0}});
  const RunSet out = rerank(Reranker::Borda, run, c, RerankConfig{1, 3, 0.05, 0.25});
  CHECK_NOTHROW(validate_run(out, c));
  CHECK(out.lists[0] == std::vector<int>{0, 1, 2});
  CHECK(out.lists[1] == std::vector<int>{1, 0, 2});
  CHECK(out.lists[2] == std::vector<int>{0, 2, 1});
  CHECK(out.lists[3] == std::vector<int>{1, 2, 0});
}

TEST_CASE("greedy substitution drains the dominant item into the rarest one") {
  const Catalog c = cat(8);
  const RunSet run = run_of({{0, 1, 2, 3},
                             {0, 2, 4, 5},
                             {0, 3, 5, 6},
                             {0, 1, 6, 7},
                             {0, 2, 3, 7}});
  const auto predicted = [](int, int item) { return 8.0 - item; };
  const RerankConfig cfg{2, 4, 0.05, 0.25};

  const RunSet out = rerank(Reranker::GreedySubstitution, run, c, cfg, predicted);
  CHECK_NOTHROW(validate_run(out, c));
  CHECK(out.lists[0] == std::vector<int>{4, 1, 2, 3});
  CHECK(out.lists[1] == std::vector<int>{0, 2, 4, 5});  // target already listed, swap skipped
  CHECK(out.lists[2] == std::vector<int>{4, 3, 5, 6});
  CHECK(out.lists[3] == std::vector<int>{4, 1, 6, 7});
  CHECK(out.lists[4] == std::vector<int>{4, 2, 3, 7});
  const auto counts = exposure_counts(out, 4, 8);
  CHECK(counts[0] == 1);
  CHECK(counts[4] == 5);

  // skipped attempts still consume the budget
  const RunSet tight =
      rerank(Reranker::GreedySubstitution, run, c, RerankConfig{2, 4, 0.05, 0.20}, predicted);
  CHECK(tight.lists[4] == std::vector<int>{0, 2, 3, 7});
  CHECK(exposure_counts(tight, 4, 8)[0] == 2);

  const RunSet frozen =
      rerank(Reranker::GreedySubstitution, run, c, RerankConfig{2, 4, 0.05, 0.0}, predicted);
  CHECK(frozen.lists == run.lists);
}

TEST_CASE("rerank rejects bad configurations") {
  const Catalog c = cat(4);
  const RunSet run = run_of({{0, 1, 2}});
  const auto predicted = [](int, int item) { return 4.0 - item; };
  CHECK_THROWS_WITH_AS(rerank(Reranker::Borda, run, c, RerankConfig{3, 2, 0.05, 0.25}),
                       "rerank: k-prime must be at least k", ValidationError);
  CHECK_THROWS_WITH_AS(rerank(Reranker::CombMnz, run, c),
                       "rerank: predicted scores required for combmnz", ValidationError);
  CHECK_THROWS_WITH_AS(rerank(Reranker::GreedySubstitution, run, c),
                       "rerank: predicted scores required for greedy-substitution",
                       ValidationError);
  CHECK_THROWS_WITH_AS(rerank(Reranker::Borda, run, c, RerankConfig{1, 3, 0.0, 0.25}),
                       "rerank: beta must be in (0, 1]", ValidationError);
  CHECK_THROWS_WITH_AS(rerank(Reranker::Borda, run, c, RerankConfig{1, 3, 0.05, 1.25}),
                       "rerank: cap must be in [0, 1]", ValidationError);
  CHECK_THROWS_WITH_AS(rerank(Reranker::Borda, run, c, RerankConfig{0, 3, 0.05, 0.25}),
                       "rerank: k must be positive", ValidationError);
  CHECK(predicted(0, 0) == 4.0);
}

TEST_CASE("generator prng contract is pinned by name") {
  CHECK(std::string(kRngAlgorithm) == "mt19937_64/v1");
}
