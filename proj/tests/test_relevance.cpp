#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "recfair/bruteforce.hpp"
#include "recfair/core.hpp"
#include "recfair/relevance.hpp"

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
    q.rel[user];  // judged even when nothing is relevant
    for (int i : rel[u]) q.add(user, i);
  }
  return q;
}

// Single-user run named like brute::for_each_run users so qrels line up.
RunSet one_user(const std::vector<int>& list) { return run_of({list}); }

const double kDcg2 = 1.0 / std::log2(3.0);  // discount at rank 2
const double kDcg3 = 0.5;                   // discount at rank 3

}  // namespace

TEST_CASE("exam weights per kind and position") {
  CHECK(exam_weight({ExamKind::Uniform}, 3, 5) == 1.0);
  CHECK(exam_weight({ExamKind::Linear}, 2, 5) == 4.0);
  CHECK(exam_weight({ExamKind::LinearNormOriginal}, 2, 3) == doctest::Approx(0.5));
  CHECK(exam_weight({ExamKind::LinearNormOriginal}, 3, 3) == 0.0);
  CHECK(exam_weight({ExamKind::LinearNormCorrected}, 3, 3) == doctest::Approx(1.0 / 3.0));
  CHECK(exam_weight({ExamKind::Dcg}, 3, 5) == doctest::Approx(0.5));
  CHECK(exam_weight({ExamKind::Rbp, 10, 0.8}, 3, 5) == doctest::Approx(0.64));
  CHECK(exam_weight({ExamKind::Inverse}, 4, 5) == doctest::Approx(0.25));
  CHECK(exam_weight({ExamKind::Dcg}, 6, 5) == 0.0);  // beyond the cutoff
  CHECK_THROWS_AS(exam_weight({ExamKind::LinearNormOriginal}, 1, 1), ValidationError);
  CHECK_THROWS_AS(exam_weight({ExamKind::Dcg}, 0, 5), ValidationError);
}

TEST_CASE("normalized relevance construction and rejection") {
  const Catalog c = cat(3);
  const auto table = NormalizedRelevance::from_raw(
      c, {{"u2", {2.0, 2.0, 2.0}}, {"u1", {3.0, 1.0, 2.0}}});
  REQUIRE(table.has("u1"));
  CHECK_FALSE(table.has("u2"));  // flat grades cannot be normalized
  REQUIRE(table.rejected.size() == 1);
  CHECK(table.rejected[0] == "u2");
  const auto& v = table.of("u1");
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.0);
  CHECK(v[2] == doctest::Approx(0.5));
  CHECK_THROWS_AS(table.of("u3"), ValidationError);
  CHECK_THROWS_AS(NormalizedRelevance::from_raw(c, {{"u1", {1.0, 2.0}}}), ValidationError);

  Qrels q = qrels_of({{0, 2}, {}, {0, 1, 2}});
  const auto binary = NormalizedRelevance::from_qrels(q, c);
  CHECK(binary.has("u1"));
  CHECK_FALSE(binary.has("u2"));  // nothing relevant
  CHECK_FALSE(binary.has("u3"));  // everything relevant
  CHECK(binary.rejected.size() == 2);
  CHECK(binary.of("u1")[0] == 1.0);
  CHECK(binary.of("u1")[1] == 0.0);
}

TEST_CASE("iaa matches the worked single-user values") {
  const Catalog c = cat(4);
  const auto rel = NormalizedRelevance::from_raw(c, {{"u1", {1.0, 0.8, 0.0, 0.0}}});
  const RunSet by_relevance = one_user({0, 1, 2, 3});
  const RunSet swapped_top = one_user({1, 0, 2, 3});

  const auto ori = iaa(by_relevance, rel, 2, ExamKind::LinearNormOriginal, Variant::Original);
  CHECK(ori.score == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(ori.direction == Direction::LowerIsFairer);
  CHECK(ori.str_params.at("exam") == std::string("linear-normalized-original"));

  // Same gap normalized against the relevance-sorted extremes.
  const auto cor_ori =
      iaa(swapped_top, rel, 2, ExamKind::LinearNormOriginal, Variant::Corrected);
  CHECK(cor_ori.score == doctest::Approx(0.2).epsilon(1e-9));
  const auto cor_fix =
      iaa(swapped_top, rel, 2, ExamKind::LinearNormCorrected, Variant::Corrected);
  CHECK(cor_fix.score == doctest::Approx(2.0 / 15.0).epsilon(1e-9));
}

TEST_CASE("iaa is undefined for the original linear normalization at k=1") {
  const Catalog c = cat(3);
  const auto rel = NormalizedRelevance::from_raw(c, {{"u1", {1.0, 0.5, 0.0}}});
  const auto r = iaa(one_user({0, 1, 2}), rel, 1, ExamKind::LinearNormOriginal,
                     Variant::Original);
  CHECK(r.undefined);
  CHECK(std::isnan(r.score));
  const auto ok =
      iaa(one_user({0, 1, 2}), rel, 1, ExamKind::LinearNormCorrected, Variant::Original);
  CHECK_FALSE(ok.undefined);
}

TEST_CASE("iaa skips users without a relevance row and reports them") {
  const Catalog c = cat(3);
  const auto rel = NormalizedRelevance::from_raw(c, {{"u1", {1.0, 0.5, 0.0}}});
  const RunSet run = run_of({{0, 1, 2}, {2, 1, 0}});  // u2 has no row
  const auto r = iaa(run, rel, 2, ExamKind::LinearNormCorrected, Variant::Original);
  CHECK(r.params.at("m") == 1.0);
  CHECK(r.params.at("excluded_users") == 1.0);
  CHECK(r.per_user.count("u1") == 1);
  CHECK(r.per_user.count("u2") == 0);
}

TEST_CASE("corrected iaa hits the endpoints exactly on extreme rankings") {
  for (int k : {1, 2, 3, 5}) {
    const int n = 12;
    const Catalog c = cat(n);
    const std::vector<int> relevant = {2, 5, 7, 11};
    const Qrels q = qrels_of({relevant});
    const auto rel = NormalizedRelevance::from_qrels(q, c);
    const RunSet best = one_user(extreme_ranking("iaa", ExtremeStrategy::Top, relevant, n, k));
    const RunSet worst =
        one_user(extreme_ranking("iaa", ExtremeStrategy::Bottom, relevant, n, k));
    CHECK(iaa(best, rel, k, ExamKind::LinearNormCorrected, Variant::Corrected).score == 0.0);
    CHECK(iaa(worst, rel, k, ExamKind::LinearNormCorrected, Variant::Corrected).score == 1.0);
    if (k > 1) {
      CHECK(iaa(best, rel, k, ExamKind::LinearNormOriginal, Variant::Corrected).score == 0.0);
      CHECK(iaa(worst, rel, k, ExamKind::LinearNormOriginal, Variant::Corrected).score == 1.0);
    }
  }
}

TEST_CASE("ranking a better item above a worse one never hurts iaa") {
  const int n = 6;
  const Catalog c = cat(n);
  const std::vector<double> grades = {1.0, 0.8, 0.6, 0.4, 0.2, 0.0};
  const auto rel = NormalizedRelevance::from_raw(c, {{"u1", grades}});
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  do {
    const double before =
        iaa(one_user(perm), rel, 3, ExamKind::LinearNormCorrected, Variant::Original).score;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (grades[perm[p]] >= grades[perm[q]]) continue;  // already well ordered
        std::vector<int> swapped = perm;
        std::swap(swapped[p], swapped[q]);
        const double after =
            iaa(one_user(swapped), rel, 3, ExamKind::LinearNormCorrected, Variant::Original)
                .score;
        CHECK(after <= before + 1e-12);
      }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("ifd-div matches the worked values across cutoffs") {
  const Qrels q = qrels_of({{1, 2}});
  const RunSet run = one_user({0, 1, 2});  // relevant items at ranks 2 and 3

  // Examined-only exposure: rank 3 leaves the window as k shrinks.
  const auto k3 = ifd_div(run, q, 3, Variant::Original, true);
  CHECK(k3.score == doctest::Approx((kDcg2 - kDcg3) / 4.0).epsilon(1e-12));
  CHECK(k3.score == doctest::Approx(0.033).epsilon(1e-2));
  const auto k2 = ifd_div(run, q, 2, Variant::Original, true);
  CHECK(k2.score == doctest::Approx(kDcg2 / 4.0).epsilon(1e-12));
  CHECK(k2.score == doctest::Approx(0.158).epsilon(1e-2));
  const auto k1 = ifd_div(run, q, 1, Variant::Original, true);
  CHECK(k1.score == 0.0);
}

TEST_CASE("ifd-div with the full discount is invariant to the cutoff") {
  const Qrels q = qrels_of({{0, 3}, {1, 2, 4}});
  const RunSet run = run_of({{3, 0, 2, 4, 1}, {4, 1, 0, 2, 3}});
  const double at1 = ifd_div(run, q, 1, Variant::Original, false).score;
  const double at3 = ifd_div(run, q, 3, Variant::Original, false).score;
  const double at5 = ifd_div(run, q, 5, Variant::Original, false).score;
  CHECK(at1 == at3);
  CHECK(at3 == at5);
}

TEST_CASE("ifd-div grows as relevant items spread down the ranking") {
  const RunSet run = one_user({0, 1, 2, 3, 4});
  const double l3 = 1.0 / std::log2(3.0);
  const double l5 = 1.0 / std::log2(5.0);
  const double l6 = 1.0 / std::log2(6.0);
  // Two adjacent relevant items near the top.
  const double a = ifd_div(run, qrels_of({{0, 1}}), 5, Variant::Original).score;
  CHECK(a == doctest::Approx((1.0 - l3) / 4.0).epsilon(1e-12));
  // Everything relevant: each pair gap counts once.
  const double b = ifd_div(run, qrels_of({{0, 1, 2, 3, 4}}), 5, Variant::Original).score;
  CHECK(b == doctest::Approx((4.0 + 2.0 * l3 - 2.0 * l5 - 4.0 * l6) / 25.0).epsilon(1e-12));
  // A straggler at the bottom stretches the gaps further.
  const double c = ifd_div(run, qrels_of({{0, 1, 4}}), 5, Variant::Original).score;
  CHECK(c == doctest::Approx((2.0 - 2.0 * l6) / 9.0).epsilon(1e-12));
  CHECK(a < b);
  CHECK(b < c);
}

TEST_CASE("single-relevant users score zero and are flagged, or excluded on request") {
  const Qrels q = qrels_of({{0, 2}, {1}});
  const RunSet run = run_of({{0, 1, 2}, {0, 1, 2}});
  const auto kept = ifd_div(run, q, 2, Variant::Corrected);
  CHECK(kept.params.at("m") == 2.0);
  CHECK(kept.params.at("single_relevant_users") == 1.0);
  CHECK(std::count(kept.warnings.begin(), kept.warnings.end(),
                   std::string(warn::kSingleRelevant)) == 1);
  CHECK(kept.per_user.at("u2") == 0.0);
  const auto dropped = ifd_div(run, q, 2, Variant::Corrected, false, true);
  CHECK(dropped.params.at("m") == 1.0);
  CHECK(dropped.per_user.count("u2") == 0);
  CHECK(dropped.score == kept.per_user.at("u1"));
}

TEST_CASE("corrected ifd-div hits the endpoints exactly on extreme rankings") {
  for (int k : {1, 2, 3, 5}) {
    const int n = 12;
    const std::vector<int> relevant = {1, 4, 8};
    const Qrels q = qrels_of({relevant});
    const RunSet fair =
        one_user(extreme_ranking("ifd-div", ExtremeStrategy::Bottom, relevant, n, k));
    const RunSet unfair =
        one_user(extreme_ranking("ifd-div", ExtremeStrategy::HalfHalf, relevant, n, k));
    CHECK(ifd_div(fair, q, k, Variant::Corrected).score == 0.0);
    CHECK(ifd_div(unfair, q, k, Variant::Corrected).score == 1.0);
  }
}

TEST_CASE("exhaustive scan confirms the ifd-div extreme strategies") {
  const int n = 6;
  const int k = 3;
  const std::vector<int> relevant = {0, 3, 5};
  const Qrels q = qrels_of({relevant});
  const auto ext = brute::scan(n, 1, n, [&](const RunSet& run) {
    return ifd_div(run, q, k, Variant::Original, true).score;
  });
  const double lo =
      ifd_div(one_user(extreme_ranking("ifd-div", ExtremeStrategy::Bottom, relevant, n, k)), q,
              k, Variant::Original, true)
          .score;
  const double hi =
      ifd_div(one_user(extreme_ranking("ifd-div", ExtremeStrategy::HalfHalf, relevant, n, k)),
              q, k, Variant::Original, true)
          .score;
  CHECK(ext.lo == lo);
  CHECK(ext.hi == hi);
}

TEST_CASE("ifd-mul matches the worked extremes over a ten-item catalog") {
  const int n = 10;
  std::vector<int> full(n);
  for (int i = 0; i < n; ++i) full[i] = i;
  // Single relevant item parked at the last rank.
  const auto lone = ifd_mul(one_user(full), qrels_of({{9}}), n, Variant::Original);
  const double d10 = 1.0 / std::log2(11.0);
  CHECK(lone.score == doctest::Approx(18.0 * d10 * d10 / 90.0).epsilon(1e-12));
  CHECK(lone.score == doctest::Approx(0.0167).epsilon(1e-2));
  // Three relevant items packed at the top.
  const auto packed = ifd_mul(one_user(full), qrels_of({{0, 1, 2}}), n, Variant::Original);
  const double sj = 1.0 + kDcg2 + kDcg3;
  const double sj2 = 1.0 + kDcg2 * kDcg2 + kDcg3 * kDcg3;
  CHECK(packed.score == doctest::Approx((20.0 * sj2 - 2.0 * sj * sj) / 90.0).epsilon(1e-12));
  CHECK(packed.score == doctest::Approx(0.265).epsilon(1e-2));
  CHECK(ifd_mul_unfairest_split(n, n, 3) == 3);
}

TEST_CASE("exhaustive scan confirms the ifd-mul extreme strategies") {
  const int n = 6;
  const int k = 3;
  const std::vector<int> relevant = {2, 4};
  const Qrels q = qrels_of({relevant});
  const auto ext = brute::scan(n, 1, n, [&](const RunSet& run) {
    return ifd_mul(run, q, k, Variant::Original).score;
  });
  const double lo =
      ifd_mul(one_user(extreme_ranking("ifd-mul", ExtremeStrategy::Bottom, relevant, n, k)), q,
              k, Variant::Original)
          .score;
  const int split = ifd_mul_unfairest_split(k, n, 2);
  const double hi = ifd_mul(one_user(extreme_ranking("ifd-mul", ExtremeStrategy::Split,
                                                     relevant, n, k, split)),
                            q, k, Variant::Original)
                        .score;
  CHECK(ext.lo == lo);
  CHECK(ext.hi == hi);
}

TEST_CASE("corrected ifd-mul hits the endpoints exactly on extreme rankings") {
  for (int k : {1, 2, 3, 5}) {
    const int n = 12;
    const std::vector<int> relevant = {0, 5, 6, 9};
    const Qrels q = qrels_of({relevant});
    const RunSet fair =
        one_user(extreme_ranking("ifd-mul", ExtremeStrategy::Bottom, relevant, n, k));
    const int split = ifd_mul_unfairest_split(k, n, static_cast<int>(relevant.size()));
    const RunSet unfair =
        one_user(extreme_ranking("ifd-mul", ExtremeStrategy::Split, relevant, n, k, split));
    CHECK(ifd_mul(fair, q, k, Variant::Corrected).score == 0.0);
    CHECK(ifd_mul(unfair, q, k, Variant::Corrected).score == 1.0);
  }
}

TEST_CASE("promoting a relevant item never lowers ifd-mul") {
  const int n = 6;
  const Qrels q = qrels_of({{1, 3}});
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  const std::vector<double> grade = {0.0, 1.0, 0.0, 1.0, 0.0, 0.0};
  do {
    const double before = ifd_mul(one_user(perm), q, 3, Variant::Original).score;
    for (int p = 0; p < n; ++p)
      for (int s = p + 1; s < n; ++s) {
        if (grade[perm[p]] >= grade[perm[s]]) continue;
        std::vector<int> swapped = perm;
        std::swap(swapped[p], swapped[s]);
        const double after = ifd_mul(one_user(swapped), q, 3, Variant::Original).score;
        CHECK(after >= before - 1e-12);
      }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("hd collapses to a point mass when nothing relevant is examined") {
  // Both users want the one item their lists leave out, the farthest a run
  // can sit from the reference profile.
  const Qrels q = qrels_of({{2}, {2}});
  const RunSet run = run_of({{0, 1}, {1, 0}});
  const auto r = hd(run, q, 2);
  CHECK(r.score == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(r.score == doctest::Approx(0.707).epsilon(1e-3));
}

TEST_CASE("hd scores zero when every user sees their item first") {
  const Qrels q = qrels_of({{0}, {1}});
  const RunSet run = run_of({{0, 1, 2}, {1, 2, 0}});
  CHECK(hd(run, q, 2).score == 0.0);
}

TEST_CASE("hd excludes users without relevant items and stays deterministic") {
  const Qrels q = qrels_of({{0}, {}});
  const RunSet run = run_of({{0, 1}, {1, 0}});
  const auto r = hd(run, q, 2);
  CHECK(r.params.at("m") == 1.0);
  CHECK(r.params.at("excluded_users") == 1.0);
  const auto again = hd(run, q, 2);
  CHECK(r.score == again.score);
  CHECK_THROWS_AS(hd(run, qrels_of({{}, {}}), 2), ValidationError);
  CHECK_THROWS_AS(hd(run, q, 2, 1.0), ValidationError);
}

TEST_CASE("exhaustive scan brackets hd between zero and the point-mass gap") {
  const Qrels q = qrels_of({{2}, {2}});
  const auto ext = brute::scan(2, 2, 3, [&](const RunSet& run) {
    return hd(run, q, 2).score;
  });
  CHECK(ext.lo == 0.0);
  CHECK(ext.hi == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("mme matches the hand-worked envy profiles") {
  const Qrels q = qrels_of({{0, 1, 2}, {0, 1, 2}});
  // Opposed full rankings spread placement evenly; only the middle item
  // envies.
  CHECK(mme(run_of({{0, 1, 2}, {2, 1, 0}}), q, 3).score ==
        doctest::Approx(1.0 / 18.0).epsilon(1e-12));
  // Identical rankings concentrate placement at the top.
  CHECK(mme(run_of({{0, 1, 2}, {0, 1, 2}}), q, 3).score ==
        doctest::Approx(7.0 / 18.0).epsilon(1e-12));
}

TEST_CASE("exhaustive scan confirms the mme envy extremes") {
  const Qrels q = qrels_of({{0, 1, 2}, {0, 1, 2}});
  const auto ext = brute::scan(3, 2, 3, [&](const RunSet& run) {
    return mme(run, q, 3).score;
  });
  CHECK(ext.lo == doctest::Approx(1.0 / 18.0).epsilon(1e-12));
  CHECK(ext.hi == doctest::Approx(7.0 / 18.0).epsilon(1e-12));
}

TEST_CASE("ibo and iwo match the worked impact ratios") {
  const Qrels q = qrels_of({{0, 1, 2}, {0, 1, 2}});
  const RunSet run = run_of({{0, 1, 2}, {1, 0, 2}});
  const auto [bo, wo] = ibo_iwo(run, q, 3, Variant::Original);
  CHECK(bo.score == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(wo.score == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(bo.direction == Direction::HigherIsFairer);
  CHECK(wo.direction == Direction::LowerIsFairer);
}

TEST_CASE("original ibo/iwo are undefined when an item has no relevant user") {
  const Qrels q = qrels_of({{0}, {1}});  // item 2 is relevant to nobody
  const RunSet run = run_of({{0, 1, 2}, {1, 0, 2}});
  const auto [bo, wo] = ibo_iwo(run, q, 2, Variant::Original);
  CHECK(bo.undefined);
  CHECK(wo.undefined);
  CHECK(std::isnan(bo.score));
  // The corrected form simply restricts to items somebody wants.
  const auto [cb, cw] = ibo_iwo(run, q, 2, Variant::Corrected);
  CHECK_FALSE(cb.undefined);
  CHECK(cb.params.at("i_minus") == 2.0);
}

TEST_CASE("corrected ibo and iwo flag disjoint item sets") {
  const Qrels q = qrels_of({{0, 1, 2}, {0, 1, 2}});
  brute::for_each_run(3, 2, 3, [&](const RunSet& run) {
    const auto [bo, wo] = ibo_iwo(run, q, 3, Variant::Corrected);
    CHECK(bo.score + wo.score <= 1.0 + 1e-12);
  });
}

TEST_CASE("ibo/iwo thresholds are parameters") {
  const Qrels q = qrels_of({{0, 1, 2}, {0, 1, 2}});
  const RunSet run = run_of({{0, 1, 2}, {1, 0, 2}});
  // Widening the band to [0.5, 2.0] leaves every ratio inside it.
  const auto [bo, wo] = ibo_iwo(run, q, 3, Variant::Original, 2.0, 0.5);
  CHECK(bo.score == 0.0);
  CHECK(wo.score == 0.0);
  CHECK_THROWS_AS(ibo_iwo(run, q, 3, Variant::Original, 0.9, 1.1), ValidationError);
}

TEST_CASE("expected-exposure fairness matches the worked per-user extremes") {
  const Catalog c = cat(3);
  // Two relevant items examined in the top two positions: near-perfect.
  const auto low = expected_exposure_fairness(TargetKind::IIF, one_user({0, 1, 2}),
                                              qrels_of({{0, 1}}), c, 2, 0.8, Variant::Original);
  CHECK(low.score == doctest::Approx(0.02 / 3.0).epsilon(1e-9));
  // The single relevant item never examined: worst case.
  const auto high = expected_exposure_fairness(TargetKind::IIF, one_user({0, 1, 2}),
                                               qrels_of({{2}}), c, 2, 0.8, Variant::Original);
  CHECK(high.score == doctest::Approx(0.88).epsilon(1e-9));
}

TEST_CASE("aggregate expected-exposure fairness matches the worked maximum") {
  const Catalog c = cat(3);
  const Qrels q = qrels_of({{2}, {2}});
  const RunSet run = run_of({{0, 1, 2}, {0, 1, 2}});
  const auto r =
      expected_exposure_fairness(TargetKind::AIF, run, q, c, 2, 0.8, Variant::Original);
  CHECK(r.score == doctest::Approx(0.88).epsilon(1e-9));
  CHECK_THROWS_AS(expected_exposure_fairness(TargetKind::AIF, run, q, c, 2, 0.8,
                                             Variant::Corrected),
                  ValidationError);
  CHECK_THROWS_AS(expected_exposure_fairness(TargetKind::IIF, run, q, c, 2, 1.0,
                                             Variant::Original),
                  ValidationError);
}

TEST_CASE("exhaustive scan brackets the expected-exposure measures") {
  const Catalog c = cat(3);
  // Every nonempty relevant set per user, every pair of top-2 lists.
  std::vector<std::vector<int>> subsets;
  for (int mask = 1; mask < 8; ++mask) {
    std::vector<int> s;
    for (int i = 0; i < 3; ++i)
      if (mask & (1 << i)) s.push_back(i);
    subsets.push_back(s);
  }
  double ii_lo = 1e9, ii_hi = -1e9, ai_hi = -1e9;
  for (const auto& r1 : subsets)
    for (const auto& r2 : subsets) {
      const Qrels q = qrels_of({r1, r2});
      brute::for_each_run(2, 2, 3, [&](const RunSet& run) {
        const double ii = expected_exposure_fairness(TargetKind::IIF, run, q, c, 2, 0.8,
                                                     Variant::Original)
                              .score;
        const double ai = expected_exposure_fairness(TargetKind::AIF, run, q, c, 2, 0.8,
                                                     Variant::Original)
                              .score;
        ii_lo = std::min(ii_lo, ii);
        ii_hi = std::max(ii_hi, ii);
        ai_hi = std::max(ai_hi, ai);
      });
    }
  CHECK(ii_lo == doctest::Approx(0.007).epsilon(1e-1));
  CHECK(ii_lo == doctest::Approx(0.02 / 3.0).epsilon(1e-9));
  CHECK(ii_hi == doctest::Approx(0.88).epsilon(1e-9));
  CHECK(ai_hi == doctest::Approx(0.88).epsilon(1e-9));
}

TEST_CASE("corrected ii-f hits the endpoints exactly on extreme rankings") {
  for (int k : {1, 2, 3, 5}) {
    const int n = 12;
    const Catalog c = cat(n);
    const std::vector<int> relevant = {3, 6, 10};
    const Qrels q = qrels_of({relevant});
    const RunSet best = one_user(extreme_ranking("ii-f", ExtremeStrategy::Top, relevant, n, k));
    const RunSet worst =
        one_user(extreme_ranking("ii-f", ExtremeStrategy::Bottom, relevant, n, k));
    CHECK(expected_exposure_fairness(TargetKind::IIF, best, q, c, k, 0.8, Variant::Corrected)
              .score == 0.0);
    CHECK(expected_exposure_fairness(TargetKind::IIF, worst, q, c, k, 0.8, Variant::Corrected)
              .score == 1.0);
  }
}

TEST_CASE("promoting a relevant item never hurts ii-f") {
  const int n = 6;
  const Catalog c = cat(n);
  const Qrels q = qrels_of({{1, 4}});
  const std::vector<double> grade = {0.0, 1.0, 0.0, 0.0, 1.0, 0.0};
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  do {
    const double before = expected_exposure_fairness(TargetKind::IIF, one_user(perm), q, c, 3,
                                                     0.8, Variant::Original)
                              .score;
    for (int p = 0; p < n; ++p)
      for (int s = p + 1; s < n; ++s) {
        if (grade[perm[p]] >= grade[perm[s]]) continue;
        std::vector<int> swapped = perm;
        std::swap(swapped[p], swapped[s]);
        const double after = expected_exposure_fairness(TargetKind::IIF, one_user(swapped), q,
                                                        c, 3, 0.8, Variant::Original)
                                 .score;
        CHECK(after <= before + 1e-12);
      }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("multi-round ifd-div averages exposure over the rounds that define it") {
  const Qrels q = qrels_of({{1, 2}, {0, 1}});
  RunSet round1 = run_of({{0, 1, 2}, {0, 1, 2}});
  RunSet round2;
  round2.add_user("u1");
  round2.lists[0] = {1, 2, 0};
  const auto r = ifd_div(std::vector<RunSet>{round1, round2}, q, 2, Variant::Original, true);
  // u1 averages both rounds; u2 only has the first.
  const double u1 = 0.5 / 4.0;
  const double u2 = (1.0 - kDcg2) / 4.0;
  CHECK(r.per_user.at("u1") == doctest::Approx(u1).epsilon(1e-12));
  CHECK(r.per_user.at("u2") == doctest::Approx(u2).epsilon(1e-12));
  CHECK(r.score == doctest::Approx((u1 + u2) / 2.0).epsilon(1e-12));
  CHECK(r.params.at("partial_round_users") == 1.0);
  CHECK(r.params.at("W") == 2.0);
}

TEST_CASE("strict multi-round measures reject diverging user sets") {
  RunSet round1 = run_of({{0, 1, 2}, {2, 1, 0}});
  RunSet round2 = run_of({{0, 1, 2}});
  const std::vector<RunSet> rounds = {round1, round2};
  const Qrels q = qrels_of({{0}, {1}});
  CHECK_THROWS_AS(mme(rounds, q, 2), ValidationError);
  const Catalog c = cat(3);
  const auto rel = NormalizedRelevance::from_qrels(q, c);
  CHECK_THROWS_AS(iaa(rounds, {rel}, 2, ExamKind::LinearNormCorrected, Variant::Original),
                  ValidationError);
}

TEST_CASE("corrected variants require a deterministic ranking policy across rounds") {
  const Qrels q = qrels_of({{0, 2}});
  RunSet roundA = one_user({0, 1, 2});
  RunSet roundB = one_user({1, 0, 2});
  CHECK_THROWS_AS(ifd_div(std::vector<RunSet>{roundA, roundB}, q, 2, Variant::Corrected),
                  ValidationError);
  const auto ok = ifd_div(std::vector<RunSet>{roundA, roundA}, q, 2, Variant::Corrected);
  CHECK(ok.score == ifd_div(roundA, q, 2, Variant::Corrected).score);
}

TEST_CASE("multi-round iaa averages gaps before taking magnitudes") {
  const Catalog c = cat(3);
  const auto rel = NormalizedRelevance::from_raw(c, {{"u1", {1.0, 0.5, 0.0}}});
  const RunSet a = one_user({0, 1, 2});
  const RunSet b = one_user({2, 1, 0});
  const auto avg = iaa(std::vector<RunSet>{a, b}, {rel}, 2, ExamKind::LinearNormCorrected,
                       Variant::Original);
  // Per item: e sums across rounds minus relevance per round, then averaged.
  // Item 0: (1+0.5) - 2*1; item 1: (0.5+0.5) - 2*0.5; item 2: (1+0) - 0.
  const double expected = (1.0 + 0.0 + 1.0) / (3.0 * 2.0);
  CHECK(avg.score == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mme placement averages across rounds") {
  const Qrels q = qrels_of({{0, 1, 2}, {0, 1, 2}});
  const RunSet a = run_of({{0, 1, 2}, {2, 1, 0}});
  const RunSet b = run_of({{2, 1, 0}, {0, 1, 2}});
  // The two rounds mirror each other, so placement is symmetric across items
  // held by the same fans; envy matches the opposed single round.
  const auto avg = mme(std::vector<RunSet>{a, b}, q, 3);
  const auto opposed = mme(run_of({{0, 1, 2}, {2, 1, 0}}), q, 3);
  CHECK(avg.score == doctest::Approx(opposed.score).epsilon(1e-12));
}

TEST_CASE("extreme rankings are full permutations with block placement") {
  const auto top = extreme_ranking("iaa", ExtremeStrategy::Top, {4, 1}, 5, 2);
  CHECK(top == std::vector<int>{1, 4, 0, 2, 3});
  const auto bottom = extreme_ranking("iaa", ExtremeStrategy::Bottom, {4, 1}, 5, 2);
  CHECK(bottom == std::vector<int>{0, 2, 3, 1, 4});
  const auto half = extreme_ranking("ifd-div", ExtremeStrategy::HalfHalf, {0, 1, 2}, 5, 2);
  CHECK(half == std::vector<int>{0, 1, 3, 4, 2});
  const auto split = extreme_ranking("ifd-mul", ExtremeStrategy::Split, {0, 1, 2}, 5, 2, 1);
  CHECK(split == std::vector<int>{0, 3, 4, 1, 2});
  CHECK_THROWS_AS(extreme_ranking("jain", ExtremeStrategy::Top, {0}, 3, 1), ValidationError);
  CHECK_THROWS_AS(extreme_ranking("ifd-mul", ExtremeStrategy::Split, {0}, 3, 1, 5),
                  ValidationError);
}

TEST_CASE("parallel slot fill matches the serial reference bitwise") {
  const auto fn = [](int i) {
    double x = 1.0;
    for (int t = 0; t < (i % 7) + 1; ++t) x = x * 0.97 + std::sin(static_cast<double>(i + t));
    return x;
  };
  const auto a = serial::fill_slots(1000, fn);
  const auto b = parallel::fill_slots(1000, fn);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
