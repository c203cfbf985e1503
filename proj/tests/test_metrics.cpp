#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bsc/errors.hpp"
#include "bsc/metrics.hpp"
#include "bsc/rng.hpp"

using namespace bsc;

namespace {

RankedGroup group_from(const std::vector<double>& scores,
                       const std::vector<double>& gains) {
  RankedGroup g;
  g.query_id = "q";
  for (std::size_t i = 0; i < scores.size(); ++i)
    g.candidates.push_back({static_cast<std::int64_t>(i), scores[i], gains[i],
                            gains[i] > 0.0});
  return g;
}

std::vector<RankedGroup> random_groups(Rng& rng, std::size_t max_groups,
                                       std::size_t max_candidates) {
  std::vector<RankedGroup> groups(1 + rng.next_below(max_groups));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].query_id = "q" + std::to_string(g);
    std::size_t n = 1 + rng.next_below(max_candidates);
    for (std::size_t i = 0; i < n; ++i) {
      Candidate c;
      c.id = static_cast<std::int64_t>(i);
      // Coarse grid of scores so ties actually occur.
      c.score = static_cast<double>(rng.next_below(5)) / 4.0;
      c.gain = rng.next_real() < 0.4 ? static_cast<double>(1 + rng.next_below(3)) / 3.0 : 0.0;
      c.relevant = c.gain > 0.0;
      groups[g].candidates.push_back(c);
    }
  }
  return groups;
}

// Naive reference implementations, written directly from the definitions.
std::vector<Candidate> naive_rank(const RankedGroup& g) {
  std::vector<Candidate> r = g.candidates;
  std::stable_sort(r.begin(), r.end(), [](const Candidate& x, const Candidate& y) {
    return x.id < y.id;
  });
  std::stable_sort(r.begin(), r.end(), [](const Candidate& x, const Candidate& y) {
    return x.score > y.score;
  });
  return r;
}

double naive_mrr(const std::vector<RankedGroup>& groups) {
  double sum = 0.0;
  std::size_t kept = 0;
  for (const auto& g : groups) {
    bool any = false;
    for (const auto& c : g.candidates) any = any || c.relevant;
    if (!any) continue;
    auto r = naive_rank(g);
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i].relevant) {
        sum += 1.0 / static_cast<double>(i + 1);
        break;
      }
    ++kept;
  }
  return sum / static_cast<double>(kept);
}

double naive_map(const std::vector<RankedGroup>& groups) {
  double sum = 0.0;
  std::size_t kept = 0;
  for (const auto& g : groups) {
    std::size_t total_rel = 0;
    for (const auto& c : g.candidates) total_rel += c.relevant ? 1 : 0;
    if (total_rel == 0) continue;
    auto r = naive_rank(g);
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!r[i].relevant) continue;
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    sum += ap / static_cast<double>(total_rel);
    ++kept;
  }
  return sum / static_cast<double>(kept);
}

double naive_ndcg(const std::vector<RankedGroup>& groups, std::size_t k) {
  double sum = 0.0;
  std::size_t kept = 0;
  for (const auto& g : groups) {
    auto r = naive_rank(g);
    std::vector<double> ideal;
    for (const auto& c : r) ideal.push_back(c.gain);
    std::sort(ideal.rbegin(), ideal.rend());
    double dcg = 0.0, idcg = 0.0;
    for (std::size_t i = 0; i < r.size() && i < k; ++i) {
      dcg += (std::pow(2.0, r[i].gain) - 1.0) / (std::log(i + 2.0) / std::log(2.0));
      idcg += (std::pow(2.0, ideal[i]) - 1.0) / (std::log(i + 2.0) / std::log(2.0));
    }
    if (idcg == 0.0) continue;
    sum += dcg / idcg;
    ++kept;
  }
  return sum / static_cast<double>(kept);
}

}  // namespace

TEST_CASE("mrr basics") {
  SUBCASE("first relevant at rank 1 everywhere") {
    std::vector<RankedGroup> groups = {group_from({0.9, 0.1}, {1.0, 0.0}),
                                       group_from({0.8, 0.2, 0.1}, {1.0, 0.0, 0.0})};
    CHECK(mrr(groups) == doctest::Approx(1.0));
  }
  SUBCASE("single group with the relevant at rank 2") {
    std::vector<RankedGroup> groups = {group_from({0.9, 0.5}, {0.0, 1.0})};
    CHECK(mrr(groups) == doctest::Approx(0.5));
  }
  SUBCASE("groups without relevant candidates are skipped and counted") {
    std::vector<RankedGroup> groups = {group_from({0.9, 0.5}, {1.0, 0.0}),
                                       group_from({0.9, 0.5}, {0.0, 0.0})};
    std::size_t skipped = 0;
    CHECK(mrr(groups, &skipped) == doctest::Approx(1.0));
    CHECK(skipped == 1);
  }
  SUBCASE("empty group set is a domain error") {
    std::vector<RankedGroup> none;
    CHECK_THROWS_AS(mrr(none), DomainError);
  }
}

TEST_CASE("map and p@1 basics") {
  SUBCASE("perfect ranking") {
    std::vector<RankedGroup> groups = {group_from({0.9, 0.8, 0.1}, {1.0, 1.0, 0.0})};
    CHECK(mean_average_precision(groups) == doctest::Approx(1.0));
    CHECK(precision_at_1(groups) == doctest::Approx(1.0));
  }
  SUBCASE("single inversion") {
    // Labels [0, 1] ranked [0, 1] by score: AP = 1/2, P@1 = 0.
    std::vector<RankedGroup> groups = {group_from({0.9, 0.5}, {0.0, 1.0})};
    CHECK(mean_average_precision(groups) == doctest::Approx(0.5));
    CHECK(precision_at_1(groups) == doctest::Approx(0.0));
  }
}

TEST_CASE("ndcg basics") {
  SUBCASE("perfect ranking scores 1") {
    std::vector<RankedGroup> groups = {group_from({0.9, 0.5, 0.1}, {1.0, 0.5, 0.0})};
    CHECK(ndcg_at_k(groups, 3) == doctest::Approx(1.0));
  }
  SUBCASE("k below 1 is a contract error") {
    std::vector<RankedGroup> groups = {group_from({0.9}, {1.0})};
    CHECK_THROWS_AS(ndcg_at_k(groups, 0), ContractError);
  }
}

TEST_CASE("has_positives_at_k basics") {
  std::vector<RankedGroup> groups = {group_from({0.9, 0.8, 0.7}, {0.0, 0.0, 1.0})};
  CHECK(has_positives_at_k(groups, 3) == doctest::Approx(1.0));
  CHECK(has_positives_at_k(groups, 1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(has_positives_at_k(groups, 0), ContractError);
}

TEST_CASE("ties break by ascending candidate id") {
  RankedGroup g;
  g.query_id = "q";
  g.candidates = {{5, 0.5, 0.0, false}, {2, 0.5, 1.0, true}, {9, 0.5, 0.0, false}};
  auto r = ranked(g);
  CHECK(r[0].id == 2);
  CHECK(r[1].id == 5);
  CHECK(r[2].id == 9);
  CHECK(mrr({g}) == doctest::Approx(1.0));
}

TEST_CASE("rank metrics match naive oracles on random instances") {
  Rng rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    auto groups = random_groups(rng, 10, 10);
    bool any_rel = false, any_gain = false;
    for (const auto& g : groups)
      for (const auto& c : g.candidates) {
        any_rel = any_rel || c.relevant;
        any_gain = any_gain || c.gain > 0.0;
      }
    if (!any_rel) continue;
    CHECK(mrr(groups) == doctest::Approx(naive_mrr(groups)).epsilon(1e-12));
    CHECK(mean_average_precision(groups) ==
          doctest::Approx(naive_map(groups)).epsilon(1e-12));
    if (any_gain) {
      std::size_t k = 1 + rng.next_below(6);
      CHECK(ndcg_at_k(groups, k) == doctest::Approx(naive_ndcg(groups, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("rank metrics are invariant under monotone score transforms") {
  Rng rng(31337);
  for (int rep = 0; rep < 50; ++rep) {
    auto groups = random_groups(rng, 6, 8);
    bool any_rel = false;
    for (const auto& g : groups)
      for (const auto& c : g.candidates) any_rel = any_rel || c.relevant;
    if (!any_rel) continue;
    auto transformed = groups;
    for (auto& g : transformed)
      for (auto& c : g.candidates) c.score = std::exp(3.0 * c.score) + 7.0;
    CHECK(mrr(groups) == doctest::Approx(mrr(transformed)).epsilon(1e-12));
    CHECK(mean_average_precision(groups) ==
          doctest::Approx(mean_average_precision(transformed)).epsilon(1e-12));
    CHECK(has_positives_at_k(groups, 3) ==
          doctest::Approx(has_positives_at_k(transformed, 3)).epsilon(1e-12));
  }
}

TEST_CASE("spearman") {
  SUBCASE("identical orderings") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  }
  SUBCASE("exactly reversed") {
    CHECK(spearman({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
  }
  SUBCASE("constant input is a domain error") {
    CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), DomainError);
    CHECK_THROWS_AS(spearman({1, 2, 3}, {5, 5, 5}), DomainError);
  }
  SUBCASE("ties match the naive average-rank computation") {
    // Naive: ranks of {1, 2, 2, 3} are {1, 2.5, 2.5, 4}.
    std::vector<double> pred = {1, 2, 2, 3};
    std::vector<double> gold = {2, 1, 4, 3};
    std::vector<double> rp = {1.0, 2.5, 2.5, 4.0};
    std::vector<double> rg = {2.0, 1.0, 4.0, 3.0};
    double mp = 2.5, mg = 2.5, cov = 0, vp = 0, vg = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      cov += (rp[i] - mp) * (rg[i] - mg);
      vp += (rp[i] - mp) * (rp[i] - mp);
      vg += (rg[i] - mg) * (rg[i] - mg);
    }
    CHECK(spearman(pred, gold) == doctest::Approx(cov / std::sqrt(vp * vg)).epsilon(1e-12));
  }
  SUBCASE("rank invariance under monotone transforms") {
    Rng rng(5);
    std::vector<double> pred(20), gold(20);
    for (std::size_t i = 0; i < 20; ++i) {
      pred[i] = rng.next_real();
      gold[i] = rng.next_real();
    }
    auto warped = pred;
    for (double& v : warped) v = std::atan(5.0 * v);
    CHECK(spearman(pred, gold) == doctest::Approx(spearman(warped, gold)).epsilon(1e-12));
  }
}

TEST_CASE("f1 with threshold") {
  SUBCASE("perfectly separable scores") {
    std::vector<double> dev = {0.1, 0.2, 0.8, 0.9};
    std::vector<bool> labels = {false, false, true, true};
    auto out = f1_with_threshold(dev, labels, dev, labels);
    CHECK(out.dev_f1 == doctest::Approx(1.0));
    CHECK(out.eval_f1 == doctest::Approx(1.0));
    CHECK(out.threshold > 0.2);
    CHECK(out.threshold < 0.8);
  }
  SUBCASE("anti-correlated scores fall back to the all-positive predictor") {
    std::vector<double> dev = {0.9, 0.8, 0.1, 0.2};
    std::vector<bool> labels = {false, false, true, true};
    auto out = f1_with_threshold(dev, labels, dev, labels);
    // All-positive: precision 1/2, recall 1 -> F1 = 2/3. No cut does better.
    CHECK(out.dev_f1 == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("matches an exhaustive sweep") {
    Rng rng(17);
    for (int rep = 0; rep < 100; ++rep) {
      std::size_t n = 4 + rng.next_below(12);
      std::vector<double> scores(n);
      std::vector<bool> labels(n);
      bool pos = false, neg = false;
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = static_cast<double>(rng.next_below(6)) / 5.0;
        labels[i] = rng.next_real() < 0.5;
        (labels[i] ? pos : neg) = true;
      }
      if (!pos || !neg) continue;
      auto out = f1_with_threshold(scores, labels, scores, labels);
      // Exhaustive: every score +- epsilon as a cut.
      double best = 0.0;
      std::vector<double> cuts = {-1.0, 2.0};
      for (double s : scores) {
        cuts.push_back(s - 1e-9);
        cuts.push_back(s + 1e-9);
      }
      for (double cut : cuts) best = std::max(best, f1_at_threshold(scores, labels, cut));
      CHECK(out.dev_f1 == doctest::Approx(best).epsilon(1e-12));
    }
  }
  SUBCASE("single-class dev split is a contract error") {
    std::vector<double> dev = {0.1, 0.9};
    std::vector<bool> labels = {true, true};
    CHECK_THROWS_AS(f1_with_threshold(dev, labels, dev, labels), ContractError);
  }
}

TEST_CASE("metric values stay in their documented ranges") {
  Rng rng(909);
  for (int rep = 0; rep < 50; ++rep) {
    auto groups = random_groups(rng, 8, 8);
    bool any_rel = false;
    for (const auto& g : groups)
      for (const auto& c : g.candidates) any_rel = any_rel || c.relevant;
    if (!any_rel) continue;
    double v = mrr(groups);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    v = mean_average_precision(groups);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    v = precision_at_1(groups);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    v = has_positives_at_k(groups, 2);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
