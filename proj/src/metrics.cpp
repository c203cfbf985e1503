#include "bsc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "bsc/errors.hpp"

namespace bsc {

std::vector<Candidate> ranked(const RankedGroup& group) {
  if (group.candidates.empty())
    throw DomainError("ranked: group '" + group.query_id + "' has no candidates");
  std::vector<Candidate> out = group.candidates;
  std::sort(out.begin(), out.end(), [](const Candidate& x, const Candidate& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.id < y.id;
  });
  return out;
}

namespace {

bool any_relevant(const RankedGroup& group) {
  for (const auto& c : group.candidates)
    if (c.relevant) return true;
  return false;
}

// Mean of `per_group` over groups with at least one relevant candidate.
template <typename F>
double relevant_group_mean(const std::vector<RankedGroup>& groups,
                           std::size_t* skipped, F per_group) {
  if (groups.empty()) throw DomainError("metric: empty group set");
  double sum = 0.0;
  std::size_t kept = 0, dropped = 0;
  for (const auto& g : groups) {
    if (!any_relevant(g)) {
      ++dropped;
      continue;
    }
    sum += per_group(ranked(g));
    ++kept;
  }
  if (skipped != nullptr) *skipped = dropped;
  if (kept == 0) throw DomainError("metric: no group has a relevant candidate");
  return sum / static_cast<double>(kept);
}

}  // namespace

double mrr(const std::vector<RankedGroup>& groups, std::size_t* skipped) {
  return relevant_group_mean(groups, skipped, [](const std::vector<Candidate>& r) {
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i].relevant) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
  });
}

double mean_average_precision(const std::vector<RankedGroup>& groups,
                              std::size_t* skipped) {
  return relevant_group_mean(groups, skipped, [](const std::vector<Candidate>& r) {
    double hits = 0.0, ap = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!r[i].relevant) continue;
      hits += 1.0;
      ap += hits / static_cast<double>(i + 1);
    }
    return ap / hits;
  });
}

double precision_at_1(const std::vector<RankedGroup>& groups, std::size_t* skipped) {
  return relevant_group_mean(groups, skipped, [](const std::vector<Candidate>& r) {
    return r.front().relevant ? 1.0 : 0.0;
  });
}

double ndcg_at_k(const std::vector<RankedGroup>& groups, std::size_t k,
                 std::size_t* skipped) {
  if (k < 1) throw ContractError("ndcg_at_k: k must be >= 1");
  if (groups.empty()) throw DomainError("ndcg_at_k: empty group set");
  auto dcg = [k](const std::vector<double>& gains) {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(k, gains.size()); ++i)
      s += (std::pow(2.0, gains[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    return s;
  };
  double sum = 0.0;
  std::size_t kept = 0, dropped = 0;
  for (const auto& g : groups) {
    auto r = ranked(g);
    std::vector<double> gains(r.size()), ideal(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) gains[i] = ideal[i] = r[i].gain;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = dcg(ideal);
    if (idcg == 0.0) {
      ++dropped;
      continue;
    }
    sum += dcg(gains) / idcg;
    ++kept;
  }
  if (skipped != nullptr) *skipped = dropped;
  if (kept == 0) throw DomainError("ndcg_at_k: every group has zero ideal DCG");
  return sum / static_cast<double>(kept);
}

double has_positives_at_k(const std::vector<RankedGroup>& groups, std::size_t k,
                          std::size_t* skipped) {
  if (k < 1) throw ContractError("has_positives_at_k: k must be >= 1");
  return relevant_group_mean(groups, skipped, [k](const std::vector<Candidate>& r) {
    for (std::size_t i = 0; i < std::min(k, r.size()); ++i)
      if (r[i].relevant) return 1.0;
    return 0.0;
  });
}

namespace {

// Fractional ranks (1-based), ties resolved to the average rank.
std::vector<double> fractional_ranks(const std::vector<double>& values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& pred, const std::vector<double>& gold) {
  if (pred.size() != gold.size()) throw ShapeError("spearman: length mismatch");
  if (pred.size() < 2) throw DomainError("spearman: need at least 2 observations");
  auto rp = fractional_ranks(pred);
  auto rg = fractional_ranks(gold);
  double n = static_cast<double>(pred.size());
  double mp = 0.0, mg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mp += rp[i];
    mg += rg[i];
  }
  mp /= n;
  mg /= n;
  double cov = 0.0, vp = 0.0, vg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double dp = rp[i] - mp, dg = rg[i] - mg;
    cov += dp * dg;
    vp += dp * dp;
    vg += dg * dg;
  }
  if (vp == 0.0 || vg == 0.0)
    throw DomainError("spearman: constant input has no defined rank correlation");
  return cov / std::sqrt(vp * vg);
}

double f1_at_threshold(const std::vector<double>& scores,
                       const std::vector<bool>& labels, double threshold) {
  if (scores.size() != labels.size()) throw ShapeError("f1: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool predicted = scores[i] > threshold;
    if (predicted && labels[i]) ++tp;
    if (predicted && !labels[i]) ++fp;
    if (!predicted && labels[i]) ++fn;
  }
  if (tp == 0) return 0.0;
  double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

ThresholdedF1 f1_with_threshold(const std::vector<double>& dev_scores,
                                const std::vector<bool>& dev_labels,
                                const std::vector<double>& eval_scores,
                                const std::vector<bool>& eval_labels) {
  if (dev_scores.empty()) throw ContractError("f1_with_threshold: empty dev split");
  if (dev_scores.size() != dev_labels.size())
    throw ShapeError("f1_with_threshold: dev length mismatch");
  bool has_pos = false, has_neg = false;
  for (bool l : dev_labels) (l ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw ContractError("f1_with_threshold: dev split must contain both classes");

  std::vector<double> sorted = dev_scores;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<double> thresholds;
  thresholds.push_back(sorted.front() - 1.0);  // predict everything positive
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
    thresholds.push_back((sorted[i] + sorted[i + 1]) / 2.0);
  thresholds.push_back(sorted.back() + 1.0);   // predict everything negative

  ThresholdedF1 best;
  bool first = true;
  for (double t : thresholds) {
    double f1 = f1_at_threshold(dev_scores, dev_labels, t);
    if (first || f1 > best.dev_f1) {
      best.threshold = t;
      best.dev_f1 = f1;
      first = false;
    }
  }
  best.eval_f1 = f1_at_threshold(eval_scores, eval_labels, best.threshold);
  return best;
}

}  // namespace bsc
