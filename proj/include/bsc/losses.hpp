#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bsc/matrix.hpp"
#include "bsc/normalization.hpp"

namespace bsc {

enum class LossVariant { Bsc, BscMasked, Mse, Combo, Triplet };

LossVariant parse_loss_variant(std::string_view name);
std::string loss_variant_name(LossVariant variant);

struct LossConfig {
  double temperature = 0.1;    // tau > 0, divides similarities before softmax
  double mu = 0.1;             // combo weight in [0, 1]
  double threshold = 0.5;      // binarization threshold t for labels
  NormalizationMode normalization = NormalizationMode::None;
  bool symmetrize = true;      // add the AQ^T component
  bool temperature_trainable = false;
  double triplet_margin = 0.5;

  void validate() const;
};

// A batch of aligned query/answer embeddings with labels in [0, 1].
struct PairBatch {
  Matrix q;                     // m x n
  Matrix a;                     // m x n
  std::vector<double> labels;   // length m

  std::size_t size() const { return q.rows(); }
  void validate() const;
  bool is_positive(std::size_t i, double threshold) const {
    return labels[i] > threshold;
  }
};

struct LossOutput {
  double value = 0.0;
  Matrix grad_q;
  Matrix grad_a;
  // d(value)/d(log tau); zero unless cfg.temperature_trainable.
  double grad_log_tau = 0.0;
};

// Batch-softmax contrastive loss: -mean(log diag softmax(QA^T / tau)),
// plus the AQ^T direction when symmetrize is set. All pairs are treated
// as positive. Gradients include the normalization chain.
LossOutput bsc_loss(const PairBatch& batch, const LossConfig& cfg);

// The explicit sum form of the QA^T component:
//   -(1/(m tau)) sum_i q_i.a_i + (1/m) sum_i log sum_j exp(q_i.a_j / tau).
// Value only; serves as an algebraic cross-check of bsc_loss.
double bsc_loss_sum_form(const PairBatch& batch, const LossConfig& cfg);

// As bsc_loss, but rows with label <= threshold are removed from the
// numerator and from their own row's log-sum-exp; their embeddings still
// act as in-batch negatives in every other row. The divisor stays m.
LossOutput bsc_loss_masked(const PairBatch& batch, const LossConfig& cfg);

// Mean squared error between the diagonal similarities (after
// normalization, no temperature) and the target labels.
LossOutput mse_loss(const PairBatch& batch, const LossConfig& cfg);

// mu * bsc_loss_masked + (1 - mu) * mse_loss.
LossOutput combo_loss(const PairBatch& batch, const LossConfig& cfg);

// Numerator aggregation over groups of identical query rows: every positive
// of the same query is placed in the softmax numerator and averaged outside
// the log. Algebraically equal to bsc_loss; returned as a value so tests can
// assert the identity.
double duplicate_aggregated_loss(const PairBatch& batch, const LossConfig& cfg);

struct TripletLossOutput {
  double value = 0.0;
  Matrix grad_anchor;
  Matrix grad_positive;
  Matrix grad_negative;
};

// Margin hinge over Euclidean distances, averaged over rows. Subgradient
// zero at inactive rows.
TripletLossOutput triplet_loss(const Matrix& anchor, const Matrix& positive,
                               const Matrix& negative, double margin);

// d(bsc_loss)/d(log tau); requires cfg.temperature_trainable.
double temperature_gradient(const PairBatch& batch, const LossConfig& cfg);

// Trainer-facing dispatch over the pairwise variants (everything except
// Triplet, which consumes triplets rather than pair batches).
LossOutput compute_loss(LossVariant variant, const PairBatch& batch,
                        const LossConfig& cfg);

}  // namespace bsc
