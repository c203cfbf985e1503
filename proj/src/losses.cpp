#include "bsc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "bsc/errors.hpp"

namespace bsc {

LossVariant parse_loss_variant(std::string_view name) {
  if (name == "bsc") return LossVariant::Bsc;
  if (name == "bsc_masked") return LossVariant::BscMasked;
  if (name == "mse") return LossVariant::Mse;
  if (name == "combo") return LossVariant::Combo;
  if (name == "triplet") return LossVariant::Triplet;
  throw ValidationError("unknown loss variant: " + std::string(name));
}

std::string loss_variant_name(LossVariant variant) {
  switch (variant) {
    case LossVariant::Bsc: return "bsc";
    case LossVariant::BscMasked: return "bsc_masked";
    case LossVariant::Mse: return "mse";
    case LossVariant::Combo: return "combo";
    case LossVariant::Triplet: return "triplet";
  }
  return "bsc";
}

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw ContractError("LossConfig: temperature must be > 0");
  if (mu < 0.0 || mu > 1.0) throw ContractError("LossConfig: mu must be in [0, 1]");
}

void PairBatch::validate() const {
  if (q.rows() == 0) throw DomainError("PairBatch: empty batch");
  if (q.rows() != a.rows() || labels.size() != q.rows())
    throw ShapeError("PairBatch: row/label count mismatch");
  if (q.cols() != a.cols()) throw ShapeError("PairBatch: embedding dimensions differ");
  require_finite(q, "PairBatch.q");
  require_finite(a, "PairBatch.a");
}

namespace {

// Shared forward state for the softmax losses.
struct SimilarityState {
  Matrix qn, an;  // normalized embeddings
  Matrix s;       // qn an^T / tau
};

SimilarityState make_similarity(const PairBatch& batch, const LossConfig& cfg) {
  SimilarityState st;
  st.qn = normalize(batch.q, cfg.normalization);
  st.an = normalize(batch.a, cfg.normalization);
  st.s = scaled(matmul_transposed(st.qn, st.an), 1.0 / cfg.temperature);
  return st;
}

// Adds the masked softmax-contrastive terms for one direction.
//
// For direction 0 the anchor of row i is q_i and the loss row is row i of S;
// for direction 1 the anchor is a_i and the loss row is column i of S
// (S' = A Q^T / tau satisfies S'[i][j] = S[j][i]).
//
// Accumulates d(value)/dS into grad_s and returns the direction's value.
double accumulate_direction(const Matrix& s, const std::vector<char>& active,
                            bool transposed, Matrix& grad_s) {
  std::size_t m = s.rows();
  double value = 0.0;
  std::vector<double> row(m);
  std::vector<double> probs(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!active[i]) continue;
    for (std::size_t j = 0; j < m; ++j) row[j] = transposed ? s(j, i) : s(i, j);
    double lse = log_sum_exp(row);
    value += (lse - row[i]) / static_cast<double>(m);
    double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      probs[j] = std::exp(row[j] - mx);
      sum += probs[j];
    }
    for (std::size_t j = 0; j < m; ++j) {
      double g = (probs[j] / sum - (j == i ? 1.0 : 0.0)) / static_cast<double>(m);
      if (transposed)
        grad_s(j, i) += g;
      else
        grad_s(i, j) += g;
    }
  }
  return value;
}

LossOutput bsc_core(const PairBatch& batch, const LossConfig& cfg,
                    const std::vector<char>& active) {
  cfg.validate();
  batch.validate();
  SimilarityState st = make_similarity(batch, cfg);
  std::size_t m = batch.size();

  Matrix grad_s(m, m);
  LossOutput out;
  out.value = accumulate_direction(st.s, active, /*transposed=*/false, grad_s);
  if (cfg.symmetrize)
    out.value += accumulate_direction(st.s, active, /*transposed=*/true, grad_s);

  // dL/dQn = (dL/dS) An / tau and dL/dAn = (dL/dS)^T Qn / tau.
  Matrix grad_qn(m, batch.q.cols());
  Matrix grad_an(m, batch.a.cols());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double g = grad_s(i, j) / cfg.temperature;
      if (g == 0.0) continue;
      for (std::size_t c = 0; c < batch.q.cols(); ++c) {
        grad_qn(i, c) += g * st.an(j, c);
        grad_an(j, c) += g * st.qn(i, c);
      }
    }
  }
  out.grad_q = normalize_backward(batch.q, cfg.normalization, grad_qn);
  out.grad_a = normalize_backward(batch.a, cfg.normalization, grad_an);

  if (cfg.temperature_trainable) {
    // With tau = exp(theta), dS/dtheta = -S, so dL/dtheta = -sum(G * S).
    double acc = 0.0;
    for (std::size_t k = 0; k < grad_s.size(); ++k)
      acc += grad_s.data()[k] * st.s.data()[k];
    out.grad_log_tau = -acc;
  }
  return out;
}

std::vector<char> all_active(std::size_t m) { return std::vector<char>(m, 1); }

std::vector<char> positive_rows(const PairBatch& batch, const LossConfig& cfg) {
  std::vector<char> active(batch.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.is_positive(i, cfg.threshold)) {
      active[i] = 1;
      any = true;
    }
  }
  if (!any) throw DomainError("bsc_loss_masked: every row is masked (no labels above threshold)");
  return active;
}

}  // namespace

LossOutput bsc_loss(const PairBatch& batch, const LossConfig& cfg) {
  return bsc_core(batch, cfg, all_active(batch.size()));
}

LossOutput bsc_loss_masked(const PairBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  return bsc_core(batch, cfg, positive_rows(batch, cfg));
}

double bsc_loss_sum_form(const PairBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  Matrix qn = normalize(batch.q, cfg.normalization);
  Matrix an = normalize(batch.a, cfg.normalization);
  std::size_t m = batch.size();
  double diag_sum = 0.0;
  double lse_sum = 0.0;
  std::vector<double> row(m);
  for (std::size_t i = 0; i < m; ++i) {
    diag_sum += dot(qn.row(i), an.row(i));
    for (std::size_t j = 0; j < m; ++j)
      row[j] = dot(qn.row(i), an.row(j)) / cfg.temperature;
    lse_sum += log_sum_exp(row);
  }
  double md = static_cast<double>(m);
  return -diag_sum / (md * cfg.temperature) + lse_sum / md;
}

LossOutput mse_loss(const PairBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  std::size_t m = batch.size();
  Matrix qn = normalize(batch.q, cfg.normalization);
  Matrix an = normalize(batch.a, cfg.normalization);

  LossOutput out;
  Matrix grad_qn(m, batch.q.cols());
  Matrix grad_an(m, batch.a.cols());
  for (std::size_t i = 0; i < m; ++i) {
    double sim = dot(qn.row(i), an.row(i));
    double residual = sim - batch.labels[i];
    out.value += residual * residual / static_cast<double>(m);
    double g = 2.0 * residual / static_cast<double>(m);
    for (std::size_t c = 0; c < batch.q.cols(); ++c) {
      grad_qn(i, c) += g * an(i, c);
      grad_an(i, c) += g * qn(i, c);
    }
  }
  out.grad_q = normalize_backward(batch.q, cfg.normalization, grad_qn);
  out.grad_a = normalize_backward(batch.a, cfg.normalization, grad_an);
  return out;  // no tau dependence: grad_log_tau stays 0
}

LossOutput combo_loss(const PairBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  LossOutput bsc_part = bsc_loss_masked(batch, cfg);
  LossOutput mse_part = mse_loss(batch, cfg);
  LossOutput out;
  out.value = cfg.mu * bsc_part.value + (1.0 - cfg.mu) * mse_part.value;
  out.grad_q = scaled(bsc_part.grad_q, cfg.mu);
  add_scaled(out.grad_q, mse_part.grad_q, 1.0 - cfg.mu);
  out.grad_a = scaled(bsc_part.grad_a, cfg.mu);
  add_scaled(out.grad_a, mse_part.grad_a, 1.0 - cfg.mu);
  out.grad_log_tau = cfg.mu * bsc_part.grad_log_tau;
  return out;
}

double duplicate_aggregated_loss(const PairBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  SimilarityState st = make_similarity(batch, cfg);
  std::size_t m = batch.size();

  // Group rows by exact equality of the encoded query.
  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < m; ++i) {
    auto row = st.qn.row(i);
    std::string key(reinterpret_cast<const char*>(row.data()),
                    row.size() * sizeof(double));
    groups[key].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> group_of(m);
  for (const auto& [key, members] : groups)
    for (std::size_t i : members) group_of[i] = &members;

  double md = static_cast<double>(m);
  double value = 0.0;
  std::vector<double> row(m);

  // QA^T direction: numerator averages all positives a_j of row i's query.
  double num0 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& peers = *group_of[i];
    double acc = 0.0;
    for (std::size_t j : peers) acc += st.s(i, j);
    num0 += acc / static_cast<double>(peers.size());
    for (std::size_t j = 0; j < m; ++j) row[j] = st.s(i, j);
    value += log_sum_exp(row) / md;
  }
  value -= num0 / md;

  if (cfg.symmetrize) {
    // AQ^T direction: the positives of anchor a_i are the q_j in its group.
    double num1 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& peers = *group_of[i];
      double acc = 0.0;
      for (std::size_t j : peers) acc += st.s(j, i);
      num1 += acc / static_cast<double>(peers.size());
      for (std::size_t j = 0; j < m; ++j) row[j] = st.s(j, i);
      value += log_sum_exp(row) / md;
    }
    value -= num1 / md;
  }
  return value;
}

TripletLossOutput triplet_loss(const Matrix& anchor, const Matrix& positive,
                               const Matrix& negative, double margin) {
  if (!anchor.same_shape(positive) || !anchor.same_shape(negative))
    throw ShapeError("triplet_loss: shape mismatch");
  if (anchor.rows() == 0) throw DomainError("triplet_loss: empty batch");

  std::size_t m = anchor.rows(), n = anchor.cols();
  double md = static_cast<double>(m);
  TripletLossOutput out;
  out.grad_anchor = Matrix(m, n);
  out.grad_positive = Matrix(m, n);
  out.grad_negative = Matrix(m, n);

  for (std::size_t i = 0; i < m; ++i) {
    double dp = 0.0, dn = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      double ep = anchor(i, c) - positive(i, c);
      double en = anchor(i, c) - negative(i, c);
      dp += ep * ep;
      dn += en * en;
    }
    dp = std::sqrt(dp);
    dn = std::sqrt(dn);
    double hinge = dp - dn + margin;
    if (hinge <= 0.0) continue;
    out.value += hinge / md;
    for (std::size_t c = 0; c < n; ++c) {
      double gp = dp > 0.0 ? (anchor(i, c) - positive(i, c)) / dp : 0.0;
      double gn = dn > 0.0 ? (anchor(i, c) - negative(i, c)) / dn : 0.0;
      out.grad_anchor(i, c) += (gp - gn) / md;
      out.grad_positive(i, c) -= gp / md;
      out.grad_negative(i, c) += gn / md;
    }
  }
  return out;
}

double temperature_gradient(const PairBatch& batch, const LossConfig& cfg) {
  if (!cfg.temperature_trainable)
    throw ContractError("temperature_gradient: temperature_trainable is off");
  return bsc_loss(batch, cfg).grad_log_tau;
}

LossOutput compute_loss(LossVariant variant, const PairBatch& batch,
                        const LossConfig& cfg) {
  switch (variant) {
    case LossVariant::Bsc: return bsc_loss(batch, cfg);
    case LossVariant::BscMasked: return bsc_loss_masked(batch, cfg);
    case LossVariant::Mse: return mse_loss(batch, cfg);
    case LossVariant::Combo: return combo_loss(batch, cfg);
    case LossVariant::Triplet:
      throw ContractError("compute_loss: triplet loss consumes triplets, not pair batches");
  }
  throw ContractError("compute_loss: unreachable variant");
}

}  // namespace bsc
