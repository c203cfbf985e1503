#include "bsc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "bsc/encoder.hpp"
#include "bsc/errors.hpp"
#include "bsc/losses.hpp"
#include "bsc/rng.hpp"

namespace bsc {

double gradient_error(double analytic, double numeric) {
  double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

double central_difference(double& x, double h, const std::function<double()>& f) {
  double saved = x;
  x = saved + h;
  double fp = f();
  x = saved - h;
  double fm = f();
  x = saved;
  return (fp - fm) / (2.0 * h);
}

double max_gradient_error(Matrix& params, const Matrix& analytic, double h,
                          const std::function<double()>& f) {
  if (!params.same_shape(analytic))
    throw ShapeError("max_gradient_error: analytic gradient shape mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    double numeric = central_difference(params.data()[k], h, f);
    worst = std::max(worst, gradient_error(analytic.data()[k], numeric));
  }
  return worst;
}

namespace {

constexpr double kStep = 1e-5;
constexpr double kLossTol = 1e-6;
constexpr double kChainTol = 1e-5;

// Random matrix whose columns have well-separated values, so the min-max
// subgradient choice is valid under +-h perturbations.
Matrix separated_matrix(Rng& rng, std::size_t rows, std::size_t cols, double min_gap) {
  while (true) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.next_real(-1.0, 1.0);
    bool ok = true;
    for (std::size_t c = 0; c < cols && ok; ++c) {
      std::vector<double> col(rows);
      for (std::size_t r = 0; r < rows; ++r) col[r] = m(r, c);
      std::sort(col.begin(), col.end());
      for (std::size_t r = 0; r + 1 < rows; ++r)
        if (col[r + 1] - col[r] < min_gap) ok = false;
    }
    if (ok) return m;
  }
}

PairBatch make_batch(Rng& rng, std::size_t m, std::size_t n) {
  PairBatch batch;
  batch.q = separated_matrix(rng, m, n, 1e-2);
  batch.a = separated_matrix(rng, m, n, 1e-2);
  batch.labels.resize(m);
  // Mixed labels so the masked variants exercise both branches.
  for (std::size_t i = 0; i < m; ++i) batch.labels[i] = i % 2 == 0 ? 1.0 : 0.0;
  return batch;
}

const NormalizationMode kModes[] = {NormalizationMode::None, NormalizationMode::RowL2,
                                    NormalizationMode::CoordL2,
                                    NormalizationMode::CoordMinmax};
const LossVariant kPairVariants[] = {LossVariant::Bsc, LossVariant::BscMasked,
                                     LossVariant::Mse, LossVariant::Combo};

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed) {
  std::vector<GradCheckResult> results;
  auto record = [&](const std::string& name, double err, double tol) {
    results.push_back({name, err, tol, err <= tol});
  };

  Rng rng(derive_seed(seed, 0x67726164ull));

  // Loss gradients w.r.t. both embedding matrices, every variant x mode.
  for (LossVariant variant : kPairVariants) {
    for (NormalizationMode mode : kModes) {
      PairBatch batch = make_batch(rng, 5, 4);
      LossConfig cfg;
      cfg.temperature = 0.7;
      cfg.mu = 0.3;
      cfg.normalization = mode;
      cfg.temperature_trainable = true;
      std::string label =
          loss_variant_name(variant) + "/" + normalization_mode_name(mode);
      auto value = [&] { return compute_loss(variant, batch, cfg).value; };
      LossOutput out = compute_loss(variant, batch, cfg);
      record("grad_q: " + label, max_gradient_error(batch.q, out.grad_q, kStep, value),
             kLossTol);
      record("grad_a: " + label, max_gradient_error(batch.a, out.grad_a, kStep, value),
             kLossTol);

      // Trainable temperature: differentiate over theta = log(tau).
      if (variant != LossVariant::Mse) {
        double log_tau = std::log(cfg.temperature);
        auto tau_value = [&] {
          LossConfig moved = cfg;
          moved.temperature = std::exp(log_tau);
          return compute_loss(variant, batch, moved).value;
        };
        double numeric = central_difference(log_tau, kStep, tau_value);
        record("grad_log_tau: " + label, gradient_error(out.grad_log_tau, numeric),
               kLossTol);
      }
    }
  }

  // Triplet loss, all three inputs.
  {
    Matrix anchor = separated_matrix(rng, 4, 3, 1e-2);
    Matrix positive = separated_matrix(rng, 4, 3, 1e-2);
    Matrix negative = separated_matrix(rng, 4, 3, 1e-2);
    double margin = 0.5;
    auto value = [&] { return triplet_loss(anchor, positive, negative, margin).value; };
    TripletLossOutput out = triplet_loss(anchor, positive, negative, margin);
    record("triplet grad_anchor",
           max_gradient_error(anchor, out.grad_anchor, kStep, value), kLossTol);
    record("triplet grad_positive",
           max_gradient_error(positive, out.grad_positive, kStep, value), kLossTol);
    record("triplet grad_negative",
           max_gradient_error(negative, out.grad_negative, kStep, value), kLossTol);
  }

  // Normalization backward passes against a fixed quadratic objective
  // L = sum(W * normalize(M)) with random weights W.
  for (NormalizationMode mode : kModes) {
    Matrix m = separated_matrix(rng, 6, 4, 1e-2);
    Matrix weights(6, 4);
    for (double& v : weights.data()) v = rng.next_real(-1.0, 1.0);
    auto value = [&] {
      Matrix y = normalize(m, mode);
      double s = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) s += weights.data()[k] * y.data()[k];
      return s;
    };
    Matrix analytic = normalize_backward(m, mode, weights);
    record("normalize_backward/" + normalization_mode_name(mode),
           max_gradient_error(m, analytic, kStep, value), kLossTol);
  }

  // End-to-end chain: loss -> normalization -> encoder parameters.
  for (NormalizationMode mode :
       {NormalizationMode::None, NormalizationMode::RowL2, NormalizationMode::CoordL2}) {
    EncoderConfig enc_cfg;
    enc_cfg.hash_buckets = 64;
    enc_cfg.dim = 16;
    EncoderModel model = EncoderModel::init(enc_cfg, derive_seed(seed, 0xc4a1ull));
    std::vector<std::string> q_texts = {"alpha beam core", "delta echo fox",
                                        "golf hotel india", "juliet kilo lima"};
    std::vector<std::string> a_texts = {"beam core alpha ray", "echo fox delta sun",
                                        "hotel india golf moon", "kilo lima juliet star"};
    LossConfig cfg;
    cfg.temperature = 0.5;
    cfg.normalization = mode;
    PairBatch batch;
    batch.labels = {1.0, 1.0, 1.0, 1.0};

    auto forward = [&] {
      batch.q = model.encode_batch(q_texts);
      batch.a = model.encode_batch(a_texts);
      return bsc_loss(batch, cfg).value;
    };
    forward();
    LossOutput out = bsc_loss(batch, cfg);
    EncoderGradients grads = model.zero_gradients();
    model.encode_batch_backward(q_texts, out.grad_q, grads);
    model.encode_batch_backward(a_texts, out.grad_a, grads);

    double worst = 0.0;
    worst = std::max(worst,
                     max_gradient_error(model.embedding(), grads.embedding, kStep, forward));
    worst = std::max(
        worst, max_gradient_error(model.projection(), grads.projection, kStep, forward));
    for (std::size_t i = 0; i < model.bias().size(); ++i) {
      double numeric = central_difference(model.bias()[i], kStep, forward);
      worst = std::max(worst, gradient_error(grads.bias[i], numeric));
    }
    record("encoder chain/" + normalization_mode_name(mode), worst, kChainTol);
  }

  return results;
}

bool all_passed(const std::vector<GradCheckResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

}  // namespace bsc
