#include "bsc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "bsc/errors.hpp"
#include "bsc/eval.hpp"
#include "bsc/rng.hpp"
#include "bsc/shuffle.hpp"

namespace bsc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kLogTauMin = -6.907755278982137;  // log(1e-3)
constexpr double kLogTauMax = 2.302585092994046;   // log(10)

}  // namespace

void adamw_step(std::span<double> params, std::span<const double> grads,
                AdamWState& state, std::size_t step_index, const AdamWOptions& opts) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw ShapeError("adamw_step: parameter/gradient/state size mismatch");
  if (step_index < 1) throw ContractError("adamw_step: step_index is 1-based");
  for (double g : grads)
    if (!std::isfinite(g))
      throw DivergenceError(
          "adamw_step: non-finite gradient at step " + std::to_string(step_index),
          step_index);

  double bc1 = 1.0, bc2 = 1.0;
  if (opts.bias_correction) {
    bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step_index));
    bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step_index));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = opts.beta1 * state.m[i] + (1.0 - opts.beta1) * grads[i];
    state.v[i] = opts.beta2 * state.v[i] + (1.0 - opts.beta2) * grads[i] * grads[i];
    double m_hat = state.m[i] / bc1;
    double v_hat = state.v[i] / bc2;
    params[i] -= opts.learning_rate *
                 (m_hat / (std::sqrt(v_hat) + opts.epsilon) + opts.weight_decay * params[i]);
  }
}

double warmup_scale(std::size_t step, std::size_t warmup_steps) {
  if (warmup_steps == 0 || step > warmup_steps) return 1.0;
  return static_cast<double>(step) / static_cast<double>(warmup_steps);
}

std::size_t warmup_steps_for(double warmup_fraction, std::size_t total_steps) {
  return static_cast<std::size_t>(
      std::ceil(warmup_fraction * static_cast<double>(total_steps)));
}

std::vector<Triplet> build_triplets(const PairDataset& records, double threshold) {
  std::unordered_map<std::string, std::vector<std::size_t>> negatives_by_anchor;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!(records[i].label > threshold))
      negatives_by_anchor[records[i].text_q].push_back(i);

  std::vector<Triplet> triplets;
  for (const auto& rec : records) {
    if (!(rec.label > threshold)) continue;
    auto it = negatives_by_anchor.find(rec.text_q);
    if (it == negatives_by_anchor.end()) continue;
    for (std::size_t ni : it->second)
      triplets.push_back({rec.text_q, rec.text_a, records[ni].text_a});
  }
  return triplets;
}

namespace {

struct OptimizerBundle {
  AdamWState embedding;
  AdamWState projection;
  AdamWState bias;
  AdamWState log_tau;

  explicit OptimizerBundle(const EncoderModel& model)
      : embedding(AdamWState::zeros(model.embedding().size())),
        projection(AdamWState::zeros(model.projection().size())),
        bias(AdamWState::zeros(model.bias().size())),
        log_tau(AdamWState::zeros(1)) {}
};

bool is_bsc_family(LossVariant v) {
  return v == LossVariant::Bsc || v == LossVariant::BscMasked || v == LossVariant::Combo;
}

// Consecutive batch slices of the epoch's record order. A trailing partial
// batch needs at least 2 rows for the softmax losses (a 1-row softmax is a
// wasted step), and at least 1 row otherwise.
std::vector<std::pair<std::size_t, std::size_t>> batch_plan(std::size_t count,
                                                            std::size_t batch_size,
                                                            bool softmax_family) {
  std::vector<std::pair<std::size_t, std::size_t>> plan;
  for (std::size_t start = 0; start < count; start += batch_size) {
    std::size_t end = std::min(start + batch_size, count);
    std::size_t min_rows = softmax_family ? 2 : 1;
    if (end - start >= min_rows) plan.emplace_back(start, end);
  }
  return plan;
}

Matrix grouping_embeddings(const EncoderModel& model, const PairDataset& records,
                           PairElement element) {
  std::vector<std::string> texts(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    texts[i] = element == PairElement::First ? records[i].text_q : records[i].text_a;
  return model.encode_batch(texts);
}

std::string checkpoint_name(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03zu.ckpt.json", epoch);
  return buf;
}

}  // namespace

TrainRun train(const PairDataset& train_set, const PairDataset& dev_set,
               const RunConfig& cfg, std::uint64_t seed, const std::string& run_dir) {
  cfg.validate();
  if (train_set.empty()) throw DomainError("train: empty training set");
  if (dev_set.empty()) throw DomainError("train: empty dev set");
  fs::create_directories(run_dir);

  EncoderModel model = EncoderModel::init(cfg.encoder, seed);
  OptimizerBundle opt_state(model);
  double log_tau = std::log(cfg.loss.temperature);

  bool softmax_family = is_bsc_family(cfg.variant);
  std::vector<Triplet> epoch_triplets;
  std::size_t steps_per_epoch = 0;
  if (cfg.variant == LossVariant::Triplet) {
    auto all = build_triplets(train_set, cfg.loss.threshold);
    if (all.empty())
      throw ContractError(
          "train: triplet loss requires labeled negatives sharing anchors with positives");
    steps_per_epoch = batch_plan(all.size(), cfg.train.batch_size, false).size();
  } else {
    steps_per_epoch = batch_plan(train_set.size(), cfg.train.batch_size,
                                 softmax_family).size();
  }
  if (steps_per_epoch == 0)
    throw DomainError("train: batch plan is empty (dataset smaller than a usable batch)");
  std::size_t total_steps = steps_per_epoch * cfg.train.epochs;
  std::size_t warmup = warmup_steps_for(cfg.train.warmup_fraction, total_steps);

  AdamWOptions opts;
  opts.weight_decay = cfg.train.weight_decay;
  opts.bias_correction = cfg.train.bias_correction;

  TrainRun run;
  run.seed = seed;
  run.run_dir = run_dir;

  std::size_t global_step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    // The epoch's batch content is fixed up front: encode everything with
    // the current model, shuffle once, and keep the plan for the whole epoch.
    ShuffleConfig shuffle_cfg = cfg.shuffle;
    shuffle_cfg.seed = derive_seed(seed, 0xe50c0000ull + epoch);
    Matrix embeddings;
    const Matrix* embeddings_ptr = nullptr;
    if (shuffle_cfg.mode == ShuffleMode::ExampleKnn ||
        shuffle_cfg.mode == ShuffleMode::Clusters ||
        shuffle_cfg.mode == ShuffleMode::Neighbors) {
      embeddings = grouping_embeddings(model, train_set, shuffle_cfg.element);
      embeddings_ptr = &embeddings;
    }
    ShuffledSequence seq = run_shuffle(train_set, embeddings_ptr, shuffle_cfg);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    auto apply_step = [&](double loss_value, const EncoderGradients& grads,
                          double grad_log_tau) {
      ++global_step;
      if (!std::isfinite(loss_value))
        throw DivergenceError("train: non-finite loss at step " +
                                  std::to_string(global_step),
                              global_step);
      opts.learning_rate = cfg.train.learning_rate * warmup_scale(global_step, warmup);
      adamw_step(std::span<double>(model.embedding().data()),
                 std::span<const double>(grads.embedding.data()), opt_state.embedding,
                 global_step, opts);
      adamw_step(std::span<double>(model.projection().data()),
                 std::span<const double>(grads.projection.data()), opt_state.projection,
                 global_step, opts);
      adamw_step(std::span<double>(model.bias()), std::span<const double>(grads.bias),
                 opt_state.bias, global_step, opts);
      if (cfg.loss.temperature_trainable && cfg.variant != LossVariant::Mse &&
          cfg.variant != LossVariant::Triplet) {
        // The temperature is optimized over theta = log(tau) and never
        // decays, whatever the weight-decay setting for the encoder.
        AdamWOptions tau_opts = opts;
        tau_opts.weight_decay = 0.0;
        adamw_step(std::span<double>(&log_tau, 1),
                   std::span<const double>(&grad_log_tau, 1), opt_state.log_tau,
                   global_step, tau_opts);
        log_tau = std::clamp(log_tau, kLogTauMin, kLogTauMax);
      }
      loss_sum += loss_value;
      ++loss_count;
    };

    if (cfg.variant == LossVariant::Triplet) {
      // Triplets are rebuilt from the epoch's shuffled order, so batch
      // content follows the configured shuffle.
      PairDataset reordered;
      reordered.reserve(train_set.size());
      for (std::size_t pos : seq.order) reordered.push_back(train_set[pos]);
      epoch_triplets = build_triplets(reordered, cfg.loss.threshold);
      auto plan = batch_plan(epoch_triplets.size(), cfg.train.batch_size, false);
      for (auto [start, end] : plan) {
        std::size_t m = end - start;
        std::vector<std::string> anchors(m), positives(m), negatives(m);
        for (std::size_t i = 0; i < m; ++i) {
          anchors[i] = epoch_triplets[start + i].anchor;
          positives[i] = epoch_triplets[start + i].positive;
          negatives[i] = epoch_triplets[start + i].negative;
        }
        Matrix a = model.encode_batch(anchors);
        Matrix p = model.encode_batch(positives);
        Matrix n = model.encode_batch(negatives);
        TripletLossOutput out = triplet_loss(a, p, n, cfg.loss.triplet_margin);
        EncoderGradients grads = model.zero_gradients();
        model.encode_batch_backward(anchors, out.grad_anchor, grads);
        model.encode_batch_backward(positives, out.grad_positive, grads);
        model.encode_batch_backward(negatives, out.grad_negative, grads);
        apply_step(out.value, grads, 0.0);
      }
    } else {
      auto plan = batch_plan(train_set.size(), cfg.train.batch_size, softmax_family);
      for (auto [start, end] : plan) {
        std::size_t m = end - start;
        std::vector<std::string> q_texts(m), a_texts(m);
        PairBatch batch;
        batch.labels.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
          const PairRecord& rec = train_set[seq.order[start + i]];
          q_texts[i] = rec.text_q;
          a_texts[i] = rec.text_a;
          batch.labels[i] = rec.label;
        }
        batch.q = model.encode_batch(q_texts);
        batch.a = model.encode_batch(a_texts);
        if (!all_finite(batch.q) || !all_finite(batch.a))
          throw DivergenceError("train: non-finite encoder output at step " +
                                    std::to_string(global_step + 1),
                                global_step + 1);

        LossConfig step_cfg = cfg.loss;
        step_cfg.temperature = std::exp(log_tau);
        LossOutput out = compute_loss(cfg.variant, batch, step_cfg);
        EncoderGradients grads = model.zero_gradients();
        model.encode_batch_backward(q_texts, out.grad_q, grads);
        model.encode_batch_backward(a_texts, out.grad_a, grads);
        apply_step(out.value, grads, out.grad_log_tau);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.avg_train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    rec.dev_score = evaluate_metric(dev_set, model, cfg.train.dev_metric,
                                    EvalProtocol::Auto, cfg.loss.threshold);
    rec.checkpoint_path = (fs::path(run_dir) / checkpoint_name(epoch)).string();
    model.save(rec.checkpoint_path);
    run.history.push_back(rec);
  }

  run.selected_epoch = 1;
  for (const auto& rec : run.history) {
    if (rec.dev_score > run.history[run.selected_epoch - 1].dev_score)
      run.selected_epoch = rec.epoch;
  }
  run.best_dev_score = run.history[run.selected_epoch - 1].dev_score;
  run.best_checkpoint = run.history[run.selected_epoch - 1].checkpoint_path;

  // Per-epoch history, one JSON record per line. Checkpoints are recorded by
  // file name so identical runs produce byte-identical histories regardless
  // of where the run directory lives.
  std::string history_text;
  for (const auto& rec : run.history) {
    json j;
    j["epoch"] = rec.epoch;
    j["avg_train_loss"] = rec.avg_train_loss;
    j["dev_score"] = rec.dev_score;
    j["checkpoint"] = fs::path(rec.checkpoint_path).filename().string();
    history_text += j.dump();
    history_text += '\n';
  }
  atomic_write_file((fs::path(run_dir) / "history.jsonl").string(), history_text);

  json report;
  report["seed"] = run.seed;
  report["dev_metric"] = cfg.train.dev_metric;
  report["selected_epoch"] = run.selected_epoch;
  report["best_dev_score"] = run.best_dev_score;
  report["best_checkpoint"] = run.best_checkpoint;
  atomic_write_file((fs::path(run_dir) / "report.json").string(), report.dump(2) + "\n");
  return run;
}

SeedSearchRun seed_search(const PairDataset& train_set, const PairDataset& dev_set,
                          const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  cfg.save((fs::path(out_dir) / "config.json").string());

  // Duplicate seeds would reproduce identical runs; keep the first of each.
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s : cfg.train.seeds)
    if (std::find(seeds.begin(), seeds.end(), s) == seeds.end()) seeds.push_back(s);

  SeedSearchRun result;
  for (std::uint64_t s : seeds) {
    std::string run_dir = (fs::path(out_dir) / ("seed_" + std::to_string(s))).string();
    try {
      result.runs.push_back(train(train_set, dev_set, cfg, s, run_dir));
    } catch (const std::exception& e) {
      result.failures.emplace_back(s, e.what());
    }
  }
  if (result.runs.empty()) {
    std::string msg = "seed_search: every seed failed:";
    for (const auto& [s, what] : result.failures)
      msg += "\n  seed " + std::to_string(s) + ": " + what;
    throw std::runtime_error(msg);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.runs.size(); ++i) {
    const TrainRun& cand = result.runs[i];
    const TrainRun& cur = result.runs[best];
    if (cand.best_dev_score > cur.best_dev_score ||
        (cand.best_dev_score == cur.best_dev_score && cand.seed < cur.seed))
      best = i;
  }
  result.best = result.runs[best];

  json report;
  report["dev_metric"] = cfg.train.dev_metric;
  report["best_seed"] = result.best.seed;
  report["best_dev_score"] = result.best.best_dev_score;
  report["best_checkpoint"] = result.best.best_checkpoint;
  report["selected_epoch"] = result.best.selected_epoch;
  json per_seed = json::array();
  for (const auto& run : result.runs) {
    per_seed.push_back({{"seed", run.seed},
                        {"best_dev_score", run.best_dev_score},
                        {"selected_epoch", run.selected_epoch}});
  }
  for (const auto& [s, what] : result.failures)
    per_seed.push_back({{"seed", s}, {"error", what}});
  report["runs"] = per_seed;
  atomic_write_file((fs::path(out_dir) / "report.json").string(), report.dump(2) + "\n");
  return result;
}

PfccResult sample_pfcc_negatives(const PairDataset& positives,
                                 const std::vector<std::pair<std::string, std::string>>& database,
                                 const EncoderModel& model, const PfccOptions& opts) {
  if (database.size() <= opts.rank_offset)
    throw ContractError(
        "sample_pfcc_negatives: database has " + std::to_string(database.size()) +
        " entries but negatives start after rank " + std::to_string(opts.rank_offset) +
        "; lower rank_offset for small databases");
  if (opts.balance_factor <= 0.0)
    throw ContractError("sample_pfcc_negatives: balance_factor must be > 0");

  PfccResult result;
  if (positives.empty()) return result;

  std::vector<std::string> db_texts(database.size());
  for (std::size_t i = 0; i < database.size(); ++i) db_texts[i] = database[i].second;
  Matrix db_emb = model.encode_batch(db_texts);

  // Ranks offset + 2^k, 1-based, within the database size. Rank 1 is the
  // anchor itself whenever it is indexed, so emitted ranks start at offset+2.
  std::vector<std::size_t> target_ranks;
  for (std::size_t k = 1;; ++k) {
    if (k >= 63) break;
    std::size_t rank = opts.rank_offset + (std::size_t{1} << k);
    if (rank > database.size()) break;
    target_ranks.push_back(rank);
  }
  result.negatives_per_anchor = target_ranks.size();

  PairDataset negatives;
  for (const auto& anchor : positives) {
    std::vector<double> anchor_emb = model.encode(anchor.text_q);
    std::vector<std::pair<double, std::size_t>> scored(database.size());
    for (std::size_t i = 0; i < database.size(); ++i) {
      scored[i] = {cosine_score(anchor_emb, db_emb.row(i)), i};
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;
      return x.second < y.second;
    });
    for (std::size_t rank : target_ranks) {
      const auto& [score, db_pos] = scored[rank - 1];
      PairRecord rec;
      rec.id = "neg:" + anchor.id + ":" + std::to_string(rank);
      rec.text_q = anchor.text_q;
      rec.text_a = database[db_pos].second;
      rec.label = 0.0;
      rec.group = anchor.group;
      rec.split = anchor.split;
      negatives.push_back(std::move(rec));
    }
  }

  // Oversample positives so their count is within balance_factor of the
  // negatives (the emitted negatives dominate otherwise).
  std::size_t copies = 1;
  if (!negatives.empty()) {
    double needed = static_cast<double>(negatives.size()) /
                    (opts.balance_factor * static_cast<double>(positives.size()));
    copies = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(needed)));
  }
  for (std::size_t c = 0; c < copies; ++c) {
    for (const auto& rec : positives) {
      PairRecord copy = rec;
      if (c > 0) copy.id = rec.id + ":dup" + std::to_string(c);
      result.records.push_back(std::move(copy));
    }
  }
  for (auto& rec : negatives) result.records.push_back(std::move(rec));

  if (opts.emit_triplets) {
    // Labels are already binary here; any threshold in (0, 1) splits them.
    result.triplets = build_triplets(result.records, 0.5);
  }
  return result;
}

}  // namespace bsc
