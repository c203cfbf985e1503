#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsc/config.hpp"
#include "bsc/dataset.hpp"
#include "bsc/encoder.hpp"

namespace bsc {

struct AdamWOptions {
  double learning_rate = 1e-3;  // effective rate for this step (warm-up applied)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  bool bias_correction = true;
};

// Per-tensor first/second moment estimates.
struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;

  static AdamWState zeros(std::size_t size) { return {std::vector<double>(size, 0.0),
                                                      std::vector<double>(size, 0.0)}; }
};

// One decoupled-weight-decay adaptive update. step_index is 1-based and
// drives the bias-correction powers. Non-finite gradients abort.
void adamw_step(std::span<double> params, std::span<const double> grads,
                AdamWState& state, std::size_t step_index, const AdamWOptions& opts);

// Linear warm-up factor: step/warmup_steps for step <= warmup_steps, else 1.
double warmup_scale(std::size_t step, std::size_t warmup_steps);
std::size_t warmup_steps_for(double warmup_fraction, std::size_t total_steps);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double avg_train_loss = 0.0;
  double dev_score = 0.0;
  std::string checkpoint_path;
};

struct TrainRun {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> history;
  std::size_t selected_epoch = 0;  // 1-based; max dev score, earliest on ties
  double best_dev_score = 0.0;
  std::string best_checkpoint;
  std::string run_dir;
};

// The full training protocol: per epoch, re-encode every record with the
// current model, shuffle, slice consecutive batches, take optimizer steps
// under linear warm-up then a constant rate, checkpoint, and score dev.
// Everything is a deterministic function of (data, cfg, seed).
TrainRun train(const PairDataset& train_set, const PairDataset& dev_set,
               const RunConfig& cfg, std::uint64_t seed, const std::string& run_dir);

struct SeedSearchRun {
  TrainRun best;
  std::vector<TrainRun> runs;
  std::vector<std::pair<std::uint64_t, std::string>> failures;
};

// One train() per distinct seed; returns the run with the highest dev score
// (lowest seed on ties). Per-seed failures are collected; if every seed
// fails, the aggregate error is thrown.
SeedSearchRun seed_search(const PairDataset& train_set, const PairDataset& dev_set,
                          const RunConfig& cfg, const std::string& out_dir);

struct Triplet {
  std::string anchor;
  std::string positive;
  std::string negative;
};

// (anchor, positive, negative) triples from pairs sharing an anchor text:
// every positive of an anchor crossed with every labeled negative of the
// same anchor.
std::vector<Triplet> build_triplets(const PairDataset& records, double threshold);

struct PfccOptions {
  std::size_t rank_offset = 100;  // negatives at ranks offset + 2^k, k >= 1
  double balance_factor = 2.0;    // oversample positives to within this factor
  bool emit_triplets = false;
};

struct PfccResult {
  PairDataset records;  // oversampled positives followed by sampled negatives
  std::vector<Triplet> triplets;
  std::size_t negatives_per_anchor = 0;
};

// Negative sampling against a candidate database: rank the database by
// encoder similarity per anchor and emit negatives at logarithmically spaced
// ranks past the assumed-positive head of the list.
PfccResult sample_pfcc_negatives(const PairDataset& positives,
                                 const std::vector<std::pair<std::string, std::string>>& database,
                                 const EncoderModel& model, const PfccOptions& opts);

}  // namespace bsc
