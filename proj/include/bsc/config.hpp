#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bsc/encoder.hpp"
#include "bsc/losses.hpp"
#include "bsc/shuffle.hpp"

namespace bsc {

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 5;
  std::size_t batch_size = 16;
  double warmup_fraction = 0.10;
  bool bias_correction = true;
  double weight_decay = 0.0;
  std::vector<std::uint64_t> seeds = {1};
  std::string dev_metric = "mrr";

  void validate(LossVariant variant) const;
};

// The full run configuration: everything a train/evaluate invocation needs,
// serialized to one JSON document. Unknown keys are rejected, and writing
// materializes every default so a run is reproducible from its artifacts.
struct RunConfig {
  LossVariant variant = LossVariant::Bsc;
  LossConfig loss;
  TrainConfig train;
  ShuffleConfig shuffle;
  EncoderConfig encoder;

  void validate() const;

  static RunConfig from_json_text(const std::string& text, const std::string& origin);
  static RunConfig load(const std::string& path);
  std::string to_json_text() const;
  void save(const std::string& path) const;
};

}  // namespace bsc
