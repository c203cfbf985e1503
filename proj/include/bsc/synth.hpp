#pragma once

#include <cstdint>

#include "bsc/dataset.hpp"

namespace bsc {

// Synthetic cluster benchmark: latent topics with disjoint vocabularies;
// each pair shares its topic's words plus one pair-specific entity token, so
// ranking the true answer above same-topic answers requires learning the
// entity signal, not just the topic. A fraction of pairs also emit a labeled
// negative whose answer belongs to a different entity of the same topic.
struct SynthConfig {
  std::size_t topics = 8;
  std::size_t pairs_per_topic = 40;
  std::size_t vocab_per_topic = 30;
  std::size_t query_len = 12;      // topic words per query (entity tokens are extra)
  std::size_t answer_len = 14;
  std::size_t entity_mentions = 3; // contiguous repetitions of the entity token
  double negative_fraction = 0.2;  // labeled negatives as a fraction of all records
  double dev_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

PairDataset generate_synthetic(const SynthConfig& cfg);

}  // namespace bsc
