#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bsc/matrix.hpp"

namespace bsc {

struct EncoderConfig {
  std::size_t hash_buckets = 16384;  // B
  std::size_t dim = 32;              // n

  void validate() const;
};

// Hashed unigram+bigram counts of one text. Indices are bucket ids in [0, B).
struct TokenFeatures {
  std::vector<std::pair<std::size_t, double>> index_counts;
  double total = 0.0;
};

TokenFeatures hash_features(std::string_view text, std::size_t buckets);

// Parameter gradients mirroring EncoderModel's tensors.
struct EncoderGradients {
  Matrix embedding;           // B x n
  Matrix projection;          // n x n
  std::vector<double> bias;   // n
};

// Siamese text encoder: mean of hashed-feature embedding rows, one dense
// projection, tanh. Both elements of a pair are encoded by the same
// parameters. Forward passes are read-only and safe to run in parallel.
class EncoderModel {
 public:
  EncoderModel() = default;

  // Embedding and bias uniform in [-0.05, 0.05]; projection identity plus
  // the same noise. Fully determined by (config, seed).
  static EncoderModel init(const EncoderConfig& cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  Matrix& embedding() { return embedding_; }
  const Matrix& embedding() const { return embedding_; }
  Matrix& projection() { return projection_; }
  const Matrix& projection() const { return projection_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  std::vector<double> encode(std::string_view text) const;
  Matrix encode_batch(const std::vector<std::string>& texts) const;

  // Exact parameter gradients for d(loss)/d(encode_batch(texts)) given as
  // `upstream` (one row per text). Accumulates into `grads`.
  void encode_batch_backward(const std::vector<std::string>& texts,
                             const Matrix& upstream, EncoderGradients& grads) const;

  EncoderGradients zero_gradients() const;

  // Versioned JSON checkpoint with a config hash; load rejects version or
  // shape mismatches.
  void save(const std::string& path) const;
  static EncoderModel load(const std::string& path);

 private:
  EncoderConfig cfg_;
  Matrix embedding_;   // B x n
  Matrix projection_;  // n x n
  std::vector<double> bias_;  // n
};

}  // namespace bsc
