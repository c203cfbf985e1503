#include "bsc/encoder.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "bsc/dataset.hpp"
#include "bsc/errors.hpp"
#include "bsc/rng.hpp"
#include "bsc/text.hpp"

namespace bsc {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;
constexpr char kBigramSep = '\x1f';

std::uint64_t config_hash(const EncoderConfig& cfg) {
  std::string repr = "v" + std::to_string(kCheckpointVersion) + ":" +
                     std::to_string(cfg.hash_buckets) + "x" + std::to_string(cfg.dim);
  return fnv1a64(repr);
}

}  // namespace

void EncoderConfig::validate() const {
  if (hash_buckets < 1) throw ContractError("EncoderConfig: hash_buckets must be >= 1");
  if (dim < 1) throw ContractError("EncoderConfig: dim must be >= 1");
}

TokenFeatures hash_features(std::string_view text, std::size_t buckets) {
  auto tokens = tokenize(text);
  // Accumulate counts per bucket so repeated features share one entry.
  std::map<std::size_t, double> counts;
  for (const auto& tok : tokens)
    counts[fnv1a64(tok) % buckets] += 1.0;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    std::string bigram = tokens[i];
    bigram += kBigramSep;
    bigram += tokens[i + 1];
    counts[fnv1a64(bigram) % buckets] += 1.0;
  }
  TokenFeatures feats;
  feats.index_counts.assign(counts.begin(), counts.end());
  for (const auto& [idx, c] : feats.index_counts) feats.total += c;
  return feats;
}

EncoderModel EncoderModel::init(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EncoderModel model;
  model.cfg_ = cfg;
  Rng rng(derive_seed(seed, 0x656e636f646572ull));
  model.embedding_ = Matrix(cfg.hash_buckets, cfg.dim);
  for (double& v : model.embedding_.data()) v = rng.next_real(-0.05, 0.05);
  model.projection_ = Matrix(cfg.dim, cfg.dim);
  for (std::size_t r = 0; r < cfg.dim; ++r)
    for (std::size_t c = 0; c < cfg.dim; ++c)
      model.projection_(r, c) = (r == c ? 1.0 : 0.0) + rng.next_real(-0.05, 0.05);
  // Bias gets the same small noise, which also keeps encode("") away from
  // the exact zero vector (cosine against it would be undefined).
  model.bias_.resize(cfg.dim);
  for (double& v : model.bias_) v = rng.next_real(-0.05, 0.05);
  return model;
}

std::vector<double> EncoderModel::encode(std::string_view text) const {
  std::size_t n = cfg_.dim;
  TokenFeatures feats = hash_features(text, cfg_.hash_buckets);
  std::vector<double> pooled(n, 0.0);
  if (feats.total > 0.0) {
    for (const auto& [idx, count] : feats.index_counts) {
      double w = count / feats.total;
      for (std::size_t c = 0; c < n; ++c) pooled[c] += w * embedding_(idx, c);
    }
  }
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    double z = bias_[r];
    for (std::size_t c = 0; c < n; ++c) z += projection_(r, c) * pooled[c];
    out[r] = std::tanh(z);
  }
  return out;
}

Matrix EncoderModel::encode_batch(const std::vector<std::string>& texts) const {
  Matrix out(texts.size(), cfg_.dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto v = encode(texts[i]);
    for (std::size_t c = 0; c < cfg_.dim; ++c) out(i, c) = v[c];
  }
  return out;
}

EncoderGradients EncoderModel::zero_gradients() const {
  EncoderGradients g;
  g.embedding = Matrix(cfg_.hash_buckets, cfg_.dim);
  g.projection = Matrix(cfg_.dim, cfg_.dim);
  g.bias.assign(cfg_.dim, 0.0);
  return g;
}

void EncoderModel::encode_batch_backward(const std::vector<std::string>& texts,
                                         const Matrix& upstream,
                                         EncoderGradients& grads) const {
  std::size_t n = cfg_.dim;
  if (upstream.rows() != texts.size() || upstream.cols() != n)
    throw ShapeError("encode_batch_backward: upstream gradient shape mismatch");
  if (grads.embedding.rows() != cfg_.hash_buckets || grads.projection.rows() != n ||
      grads.bias.size() != n)
    throw ShapeError("encode_batch_backward: gradient buffer shape mismatch");

  std::vector<double> pooled(n), y(n), dz(n), dpooled(n);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    TokenFeatures feats = hash_features(texts[i], cfg_.hash_buckets);
    std::fill(pooled.begin(), pooled.end(), 0.0);
    if (feats.total > 0.0) {
      for (const auto& [idx, count] : feats.index_counts) {
        double w = count / feats.total;
        for (std::size_t c = 0; c < n; ++c) pooled[c] += w * embedding_(idx, c);
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      double z = bias_[r];
      for (std::size_t c = 0; c < n; ++c) z += projection_(r, c) * pooled[c];
      y[r] = std::tanh(z);
      dz[r] = upstream(i, r) * (1.0 - y[r] * y[r]);
    }
    for (std::size_t r = 0; r < n; ++r) {
      grads.bias[r] += dz[r];
      for (std::size_t c = 0; c < n; ++c) grads.projection(r, c) += dz[r] * pooled[c];
    }
    if (feats.total > 0.0) {
      for (std::size_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += projection_(r, c) * dz[r];
        dpooled[c] = acc;
      }
      for (const auto& [idx, count] : feats.index_counts) {
        double w = count / feats.total;
        for (std::size_t c = 0; c < n; ++c)
          grads.embedding(idx, c) += w * dpooled[c];
      }
    }
  }
}

void EncoderModel::save(const std::string& path) const {
  json j;
  j["format"] = "bsc-encoder";
  j["version"] = kCheckpointVersion;
  j["hash_buckets"] = cfg_.hash_buckets;
  j["dim"] = cfg_.dim;
  j["config_hash"] = config_hash(cfg_);
  j["embedding"] = embedding_.data();
  j["projection"] = projection_.data();
  j["bias"] = bias_;
  atomic_write_file(path, j.dump());
}

EncoderModel EncoderModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw ValidationError("checkpoint is not valid JSON: " + path);
  if (j.value("format", "") != "bsc-encoder")
    throw ValidationError("not an encoder checkpoint: " + path);
  if (j.value("version", -1) != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version in " + path);

  EncoderModel model;
  model.cfg_.hash_buckets = j.at("hash_buckets").get<std::size_t>();
  model.cfg_.dim = j.at("dim").get<std::size_t>();
  model.cfg_.validate();
  if (j.at("config_hash").get<std::uint64_t>() != config_hash(model.cfg_))
    throw ValidationError("checkpoint config hash mismatch in " + path);

  auto emb = j.at("embedding").get<std::vector<double>>();
  auto proj = j.at("projection").get<std::vector<double>>();
  auto bias = j.at("bias").get<std::vector<double>>();
  std::size_t b = model.cfg_.hash_buckets, n = model.cfg_.dim;
  if (emb.size() != b * n || proj.size() != n * n || bias.size() != n)
    throw ValidationError("checkpoint parameter shapes do not match its config: " + path);
  model.embedding_ = Matrix(b, n);
  model.embedding_.data() = std::move(emb);
  model.projection_ = Matrix(n, n);
  model.projection_.data() = std::move(proj);
  model.bias_ = std::move(bias);
  return model;
}

}  // namespace bsc
