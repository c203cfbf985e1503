#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bsc/encoder.hpp"
#include "bsc/errors.hpp"
#include "bsc/gradcheck.hpp"
#include "bsc/losses.hpp"
#include "bsc/rng.hpp"

using namespace bsc;

namespace {

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.hash_buckets = 64;
  cfg.dim = 8;
  return cfg;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("bsc_test_" + name);
}

}  // namespace

TEST_CASE("feature hashing") {
  TokenFeatures feats = hash_features("red green red", 1024);
  // 2 unique unigrams + 2 bigrams ("red green", "green red"), total count 5.
  CHECK(feats.total == doctest::Approx(5.0));
  double red_count = 0.0;
  std::uint64_t red_idx = fnv1a64("red") % 1024;
  for (auto [idx, count] : feats.index_counts)
    if (idx == red_idx) red_count = count;
  CHECK(red_count == doctest::Approx(2.0));

  TokenFeatures empty = hash_features("", 1024);
  CHECK(empty.total == doctest::Approx(0.0));
  CHECK(empty.index_counts.empty());
}

TEST_CASE("encoding is deterministic") {
  EncoderModel model = EncoderModel::init(small_config(), 5);
  auto a = model.encode("the quick brown fox");
  auto b = model.encode("the quick brown fox");
  CHECK(a == b);

  EncoderModel again = EncoderModel::init(small_config(), 5);
  CHECK(again.encode("the quick brown fox") == a);
}

TEST_CASE("empty text encodes to the activated bias") {
  EncoderModel model = EncoderModel::init(small_config(), 9);
  auto v = model.encode("");
  for (std::size_t c = 0; c < model.config().dim; ++c)
    CHECK(v[c] == doctest::Approx(std::tanh(model.bias()[c])));
}

TEST_CASE("feature-bag-equal texts encode identically") {
  EncoderModel model = EncoderModel::init(small_config(), 13);
  // Punctuation and case do not change the token stream.
  auto a = model.encode("Red GREEN, blue!");
  auto b = model.encode("red green blue");
  CHECK(a == b);
  // Word order changes the bigram multiset, so it may change the vector.
  auto c = model.encode("x y x y");
  auto d = model.encode("x y x y");
  CHECK(c == d);
}

TEST_CASE("encode_batch matches encode row by row") {
  EncoderModel model = EncoderModel::init(small_config(), 17);
  std::vector<std::string> texts = {"one two", "three", ""};
  Matrix m = model.encode_batch(texts);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto v = model.encode(texts[i]);
    for (std::size_t c = 0; c < model.config().dim; ++c)
      CHECK(m(i, c) == v[c]);
  }
}

TEST_CASE("zero upstream gradients give zero parameter gradients") {
  EncoderModel model = EncoderModel::init(small_config(), 21);
  std::vector<std::string> texts = {"alpha beta", "gamma"};
  Matrix upstream(2, model.config().dim);
  EncoderGradients grads = model.zero_gradients();
  model.encode_batch_backward(texts, upstream, grads);
  for (double v : grads.embedding.data()) CHECK(v == 0.0);
  for (double v : grads.projection.data()) CHECK(v == 0.0);
  for (double v : grads.bias) CHECK(v == 0.0);
}

TEST_CASE("single-token gradient lands only in that token's row") {
  EncoderConfig cfg = small_config();
  EncoderModel model = EncoderModel::init(cfg, 25);
  // Identity projection isolates the embedding row in the pooled gradient.
  for (std::size_t r = 0; r < cfg.dim; ++r)
    for (std::size_t c = 0; c < cfg.dim; ++c)
      model.projection()(r, c) = r == c ? 1.0 : 0.0;

  std::vector<std::string> texts = {"solitary"};
  Matrix upstream(1, cfg.dim);
  for (std::size_t c = 0; c < cfg.dim; ++c) upstream(0, c) = 1.0;
  EncoderGradients grads = model.zero_gradients();
  model.encode_batch_backward(texts, upstream, grads);

  std::size_t token_row = fnv1a64("solitary") % cfg.hash_buckets;
  for (std::size_t r = 0; r < cfg.hash_buckets; ++r) {
    double row_norm = 0.0;
    for (std::size_t c = 0; c < cfg.dim; ++c) row_norm += std::abs(grads.embedding(r, c));
    if (r == token_row)
      CHECK(row_norm > 0.0);
    else
      CHECK(row_norm == 0.0);
  }
}

TEST_CASE("backward rejects mismatched shapes") {
  EncoderModel model = EncoderModel::init(small_config(), 29);
  std::vector<std::string> texts = {"a", "b"};
  Matrix bad(3, model.config().dim);
  EncoderGradients grads = model.zero_gradients();
  CHECK_THROWS_AS(model.encode_batch_backward(texts, bad, grads), ShapeError);
}

TEST_CASE("parameter gradients match finite differences") {
  EncoderConfig cfg;
  cfg.hash_buckets = 32;
  cfg.dim = 6;
  EncoderModel model = EncoderModel::init(cfg, 33);
  std::vector<std::string> texts = {"ruby emerald", "topaz", "opal quartz amber"};

  // Objective: weighted sum of the encoded batch.
  Rng rng(35);
  Matrix weights(3, cfg.dim);
  for (double& v : weights.data()) v = rng.next_real(-1.0, 1.0);
  auto objective = [&] {
    Matrix out = model.encode_batch(texts);
    double s = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) s += weights.data()[k] * out.data()[k];
    return s;
  };

  EncoderGradients grads = model.zero_gradients();
  model.encode_batch_backward(texts, weights, grads);

  CHECK(max_gradient_error(model.embedding(), grads.embedding, 1e-5, objective) <= 1e-6);
  CHECK(max_gradient_error(model.projection(), grads.projection, 1e-5, objective) <= 1e-6);
  for (std::size_t i = 0; i < cfg.dim; ++i) {
    double numeric = central_difference(model.bias()[i], 1e-5, objective);
    CHECK(gradient_error(grads.bias[i], numeric) <= 1e-6);
  }
}

TEST_CASE("end-to-end loss gradient through the encoder") {
  EncoderConfig cfg;
  cfg.hash_buckets = 64;
  cfg.dim = 16;
  EncoderModel model = EncoderModel::init(cfg, 41);
  std::vector<std::string> q_texts = {"ask one", "ask two", "ask three", "ask four"};
  std::vector<std::string> a_texts = {"ans one", "ans two", "ans three", "ans four"};

  LossConfig loss_cfg;
  loss_cfg.temperature = 0.5;
  loss_cfg.normalization = NormalizationMode::RowL2;
  PairBatch batch;
  batch.labels = {1.0, 1.0, 1.0, 1.0};
  auto forward = [&] {
    batch.q = model.encode_batch(q_texts);
    batch.a = model.encode_batch(a_texts);
    return bsc_loss(batch, loss_cfg).value;
  };
  forward();
  LossOutput out = bsc_loss(batch, loss_cfg);
  EncoderGradients grads = model.zero_gradients();
  model.encode_batch_backward(q_texts, out.grad_q, grads);
  model.encode_batch_backward(a_texts, out.grad_a, grads);

  CHECK(max_gradient_error(model.embedding(), grads.embedding, 1e-5, forward) <= 1e-5);
  CHECK(max_gradient_error(model.projection(), grads.projection, 1e-5, forward) <= 1e-5);
}

TEST_CASE("checkpoint round-trip") {
  EncoderModel model = EncoderModel::init(small_config(), 45);
  auto path = temp_path("encoder_roundtrip.ckpt.json");
  model.save(path.string());
  EncoderModel loaded = EncoderModel::load(path.string());
  CHECK(loaded.embedding().data() == model.embedding().data());
  CHECK(loaded.projection().data() == model.projection().data());
  CHECK(loaded.bias() == model.bias());
  CHECK(loaded.encode("round trip") == model.encode("round trip"));
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint load rejects corrupted shapes") {
  EncoderModel model = EncoderModel::init(small_config(), 49);
  auto path = temp_path("encoder_badshape.ckpt.json");
  model.save(path.string());

  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  auto pos = text.find("\"dim\":8");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 7, "\"dim\":9");
  std::ofstream out(path);
  out << text;
  out.close();

  CHECK_THROWS_AS(EncoderModel::load(path.string()), ValidationError);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint load rejects missing files and foreign JSON") {
  CHECK_THROWS_AS(EncoderModel::load("/nonexistent/missing.ckpt.json"), ValidationError);
  auto path = temp_path("encoder_foreign.json");
  std::ofstream out(path);
  out << "{\"format\": \"something-else\"}";
  out.close();
  CHECK_THROWS_AS(EncoderModel::load(path.string()), ValidationError);
  std::filesystem::remove(path);
}
