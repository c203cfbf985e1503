#include "bsc/synth.hpp"

#include <string>
#include <vector>

#include "bsc/errors.hpp"
#include "bsc/rng.hpp"

namespace bsc {

void SynthConfig::validate() const {
  if (topics < 1) throw ContractError("SynthConfig: topics must be >= 1");
  if (pairs_per_topic < 1) throw ContractError("SynthConfig: pairs_per_topic must be >= 1");
  if (query_len > vocab_per_topic / 2 || answer_len > vocab_per_topic / 2)
    throw ContractError("SynthConfig: text length exceeds topic vocabulary");
  if (entity_mentions < 1)
    throw ContractError("SynthConfig: entity_mentions must be >= 1");
  if (negative_fraction < 0.0 || negative_fraction >= 1.0)
    throw ContractError("SynthConfig: negative_fraction must be in [0, 1)");
  if (dev_fraction < 0.0 || test_fraction < 0.0 || dev_fraction + test_fraction >= 1.0)
    throw ContractError("SynthConfig: dev/test fractions must leave room for train");
  std::size_t held_out = static_cast<std::size_t>(
      (dev_fraction + test_fraction) * static_cast<double>(pairs_per_topic));
  if (held_out + 2 > pairs_per_topic)
    throw ContractError("SynthConfig: not enough pairs per topic for the held-out splits");
}

namespace {

std::string topic_word(std::size_t topic, std::size_t word) {
  return "t" + std::to_string(topic) + "w" + std::to_string(word);
}

std::string entity_token(std::size_t topic, std::size_t entity) {
  return "ent" + std::to_string(topic) + "x" + std::to_string(entity);
}

// `len` distinct topic words plus a run of `mentions` entity tokens at a
// random position. Queries draw from the first half of the topic vocabulary
// and answers from the second half, so within a pair the entity tokens are
// the only shared surface feature while same-topic texts on the same side
// still overlap.
std::string make_text(Rng& rng, std::size_t topic, std::size_t vocab,
                      std::size_t len, std::size_t mentions, const std::string& entity,
                      bool answer_side) {
  std::size_t half = vocab / 2;
  std::size_t lo = answer_side ? half : 0;
  std::size_t hi = answer_side ? vocab : half;
  auto picks = rng.sample_indices(hi - lo, std::min(len, hi - lo));
  std::vector<std::string> words;
  words.reserve(picks.size() + mentions);
  for (std::size_t w : picks) words.push_back(topic_word(topic, lo + w));
  std::size_t slot = static_cast<std::size_t>(rng.next_below(words.size() + 1));
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(slot), mentions, entity);
  std::string text;
  for (const auto& w : words) {
    if (!text.empty()) text += ' ';
    text += w;
  }
  return text;
}

}  // namespace

PairDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x73796e7468ull));
  PairDataset records;

  // Split sizes per topic. Dev and test hold out fresh *pairs*, not fresh
  // entities: a held-out pair is a new sentence pair about an entity that
  // also has a training pair, mirroring how real tasks share vocabulary
  // across splits while every evaluated pair is unseen.
  std::size_t n_dev = static_cast<std::size_t>(
      cfg.dev_fraction * static_cast<double>(cfg.pairs_per_topic) + 0.5);
  std::size_t n_test = static_cast<std::size_t>(
      cfg.test_fraction * static_cast<double>(cfg.pairs_per_topic) + 0.5);
  std::size_t n_train = cfg.pairs_per_topic - n_dev - n_test;
  if (n_train < 1) throw ContractError("SynthConfig: no training pairs left per topic");

  double neg_per_pos = cfg.negative_fraction / (1.0 - cfg.negative_fraction);

  for (std::size_t t = 0; t < cfg.topics; ++t) {
    double neg_budget = 0.0;
    std::size_t emitted = 0;

    // One training pair per entity, then one extra held-out pair for the
    // first n_dev entities (dev) and the next n_test entities (test).
    auto emit_pair = [&](std::size_t entity, const std::string& split) {
      std::string ent = entity_token(t, entity);
      PairRecord rec;
      rec.id = "t" + std::to_string(t) + "-" + split + "-e" + std::to_string(entity);
      rec.text_q = make_text(rng, t, cfg.vocab_per_topic, cfg.query_len,
                             cfg.entity_mentions, ent, false);
      rec.text_a = make_text(rng, t, cfg.vocab_per_topic, cfg.answer_len,
                             cfg.entity_mentions, ent, true);
      rec.label = 1.0;
      rec.split = split;
      records.push_back(rec);

      neg_budget += neg_per_pos;
      if (neg_budget >= 1.0) {
        neg_budget -= 1.0;
        // Hard labeled negative: the same query against an answer about a
        // different entity of the same topic. The entity is drawn from the
        // train-only range so no held-out query has its true answer
        // shadowed by a negative record's answer.
        std::size_t train_only_lo = n_dev + n_test;
        std::size_t span = n_train > train_only_lo ? n_train - train_only_lo : n_train;
        std::size_t lo = n_train > train_only_lo ? train_only_lo : 0;
        std::size_t other = lo + (entity + 1) % span;
        if (other == entity) other = lo + (entity + 2) % span;
        PairRecord neg;
        neg.id = "t" + std::to_string(t) + "-" + split + "-n" + std::to_string(emitted);
        neg.text_q = rec.text_q;
        neg.text_a =
            make_text(rng, t, cfg.vocab_per_topic, cfg.answer_len, cfg.entity_mentions,
                      entity_token(t, other), true);
        neg.label = 0.0;
        neg.split = split;
        records.push_back(neg);
      }
      ++emitted;
    };

    for (std::size_t e = 0; e < n_train; ++e) emit_pair(e, "train");
    for (std::size_t e = 0; e < n_dev; ++e) emit_pair(e % n_train, "dev");
    for (std::size_t e = 0; e < n_test; ++e) emit_pair((n_dev + e) % n_train, "test");
  }
  return records;
}

}  // namespace bsc
