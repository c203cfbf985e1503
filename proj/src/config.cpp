#include "bsc/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "bsc/dataset.hpp"
#include "bsc/errors.hpp"

namespace bsc {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& section, const std::string& origin) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key))
      throw ValidationError(origin + ": unknown key '" + key + "' in " + section);
  }
}

template <typename T>
T get_field(const json& j, const std::string& key, T fallback,
            const std::string& section, const std::string& origin) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(origin + ": key '" + key + "' in " + section +
                          " has the wrong type");
  }
}

}  // namespace

void TrainConfig::validate(LossVariant variant) const {
  if (learning_rate <= 0.0) throw ContractError("TrainConfig: learning_rate must be > 0");
  if (epochs < 1) throw ContractError("TrainConfig: epochs must be >= 1");
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
    throw ContractError("TrainConfig: warmup_fraction must be in [0, 1)");
  bool bsc_family = variant == LossVariant::Bsc || variant == LossVariant::BscMasked ||
                    variant == LossVariant::Combo;
  if (bsc_family && batch_size < 2)
    throw ContractError("TrainConfig: batch_size must be >= 2 for softmax losses");
  if (batch_size < 1) throw ContractError("TrainConfig: batch_size must be >= 1");
  if (seeds.empty()) throw ContractError("TrainConfig: at least one seed required");
  if (dev_metric.empty()) throw ContractError("TrainConfig: dev_metric must be set");
}

void RunConfig::validate() const {
  loss.validate();
  train.validate(variant);
  shuffle.validate();
  encoder.validate();
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw ValidationError(origin + ": not a JSON object");
  reject_unknown_keys(j, {"loss", "train", "shuffle", "encoder"}, "top level", origin);

  RunConfig cfg;
  if (j.contains("loss")) {
    const json& s = j["loss"];
    reject_unknown_keys(s,
                        {"variant", "temperature", "mu", "threshold", "normalization",
                         "symmetrize", "temperature_trainable", "triplet_margin"},
                        "'loss'", origin);
    cfg.variant = parse_loss_variant(
        get_field<std::string>(s, "variant", loss_variant_name(cfg.variant), "'loss'", origin));
    cfg.loss.temperature =
        get_field<double>(s, "temperature", cfg.loss.temperature, "'loss'", origin);
    cfg.loss.mu = get_field<double>(s, "mu", cfg.loss.mu, "'loss'", origin);
    cfg.loss.threshold = get_field<double>(s, "threshold", cfg.loss.threshold, "'loss'", origin);
    cfg.loss.normalization = parse_normalization_mode(get_field<std::string>(
        s, "normalization", normalization_mode_name(cfg.loss.normalization), "'loss'", origin));
    cfg.loss.symmetrize = get_field<bool>(s, "symmetrize", cfg.loss.symmetrize, "'loss'", origin);
    cfg.loss.temperature_trainable = get_field<bool>(
        s, "temperature_trainable", cfg.loss.temperature_trainable, "'loss'", origin);
    cfg.loss.triplet_margin =
        get_field<double>(s, "triplet_margin", cfg.loss.triplet_margin, "'loss'", origin);
  }
  if (j.contains("train")) {
    const json& s = j["train"];
    reject_unknown_keys(s,
                        {"learning_rate", "epochs", "batch_size", "warmup_fraction",
                         "bias_correction", "weight_decay", "seeds", "dev_metric"},
                        "'train'", origin);
    cfg.train.learning_rate =
        get_field<double>(s, "learning_rate", cfg.train.learning_rate, "'train'", origin);
    cfg.train.epochs = get_field<std::size_t>(s, "epochs", cfg.train.epochs, "'train'", origin);
    cfg.train.batch_size =
        get_field<std::size_t>(s, "batch_size", cfg.train.batch_size, "'train'", origin);
    cfg.train.warmup_fraction =
        get_field<double>(s, "warmup_fraction", cfg.train.warmup_fraction, "'train'", origin);
    cfg.train.bias_correction =
        get_field<bool>(s, "bias_correction", cfg.train.bias_correction, "'train'", origin);
    cfg.train.weight_decay =
        get_field<double>(s, "weight_decay", cfg.train.weight_decay, "'train'", origin);
    cfg.train.seeds = get_field<std::vector<std::uint64_t>>(s, "seeds", cfg.train.seeds,
                                                            "'train'", origin);
    cfg.train.dev_metric =
        get_field<std::string>(s, "dev_metric", cfg.train.dev_metric, "'train'", origin);
  }
  if (j.contains("shuffle")) {
    const json& s = j["shuffle"];
    reject_unknown_keys(s,
                        {"mode", "group_size", "candidate_pool", "shingle_size",
                         "neighbor_k", "clusters", "element", "stopword_file",
                         "filter_identical", "seed", "threads"},
                        "'shuffle'", origin);
    cfg.shuffle.mode = parse_shuffle_mode(
        get_field<std::string>(s, "mode", shuffle_mode_name(cfg.shuffle.mode), "'shuffle'", origin));
    cfg.shuffle.group_size =
        get_field<std::size_t>(s, "group_size", cfg.shuffle.group_size, "'shuffle'", origin);
    cfg.shuffle.candidate_pool = get_field<std::size_t>(s, "candidate_pool",
                                                        cfg.shuffle.candidate_pool,
                                                        "'shuffle'", origin);
    cfg.shuffle.shingle_size =
        get_field<std::size_t>(s, "shingle_size", cfg.shuffle.shingle_size, "'shuffle'", origin);
    cfg.shuffle.neighbor_k =
        get_field<std::size_t>(s, "neighbor_k", cfg.shuffle.neighbor_k, "'shuffle'", origin);
    cfg.shuffle.clusters =
        get_field<std::size_t>(s, "clusters", cfg.shuffle.clusters, "'shuffle'", origin);
    cfg.shuffle.element = parse_pair_element(get_field<std::string>(
        s, "element", pair_element_name(cfg.shuffle.element), "'shuffle'", origin));
    cfg.shuffle.stopword_file =
        get_field<std::string>(s, "stopword_file", cfg.shuffle.stopword_file, "'shuffle'", origin);
    cfg.shuffle.filter_identical = get_field<bool>(s, "filter_identical",
                                                   cfg.shuffle.filter_identical,
                                                   "'shuffle'", origin);
    cfg.shuffle.seed = get_field<std::uint64_t>(s, "seed", cfg.shuffle.seed, "'shuffle'", origin);
    cfg.shuffle.threads = get_field<int>(s, "threads", cfg.shuffle.threads, "'shuffle'", origin);
  }
  if (j.contains("encoder")) {
    const json& s = j["encoder"];
    reject_unknown_keys(s, {"hash_buckets", "dim"}, "'encoder'", origin);
    cfg.encoder.hash_buckets =
        get_field<std::size_t>(s, "hash_buckets", cfg.encoder.hash_buckets, "'encoder'", origin);
    cfg.encoder.dim = get_field<std::size_t>(s, "dim", cfg.encoder.dim, "'encoder'", origin);
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text, path);
}

std::string RunConfig::to_json_text() const {
  json j;
  j["loss"] = {
      {"variant", loss_variant_name(variant)},
      {"temperature", loss.temperature},
      {"mu", loss.mu},
      {"threshold", loss.threshold},
      {"normalization", normalization_mode_name(loss.normalization)},
      {"symmetrize", loss.symmetrize},
      {"temperature_trainable", loss.temperature_trainable},
      {"triplet_margin", loss.triplet_margin},
  };
  j["train"] = {
      {"learning_rate", train.learning_rate},
      {"epochs", train.epochs},
      {"batch_size", train.batch_size},
      {"warmup_fraction", train.warmup_fraction},
      {"bias_correction", train.bias_correction},
      {"weight_decay", train.weight_decay},
      {"seeds", train.seeds},
      {"dev_metric", train.dev_metric},
  };
  j["shuffle"] = {
      {"mode", shuffle_mode_name(shuffle.mode)},
      {"group_size", shuffle.group_size},
      {"candidate_pool", shuffle.candidate_pool},
      {"shingle_size", shuffle.shingle_size},
      {"neighbor_k", shuffle.neighbor_k},
      {"clusters", shuffle.clusters},
      {"element", pair_element_name(shuffle.element)},
      {"stopword_file", shuffle.stopword_file},
      {"filter_identical", shuffle.filter_identical},
      {"seed", shuffle.seed},
      {"threads", shuffle.threads},
  };
  j["encoder"] = {
      {"hash_buckets", encoder.hash_buckets},
      {"dim", encoder.dim},
  };
  return j.dump(2) + "\n";
}

void RunConfig::save(const std::string& path) const {
  atomic_write_file(path, to_json_text());
}

}  // namespace bsc
