#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsc/config.hpp"
#include "bsc/dataset.hpp"
#include "bsc/encoder.hpp"
#include "bsc/errors.hpp"
#include "bsc/eval.hpp"
#include "bsc/gradcheck.hpp"
#include "bsc/knn.hpp"
#include "bsc/metrics.hpp"
#include "bsc/shuffle.hpp"
#include "bsc/synth.hpp"
#include "bsc/trainer.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

bsc::EncoderModel encoder_for(const std::string& checkpoint,
                              const bsc::EncoderConfig& fallback_cfg,
                              std::uint64_t seed) {
  if (!checkpoint.empty()) {
    if (!fs::exists(checkpoint))
      throw bsc::ValidationError("checkpoint not found: " + checkpoint);
    return bsc::EncoderModel::load(checkpoint);
  }
  return bsc::EncoderModel::init(fallback_cfg, seed);
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, const std::vector<std::uint64_t>& seeds) {
  bsc::RunConfig cfg = bsc::RunConfig::load(config_path);
  if (!seeds.empty()) cfg.train.seeds = seeds;

  bsc::PairDataset all = bsc::read_jsonl(data_path);
  bsc::PairDataset train_set = bsc::select_split(all, "train");
  bsc::PairDataset dev_set = bsc::select_split(all, "dev");
  if (train_set.empty()) throw bsc::ValidationError("no records with split=train in " + data_path);
  if (dev_set.empty()) throw bsc::ValidationError("no records with split=dev in " + data_path);

  bsc::SeedSearchRun result = bsc::seed_search(train_set, dev_set, cfg, out_dir);
  for (const auto& run : result.runs) {
    std::printf("seed %llu: best %s %.6f at epoch %zu\n",
                static_cast<unsigned long long>(run.seed), cfg.train.dev_metric.c_str(),
                run.best_dev_score, run.selected_epoch);
  }
  for (const auto& [seed, what] : result.failures)
    std::fprintf(stderr, "seed %llu failed: %s\n",
                 static_cast<unsigned long long>(seed), what.c_str());
  std::printf("best: seed %llu, %s %.6f, checkpoint %s\n",
              static_cast<unsigned long long>(result.best.seed),
              cfg.train.dev_metric.c_str(), result.best.best_dev_score,
              result.best.best_checkpoint.c_str());
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_path,
                 const std::string& split, std::vector<std::string> metrics,
                 const std::string& protocol, double threshold,
                 const std::string& out_path, const std::string& csv_path) {
  if (!fs::exists(checkpoint))
    throw bsc::ValidationError("checkpoint not found: " + checkpoint);
  bsc::EncoderModel model = bsc::EncoderModel::load(checkpoint);
  bsc::PairDataset all = bsc::read_jsonl(data_path);
  bsc::PairDataset eval_set = split.empty() ? all : bsc::select_split(all, split);
  if (eval_set.empty())
    throw bsc::ValidationError("no records to evaluate (split='" + split + "')");

  bsc::EvalOptions opts;
  opts.protocol = bsc::parse_eval_protocol(protocol);
  opts.binarize_threshold = threshold;

  // F1 selects its threshold on the dev split, everything else scores the
  // requested split directly.
  bool wants_f1 = false;
  opts.metrics.clear();
  for (const auto& m : metrics) {
    if (m == "f1") {
      wants_f1 = true;
    } else {
      opts.metrics.push_back(m);
    }
  }

  bsc::EvalReport report;
  if (!opts.metrics.empty()) {
    report = bsc::evaluate(eval_set, model, opts);
  } else {
    report.groups_total = 0;
  }
  if (wants_f1) {
    bsc::PairDataset dev_set = bsc::select_split(all, "dev");
    if (dev_set.empty())
      throw bsc::ValidationError("f1 needs a dev split to select its threshold");
    auto scores_of = [&](const bsc::PairDataset& recs) {
      std::vector<double> scores(recs.size());
      std::vector<bool> labels(recs.size());
      for (std::size_t i = 0; i < recs.size(); ++i) {
        auto q = model.encode(recs[i].text_q);
        auto a = model.encode(recs[i].text_a);
        scores[i] = bsc::cosine_score(q, a);
        labels[i] = recs[i].label > threshold;
      }
      return std::make_pair(scores, labels);
    };
    auto [dev_scores, dev_labels] = scores_of(dev_set);
    auto [eval_scores, eval_labels] = scores_of(eval_set);
    bsc::ThresholdedF1 f1 =
        bsc::f1_with_threshold(dev_scores, dev_labels, eval_scores, eval_labels);
    report.values["f1"] = f1.eval_f1;
    report.values["f1_threshold"] = f1.threshold;
  }

  std::fputs(report.to_table_text().c_str(), stdout);
  if (!out_path.empty()) {
    // Embed the resolved options so the report alone reproduces the run.
    json j = json::parse(report.to_json_text());
    j["options"] = {{"checkpoint", checkpoint}, {"data", data_path},
                    {"split", split},           {"metrics", metrics},
                    {"protocol", protocol},     {"threshold", threshold}};
    bsc::atomic_write_file(out_path, j.dump(2) + "\n");
  }
  if (!csv_path.empty()) bsc::atomic_write_file(csv_path, report.per_group_csv());
  return 0;
}

int cmd_shuffle(const std::string& data_path, const std::string& out_path,
                bsc::ShuffleConfig cfg, const std::string& checkpoint,
                const std::string& split) {
  bsc::PairDataset all = bsc::read_jsonl(data_path);
  bsc::PairDataset records = split.empty() ? all : bsc::select_split(all, split);
  if (records.empty()) throw bsc::ValidationError("no records to shuffle");

  bsc::Matrix embeddings;
  const bsc::Matrix* embeddings_ptr = nullptr;
  if (cfg.mode == bsc::ShuffleMode::ExampleKnn || cfg.mode == bsc::ShuffleMode::Clusters ||
      cfg.mode == bsc::ShuffleMode::Neighbors) {
    bsc::EncoderModel model = encoder_for(checkpoint, bsc::EncoderConfig{}, cfg.seed);
    std::vector<std::string> texts(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
      texts[i] = cfg.element == bsc::PairElement::First ? records[i].text_q
                                                        : records[i].text_a;
    embeddings = model.encode_batch(texts);
    embeddings_ptr = &embeddings;
  }

  bsc::ShuffledSequence seq = bsc::run_shuffle(records, embeddings_ptr, cfg);
  bsc::PairDataset reordered;
  reordered.reserve(records.size());
  for (std::size_t pos : seq.order) reordered.push_back(records[pos]);
  bsc::write_jsonl(reordered, out_path);

  json sidecar;
  sidecar["mode"] = bsc::shuffle_mode_name(cfg.mode);
  sidecar["seed"] = cfg.seed;
  sidecar["group_offsets"] = seq.group_offsets;
  sidecar["count"] = seq.order.size();
  bsc::atomic_write_file(out_path + ".groups.json", sidecar.dump(2) + "\n");

  // Resolved shuffle settings, so the run is reproducible from artifacts.
  json resolved;
  resolved["mode"] = bsc::shuffle_mode_name(cfg.mode);
  resolved["group_size"] = cfg.group_size;
  resolved["candidate_pool"] = cfg.candidate_pool;
  resolved["shingle_size"] = cfg.shingle_size;
  resolved["neighbor_k"] = cfg.neighbor_k;
  resolved["clusters"] = cfg.clusters;
  resolved["element"] = bsc::pair_element_name(cfg.element);
  resolved["stopword_file"] = cfg.stopword_file;
  resolved["filter_identical"] = cfg.filter_identical;
  resolved["seed"] = cfg.seed;
  resolved["threads"] = cfg.threads;
  resolved["checkpoint"] = checkpoint;
  resolved["split"] = split;
  bsc::atomic_write_file(out_path + ".config.json", resolved.dump(2) + "\n");

  std::printf("wrote %zu records in %zu groups to %s\n", seq.order.size(),
              seq.group_count(), out_path.c_str());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  auto results = bsc::run_gradient_suite(seed);
  for (const auto& r : results)
    std::printf("%-44s max_err %.3e  tol %.1e  %s\n", r.name.c_str(), r.max_error,
                r.tolerance, r.passed ? "ok" : "FAIL");
  if (!bsc::all_passed(results)) {
    std::fprintf(stderr, "gradient checks failed\n");
    return 2;
  }
  std::printf("all %zu gradient checks passed\n", results.size());
  return 0;
}

int cmd_knn(const std::string& data_path, const std::string& query, std::size_t k,
            const std::string& metric, const std::string& checkpoint,
            const std::string& element, const std::string& split) {
  bsc::PairDataset all = bsc::read_jsonl(data_path);
  bsc::PairDataset records = split.empty() ? all : bsc::select_split(all, split);
  if (records.empty()) throw bsc::ValidationError("no records to index");

  bsc::EncoderModel model = encoder_for(checkpoint, bsc::EncoderConfig{}, 1);
  bsc::PairElement el = bsc::parse_pair_element(element);
  std::vector<std::string> texts(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    texts[i] = el == bsc::PairElement::First ? records[i].text_q : records[i].text_a;
  bsc::Matrix embeddings = model.encode_batch(texts);
  std::vector<std::int64_t> ids(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) ids[i] = static_cast<std::int64_t>(i);

  bsc::FlatIndex index(embeddings, ids, bsc::parse_metric(metric));
  auto hits = index.search(std::span<const double>(model.encode(query)), k);
  for (std::size_t rank = 0; rank < hits.size(); ++rank) {
    const auto& rec = records[static_cast<std::size_t>(hits[rank])];
    std::printf("%2zu. %s  %s\n", rank + 1, rec.id.c_str(),
                texts[static_cast<std::size_t>(hits[rank])].c_str());
  }
  return 0;
}

int cmd_synth(const std::string& out_path, const bsc::SynthConfig& cfg) {
  bsc::PairDataset records = bsc::generate_synthetic(cfg);
  bsc::write_jsonl(records, out_path);

  json resolved;
  resolved["topics"] = cfg.topics;
  resolved["pairs_per_topic"] = cfg.pairs_per_topic;
  resolved["vocab_per_topic"] = cfg.vocab_per_topic;
  resolved["query_len"] = cfg.query_len;
  resolved["answer_len"] = cfg.answer_len;
  resolved["negative_fraction"] = cfg.negative_fraction;
  resolved["dev_fraction"] = cfg.dev_fraction;
  resolved["test_fraction"] = cfg.test_fraction;
  resolved["seed"] = cfg.seed;
  bsc::atomic_write_file(out_path + ".config.json", resolved.dump(2) + "\n");

  std::size_t train = 0, dev = 0, test = 0;
  for (const auto& r : records) {
    if (r.split == "train") ++train;
    else if (r.split == "dev") ++dev;
    else ++test;
  }
  std::printf("wrote %zu records (%zu train / %zu dev / %zu test) to %s\n",
              records.size(), train, dev, test, out_path.c_str());
  return 0;
}

int cmd_ingest(const std::string& in_path, const std::string& out_path,
               double scale_min, double scale_max, bool tsv) {
  bsc::PairDataset records = bsc::ingest(in_path, scale_min, scale_max, tsv);
  bsc::write_jsonl(records, out_path);
  std::printf("ingested %zu records to %s\n", records.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch-softmax contrastive training toolkit"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train with seed search and checkpointing");
  std::string train_config, train_data, train_out;
  std::vector<std::uint64_t> train_seeds;
  train->add_option("--config", train_config, "Run config JSON")->required();
  train->add_option("--data", train_data, "Dataset JSONL (train+dev splits)")->required();
  train->add_option("--out", train_out, "Output run directory")->required();
  train->add_option("--seed", train_seeds, "Override config seeds");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a dataset split");
  std::string eval_ckpt, eval_data, eval_split = "test", eval_protocol = "auto";
  std::string eval_out, eval_csv;
  std::vector<std::string> eval_metrics = {"mrr"};
  double eval_threshold = 0.5;
  evaluate->add_option("--checkpoint", eval_ckpt, "Encoder checkpoint")->required();
  evaluate->add_option("--data", eval_data, "Dataset JSONL")->required();
  evaluate->add_option("--split", eval_split, "Split to score ('' = all records)");
  evaluate->add_option("--metric", eval_metrics,
                       "Metrics: mrr map p@1 ndcg@K hp@K spearman f1");
  evaluate->add_option("--protocol", eval_protocol, "auto | groups | retrieval");
  evaluate->add_option("--threshold", eval_threshold, "Relevance binarization threshold");
  evaluate->add_option("--out", eval_out, "Write the JSON report here");
  evaluate->add_option("--csv", eval_csv, "Write the per-group CSV here");

  // shuffle
  auto* shuffle = app.add_subcommand("shuffle", "Reorder a dataset for batch construction");
  std::string shuffle_data, shuffle_out, shuffle_mode = "random";
  std::string shuffle_element = "first", shuffle_stopwords, shuffle_ckpt, shuffle_split;
  bsc::ShuffleConfig shuffle_cfg;
  shuffle->add_option("--data", shuffle_data, "Dataset JSONL")->required();
  shuffle->add_option("--out", shuffle_out, "Reordered JSONL output")->required();
  shuffle->add_option("--mode", shuffle_mode,
                      "random | example_knn | words | clusters | neighbors");
  shuffle->add_option("--seed", shuffle_cfg.seed, "Shuffle seed");
  shuffle->add_option("--group-size", shuffle_cfg.group_size, "Group size s");
  shuffle->add_option("--pool", shuffle_cfg.candidate_pool, "Candidate pool n");
  shuffle->add_option("--shingle-size", shuffle_cfg.shingle_size, "Shingle size t");
  shuffle->add_option("--neighbor-k", shuffle_cfg.neighbor_k, "Neighbors-mode top-k");
  shuffle->add_option("--clusters", shuffle_cfg.clusters, "Clusters-mode k");
  shuffle->add_option("--element", shuffle_element, "Group by pair element: first | second");
  shuffle->add_option("--stopwords", shuffle_stopwords, "Stop-word file (one per line)");
  shuffle->add_flag("--filter-identical", shuffle_cfg.filter_identical,
                    "Drop neighbors identical to the anchor");
  shuffle->add_option("--threads", shuffle_cfg.threads, "kNN worker threads");
  shuffle->add_option("--checkpoint", shuffle_ckpt, "Encoder checkpoint for embeddings");
  shuffle->add_option("--split", shuffle_split, "Only shuffle this split ('' = all)");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Run the finite-difference suite");
  std::uint64_t gradcheck_seed = 1;
  gradcheck->add_option("--seed", gradcheck_seed, "Suite seed");

  // knn
  auto* knn = app.add_subcommand("knn", "Debug queries against a flat index");
  std::string knn_data, knn_query, knn_metric = "cosine", knn_ckpt;
  std::string knn_element = "second", knn_split;
  std::size_t knn_k = 5;
  knn->add_option("--data", knn_data, "Dataset JSONL")->required();
  knn->add_option("--query", knn_query, "Query text")->required();
  knn->add_option("--k", knn_k, "Results to return");
  knn->add_option("--metric", knn_metric, "dot | cosine | euclidean");
  knn->add_option("--checkpoint", knn_ckpt, "Encoder checkpoint");
  knn->add_option("--element", knn_element, "Index pair element: first | second");
  knn->add_option("--split", knn_split, "Only index this split ('' = all)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic cluster benchmark");
  std::string synth_out;
  bsc::SynthConfig synth_cfg;
  synth->add_option("--out", synth_out, "Output JSONL")->required();
  synth->add_option("--topics", synth_cfg.topics, "Latent topics");
  synth->add_option("--pairs", synth_cfg.pairs_per_topic, "Pairs per topic");
  synth->add_option("--vocab", synth_cfg.vocab_per_topic, "Words per topic vocabulary");
  synth->add_option("--query-len", synth_cfg.query_len, "Topic words per query");
  synth->add_option("--answer-len", synth_cfg.answer_len, "Topic words per answer");
  synth->add_option("--mentions", synth_cfg.entity_mentions,
                    "Entity-token repetitions per text");
  synth->add_option("--neg-frac", synth_cfg.negative_fraction, "Labeled-negative fraction");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Normalize raw scores into [0, 1] JSONL");
  std::string ingest_in, ingest_out;
  double ingest_min = 0.0, ingest_max = 1.0;
  bool ingest_tsv = false;
  ingest->add_option("--in", ingest_in, "Raw JSONL or TSV input")->required();
  ingest->add_option("--out", ingest_out, "Normalized JSONL output")->required();
  ingest->add_option("--scale-min", ingest_min, "Raw scale minimum")->required();
  ingest->add_option("--scale-max", ingest_max, "Raw scale maximum")->required();
  ingest->add_flag("--tsv", ingest_tsv, "Input is tab-separated");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_config, train_data, train_out, train_seeds);
    if (evaluate->parsed())
      return cmd_evaluate(eval_ckpt, eval_data, eval_split, eval_metrics, eval_protocol,
                          eval_threshold, eval_out, eval_csv);
    if (shuffle->parsed()) {
      shuffle_cfg.mode = bsc::parse_shuffle_mode(shuffle_mode);
      shuffle_cfg.element = bsc::parse_pair_element(shuffle_element);
      shuffle_cfg.stopword_file = shuffle_stopwords;
      return cmd_shuffle(shuffle_data, shuffle_out, shuffle_cfg, shuffle_ckpt, shuffle_split);
    }
    if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_seed);
    if (knn->parsed())
      return cmd_knn(knn_data, knn_query, knn_k, knn_metric, knn_ckpt, knn_element,
                     knn_split);
    if (synth->parsed()) return cmd_synth(synth_out, synth_cfg);
    if (ingest->parsed())
      return cmd_ingest(ingest_in, ingest_out, ingest_min, ingest_max, ingest_tsv);
  } catch (const bsc::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const bsc::ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const bsc::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
  return 0;
}
