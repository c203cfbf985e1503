#include "bsc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "bsc/errors.hpp"

namespace bsc {

EvalProtocol parse_eval_protocol(std::string_view name) {
  if (name == "auto") return EvalProtocol::Auto;
  if (name == "groups") return EvalProtocol::Groups;
  if (name == "retrieval") return EvalProtocol::Retrieval;
  throw ValidationError("unknown eval protocol: " + std::string(name));
}

double cosine_score(std::span<const double> x, std::span<const double> y) {
  double d = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return d / std::sqrt(nx * ny);
}

namespace {

EvalProtocol resolve_protocol(const PairDataset& records, EvalProtocol requested) {
  if (requested != EvalProtocol::Auto) return requested;
  for (const auto& rec : records)
    if (!rec.group.empty()) return EvalProtocol::Groups;
  return EvalProtocol::Retrieval;
}

std::vector<RankedGroup> build_group_protocol(const PairDataset& records,
                                              const Matrix& q_emb, const Matrix& a_emb,
                                              double threshold) {
  // Key = explicit group if present, else the question text.
  std::vector<std::string> keys(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    keys[i] = records[i].group.empty() ? records[i].text_q : records[i].group;

  std::unordered_map<std::string, std::size_t> group_index;
  std::vector<RankedGroup> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = group_index.try_emplace(keys[i], groups.size());
    if (inserted) groups.push_back(RankedGroup{keys[i], {}});
    Candidate c;
    c.id = static_cast<std::int64_t>(i);
    c.score = cosine_score(q_emb.row(i), a_emb.row(i));
    c.gain = records[i].label;
    c.relevant = records[i].label > threshold;
    groups[it->second].candidates.push_back(c);
  }
  return groups;
}

std::vector<RankedGroup> build_retrieval_protocol(const PairDataset& records,
                                                  const Matrix& q_emb, const Matrix& a_emb,
                                                  double threshold) {
  // One group per distinct question (first-seen order); candidates are every
  // record's answer side. Candidate j is relevant for question q only when
  // record j is one of q's own pairs labeled positive.
  std::unordered_map<std::string, std::size_t> query_index;
  std::vector<std::size_t> representative;  // first record of each query
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = query_index.try_emplace(records[i].text_q, representative.size());
    if (inserted) representative.push_back(i);
  }
  std::vector<RankedGroup> groups(representative.size());
  for (std::size_t g = 0; g < representative.size(); ++g) {
    std::size_t rep = representative[g];
    groups[g].query_id = records[rep].id;
    groups[g].candidates.reserve(records.size());
    for (std::size_t j = 0; j < records.size(); ++j) {
      Candidate c;
      c.id = static_cast<std::int64_t>(j);
      c.score = cosine_score(q_emb.row(rep), a_emb.row(j));
      bool own_pair = records[j].text_q == records[rep].text_q;
      c.gain = own_pair ? records[j].label : 0.0;
      c.relevant = own_pair && records[j].label > threshold;
      groups[g].candidates.push_back(c);
    }
  }
  return groups;
}

struct MetricSpec {
  std::string name;   // as requested
  std::string base;   // mrr | map | p@1 | ndcg | hp | spearman | f1
  std::size_t k = 0;
};

MetricSpec parse_metric_name(const std::string& name) {
  MetricSpec spec;
  spec.name = name;
  auto at = name.find('@');
  std::string head = at == std::string::npos ? name : name.substr(0, at);
  if (name == "mrr" || name == "map" || name == "spearman" || name == "f1" ||
      name == "p@1") {
    spec.base = name;
    return spec;
  }
  if ((head == "ndcg" || head == "hp") && at != std::string::npos) {
    spec.base = head;
    try {
      spec.k = std::stoul(name.substr(at + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad metric name: " + name);
    }
    if (spec.k < 1) throw ContractError("metric " + name + ": k must be >= 1");
    return spec;
  }
  throw ValidationError("unknown metric: " + name);
}

double group_metric_value(const MetricSpec& spec, const std::vector<RankedGroup>& groups,
                          std::size_t* skipped) {
  if (spec.base == "mrr") return mrr(groups, skipped);
  if (spec.base == "map") return mean_average_precision(groups, skipped);
  if (spec.base == "p@1") return precision_at_1(groups, skipped);
  if (spec.base == "ndcg") return ndcg_at_k(groups, spec.k, skipped);
  if (spec.base == "hp") return has_positives_at_k(groups, spec.k, skipped);
  throw ContractError("not a group metric: " + spec.name);
}

}  // namespace

std::vector<RankedGroup> build_groups(const PairDataset& records,
                                      const EncoderModel& model,
                                      const EvalOptions& opts) {
  if (records.empty()) throw DomainError("evaluate: empty dataset");
  std::vector<std::string> q_texts(records.size()), a_texts(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    q_texts[i] = records[i].text_q;
    a_texts[i] = records[i].text_a;
  }
  Matrix q_emb = model.encode_batch(q_texts);
  Matrix a_emb = model.encode_batch(a_texts);
  EvalProtocol protocol = resolve_protocol(records, opts.protocol);
  if (protocol == EvalProtocol::Groups)
    return build_group_protocol(records, q_emb, a_emb, opts.binarize_threshold);
  return build_retrieval_protocol(records, q_emb, a_emb, opts.binarize_threshold);
}

EvalReport evaluate(const PairDataset& records, const EncoderModel& model,
                    const EvalOptions& opts) {
  EvalReport report;
  auto groups = build_groups(records, model, opts);
  report.groups_total = groups.size();

  report.per_group.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    report.per_group[g].query_id = groups[g].query_id;
    report.per_group[g].size = groups[g].candidates.size();
    for (const auto& c : groups[g].candidates)
      if (c.relevant) ++report.per_group[g].relevant;
  }

  for (const auto& name : opts.metrics) {
    MetricSpec spec = parse_metric_name(name);
    if (spec.base == "spearman" || spec.base == "f1") {
      // Corpus-level metrics over per-record scores.
      std::vector<std::string> q_texts(records.size()), a_texts(records.size());
      for (std::size_t i = 0; i < records.size(); ++i) {
        q_texts[i] = records[i].text_q;
        a_texts[i] = records[i].text_a;
      }
      Matrix q_emb = model.encode_batch(q_texts);
      Matrix a_emb = model.encode_batch(a_texts);
      std::vector<double> scores(records.size());
      std::vector<double> gold(records.size());
      std::vector<bool> labels(records.size());
      for (std::size_t i = 0; i < records.size(); ++i) {
        scores[i] = cosine_score(q_emb.row(i), a_emb.row(i));
        gold[i] = records[i].label;
        labels[i] = records[i].label > opts.binarize_threshold;
      }
      if (spec.base == "spearman") {
        report.values[name] = spearman(scores, gold);
      } else {
        auto f1 = f1_with_threshold(scores, labels, scores, labels);
        report.values[name] = f1.eval_f1;
        report.values["f1_threshold"] = f1.threshold;
      }
      continue;
    }
    std::size_t skipped = 0;
    report.values[name] = group_metric_value(spec, groups, &skipped);
    report.groups_skipped = skipped;
    // Per-group breakdown for the group metrics.
    for (std::size_t g = 0; g < groups.size(); ++g) {
      bool has_rel = report.per_group[g].relevant > 0;
      if (!has_rel) continue;
      std::vector<RankedGroup> single = {groups[g]};
      report.per_group[g].values[name] = group_metric_value(spec, single, nullptr);
    }
  }
  return report;
}

double evaluate_metric(const PairDataset& records, const EncoderModel& model,
                       const std::string& metric, EvalProtocol protocol,
                       double binarize_threshold) {
  EvalOptions opts;
  opts.protocol = protocol;
  opts.binarize_threshold = binarize_threshold;
  opts.metrics = {metric};
  return evaluate(records, model, opts).values.at(metric);
}

std::string EvalReport::to_json_text() const {
  nlohmann::json j;
  j["metrics"] = values;
  j["groups_total"] = groups_total;
  j["groups_skipped"] = groups_skipped;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table_text() const {
  std::ostringstream out;
  out << "metric                value\n";
  out << "--------------------  ----------\n";
  for (const auto& [name, value] : values) {
    out << name;
    for (std::size_t i = name.size(); i < 22; ++i) out << ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    out << buf << "\n";
  }
  out << "groups: " << groups_total << " (" << groups_skipped
      << " without relevant candidates)\n";
  return out.str();
}

std::string EvalReport::per_group_csv() const {
  std::ostringstream out;
  // Columns = union of per-group metric names, in sorted order.
  std::map<std::string, int> columns;
  for (const auto& g : per_group)
    for (const auto& [name, value] : g.values) columns[name] = 1;
  out << "query_id,candidates,relevant";
  for (const auto& [name, unused] : columns) out << "," << name;
  out << "\n";
  for (const auto& g : per_group) {
    std::string quoted = g.query_id;
    bool needs_quotes = quoted.find_first_of(",\"\n") != std::string::npos;
    if (needs_quotes) {
      std::string esc = "\"";
      for (char c : quoted) {
        if (c == '"') esc += "\"\"";
        else esc += c;
      }
      esc += "\"";
      quoted = esc;
    }
    out << quoted << "," << g.size << "," << g.relevant;
    for (const auto& [name, unused] : columns) {
      out << ",";
      auto it = g.values.find(name);
      if (it != g.values.end()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", it->second);
        out << buf;
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace bsc
