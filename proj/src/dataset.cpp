#include "bsc/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "bsc/errors.hpp"

namespace bsc {

namespace {

using nlohmann::json;

[[noreturn]] void line_error(const std::string& path, std::size_t line_no,
                             const std::string& what) {
  throw ValidationError(path + ":" + std::to_string(line_no) + ": " + what);
}

PairRecord record_from_json(const json& j, const std::string& path, std::size_t line_no) {
  if (!j.is_object()) line_error(path, line_no, "record is not a JSON object");
  PairRecord rec;
  try {
    rec.id = j.at("id").get<std::string>();
    rec.text_q = j.at("text_q").get<std::string>();
    rec.text_a = j.at("text_a").get<std::string>();
    rec.label = j.at("label").get<double>();
  } catch (const json::exception& e) {
    line_error(path, line_no, e.what());
  }
  if (j.contains("group")) {
    if (!j["group"].is_string()) line_error(path, line_no, "key 'group' must be a string");
    rec.group = j["group"].get<std::string>();
  }
  if (j.contains("split")) {
    if (!j["split"].is_string()) line_error(path, line_no, "key 'split' must be a string");
    rec.split = j["split"].get<std::string>();
  }
  if (rec.split != "train" && rec.split != "dev" && rec.split != "test")
    line_error(path, line_no, "key 'split' must be one of train/dev/test");
  return rec;
}

}  // namespace

PairDataset read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);
  PairDataset records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) line_error(path, line_no, "malformed JSON");
    PairRecord rec = record_from_json(j, path, line_no);
    if (rec.label < 0.0 || rec.label > 1.0 || rec.label != rec.label)
      line_error(path, line_no, "label out of [0, 1]");
    records.push_back(std::move(rec));
  }
  validate_dataset(records);
  return records;
}

std::string record_to_json_line(const PairRecord& record) {
  json j;
  j["id"] = record.id;
  j["text_q"] = record.text_q;
  j["text_a"] = record.text_a;
  j["label"] = record.label;
  if (!record.group.empty()) j["group"] = record.group;
  j["split"] = record.split;
  return j.dump();
}

void write_jsonl(const PairDataset& records, const std::string& path) {
  std::string buffer;
  for (const auto& rec : records) {
    buffer += record_to_json_line(rec);
    buffer += '\n';
  }
  atomic_write_file(path, buffer);
}

PairDataset read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);
  PairDataset records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 4) line_error(path, line_no, "expected at least 4 tab-separated fields");
    PairRecord rec;
    rec.id = fields[0];
    rec.text_q = fields[1];
    rec.text_a = fields[2];
    try {
      rec.label = std::stod(fields[3]);
    } catch (const std::exception&) {
      line_error(path, line_no, "label is not a number: " + fields[3]);
    }
    if (fields.size() > 4) rec.group = fields[4];
    if (fields.size() > 5 && !fields[5].empty()) rec.split = fields[5];
    if (rec.split != "train" && rec.split != "dev" && rec.split != "test")
      line_error(path, line_no, "split must be one of train/dev/test");
    records.push_back(std::move(rec));
  }
  return records;
}

PairDataset ingest(const std::string& path, double scale_min, double scale_max,
                   bool tsv) {
  if (!(scale_max > scale_min))
    throw ContractError("ingest: scale_max must exceed scale_min");
  PairDataset raw;
  if (tsv) {
    raw = read_tsv(path);
  } else {
    // Raw JSONL may carry labels outside [0, 1]; parse leniently, then scale.
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) line_error(path, line_no, "malformed JSON");
      raw.push_back(record_from_json(j, path, line_no));
    }
  }
  std::size_t line_no = 0;
  for (auto& rec : raw) {
    ++line_no;
    if (rec.label < scale_min || rec.label > scale_max)
      line_error(path, line_no,
                 "score " + std::to_string(rec.label) + " outside declared scale [" +
                     std::to_string(scale_min) + ", " + std::to_string(scale_max) + "]");
    rec.label = (rec.label - scale_min) / (scale_max - scale_min);
  }
  validate_dataset(raw);
  return raw;
}

PairDataset select_split(const PairDataset& records, const std::string& split) {
  PairDataset out;
  for (const auto& rec : records)
    if (rec.split == split) out.push_back(rec);
  return out;
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open file for writing: " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ValidationError("failed writing file: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ValidationError("failed to move " + tmp + " into place at " + path);
}

void validate_dataset(const PairDataset& records) {
  std::unordered_set<std::string> seen;
  for (const auto& rec : records) {
    if (!seen.insert(rec.id).second)
      throw ValidationError("duplicate record id: " + rec.id);
    if (rec.label < 0.0 || rec.label > 1.0)
      throw ValidationError("record " + rec.id + ": label out of [0, 1]");
  }
}

}  // namespace bsc
