#pragma once

#include <string>
#include <vector>

namespace bsc {

// One labeled sentence pair; the unit of ingestion, shuffling, and training.
struct PairRecord {
  std::string id;
  std::string text_q;
  std::string text_a;
  double label = 1.0;   // in [0, 1]
  std::string group;    // optional grouping key ("" = none)
  std::string split = "train";  // train | dev | test
};

using PairDataset = std::vector<PairRecord>;

// JSONL, one record per line:
//   {"id": ..., "text_q": ..., "text_a": ..., "label": ..., "group"?: ..., "split"?: ...}
// Malformed lines raise ValidationError with the 1-based line number.
PairDataset read_jsonl(const std::string& path);
void write_jsonl(const PairDataset& records, const std::string& path);

// Serialization of one record (canonical key order, round-trip exact doubles).
std::string record_to_json_line(const PairRecord& record);

// Affine renormalization of a raw score scale to [0, 1]. Out-of-scale
// labels raise ValidationError with the offending line number.
PairDataset ingest(const std::string& path, double scale_min, double scale_max,
                   bool tsv = false);

// Tab-separated import shim: id, text_q, text_a, label[, group[, split]].
PairDataset read_tsv(const std::string& path);

// Records whose split field matches (records without a split default to "train").
PairDataset select_split(const PairDataset& records, const std::string& split);

// write-temp-then-rename so partially written files are never observed.
void atomic_write_file(const std::string& path, const std::string& contents);

void validate_dataset(const PairDataset& records);

}  // namespace bsc
