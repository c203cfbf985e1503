#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bsc/dataset.hpp"
#include "bsc/matrix.hpp"

namespace bsc {

enum class ShuffleMode { Random, ExampleKnn, Words, Clusters, Neighbors };
enum class PairElement { First, Second };

ShuffleMode parse_shuffle_mode(std::string_view name);
std::string shuffle_mode_name(ShuffleMode mode);
PairElement parse_pair_element(std::string_view name);
std::string pair_element_name(PairElement element);

struct ShuffleConfig {
  ShuffleMode mode = ShuffleMode::Random;
  std::size_t group_size = 8;        // s: group size (and shingle group cap)
  std::size_t candidate_pool = 500;  // n: first-stage kNN pool
  std::size_t shingle_size = 3;      // t: words per shingle
  std::size_t neighbor_k = 7;        // top-k for the neighbors mode
  std::size_t clusters = 300;        // k-means cluster count for the clusters mode
  PairElement element = PairElement::First;
  std::string stopword_file;         // "" = built-in list
  bool filter_identical = false;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

// A reordering of the dataset: `order[i]` is the position of the i-th output
// record in the input, and `group_offsets` marks where each group starts.
struct ShuffledSequence {
  std::vector<std::size_t> order;
  std::vector<std::size_t> group_offsets;

  std::vector<std::string> record_ids(const PairDataset& dataset) const;
  std::size_t group_count() const { return group_offsets.size(); }
  // Half-open [begin, end) bounds of group g in output coordinates.
  std::pair<std::size_t, std::size_t> group_bounds(std::size_t g) const;
};

// Uniform permutation; every group is a singleton.
ShuffledSequence random_shuffle(const PairDataset& dataset, std::uint64_t seed);

// Example-based shuffling: random scan order, greedy kNN groups of size up
// to s drawn from each anchor's top-n unused neighbors, whole sequence
// reversed at the end so the late singleton groups come first.
// `embeddings` holds one row per record (the grouping element, cfg.element).
ShuffledSequence example_based_shuffle(const PairDataset& dataset,
                                       const Matrix& embeddings,
                                       const ShuffleConfig& cfg);

// Shuffling by words: per-record shingle of t sampled non-stop-word tokens,
// sort by shingle, cut random-uint64 group ids at shingle changes and at the
// group-size cap, final sort by group id.
ShuffledSequence shingle_shuffle(const PairDataset& dataset, const ShuffleConfig& cfg);

// Shingle = k-means cluster number of the record's embedding (shingle size 1).
ShuffledSequence cluster_shuffle(const PairDataset& dataset, const Matrix& embeddings,
                                 std::size_t k_clusters, const ShuffleConfig& cfg);

// Shingle sentence = sorted positions of the record's top-k nearest
// neighbors in the input sequence (the record itself included).
ShuffledSequence neighbor_shingle_shuffle(const PairDataset& dataset,
                                          const Matrix& embeddings,
                                          const ShuffleConfig& cfg);

// Lloyd's algorithm with k-means++ seeding; returns a cluster index per row.
// Deterministic for a fixed seed; within-cluster sum of squares is
// non-increasing across iterations.
std::vector<std::size_t> kmeans(const Matrix& points, std::size_t k,
                                std::size_t max_iters, std::uint64_t seed);

// Dispatch on cfg.mode. `embeddings` may be null for Random and Words.
ShuffledSequence run_shuffle(const PairDataset& dataset, const Matrix* embeddings,
                             const ShuffleConfig& cfg);

}  // namespace bsc
