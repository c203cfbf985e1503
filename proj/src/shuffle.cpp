#include "bsc/shuffle.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "bsc/errors.hpp"
#include "bsc/knn.hpp"
#include "bsc/rng.hpp"
#include "bsc/text.hpp"

namespace bsc {

ShuffleMode parse_shuffle_mode(std::string_view name) {
  if (name == "random") return ShuffleMode::Random;
  if (name == "example_knn") return ShuffleMode::ExampleKnn;
  if (name == "words") return ShuffleMode::Words;
  if (name == "clusters") return ShuffleMode::Clusters;
  if (name == "neighbors") return ShuffleMode::Neighbors;
  throw ValidationError("unknown shuffle mode: " + std::string(name));
}

std::string shuffle_mode_name(ShuffleMode mode) {
  switch (mode) {
    case ShuffleMode::Random: return "random";
    case ShuffleMode::ExampleKnn: return "example_knn";
    case ShuffleMode::Words: return "words";
    case ShuffleMode::Clusters: return "clusters";
    case ShuffleMode::Neighbors: return "neighbors";
  }
  return "random";
}

PairElement parse_pair_element(std::string_view name) {
  if (name == "first") return PairElement::First;
  if (name == "second") return PairElement::Second;
  throw ValidationError("unknown pair element: " + std::string(name));
}

std::string pair_element_name(PairElement element) {
  return element == PairElement::First ? "first" : "second";
}

void ShuffleConfig::validate() const {
  if (group_size < 1) throw ContractError("ShuffleConfig: group_size must be >= 1");
  if (candidate_pool + 1 < group_size)
    throw ContractError("ShuffleConfig: candidate_pool must be >= group_size - 1");
  if (shingle_size < 1) throw ContractError("ShuffleConfig: shingle_size must be >= 1");
  if (mode == ShuffleMode::Neighbors && neighbor_k < 1)
    throw ContractError("ShuffleConfig: neighbor_k must be >= 1");
  if (threads < 1) throw ContractError("ShuffleConfig: threads must be >= 1");
}

std::vector<std::string> ShuffledSequence::record_ids(const PairDataset& dataset) const {
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (std::size_t pos : order) ids.push_back(dataset[pos].id);
  return ids;
}

std::pair<std::size_t, std::size_t> ShuffledSequence::group_bounds(std::size_t g) const {
  std::size_t begin = group_offsets[g];
  std::size_t end = g + 1 < group_offsets.size() ? group_offsets[g + 1] : order.size();
  return {begin, end};
}

namespace {

const std::string& grouping_text(const PairRecord& rec, PairElement element) {
  return element == PairElement::First ? rec.text_q : rec.text_a;
}

void require_embeddings(const PairDataset& dataset, const Matrix& embeddings) {
  if (embeddings.rows() != dataset.size())
    throw ContractError("shuffle: embeddings cover " + std::to_string(embeddings.rows()) +
                        " records but the dataset has " + std::to_string(dataset.size()));
}

std::unordered_set<std::string> stopwords_for(const ShuffleConfig& cfg) {
  if (cfg.stopword_file.empty()) return default_stopwords();
  return load_stopwords(cfg.stopword_file);
}

constexpr char kShingleSep = '\x1f';
const char* const kEmptyShingle = "\x01:empty";

// Canonical shingle of a word sentence: sample t distinct words, sorted and
// joined. The sampling stream is derived from the sentence content (plus the
// run seed), so identical sentences always share a shingle.
std::string make_shingle(const std::vector<std::string>& words, std::size_t t,
                         std::uint64_t seed) {
  if (words.empty()) return kEmptyShingle;
  std::vector<std::string> unique(words);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  std::string sentence;
  for (const auto& w : unique) {
    sentence += w;
    sentence += kShingleSep;
  }
  Rng rng(derive_seed(seed, fnv1a64(sentence)));
  auto picks = rng.sample_indices(unique.size(), std::min(t, unique.size()));
  std::sort(picks.begin(), picks.end());

  std::string shingle;
  for (std::size_t k : picks) {
    if (!shingle.empty()) shingle += kShingleSep;
    shingle += unique[k];
  }
  return shingle;
}

// Shared tail of the shingle shuffles: sort by shingle, cut random group ids
// at shingle changes and at the size cap, then order by group id.
// `shingles` is aligned with the dataset.
ShuffledSequence shingle_pipeline(const std::vector<std::string>& shingles,
                                  std::size_t group_cap, std::uint64_t seed) {
  std::size_t n = shingles.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return shingles[x] < shingles[y];
  });

  Rng rng(derive_seed(seed, 0x67726f7570ull));  // group-id stream
  std::unordered_set<std::uint64_t> used_gids;
  auto fresh_gid = [&] {
    std::uint64_t g = rng.next_u64();
    while (!used_gids.insert(g).second) g = rng.next_u64();
    return g;
  };

  std::vector<std::uint64_t> gid(n, 0);
  std::uint64_t current = fresh_gid();
  std::size_t current_size = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    std::size_t rec = order[pos];
    if (pos > 0 && shingles[rec] != shingles[order[pos - 1]]) {
      current = fresh_gid();
      current_size = 0;
    }
    if (current_size >= group_cap) {
      current = fresh_gid();
      current_size = 0;
    }
    gid[rec] = current;
    ++current_size;
  }

  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return gid[x] < gid[y];
  });

  ShuffledSequence out;
  out.order = std::move(order);
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (pos == 0 || gid[out.order[pos]] != gid[out.order[pos - 1]])
      out.group_offsets.push_back(pos);
  }
  return out;
}

}  // namespace

ShuffledSequence random_shuffle(const PairDataset& dataset, std::uint64_t seed) {
  ShuffledSequence out;
  out.order.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) out.order[i] = i;
  Rng rng(seed);
  rng.shuffle(out.order);
  out.group_offsets.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) out.group_offsets[i] = i;
  return out;
}

ShuffledSequence example_based_shuffle(const PairDataset& dataset,
                                       const Matrix& embeddings,
                                       const ShuffleConfig& cfg) {
  cfg.validate();
  require_embeddings(dataset, embeddings);
  std::size_t n = dataset.size();

  std::vector<std::size_t> scan(n);
  for (std::size_t i = 0; i < n; ++i) scan[i] = i;
  Rng rng(cfg.seed);
  rng.shuffle(scan);

  // Stage one of the two-stage kNN: each record's top-n pool, computed once
  // up front (parallelizable; grouping below is sequential by nature).
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
  FlatIndex index(embeddings, ids, Metric::Cosine);
  auto pools = index.search_batch(embeddings, cfg.candidate_pool + 1, cfg.threads);

  std::unordered_set<std::int64_t> used;
  std::vector<std::size_t> flat;
  std::vector<std::size_t> group_sizes;
  flat.reserve(n);

  for (std::size_t anchor : scan) {
    auto aid = static_cast<std::int64_t>(anchor);
    if (used.contains(aid)) continue;
    used.insert(aid);

    std::size_t taken = 0;
    flat.push_back(anchor);
    if (cfg.group_size > 1) {
      const std::string& anchor_text = grouping_text(dataset[anchor], cfg.element);
      for (std::int64_t cand : pools[anchor]) {
        if (taken == cfg.group_size - 1) break;
        if (cand == aid || used.contains(cand)) continue;
        if (cfg.filter_identical &&
            grouping_text(dataset[static_cast<std::size_t>(cand)], cfg.element) ==
                anchor_text)
          continue;
        used.insert(cand);
        flat.push_back(static_cast<std::size_t>(cand));
        ++taken;
      }
    }
    group_sizes.push_back(taken + 1);
  }

  // Curriculum reversal: the whole sequence flips, so the singleton groups
  // formed at the end are trained first and each group ends on its anchor.
  std::reverse(flat.begin(), flat.end());
  std::reverse(group_sizes.begin(), group_sizes.end());

  ShuffledSequence out;
  out.order = std::move(flat);
  std::size_t offset = 0;
  for (std::size_t sz : group_sizes) {
    out.group_offsets.push_back(offset);
    offset += sz;
  }
  return out;
}

ShuffledSequence shingle_shuffle(const PairDataset& dataset, const ShuffleConfig& cfg) {
  cfg.validate();
  auto stop = stopwords_for(cfg);
  std::vector<std::string> shingles(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::vector<std::string> words;
    for (auto& tok : tokenize(grouping_text(dataset[i], cfg.element)))
      if (!stop.contains(tok)) words.push_back(std::move(tok));
    shingles[i] = make_shingle(words, cfg.shingle_size, cfg.seed);
  }
  return shingle_pipeline(shingles, cfg.group_size, cfg.seed);
}

ShuffledSequence cluster_shuffle(const PairDataset& dataset, const Matrix& embeddings,
                                 std::size_t k_clusters, const ShuffleConfig& cfg) {
  cfg.validate();
  require_embeddings(dataset, embeddings);
  if (k_clusters > dataset.size())
    throw ContractError("cluster_shuffle: k_clusters exceeds dataset size");
  auto assignment = kmeans(embeddings, k_clusters, /*max_iters=*/50,
                           derive_seed(cfg.seed, 0x6b6d65616e73ull));
  // Each record is represented by its cluster number: a shingle of size 1.
  std::vector<std::string> shingles(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    shingles[i] = std::to_string(assignment[i]);
  return shingle_pipeline(shingles, cfg.group_size, cfg.seed);
}

ShuffledSequence neighbor_shingle_shuffle(const PairDataset& dataset,
                                          const Matrix& embeddings,
                                          const ShuffleConfig& cfg) {
  cfg.validate();
  if (cfg.neighbor_k < 1)
    throw ContractError("neighbor_shingle_shuffle: neighbor_k must be >= 1");
  require_embeddings(dataset, embeddings);
  std::size_t n = dataset.size();

  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
  FlatIndex index(embeddings, ids, Metric::Cosine);
  auto pools = index.search_batch(embeddings, cfg.neighbor_k, cfg.threads);

  // Sentence = sorted input-sequence positions of the top-k neighbors.
  std::vector<std::string> shingles(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::int64_t> positions = pools[i];
    std::sort(positions.begin(), positions.end());
    std::vector<std::string> words;
    words.reserve(positions.size());
    for (std::int64_t p : positions) words.push_back(std::to_string(p));
    shingles[i] = make_shingle(words, cfg.shingle_size, cfg.seed);
  }
  return shingle_pipeline(shingles, cfg.group_size, cfg.seed);
}

std::vector<std::size_t> kmeans(const Matrix& points, std::size_t k,
                                std::size_t max_iters, std::uint64_t seed) {
  std::size_t n = points.rows(), d = points.cols();
  if (k < 1) throw ContractError("kmeans: k must be >= 1");
  if (k > n) throw ContractError("kmeans: k exceeds number of points");

  Rng rng(seed);
  auto sq_dist = [&](std::span<const double> p, std::span<const double> c) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double diff = p[j] - c[j];
      s += diff * diff;
    }
    return s;
  };

  // k-means++ seeding.
  Matrix centroids(k, d);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.next_below(n));
  for (std::size_t j = 0; j < d; ++j) centroids(0, j) = points(first, j);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], sq_dist(points.row(i), centroids.row(c - 1)));
      total += min_d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.next_real() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.next_below(n));
    }
    for (std::size_t j = 0; j < d; ++j) centroids(c, j) = points(pick, j);
  }

  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        double d2 = sq_dist(points.row(i), centroids.row(c));
        if (d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      if (assignment[i] != best_c) {
        assignment[i] = best_c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assignment[i]];
      for (std::size_t j = 0; j < d; ++j) sums(assignment[i], j) += points(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < d; ++j)
        centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  return assignment;
}

ShuffledSequence run_shuffle(const PairDataset& dataset, const Matrix* embeddings,
                             const ShuffleConfig& cfg) {
  cfg.validate();
  auto need_embeddings = [&]() -> const Matrix& {
    if (embeddings == nullptr)
      throw ContractError("shuffle mode '" + shuffle_mode_name(cfg.mode) +
                          "' requires record embeddings");
    return *embeddings;
  };
  switch (cfg.mode) {
    case ShuffleMode::Random: return random_shuffle(dataset, cfg.seed);
    case ShuffleMode::ExampleKnn:
      return example_based_shuffle(dataset, need_embeddings(), cfg);
    case ShuffleMode::Words: return shingle_shuffle(dataset, cfg);
    case ShuffleMode::Clusters:
      return cluster_shuffle(dataset, need_embeddings(), cfg.clusters, cfg);
    case ShuffleMode::Neighbors:
      return neighbor_shingle_shuffle(dataset, need_embeddings(), cfg);
  }
  throw ContractError("run_shuffle: unreachable mode");
}

}  // namespace bsc
