#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "mlgib/common.hpp"

namespace mlgib {

// Immutable sparse multi-label graph: CSR adjacency (both arc directions of
// every undirected edge), dense features, binary label matrix. Safe for
// concurrent reads after construction.
struct Graph {
  size_t n = 0;  // nodes
  size_t f = 0;  // feature dim
  size_t C = 0;  // label count
  std::vector<size_t> row_offsets;    // n + 1
  std::vector<uint32_t> col_indices;  // 2m, sorted per row, deduplicated
  std::vector<double> features;       // n * f row-major
  std::vector<uint8_t> labels;        // n * C

  size_t num_undirected_edges() const { return col_indices.size() / 2; }
  size_t degree(size_t v) const { return row_offsets[v + 1] - row_offsets[v]; }
  std::span<const uint32_t> neighbors(size_t v) const {
    return {col_indices.data() + row_offsets[v], degree(v)};
  }
  double feature(size_t v, size_t j) const { return features[v * f + j]; }
  bool has_label(size_t v, size_t c) const { return labels[v * C + c] != 0; }
  std::vector<uint32_t> label_set(size_t v) const;

  void validate() const;
};

// Builds a validated Graph from an undirected edge list (pairs are
// symmetrized and deduplicated; self-loops are dropped with a warning).
Graph build_graph(size_t n, size_t f, size_t C,
                  const std::vector<std::pair<uint32_t, uint32_t>>& edges,
                  std::vector<double> features, std::vector<uint8_t> labels);

// Dataset directory format: graph.edges (u<TAB>v per line), features.csv,
// labels.csv. UTF-8, LF line endings, '.' decimal separator.
Graph load_dataset(const std::filesystem::path& dir);
void save_dataset(const Graph& g, const std::filesystem::path& dir);

struct Split {
  std::vector<uint32_t> train, val, test;
  uint64_t seed = 0;
};

Split make_split(const Graph& g, std::array<double, 3> ratios, uint64_t seed);

// Optional splits.json override: {"train": [...], "val": [...], "test": [...]}.
Split load_split_override(const std::filesystem::path& file, size_t n);
bool has_split_override(const std::filesystem::path& dataset_dir);

// Mini-batch neighbor candidates. Candidate lists are stored contiguously:
// candidates of targets[i] occupy cand[cand_offsets[i] .. cand_offsets[i+1]).
// nodes maps block-local ids to global ids; targets come first.
struct SampledBlock {
  std::vector<uint32_t> targets;        // global ids
  std::vector<size_t> cand_offsets;     // targets.size() + 1
  std::vector<uint32_t> cand;           // global ids, true 1-hop neighbors
  std::vector<uint32_t> nodes;          // block-local id -> global id
  std::unordered_map<uint32_t, uint32_t> global_to_local;

  size_t num_candidates(size_t i) const {
    return cand_offsets[i + 1] - cand_offsets[i];
  }
};

SampledBlock sample_block(const Graph& g, const std::vector<uint32_t>& targets,
                          size_t fanout, uint64_t seed);

// Mean Jaccard similarity between each node's label set and its neighbors'.
// Isolated nodes score 0; two empty label sets count as similarity 1.
std::vector<double> neighbor_label_jaccard(const Graph& g);

// Adds floor(proportion * m) undirected edges drawn uniformly from the
// non-edges (no self-loops, no duplicates).
Graph perturb_add_edges(const Graph& g, double proportion, uint64_t seed);

// Degree bucketing. bucket_edges are increasing boundaries b0 < b1 < ...;
// bucket i covers degrees [b_i, b_{i+1}); the final boundary must exceed the
// maximum degree (SIZE_MAX acts as infinity).
struct DegreeBuckets {
  std::vector<size_t> boundaries;               // as passed in
  std::vector<size_t> counts;                   // per bucket
  std::vector<std::vector<uint32_t>> node_sets;  // per bucket
};

DegreeBuckets degree_buckets(const Graph& g, const std::vector<size_t>& bucket_edges);

}  // namespace mlgib
