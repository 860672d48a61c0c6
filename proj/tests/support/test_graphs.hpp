#pragma once

// Small graph builders shared across test binaries.

#include <set>
#include <utility>
#include <vector>

#include "mlgib/common.hpp"
#include "mlgib/graph.hpp"

namespace mlgib_test {

// Graph from an explicit edge list with per-node label sets.
inline mlgib::Graph toy_graph(size_t n, size_t C,
                              const std::vector<std::pair<uint32_t, uint32_t>>& edges,
                              const std::vector<std::vector<uint32_t>>& label_sets,
                              size_t f = 2) {
  std::vector<double> feats(n * f, 0.0);
  for (size_t v = 0; v < n; ++v)
    for (size_t j = 0; j < f; ++j)
      feats[v * f + j] = 0.1 * static_cast<double>(v) + 0.01 * static_cast<double>(j);
  std::vector<uint8_t> labels(n * C, 0);
  for (size_t v = 0; v < label_sets.size(); ++v)
    for (uint32_t c : label_sets[v]) labels[v * C + c] = 1;
  return mlgib::build_graph(n, f, C, edges, std::move(feats), std::move(labels));
}

// Erdos-Renyi graph with random labels, for property tests.
inline mlgib::Graph random_graph(size_t n, double p, size_t C, uint64_t seed,
                                 size_t f = 3) {
  mlgib::Rng rng(seed);
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  for (uint32_t u = 0; u < n; ++u)
    for (uint32_t v = u + 1; v < n; ++v)
      if (rng.uniform() < p) edges.push_back({u, v});
  std::vector<double> feats(n * f);
  for (double& x : feats) x = rng.uniform(-1, 1);
  std::vector<uint8_t> labels(n * C, 0);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = rng.uniform() < 0.3 ? 1 : 0;
  return mlgib::build_graph(n, f, C, edges, std::move(feats), std::move(labels));
}

}  // namespace mlgib_test
