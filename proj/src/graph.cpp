#include "mlgib/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "json.hpp"

namespace mlgib {

namespace fs = std::filesystem;

std::vector<uint32_t> Graph::label_set(size_t v) const {
  std::vector<uint32_t> out;
  for (size_t c = 0; c < C; ++c)
    if (labels[v * C + c]) out.push_back(static_cast<uint32_t>(c));
  return out;
}

void Graph::validate() const {
  if (row_offsets.size() != n + 1)
    throw StructuralError("graph: row offsets must have length n+1");
  if (row_offsets.front() != 0 || row_offsets.back() != col_indices.size())
    throw StructuralError("graph: row offsets must start at 0 and end at nnz");
  for (size_t i = 0; i < n; ++i)
    if (row_offsets[i] > row_offsets[i + 1])
      throw StructuralError("graph: row offsets must be non-decreasing");
  for (uint32_t c : col_indices)
    if (c >= n) throw StructuralError("graph: column index out of range");
  for (size_t v = 0; v < n; ++v) {
    auto nb = neighbors(v);
    for (size_t i = 0; i + 1 < nb.size(); ++i)
      if (nb[i] >= nb[i + 1])
        throw StructuralError("graph: neighbor lists must be sorted and unique");
  }
  if (features.size() != n * f) throw ShapeError("graph: feature matrix shape");
  if (labels.size() != n * C) throw ShapeError("graph: label matrix shape");
  for (uint8_t l : labels)
    if (l > 1) throw StructuralError("graph: labels must be 0/1");
  for (size_t v = 0; v < n; ++v)
    for (uint32_t u : neighbors(v)) {
      auto nb = neighbors(u);
      if (!std::binary_search(nb.begin(), nb.end(), static_cast<uint32_t>(v)))
        throw StructuralError("graph: adjacency is not symmetric");
    }
}

Graph build_graph(size_t n, size_t f, size_t C,
                  const std::vector<std::pair<uint32_t, uint32_t>>& edges,
                  std::vector<double> features, std::vector<uint8_t> labels) {
  std::set<std::pair<uint32_t, uint32_t>> arcs;
  size_t self_loops = 0;
  for (auto [u, v] : edges) {
    if (u >= n || v >= n)
      throw StructuralError(
          strprintf("edge endpoint %u out of range (n=%zu)", std::max(u, v), n));
    if (u == v) {
      ++self_loops;
      continue;
    }
    arcs.insert({u, v});
    arcs.insert({v, u});
  }
  if (self_loops > 0)
    warn(strprintf("dropped %zu self-loop edge(s)", self_loops));

  Graph g;
  g.n = n;
  g.f = f;
  g.C = C;
  g.features = std::move(features);
  g.labels = std::move(labels);
  g.row_offsets.assign(n + 1, 0);
  for (auto [u, v] : arcs) {
    (void)v;
    g.row_offsets[u + 1]++;
  }
  for (size_t i = 0; i < n; ++i) g.row_offsets[i + 1] += g.row_offsets[i];
  g.col_indices.resize(arcs.size());
  std::vector<size_t> cursor(g.row_offsets.begin(), g.row_offsets.end() - 1);
  for (auto [u, v] : arcs) g.col_indices[cursor[u]++] = v;
  g.validate();
  return g;
}

namespace {

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

uint32_t parse_node_id(std::string_view tok, const fs::path& file, size_t lineno) {
  uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(strprintf("%s:%zu: malformed node id '%.*s'",
                               file.string().c_str(), lineno,
                               static_cast<int>(tok.size()), tok.data()));
  return v;
}

std::vector<double> parse_csv_row(const std::string& line, const fs::path& file,
                                  size_t lineno) {
  std::vector<double> row;
  size_t pos = 0;
  while (pos <= line.size()) {
    size_t comma = line.find(',', pos);
    size_t end = comma == std::string::npos ? line.size() : comma;
    std::string_view tok(line.data() + pos, end - pos);
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError(strprintf("%s:%zu: malformed number '%.*s'",
                                 file.string().c_str(), lineno,
                                 static_cast<int>(tok.size()), tok.data()));
    row.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return row;
}

}  // namespace

Graph load_dataset(const fs::path& dir) {
  fs::path edges_file = dir / "graph.edges";
  fs::path features_file = dir / "features.csv";
  fs::path labels_file = dir / "labels.csv";

  // features define n and f
  std::vector<double> features;
  size_t n = 0, f = 0;
  {
    auto lines = read_lines(features_file);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    n = lines.size();
    for (size_t i = 0; i < lines.size(); ++i) {
      auto row = parse_csv_row(lines[i], features_file, i + 1);
      if (i == 0)
        f = row.size();
      else if (row.size() != f)
        throw ShapeError(strprintf("%s:%zu: expected %zu columns, got %zu",
                                   features_file.string().c_str(), i + 1, f,
                                   row.size()));
      features.insert(features.end(), row.begin(), row.end());
    }
  }

  std::vector<uint8_t> labels;
  size_t C = 0;
  {
    auto lines = read_lines(labels_file);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.size() != n)
      throw ShapeError(strprintf("labels.csv has %zu rows but features.csv has %zu",
                                 lines.size(), n));
    for (size_t i = 0; i < lines.size(); ++i) {
      auto row = parse_csv_row(lines[i], labels_file, i + 1);
      if (i == 0)
        C = row.size();
      else if (row.size() != C)
        throw ShapeError(strprintf("%s:%zu: expected %zu columns, got %zu",
                                   labels_file.string().c_str(), i + 1, C,
                                   row.size()));
      for (double v : row) {
        if (v != 0.0 && v != 1.0)
          throw ParseError(strprintf("%s:%zu: label entries must be 0 or 1",
                                     labels_file.string().c_str(), i + 1));
        labels.push_back(static_cast<uint8_t>(v));
      }
    }
  }

  std::vector<std::pair<uint32_t, uint32_t>> edges;
  {
    auto lines = read_lines(edges_file);
    for (size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      size_t tab = lines[i].find('\t');
      if (tab == std::string::npos)
        throw ParseError(strprintf("%s:%zu: expected 'u<TAB>v'",
                                   edges_file.string().c_str(), i + 1));
      uint32_t u = parse_node_id(std::string_view(lines[i]).substr(0, tab),
                                 edges_file, i + 1);
      uint32_t v = parse_node_id(std::string_view(lines[i]).substr(tab + 1),
                                 edges_file, i + 1);
      if (u >= n || v >= n)
        throw StructuralError(strprintf("%s:%zu: endpoint %u >= n=%zu",
                                        edges_file.string().c_str(), i + 1,
                                        std::max(u, v), n));
      edges.push_back({u, v});
    }
  }

  return build_graph(n, f, C, edges, std::move(features), std::move(labels));
}

void save_dataset(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "graph.edges", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "graph.edges").string());
    for (size_t v = 0; v < g.n; ++v)
      for (uint32_t u : g.neighbors(v))
        if (v < u) out << v << '\t' << u << '\n';
  }
  {
    std::ofstream out(dir / "features.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "features.csv").string());
    for (size_t v = 0; v < g.n; ++v) {
      for (size_t j = 0; j < g.f; ++j) {
        if (j) out << ',';
        out << strprintf("%.17g", g.feature(v, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "labels.csv").string());
    for (size_t v = 0; v < g.n; ++v) {
      for (size_t c = 0; c < g.C; ++c) {
        if (c) out << ',';
        out << (g.has_label(v, c) ? '1' : '0');
      }
      out << '\n';
    }
  }
}

Split make_split(const Graph& g, std::array<double, 3> ratios, uint64_t seed) {
  double total = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0 ||
      std::abs(total - 1.0) > 1e-9)
    throw ArgumentError("make_split: ratios must be positive and sum to 1");

  std::vector<uint32_t> perm(g.n);
  for (size_t i = 0; i < g.n; ++i) perm[i] = static_cast<uint32_t>(i);
  Rng rng(seed);
  for (size_t i = g.n; i > 1; --i) {
    size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }

  size_t c1 = static_cast<size_t>(std::llround(ratios[0] * g.n));
  size_t c2 = static_cast<size_t>(std::llround((ratios[0] + ratios[1]) * g.n));
  c1 = std::min(c1, g.n);
  c2 = std::min(std::max(c2, c1), g.n);

  Split s;
  s.seed = seed;
  s.train.assign(perm.begin(), perm.begin() + c1);
  s.val.assign(perm.begin() + c1, perm.begin() + c2);
  s.test.assign(perm.begin() + c2, perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());

  size_t unlabeled = 0;
  for (uint32_t v : s.train) {
    bool any = false;
    for (size_t c = 0; c < g.C; ++c) any = any || g.has_label(v, c);
    if (!any) ++unlabeled;
  }
  if (unlabeled > 0)
    warn(strprintf("%zu training node(s) carry no positive label", unlabeled));
  return s;
}

bool has_split_override(const fs::path& dataset_dir) {
  return fs::exists(dataset_dir / "splits.json");
}

Split load_split_override(const fs::path& file, size_t n) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  Split s;
  auto read_set = [&](const char* key, std::vector<uint32_t>& out) {
    if (!j.contains(key) || !j[key].is_array())
      throw ParseError(file.string() + ": missing integer array '" +
                       std::string(key) + "'");
    for (const auto& v : j[key]) {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ParseError(file.string() + ": non-integer entry in '" +
                         std::string(key) + "'");
      int64_t x = v.get<int64_t>();
      if (x < 0 || static_cast<size_t>(x) >= n)
        throw StructuralError(
            strprintf("%s: node %lld out of range", file.string().c_str(),
                      static_cast<long long>(x)));
      out.push_back(static_cast<uint32_t>(x));
    }
    std::sort(out.begin(), out.end());
  };
  read_set("train", s.train);
  read_set("val", s.val);
  read_set("test", s.test);
  std::vector<uint8_t> seen(n, 0);
  size_t total = 0;
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (uint32_t v : *part) {
      if (seen[v]) throw StructuralError(file.string() + ": splits overlap");
      seen[v] = 1;
      ++total;
    }
  if (total != n)
    throw StructuralError(file.string() + ": splits must cover all nodes");
  return s;
}

SampledBlock sample_block(const Graph& g, const std::vector<uint32_t>& targets,
                          size_t fanout, uint64_t seed) {
  if (fanout < 1) throw ArgumentError("sample_block: fanout must be >= 1");
  for (uint32_t v : targets)
    if (v >= g.n) throw ArgumentError("sample_block: target out of range");

  SampledBlock b;
  b.targets = targets;
  b.cand_offsets.assign(1, 0);
  Rng rng(seed);

  auto local_id = [&b](uint32_t global) {
    auto [it, inserted] =
        b.global_to_local.insert({global, static_cast<uint32_t>(b.nodes.size())});
    if (inserted) b.nodes.push_back(global);
    return it->second;
  };
  for (uint32_t v : targets) local_id(v);

  std::vector<uint32_t> scratch;
  for (uint32_t v : targets) {
    auto nb = g.neighbors(v);
    if (nb.size() <= fanout) {
      for (uint32_t u : nb) {
        b.cand.push_back(u);
        local_id(u);
      }
    } else {
      scratch.assign(nb.begin(), nb.end());
      // partial Fisher-Yates: the first `fanout` entries are the sample
      for (size_t i = 0; i < fanout; ++i) {
        size_t j = i + rng.below(scratch.size() - i);
        std::swap(scratch[i], scratch[j]);
      }
      for (size_t i = 0; i < fanout; ++i) {
        b.cand.push_back(scratch[i]);
        local_id(scratch[i]);
      }
    }
    b.cand_offsets.push_back(b.cand.size());
  }
  return b;
}

std::vector<double> neighbor_label_jaccard(const Graph& g) {
  std::vector<double> out(g.n, 0.0);
  for (size_t v = 0; v < g.n; ++v) {
    auto nb = g.neighbors(v);
    if (nb.empty()) continue;
    double acc = 0.0;
    for (uint32_t u : nb) {
      size_t inter = 0, uni = 0;
      for (size_t c = 0; c < g.C; ++c) {
        bool a = g.has_label(v, c), b = g.has_label(u, c);
        inter += (a && b) ? 1 : 0;
        uni += (a || b) ? 1 : 0;
      }
      acc += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    out[v] = acc / static_cast<double>(nb.size());
  }
  return out;
}

Graph perturb_add_edges(const Graph& g, double proportion, uint64_t seed) {
  if (proportion < 0.0 || proportion > 1.0)
    throw ArgumentError("perturb_add_edges: proportion must lie in [0,1]");
  size_t m = g.num_undirected_edges();
  size_t want = static_cast<size_t>(std::floor(proportion * static_cast<double>(m)));

  std::vector<std::pair<uint32_t, uint32_t>> edges;
  std::unordered_set<uint64_t> present;
  auto key = [&g](uint32_t a, uint32_t b) {
    if (a > b) std::swap(a, b);
    return static_cast<uint64_t>(a) * g.n + b;
  };
  for (size_t v = 0; v < g.n; ++v)
    for (uint32_t u : g.neighbors(v))
      if (v < u) {
        edges.push_back({static_cast<uint32_t>(v), u});
        present.insert(key(static_cast<uint32_t>(v), u));
      }

  size_t capacity = g.n * (g.n - 1) / 2 - m;
  if (want > capacity)
    throw CapacityError(
        strprintf("cannot add %zu edges; only %zu non-edges exist", want, capacity));

  Rng rng(seed);
  size_t added = 0;
  while (added < want) {
    uint32_t u = static_cast<uint32_t>(rng.below(g.n));
    uint32_t v = static_cast<uint32_t>(rng.below(g.n));
    if (u == v) continue;
    uint64_t k = key(u, v);
    if (present.count(k)) continue;
    present.insert(k);
    edges.push_back({std::min(u, v), std::max(u, v)});
    ++added;
  }
  return build_graph(g.n, g.f, g.C, edges, g.features, g.labels);
}

DegreeBuckets degree_buckets(const Graph& g, const std::vector<size_t>& bucket_edges) {
  if (bucket_edges.size() < 2)
    throw ArgumentError("degree_buckets: need at least two boundaries");
  for (size_t i = 0; i + 1 < bucket_edges.size(); ++i)
    if (bucket_edges[i] >= bucket_edges[i + 1])
      throw ArgumentError("degree_buckets: boundaries must be strictly increasing");
  if (bucket_edges.front() != 0)
    throw ArgumentError("degree_buckets: first boundary must be 0");

  size_t max_deg = 0;
  for (size_t v = 0; v < g.n; ++v) max_deg = std::max(max_deg, g.degree(v));
  if (bucket_edges.back() <= max_deg)
    throw ArgumentError(
        strprintf("degree_buckets: boundaries do not cover max degree %zu", max_deg));

  size_t nb = bucket_edges.size() - 1;
  DegreeBuckets out;
  out.boundaries = bucket_edges;
  out.counts.assign(nb, 0);
  out.node_sets.assign(nb, {});
  for (size_t v = 0; v < g.n; ++v) {
    size_t d = g.degree(v);
    size_t i = static_cast<size_t>(
        std::upper_bound(bucket_edges.begin(), bucket_edges.end(), d) -
        bucket_edges.begin()) - 1;
    out.counts[i]++;
    out.node_sets[i].push_back(static_cast<uint32_t>(v));
  }
  return out;
}

}  // namespace mlgib
