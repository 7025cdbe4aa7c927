#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pprhub/common.hpp"
#include "pprhub/io.hpp"

namespace pprhub {

/// How a node with no out-edges behaves under the random walk: it either
/// holds the walker in place until the restart fires (kAbsorb, the default,
/// i.e. an implicit self-loop in the transition matrix only), or such nodes
/// are removed at load time (kDrop, applied iteratively).
enum class DanglingPolicy : std::uint8_t { kAbsorb = 0, kDrop = 1 };

/// Immutable directed multigraph in CSR form. Self-loops and parallel edges
/// are first-class; degrees always count actual edges (the absorb convention
/// lives in the walk operators, not in the structure).
struct DirectedMultigraph {
  std::uint64_t node_count = 0;
  std::vector<std::uint64_t> out_offsets;  // size node_count+1, non-decreasing
  std::vector<NodeId> out_targets;         // sorted ascending within each row
  std::vector<std::uint32_t> in_degrees;   // size node_count
  DanglingPolicy dangling_policy = DanglingPolicy::kAbsorb;

  std::uint64_t edge_count() const { return out_targets.size(); }

  std::uint32_t out_degree(NodeId v) const {
    return static_cast<std::uint32_t>(out_offsets[v + 1] - out_offsets[v]);
  }

  std::span<const NodeId> out_edges(NodeId v) const {
    return {out_targets.data() + out_offsets[v], out_degree(v)};
  }

  bool has_dangling() const {
    for (std::uint64_t v = 0; v < node_count; ++v)
      if (out_offsets[v + 1] == out_offsets[v]) return true;
    return false;
  }

  void validate() const {
    require(node_count > 0, "graph must have at least one node");
    require(out_offsets.size() == node_count + 1, "offset array size mismatch");
    require(out_offsets.front() == 0, "offsets must start at 0");
    require(out_offsets.back() == out_targets.size(), "offsets must end at edge count");
    require(in_degrees.size() == node_count, "in-degree array size mismatch");
    std::vector<std::uint32_t> counted(node_count, 0);
    for (std::uint64_t v = 0; v < node_count; ++v) {
      require(out_offsets[v] <= out_offsets[v + 1], "offsets must be non-decreasing");
      NodeId prev = 0;
      bool first = true;
      for (NodeId t : out_edges(static_cast<NodeId>(v))) {
        require(t < node_count, "edge target out of range");
        require(first || t >= prev, "row targets must be sorted");
        prev = t;
        first = false;
        ++counted[t];
      }
    }
    require(counted == in_degrees, "in-degrees must match edge targets");
  }
};

/// Hub set K plus its complement indicator U (non_hub[v] == 1 iff v is not a
/// hub). hub_list is sorted ascending and duplicate-free.
struct HubPartition {
  std::vector<std::uint8_t> non_hub;
  std::vector<NodeId> hub_list;

  std::uint64_t node_count() const { return non_hub.size(); }
  std::size_t hub_count() const { return hub_list.size(); }
  bool is_hub(NodeId v) const { return non_hub[v] == 0; }

  static HubPartition none(std::uint64_t n) {
    HubPartition p;
    p.non_hub.assign(n, 1);
    return p;
  }

  static HubPartition from_hub_list(std::uint64_t n, std::vector<NodeId> hubs) {
    HubPartition p;
    p.non_hub.assign(n, 1);
    std::sort(hubs.begin(), hubs.end());
    for (std::size_t i = 0; i < hubs.size(); ++i) {
      require(hubs[i] < n, "hub id out of range");
      require(i == 0 || hubs[i] != hubs[i - 1], "duplicate hub id");
      p.non_hub[hubs[i]] = 0;
    }
    p.hub_list = std::move(hubs);
    return p;
  }

  static HubPartition from_indicator(std::vector<std::uint8_t> non_hub_indicator) {
    HubPartition p;
    p.non_hub = std::move(non_hub_indicator);
    for (std::uint64_t v = 0; v < p.non_hub.size(); ++v) {
      require(p.non_hub[v] <= 1, "indicator entries must be 0 or 1");
      if (p.non_hub[v] == 0) p.hub_list.push_back(static_cast<NodeId>(v));
    }
    return p;
  }

  void validate(std::uint64_t n) const {
    require(non_hub.size() == n, "indicator size mismatch");
    std::uint64_t hubs_seen = 0;
    for (std::uint64_t v = 0; v < n; ++v) hubs_seen += (non_hub[v] == 0);
    require(hubs_seen == hub_list.size(), "hub list and indicator disagree");
    for (std::size_t i = 0; i < hub_list.size(); ++i) {
      require(hub_list[i] < n, "hub id out of range");
      require(i == 0 || hub_list[i] > hub_list[i - 1], "hub list must be sorted unique");
      require(non_hub[hub_list[i]] == 0, "hub list entry not marked in indicator");
    }
  }
};

/// Deterministic CSR construction: layout depends only on the edge multiset.
inline DirectedMultigraph build_from_pairs(
    std::uint64_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  require(n > 0, "graph must have at least one node");
  DirectedMultigraph g;
  g.node_count = n;
  g.out_offsets.assign(n + 1, 0);
  g.in_degrees.assign(n, 0);
  for (const auto& [u, v] : edges) {
    require(u < n && v < n, "edge endpoint out of range");
    ++g.out_offsets[u + 1];
    ++g.in_degrees[v];
  }
  for (std::uint64_t v = 0; v < n; ++v) g.out_offsets[v + 1] += g.out_offsets[v];
  g.out_targets.assign(edges.size(), 0);
  std::vector<std::uint64_t> cursor(g.out_offsets.begin(), g.out_offsets.end() - 1);
  for (const auto& [u, v] : edges) g.out_targets[cursor[u]++] = v;
  for (std::uint64_t v = 0; v < n; ++v) {
    std::sort(g.out_targets.begin() + static_cast<std::ptrdiff_t>(g.out_offsets[v]),
              g.out_targets.begin() + static_cast<std::ptrdiff_t>(g.out_offsets[v + 1]));
  }
  return g;
}

struct EdgeListResult {
  DirectedMultigraph graph;
  std::vector<std::int64_t> raw_of_dense;
  std::unordered_map<std::int64_t, NodeId> dense_of_raw;
};

namespace detail {

inline bool parse_i64(const std::string& tok, std::int64_t& out) {
  if (tok.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(tok, &pos);
  } catch (...) {
    return false;
  }
  return pos == tok.size();
}

}  // namespace detail

/// Whitespace-separated "src dst" pairs, one per line; '#' lines are
/// comments. Raw ids are arbitrary 64-bit integers, densified in order of
/// first appearance.
inline EdgeListResult load_edge_list_stream(std::istream& is,
                                            DanglingPolicy policy = DanglingPolicy::kAbsorb,
                                            const std::string& origin = "<stream>") {
  std::vector<std::pair<std::int64_t, std::int64_t>> raw_edges;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    std::istringstream fields(line);
    std::string a, b, extra;
    fields >> a >> b;
    std::int64_t u = 0, v = 0;
    const bool two_fields = !b.empty() && !(fields >> extra);
    if (!two_fields || !detail::parse_i64(a, u) || !detail::parse_i64(b, v)) {
      throw ValidationError(origin + ": malformed edge at line " +
                            std::to_string(line_no));
    }
    raw_edges.emplace_back(u, v);
  }
  require(!raw_edges.empty(), origin + ": no edges found (empty graph)");

  EdgeListResult result;
  auto dense_id = [&](std::int64_t raw) -> NodeId {
    auto [it, inserted] = result.dense_of_raw.try_emplace(
        raw, static_cast<NodeId>(result.raw_of_dense.size()));
    if (inserted) result.raw_of_dense.push_back(raw);
    return it->second;
  };
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(raw_edges.size());
  for (const auto& [u, v] : raw_edges) {
    const NodeId du = dense_id(u);
    const NodeId dv = dense_id(v);
    edges.emplace_back(du, dv);
  }
  std::uint64_t n = result.raw_of_dense.size();

  if (policy == DanglingPolicy::kDrop) {
    // Iteratively peel zero-out-degree nodes; edges into removed nodes go too.
    std::vector<std::uint8_t> alive(n, 1);
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<std::uint64_t> out_deg(n, 0);
      for (const auto& [u, v] : edges)
        if (alive[u] && alive[v]) ++out_deg[u];
      for (std::uint64_t v = 0; v < n; ++v) {
        if (alive[v] && out_deg[v] == 0) {
          alive[v] = 0;
          changed = true;
        }
      }
    }
    std::vector<NodeId> remap(n, 0);
    std::vector<std::int64_t> kept_raw;
    NodeId next = 0;
    for (std::uint64_t v = 0; v < n; ++v) {
      if (alive[v]) {
        remap[v] = next++;
        kept_raw.push_back(result.raw_of_dense[v]);
      }
    }
    require(next > 0, origin + ": dropping dangling nodes left an empty graph");
    std::vector<std::pair<NodeId, NodeId>> kept_edges;
    for (const auto& [u, v] : edges)
      if (alive[u] && alive[v]) kept_edges.emplace_back(remap[u], remap[v]);
    result.raw_of_dense = std::move(kept_raw);
    result.dense_of_raw.clear();
    for (std::uint64_t v = 0; v < result.raw_of_dense.size(); ++v)
      result.dense_of_raw.emplace(result.raw_of_dense[v], static_cast<NodeId>(v));
    edges = std::move(kept_edges);
    n = result.raw_of_dense.size();
  }

  result.graph = build_from_pairs(n, edges);
  result.graph.dangling_policy = policy;
  return result;
}

inline EdgeListResult load_edge_list(const std::string& path,
                                     DanglingPolicy policy = DanglingPolicy::kAbsorb) {
  std::ifstream is(path);
  require(is.is_open(), "cannot open edge list: " + path);
  return load_edge_list_stream(is, policy, path);
}

/// Non-hub nodes whose every out-edge lands in the hub set; nodes with no
/// out-edges qualify vacuously. Sorted ascending.
inline std::vector<NodeId> zero_error_set(const DirectedMultigraph& g,
                                          const HubPartition& hubs) {
  hubs.validate(g.node_count);
  std::vector<NodeId> out;
  for (std::uint64_t v = 0; v < g.node_count; ++v) {
    if (hubs.is_hub(static_cast<NodeId>(v))) continue;
    bool all_hub = true;
    for (NodeId t : g.out_edges(static_cast<NodeId>(v))) {
      if (!hubs.is_hub(t)) {
        all_hub = false;
        break;
      }
    }
    if (all_hub) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

// ---- binary cache ----------------------------------------------------------

namespace detail {
inline constexpr char kGraphMagic[8] = {'P', 'P', 'R', 'H', 'U', 'B', 'G', '1'};
inline constexpr std::uint32_t kGraphCacheVersion = 1;
}  // namespace detail

inline void save_graph_cache(const std::string& path, const DirectedMultigraph& g,
                             const std::vector<std::int64_t>& raw_of_dense = {}) {
  require(raw_of_dense.empty() || raw_of_dense.size() == g.node_count,
          "raw id map size mismatch");
  atomic_write_file(
      path,
      [&](std::ostream& os) {
        BinaryWriter w(os);
        w.bytes(detail::kGraphMagic, sizeof(detail::kGraphMagic));
        w.u32(detail::kGraphCacheVersion);
        w.u8(static_cast<std::uint8_t>(g.dangling_policy));
        w.u8(raw_of_dense.empty() ? 0 : 1);
        w.u64(g.node_count);
        w.u64(g.edge_count());
        for (std::uint64_t off : g.out_offsets) w.u64(off);
        for (NodeId t : g.out_targets) w.u32(t);
        for (std::uint32_t d : g.in_degrees) w.u32(d);
        for (std::int64_t raw : raw_of_dense) w.i64(raw);
      },
      /*binary=*/true);
}

struct GraphCache {
  DirectedMultigraph graph;
  std::vector<std::int64_t> raw_of_dense;
};

inline GraphCache load_graph_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.is_open(), "cannot open graph cache: " + path);
  BinaryReader r(is);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  require(std::equal(magic, magic + 8, detail::kGraphMagic),
          path + ": not a graph cache file");
  const std::uint32_t version = r.u32();
  require(version == detail::kGraphCacheVersion,
          path + ": unsupported cache version " + std::to_string(version));
  GraphCache cache;
  cache.graph.dangling_policy = static_cast<DanglingPolicy>(r.u8());
  const bool has_raw = r.u8() != 0;
  cache.graph.node_count = r.u64();
  const std::uint64_t edges = r.u64();
  cache.graph.out_offsets.resize(cache.graph.node_count + 1);
  for (auto& off : cache.graph.out_offsets) off = r.u64();
  cache.graph.out_targets.resize(edges);
  for (auto& t : cache.graph.out_targets) t = r.u32();
  cache.graph.in_degrees.resize(cache.graph.node_count);
  for (auto& d : cache.graph.in_degrees) d = r.u32();
  if (has_raw) {
    cache.raw_of_dense.resize(cache.graph.node_count);
    for (auto& raw : cache.raw_of_dense) raw = r.i64();
  }
  cache.graph.validate();
  return cache;
}

}  // namespace pprhub
