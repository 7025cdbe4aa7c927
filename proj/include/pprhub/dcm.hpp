#pragma once

// Random directed multigraph construction with prescribed in/out degree
// sequences, driven as a breadth-first exploration from a source node.
// While the exploration runs, every node carries a label describing how the
// source can reach it relative to a distinguished hub set:
//
//   kOutside     not wired into the graph yet
//   kHubReached  in the graph, member of the hub set
//   kShielded    in the graph, non-hub, every path from the source passes
//                through a hub before arriving
//   kHubFree     in the graph, non-hub, reachable from the source without
//                touching any hub
//
// The construction also records the first iteration at which the hub-free
// region stops being a tree (an instub is sampled twice, or a hub-free node
// wires into an already shielded/hub-free node). Components the source walk
// never reaches are wired afterwards so the final graph always realizes the
// full degree sequence.

#include <cstdint>
#include <deque>
#include <limits>
#include <utility>
#include <vector>

#include "pprhub/common.hpp"
#include "pprhub/degrees.hpp"
#include "pprhub/graph.hpp"
#include "pprhub/rng.hpp"

namespace pprhub {

enum class NodeLabel : std::uint8_t {
  kOutside = 0,
  kHubReached = 1,
  kShielded = 2,
  kHubFree = 3,
};

inline const char* node_label_name(NodeLabel label) {
  switch (label) {
    case NodeLabel::kOutside: return "outside";
    case NodeLabel::kHubReached: return "hub_reached";
    case NodeLabel::kShielded: return "shielded";
    case NodeLabel::kHubFree: return "hub_free";
  }
  return "invalid";
}

/// Sentinel for "the tree phase never broke".
inline constexpr std::uint64_t kNoBreak =
    std::numeric_limits<std::uint64_t>::max();

enum class SourceMode { kUniformAll, kUniformNonHub };

struct ConstructionTrace {
  DirectedMultigraph graph;
  NodeId source = 0;
  /// First BFS iteration (1-based) with a repeated-instub draw or a
  /// hub-free -> shielded/hub-free wiring; kNoBreak if neither happened
  /// while exploring from the source.
  std::uint64_t break_iteration = kNoBreak;
  std::uint64_t rejection_count = 0;
  /// bfs_layers[j] lists the nodes at distance j from the source, in the
  /// order they were wired. Only the source's component is covered.
  std::vector<std::vector<NodeId>> bfs_layers;
  std::vector<NodeLabel> labels;
};

namespace detail {

struct NullPairingHooks {
  void on_break(std::uint64_t) {}
  void on_pair(std::uint64_t, NodeId, NodeId, bool) {}
  void on_iteration_end(std::uint64_t) {}
};

/// Stub-pairing core. Out-stubs are paired with uniformly sampled instubs;
/// draws that hit an already paired instub are rejected and retried. Hooks
/// observe the primary (source-component) phase only.
class PairingEngine {
 public:
  PairingEngine(const DegreeSequence& deg, const HubPartition& hubs)
      : deg_(&deg), hubs_(&hubs), n_(deg.in_deg.size()) {
    deg.validate();
    hubs.validate(n_);
    require(n_ <= std::numeric_limits<NodeId>::max(), "too many nodes");
    total_instubs_ = deg.total_instubs();
    instub_owner_.reserve(total_instubs_);
    for (std::uint64_t v = 0; v < n_; ++v)
      instub_owner_.insert(instub_owner_.end(), deg.in_deg[v],
                           static_cast<NodeId>(v));
    instub_paired_.assign(total_instubs_, 0);
    labels_.assign(n_, NodeLabel::kOutside);
    adj_.resize(n_);
  }

  template <class Hooks>
  void run_primary(NodeId source, Rng& rng, Hooks& hooks,
                   std::vector<std::vector<NodeId>>* layers_out) {
    source_ = source;
    labels_[source] =
        hubs_->is_hub(source) ? NodeLabel::kHubReached : NodeLabel::kHubFree;
    std::vector<NodeId> frontier{source};
    if (layers_out) layers_out->push_back(frontier);
    for (std::uint64_t m = 1; !frontier.empty(); ++m) {
      std::vector<NodeId> next;
      for (const NodeId vp : frontier)
        for (std::uint32_t j = 0; j < deg_->out_deg[vp]; ++j)
          pair_one(m, vp, rng, hooks, &next);
      frontier = std::move(next);
      if (layers_out && !frontier.empty()) layers_out->push_back(frontier);
      hooks.on_iteration_end(m);
    }
  }

  /// Wires every component the primary walk missed. Seeds are taken in node
  /// order; labels keep following the same transition rules, but break
  /// tracking stays frozen (the source's neighborhood is already decided).
  void finish_secondary(Rng& rng) {
    in_secondary_ = true;
    NullPairingHooks hooks;
    NodeId scan = 0;
    while (paired_count_ < total_instubs_) {
      while (scan < n_ && !(labels_[scan] == NodeLabel::kOutside &&
                            deg_->out_deg[scan] > 0))
        ++scan;
      require(scan < n_, "unpaired instubs remain but no outstub owner left");
      labels_[scan] =
          hubs_->is_hub(scan) ? NodeLabel::kHubReached : NodeLabel::kShielded;
      std::vector<NodeId> frontier{scan};
      while (!frontier.empty()) {
        std::vector<NodeId> next;
        for (const NodeId vp : frontier)
          for (std::uint32_t j = 0; j < deg_->out_deg[vp]; ++j)
            pair_one(0, vp, rng, hooks, &next);
        frontier = std::move(next);
      }
    }
  }

  DirectedMultigraph build_graph() const {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    pairs.reserve(total_instubs_);
    for (std::uint64_t v = 0; v < n_; ++v)
      for (const NodeId t : adj_[v])
        pairs.emplace_back(static_cast<NodeId>(v), t);
    return build_from_pairs(n_, pairs);
  }

  std::uint64_t break_iteration() const { return break_iteration_; }
  std::uint64_t rejection_count() const { return rejection_count_; }
  const std::vector<NodeLabel>& labels() const { return labels_; }
  NodeId source() const { return source_; }

 private:
  template <class Hooks>
  void pair_one(std::uint64_t m, NodeId vp, Rng& rng, Hooks& hooks,
                std::vector<NodeId>* next) {
    std::uint64_t e;
    for (;;) {
      e = uniform_below(rng, total_instubs_);
      if (!instub_paired_[e]) break;
      ++rejection_count_;
      record_break(m, hooks);
    }
    const NodeId v = instub_owner_[e];
    const NodeLabel lv = labels_[v];
    const NodeLabel lp = labels_[vp];
    if (lp == NodeLabel::kHubFree &&
        (lv == NodeLabel::kShielded || lv == NodeLabel::kHubFree))
      record_break(m, hooks);
    const bool was_outside = lv == NodeLabel::kOutside;
    if (was_outside && next) next->push_back(v);
    instub_paired_[e] = 1;
    ++paired_count_;
    adj_[vp].push_back(v);
    hooks.on_pair(m, vp, v, was_outside);
    if (hubs_->is_hub(v)) {
      if (lv == NodeLabel::kOutside) labels_[v] = NodeLabel::kHubReached;
    } else if (lp == NodeLabel::kHubReached && lv == NodeLabel::kOutside) {
      labels_[v] = NodeLabel::kShielded;
    } else if ((lp == NodeLabel::kShielded || lp == NodeLabel::kHubFree) &&
               lv == NodeLabel::kOutside) {
      labels_[v] = lp;
    } else if (lp == NodeLabel::kHubFree && lv == NodeLabel::kShielded) {
      // a shielded node just became reachable hub-free; everything it can
      // reach through already built edges inherits that
      labels_[v] = NodeLabel::kHubFree;
      std::deque<NodeId> queue{v};
      while (!queue.empty()) {
        const NodeId u = queue.front();
        queue.pop_front();
        for (const NodeId t : adj_[u])
          if (labels_[t] == NodeLabel::kShielded) {
            labels_[t] = NodeLabel::kHubFree;
            queue.push_back(t);
          }
      }
    }
  }

  template <class Hooks>
  void record_break(std::uint64_t m, Hooks& hooks) {
    if (in_secondary_ || break_iteration_ != kNoBreak) return;
    break_iteration_ = m;
    hooks.on_break(m);
  }

  const DegreeSequence* deg_;
  const HubPartition* hubs_;
  std::uint64_t n_;
  std::uint64_t total_instubs_ = 0;
  std::vector<NodeId> instub_owner_;
  std::vector<std::uint8_t> instub_paired_;
  std::uint64_t paired_count_ = 0;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<NodeLabel> labels_;
  std::uint64_t break_iteration_ = kNoBreak;
  std::uint64_t rejection_count_ = 0;
  NodeId source_ = 0;
  bool in_secondary_ = false;
};

inline NodeId sample_source(const HubPartition& hubs, SourceMode mode,
                            Rng& rng) {
  const std::uint64_t n = hubs.node_count();
  if (mode == SourceMode::kUniformAll)
    return static_cast<NodeId>(uniform_below(rng, n));
  const std::uint64_t non_hubs = n - hubs.hub_count();
  require(non_hubs > 0, "no non-hub nodes to draw a source from");
  std::uint64_t idx = uniform_below(rng, non_hubs);
  for (std::uint64_t v = 0; v < n; ++v)
    if (!hubs.is_hub(static_cast<NodeId>(v)) && idx-- == 0)
      return static_cast<NodeId>(v);
  throw NumericError("source sampling fell through");
}

inline ConstructionTrace run_full_construction(const DegreeSequence& deg,
                                               const HubPartition& hubs,
                                               NodeId source, Rng& rng) {
  PairingEngine engine(deg, hubs);
  NullPairingHooks hooks;
  ConstructionTrace trace;
  engine.run_primary(source, rng, hooks, &trace.bfs_layers);
  engine.finish_secondary(rng);
  trace.graph = engine.build_graph();
  trace.source = source;
  trace.break_iteration = engine.break_iteration();
  trace.rejection_count = engine.rejection_count();
  trace.labels = engine.labels();
  return trace;
}

}  // namespace detail

inline ConstructionTrace construct_dcm_from_source(const DegreeSequence& deg,
                                                   const HubPartition& hubs,
                                                   NodeId source,
                                                   std::uint64_t seed) {
  require(source < deg.in_deg.size(), "source out of range");
  auto rng = make_rng(seed);
  return detail::run_full_construction(deg, hubs, source, rng);
}

inline ConstructionTrace construct_dcm(const DegreeSequence& deg,
                                       const HubPartition& hubs,
                                       SourceMode mode, std::uint64_t seed) {
  hubs.validate(deg.in_deg.size());
  auto rng = make_rng(seed);
  // source choice and pairing share one stream so a seed pins the whole run
  const NodeId source = detail::sample_source(hubs, mode, rng);
  return detail::run_full_construction(deg, hubs, source, rng);
}

}  // namespace pprhub
