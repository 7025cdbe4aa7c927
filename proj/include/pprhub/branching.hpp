#pragma once

// Branching-process companion to the graph construction in dcm.hpp. A
// multi-type tree grows generation by generation: each node carries the
// attribute triple (in-degree, out-degree, non-hub flag) of some graph node,
// children draw their attributes size-biased by in-degree, and only non-hub
// nodes reproduce. Generation weights of the tree reproduce the killed
// hub-avoiding walk on the graph exactly for as long as the exploration of a
// freshly wired graph looks like a tree, which is the basis of the lockstep
// construction and the two-sample distribution check below.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "pprhub/common.hpp"
#include "pprhub/dcm.hpp"
#include "pprhub/degrees.hpp"
#include "pprhub/graph.hpp"
#include "pprhub/ppr.hpp"
#include "pprhub/rng.hpp"
#include "pprhub/stats.hpp"

namespace pprhub {

/// Empirical attribute laws of a degree sequence with a hub partition.
/// Offspring attributes are those of a node drawn with probability
/// proportional to its in-degree; the root law is uniform over non-hubs.
class AttributeDistributions {
 public:
  static AttributeDistributions build(const DegreeSequence& deg,
                                      const HubPartition& hubs) {
    deg.validate();
    const std::uint64_t n = deg.in_deg.size();
    hubs.validate(n);
    AttributeDistributions dist;
    dist.in_deg_ = deg.in_deg;
    dist.out_deg_ = deg.out_deg;
    dist.non_hub_ = hubs.non_hub;
    dist.total_instubs_ = deg.total_instubs();
    require(dist.total_instubs_ > 0, "attribute law needs at least one instub");
    std::vector<double> weights(n);
    double non_hub_mass = 0.0;
    for (std::uint64_t v = 0; v < n; ++v) {
      weights[v] = static_cast<double>(deg.in_deg[v]);
      if (hubs.non_hub[v]) {
        non_hub_mass += weights[v];
        dist.non_hub_nodes_.push_back(static_cast<NodeId>(v));
      }
    }
    dist.alias_ = AliasSampler(weights);
    dist.non_hub_share_ =
        non_hub_mass / static_cast<double>(dist.total_instubs_);
    return dist;
  }

  NodeId draw_size_biased(Rng& rng) const { return alias_.draw(rng); }

  NodeId draw_root(Rng& rng) const {
    require(!non_hub_nodes_.empty(), "no non-hub nodes to root a tree at");
    return non_hub_nodes_[uniform_below(rng, non_hub_nodes_.size())];
  }

  /// Probability that a size-biased draw carries this exact attribute triple.
  double size_biased_pmf(std::uint32_t in_d, std::uint32_t out_d,
                         bool non_hub) const {
    double mass = 0.0;
    for (std::size_t v = 0; v < in_deg_.size(); ++v)
      if (in_deg_[v] == in_d && out_deg_[v] == out_d &&
          (non_hub_[v] == 1) == non_hub)
        mass += static_cast<double>(in_deg_[v]);
    return mass / static_cast<double>(total_instubs_);
  }

  /// Probability that a size-biased draw is a non-hub node.
  double non_hub_share() const { return non_hub_share_; }

  std::uint32_t in_of(NodeId v) const { return in_deg_[v]; }
  std::uint32_t out_of(NodeId v) const { return out_deg_[v]; }
  std::uint8_t non_hub_of(NodeId v) const { return non_hub_[v]; }
  std::uint64_t node_count() const { return in_deg_.size(); }

 private:
  std::vector<std::uint32_t> in_deg_;
  std::vector<std::uint32_t> out_deg_;
  std::vector<std::uint8_t> non_hub_;
  std::vector<NodeId> non_hub_nodes_;
  AliasSampler alias_;
  std::uint64_t total_instubs_ = 0;
  double non_hub_share_ = 0.0;
};

inline constexpr std::uint32_t kTreeRoot =
    std::numeric_limits<std::uint32_t>::max();
inline constexpr std::uint32_t kUnmappedNode =
    std::numeric_limits<std::uint32_t>::max();
inline constexpr std::uint64_t kDefaultTreeNodeCap = 10'000'000;

struct TreeNode {
  std::uint32_t parent = kTreeRoot;
  std::uint32_t in_deg = 0;
  std::uint32_t out_deg = 0;
  std::uint8_t non_hub = 0;
};

/// Arena-allocated tree, generation-contiguous: gen_ranges[g] is the
/// half-open index range of the nodes at depth g.
struct GenerationTree {
  std::vector<TreeNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> gen_ranges;
};

namespace detail {

class TreeBuilder {
 public:
  explicit TreeBuilder(std::uint64_t node_cap) : cap_(node_cap) {}

  std::uint32_t add_root(std::uint32_t in_d, std::uint32_t out_d,
                         std::uint8_t non_hub) {
    require(tree_.nodes.empty(), "tree already has a root");
    tree_.nodes.push_back({kTreeRoot, in_d, out_d, non_hub});
    depth_.push_back(0);
    child_count_.push_back(0);
    gen_begin_ = {0};
    return 0;
  }

  std::uint32_t add_child(std::uint32_t parent, std::uint32_t in_d,
                          std::uint32_t out_d, std::uint8_t non_hub) {
    if (tree_.nodes.size() >= cap_)
      throw TreeExplodedError("tree node cap exceeded");
    const std::uint32_t d = depth_[parent] + 1;
    // children may only extend the last generation or open the next one
    const std::uint32_t max_d = depth_.back();
    require(d == max_d || d == max_d + 1, "tree grew out of generation order");
    if (d == max_d + 1) gen_begin_.push_back(tree_.nodes.size());
    const auto idx = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.push_back({parent, in_d, out_d, non_hub});
    depth_.push_back(d);
    child_count_.push_back(0);
    ++child_count_[parent];
    return idx;
  }

  /// Tops up every node of generation g to its full out-degree with fresh
  /// size-biased draws. When only_non_hub is set, hub nodes stay barren.
  void fill_generation(std::size_t g, const AttributeDistributions& dist,
                       Rng& rng, bool only_non_hub) {
    if (g + 1 > gen_begin_.size()) return;
    const std::size_t begin = gen_begin_[g];
    const std::size_t end =
        g + 1 < gen_begin_.size() ? gen_begin_[g + 1] : tree_.nodes.size();
    for (std::size_t i = begin; i < end; ++i) {
      if (only_non_hub && !tree_.nodes[i].non_hub) continue;
      while (child_count_[i] < tree_.nodes[i].out_deg) {
        const NodeId h = dist.draw_size_biased(rng);
        add_child(static_cast<std::uint32_t>(i), dist.in_of(h), dist.out_of(h),
                  dist.non_hub_of(h));
      }
    }
  }

  /// Finishes growing the tree to max_depth. The first generation found
  /// mid-build is completed unconditionally (those offspring were owed by the
  /// lockstep fill rule, which ignores the hub gate); all later generations
  /// grow hub-gated. Stops early once a generation comes out empty.
  void complete_to_depth(const AttributeDistributions& dist, Rng& rng,
                         std::uint64_t max_depth) {
    bool in_flight_handled = false;
    for (std::size_t g = 0; g < max_depth; ++g) {
      bool needs_fill = false;
      const std::size_t begin = gen_begin_[g];
      const std::size_t end =
          g + 1 < gen_begin_.size() ? gen_begin_[g + 1] : tree_.nodes.size();
      for (std::size_t i = begin; i < end && !needs_fill; ++i)
        needs_fill = child_count_[i] < tree_.nodes[i].out_deg;
      const bool ungated = needs_fill && !in_flight_handled;
      in_flight_handled = in_flight_handled || needs_fill;
      fill_generation(g, dist, rng, /*only_non_hub=*/!ungated);
      if (g + 1 >= gen_begin_.size()) break;  // generation g+1 is empty
    }
  }

  GenerationTree finalize() && {
    for (std::size_t g = 0; g < gen_begin_.size(); ++g) {
      const std::size_t end =
          g + 1 < gen_begin_.size() ? gen_begin_[g + 1] : tree_.nodes.size();
      tree_.gen_ranges.emplace_back(gen_begin_[g], end);
    }
    return std::move(tree_);
  }

 private:
  GenerationTree tree_;
  std::vector<std::uint32_t> depth_;
  std::vector<std::uint32_t> child_count_;
  std::vector<std::size_t> gen_begin_;
  std::uint64_t cap_;
};

}  // namespace detail

inline GenerationTree grow_tree(const AttributeDistributions& dist,
                                std::uint64_t generations, std::uint64_t seed,
                                std::uint64_t node_cap = kDefaultTreeNodeCap) {
  auto rng = make_rng(seed);
  detail::TreeBuilder builder(node_cap);
  const NodeId root = dist.draw_root(rng);
  builder.add_root(dist.in_of(root), dist.out_of(root), 1);
  builder.complete_to_depth(dist, rng, generations);
  return std::move(builder).finalize();
}

/// node_weight[i]: product of (1-alpha)/out_deg over the non-hub ancestors of
/// node i (zero past any hub ancestor). per_generation[g]: sum of node_weight
/// over the non-hub nodes of generation g.
struct TreeWeights {
  std::vector<double> node_weight;
  std::vector<double> per_generation;
};

inline TreeWeights tree_weights(const GenerationTree& tree, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(!tree.nodes.empty(), "tree has no root");
  TreeWeights w;
  w.node_weight.assign(tree.nodes.size(), 0.0);
  w.node_weight[0] = 1.0;
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    const auto& parent = tree.nodes[tree.nodes[i].parent];
    if (!parent.non_hub) continue;  // weight stays zero
    require(parent.out_deg > 0, "child of a leaf");
    w.node_weight[i] = w.node_weight[tree.nodes[i].parent] * (1.0 - alpha) /
                       static_cast<double>(parent.out_deg);
  }
  w.per_generation.reserve(tree.gen_ranges.size());
  for (const auto& [begin, end] : tree.gen_ranges) {
    double x = 0.0;
    for (std::size_t i = begin; i < end; ++i)
      if (tree.nodes[i].non_hub) x += w.node_weight[i];
    w.per_generation.push_back(x);
  }
  return w;
}

/// alpha * sum_{j=1}^{m-1} X_j + X_m, where X_j is the generation-j weight
/// (zero beyond the grown depth). For m = 0 this is just X_0.
inline double tail_quantity(const TreeWeights& weights, double alpha,
                            std::uint64_t m) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  auto x = [&](std::uint64_t j) {
    return j < weights.per_generation.size() ? weights.per_generation[j] : 0.0;
  };
  if (m == 0) return x(0);
  double acc = 0.0;
  for (std::uint64_t j = 1; j < m; ++j) acc += x(j);
  return alpha * acc + x(m);
}

/// One lockstep run: the graph is wired exactly as construct_dcm would wire
/// it while a tree shadows the exploration. Until the break the shadow is a
/// faithful copy (phi maps wired nodes to their arena images, attributes and
/// depths agree); afterwards the tree finishes growing on fresh draws alone.
struct CouplingRun {
  ConstructionTrace trace;
  GenerationTree tree;
  TreeWeights weights;
  std::vector<std::uint32_t> phi;
  std::uint64_t m_max = 0;
  double alpha = 0.0;
};

namespace detail {

struct CouplingHooks {
  TreeBuilder* builder;
  std::vector<std::uint32_t>* phi;
  const AttributeDistributions* dist;
  Rng* rng;
  std::uint64_t m_max;
  bool broken = false;

  void on_break(std::uint64_t) { broken = true; }

  void on_pair(std::uint64_t m, NodeId from, NodeId to, bool to_was_outside) {
    if (broken || m > m_max) return;
    const std::uint32_t parent = (*phi)[from];
    if (parent == kUnmappedNode) return;
    const std::uint32_t child = builder->add_child(
        parent, dist->in_of(to), dist->out_of(to), dist->non_hub_of(to));
    if (to_was_outside) (*phi)[to] = child;
  }

  void on_iteration_end(std::uint64_t m) {
    if (broken || m > m_max) return;
    // arena copies without a graph counterpart receive their offspring from
    // the attribute law once the graph is done wiring this generation
    builder->fill_generation(m - 1, *dist, *rng, /*only_non_hub=*/false);
  }
};

}  // namespace detail

inline CouplingRun simultaneous_construct(
    const DegreeSequence& deg, const HubPartition& hubs, double alpha,
    std::uint64_t m_max, std::uint64_t seed,
    std::uint64_t node_cap = kDefaultTreeNodeCap) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  const auto dist = AttributeDistributions::build(deg, hubs);
  auto rng = make_rng(seed);
  const NodeId source =
      detail::sample_source(hubs, SourceMode::kUniformNonHub, rng);
  detail::PairingEngine engine(deg, hubs);
  detail::TreeBuilder builder(node_cap);
  builder.add_root(deg.in_deg[source], deg.out_deg[source], 1);
  CouplingRun run;
  run.alpha = alpha;
  run.m_max = m_max;
  run.phi.assign(deg.in_deg.size(), kUnmappedNode);
  run.phi[source] = 0;
  detail::CouplingHooks hooks{&builder, &run.phi, &dist, &rng, m_max};
  engine.run_primary(source, rng, hooks, &run.trace.bfs_layers);
  engine.finish_secondary(rng);
  // the graph is fully wired; whatever the tree still owes (post-break
  // generations, or depths the exploration never reached) grows hub-gated
  builder.complete_to_depth(dist, rng, m_max);
  run.trace.graph = engine.build_graph();
  run.trace.source = source;
  run.trace.break_iteration = engine.break_iteration();
  run.trace.rejection_count = engine.rejection_count();
  run.trace.labels = engine.labels();
  run.tree = std::move(builder).finalize();
  run.weights = tree_weights(run.tree, alpha);
  return run;
}

/// Two-sample comparison of the killed-walk mass: graph runs keep only
/// constructions whose exploration stayed tree-like through depth m, tree
/// runs are unconditional. Sample sizes of at most 100 get an exact p-value.
struct CouplingCheck {
  double ks_stat = 0.0;
  double p_value = 1.0;
  std::size_t n_graph = 0;
  std::size_t n_tree = 0;
  double rejection_rate = 0.0;
  bool insufficient = false;
  std::vector<double> graph_samples;
  std::vector<double> tree_samples;
};

inline CouplingCheck coupling_distribution_check(const DegreeSequence& deg,
                                                 const HubPartition& hubs,
                                                 double alpha, std::uint32_t m,
                                                 std::uint64_t runs,
                                                 std::uint64_t seed) {
  require(runs >= 1, "need at least one run per side");
  const auto dist = AttributeDistributions::build(deg, hubs);
  CouplingCheck check;
  std::uint64_t discarded = 0;
  for (std::uint64_t r = 0; r < runs; ++r) {
    const auto trace = construct_dcm(deg, hubs, SourceMode::kUniformNonHub,
                                     splitmix64(seed + 2 * r));
    if (trace.break_iteration <= m) {
      ++discarded;
      continue;
    }
    check.graph_samples.push_back(
        mu_truncated(trace.graph, hubs, trace.source, alpha, m).mass);
  }
  for (std::uint64_t r = 0; r < runs; ++r) {
    const auto tree = grow_tree(dist, m, splitmix64(seed + 2 * r + 1));
    const auto weights = tree_weights(tree, alpha);
    double mass = 0.0;
    for (std::uint32_t j = 0; j <= m; ++j)
      mass += j < weights.per_generation.size() ? weights.per_generation[j]
                                                : 0.0;
    check.tree_samples.push_back(mass);
  }
  check.n_graph = check.graph_samples.size();
  check.n_tree = check.tree_samples.size();
  check.rejection_rate =
      static_cast<double>(discarded) / static_cast<double>(runs);
  check.insufficient = check.n_graph < 5;
  if (check.n_graph == 0) return check;  // nothing to compare against
  const auto ks = ks_two_sample(check.graph_samples, check.tree_samples);
  check.ks_stat = ks.statistic;
  check.p_value = ks.p_value;
  return check;
}

/// Parameters of the depth rule m = c * log n, with c the minimum of three
/// competing constraints (neighborhood growth, hub shielding, and the
/// epsilon-accuracy budget of the walk tail).
struct CouplingDepthParams {
  double delta = 0.0;
  double p = 0.0;
  double zeta = 0.0;
  double rho = 0.0;
  double tau = 0.0;
  double epsilon = 0.0;
};

struct CouplingDepthConstant {
  double value = 0.0;
  int branch = 0;  // index of the binding constraint in branches
  std::array<double, 3> branches{};
};

inline CouplingDepthConstant coupling_depth_constant(
    const CouplingDepthParams& q) {
  require(q.delta > 0.0, "delta must be positive");
  require(q.p > 0.0 && q.p < 1.0, "p must lie in (0, 1)");
  require(q.zeta > 1.0, "zeta must exceed 1");
  require(q.rho > 0.0, "rho must be positive");
  require(q.tau > 0.0 && q.tau < 1.0, "tau must lie in (0, 1)");
  require(q.epsilon > 0.0, "epsilon must be positive");
  CouplingDepthConstant out;
  out.branches[0] = q.delta;
  out.branches[1] = std::log(1.0 / q.p) / (2.0 * std::log(q.zeta / q.p));
  out.branches[2] = (1.0 - q.p) * q.epsilon * (1.0 - q.p) * q.epsilon /
                    (2.0 * q.rho * std::log(1.0 / q.tau) * std::log(q.zeta));
  out.value = out.branches[0];
  out.branch = 0;
  for (int i = 1; i < 3; ++i)
    if (out.branches[i] < out.value) {
      out.value = out.branches[i];
      out.branch = i;
    }
  return out;
}

}  // namespace pprhub
