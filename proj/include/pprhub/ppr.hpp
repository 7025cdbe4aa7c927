#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "pprhub/common.hpp"
#include "pprhub/graph.hpp"
#include "pprhub/io.hpp"
#include "pprhub/rng.hpp"

namespace pprhub {

inline constexpr double kDefaultTol = 1e-10;
inline constexpr std::uint64_t kDefaultMaxIter = 1000000;

/// Restart strength as a function of graph size.
struct AlphaSchedule {
  enum class Mode : std::uint8_t { kConstant, kLogInverse, kDepthBudget };
  Mode mode = Mode::kConstant;
  double a = 0.2;     // kConstant
  double rho = 2.0;   // kDepthBudget
  double tau = 0.1;   // kDepthBudget
  double zeta = 2.0;  // kDepthBudget

  static AlphaSchedule constant(double a) {
    AlphaSchedule s;
    s.mode = Mode::kConstant;
    s.a = a;
    return s;
  }
  /// alpha_n = 1 / ln(n).
  static AlphaSchedule log_inverse() {
    AlphaSchedule s;
    s.mode = Mode::kLogInverse;
    return s;
  }
  /// alpha_n = rho * ln(1/tau) * ln(zeta) / ln(n).
  static AlphaSchedule depth_budget(double rho, double tau, double zeta) {
    AlphaSchedule s;
    s.mode = Mode::kDepthBudget;
    s.rho = rho;
    s.tau = tau;
    s.zeta = zeta;
    return s;
  }

  double value_at(std::uint64_t n) const {
    require(n >= 1, "alpha schedule needs n >= 1");
    double alpha = a;
    switch (mode) {
      case Mode::kConstant:
        break;
      case Mode::kLogInverse:
        alpha = 1.0 / std::log(static_cast<double>(n));
        break;
      case Mode::kDepthBudget:
        require(rho > 1.0, "depth_budget schedule needs rho > 1");
        require(tau > 0.0 && tau < 1.0, "depth_budget schedule needs tau in (0,1)");
        require(zeta > 1.0, "depth_budget schedule needs zeta > 1");
        alpha = rho * std::log(1.0 / tau) * std::log(zeta) /
                std::log(static_cast<double>(n));
        break;
    }
    require(alpha > 0.0 && alpha < 1.0,
            "schedule produced alpha outside (0,1) at n=" + std::to_string(n));
    return alpha;
  }

  std::string describe() const {
    switch (mode) {
      case Mode::kConstant:
        return "constant(" + fmt_double(a) + ")";
      case Mode::kLogInverse:
        return "log_inverse";
      case Mode::kDepthBudget:
        return "depth_budget(rho=" + fmt_double(rho) + ",tau=" + fmt_double(tau) +
               ",zeta=" + fmt_double(zeta) + ")";
    }
    return "?";
  }
};

/// A (possibly approximate) restart-walk distribution rooted at `owner`.
/// `residual` is the l1 fixed-point defect of `values` under the owning
/// operator, re-evaluated after the final iterate.
struct PprVector {
  std::vector<double> values;
  double alpha = 0.0;
  NodeId owner = 0;
  std::uint64_t iterations = 0;
  double residual = 0.0;

  double l1() const {
    double s = 0.0;
    for (double v : values) s += std::abs(v);
    return s;
  }
};

class NotConvergedError : public NumericError {
 public:
  NotConvergedError(const std::string& msg, PprVector partial_result)
      : NumericError(msg), partial(std::move(partial_result)) {}
  PprVector partial;
};

/// y = x * P with the absorb convention: a node with no out-edges keeps its
/// mass. y must be zeroed by the caller.
inline void transition_apply(const DirectedMultigraph& g, const std::vector<double>& x,
                             std::vector<double>& y) {
  for (std::uint64_t u = 0; u < g.node_count; ++u) {
    const double w = x[u];
    if (w == 0.0) continue;
    const std::uint32_t deg = g.out_degree(static_cast<NodeId>(u));
    if (deg == 0) {
      y[u] += w;
      continue;
    }
    const double share = w / deg;
    for (NodeId t : g.out_edges(static_cast<NodeId>(u))) y[t] += share;
  }
}

/// y = x * P~ where hub rows are zeroed; non-hub dangling rows still absorb.
inline void restricted_apply(const DirectedMultigraph& g, const HubPartition& hubs,
                             const std::vector<double>& x, std::vector<double>& y) {
  for (std::uint64_t u = 0; u < g.node_count; ++u) {
    const double w = x[u];
    if (w == 0.0 || hubs.non_hub[u] == 0) continue;
    const std::uint32_t deg = g.out_degree(static_cast<NodeId>(u));
    if (deg == 0) {
      y[u] += w;
      continue;
    }
    const double share = w / deg;
    for (NodeId t : g.out_edges(static_cast<NodeId>(u))) y[t] += share;
  }
}

namespace detail {

inline void check_walk_args(const DirectedMultigraph& g, NodeId v, double alpha,
                            double tol) {
  require(v < g.node_count, "source node out of range");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  require(tol > 0.0, "tolerance must be positive");
}

}  // namespace detail

/// Power iteration for the restart walk rooted at v. Converges at rate
/// (1-alpha); returns once successive iterates differ by at most tol in l1,
/// which pins the true fixed-point residual below tol as well.
inline PprVector ppr_exact(const DirectedMultigraph& g, NodeId v, double alpha,
                           double tol = kDefaultTol,
                           std::uint64_t max_iter = kDefaultMaxIter) {
  detail::check_walk_args(g, v, alpha, tol);
  const std::uint64_t n = g.node_count;
  std::vector<double> x(n, 0.0), y(n, 0.0);
  x[v] = 1.0;
  PprVector out;
  out.alpha = alpha;
  out.owner = v;
  bool settled = false;
  while (out.iterations < max_iter) {
    std::fill(y.begin(), y.end(), 0.0);
    transition_apply(g, x, y);
    for (auto& w : y) w *= (1.0 - alpha);
    y[v] += alpha;
    ++out.iterations;
    double delta = 0.0;
    for (std::uint64_t u = 0; u < n; ++u) delta += std::abs(y[u] - x[u]);
    x.swap(y);
    if (delta <= tol) {
      settled = true;
      break;
    }
  }
  std::fill(y.begin(), y.end(), 0.0);
  transition_apply(g, x, y);
  double residual = 0.0;
  for (std::uint64_t u = 0; u < n; ++u) {
    const double target = (1.0 - alpha) * y[u] + (u == v ? alpha : 0.0);
    residual += std::abs(x[u] - target);
  }
  out.values = std::move(x);
  out.residual = residual;
  if (!settled && residual > tol) {
    throw NotConvergedError("power iteration exhausted " + std::to_string(max_iter) +
                                " iterations (residual " + fmt_double(residual) + ")",
                            std::move(out));
  }
  return out;
}

struct MonteCarloStats {
  std::vector<double> std_error;  // per-coordinate standard error of the mean
};

/// Renewal-reward estimator: each walk visits its first L nodes, L geometric
/// with success alpha, and contributes alpha * (visit count) per coordinate.
/// Walks draw from per-index substreams of `seed`, so results do not depend
/// on scheduling.
inline PprVector ppr_monte_carlo(const DirectedMultigraph& g, NodeId v, double alpha,
                                 std::uint64_t walks, std::uint64_t seed,
                                 MonteCarloStats* stats = nullptr) {
  detail::check_walk_args(g, v, alpha, 1.0);
  require(walks > 0, "need at least one walk");
  const std::uint64_t n = g.node_count;
  std::vector<double> sum(n, 0.0);
  std::vector<double> sumsq;
  if (stats) sumsq.assign(n, 0.0);
  std::vector<NodeId> visited;
  for (std::uint64_t w = 0; w < walks; ++w) {
    Rng rng = make_substream(seed, w);
    visited.clear();
    NodeId cur = v;
    for (;;) {
      visited.push_back(cur);
      if (bernoulli(rng, alpha)) break;
      const std::uint32_t deg = g.out_degree(cur);
      if (deg > 0) {
        cur = g.out_edges(cur)[uniform_below(rng, deg)];
      }
      // deg == 0: absorb in place until the restart fires.
    }
    std::sort(visited.begin(), visited.end());
    for (std::size_t i = 0; i < visited.size();) {
      std::size_t j = i;
      while (j < visited.size() && visited[j] == visited[i]) ++j;
      const double contrib = alpha * static_cast<double>(j - i);
      sum[visited[i]] += contrib;
      if (stats) sumsq[visited[i]] += contrib * contrib;
      i = j;
    }
  }
  PprVector out;
  out.alpha = alpha;
  out.owner = v;
  out.iterations = walks;
  out.values.assign(n, 0.0);
  const double W = static_cast<double>(walks);
  for (std::uint64_t u = 0; u < n; ++u) out.values[u] = sum[u] / W;
  if (stats) {
    stats->std_error.assign(n, 0.0);
    for (std::uint64_t u = 0; u < n; ++u) {
      const double mean = out.values[u];
      const double var = std::max(0.0, sumsq[u] / W - mean * mean);
      stats->std_error[u] = std::sqrt(var / W);
    }
  }
  std::vector<double> y(n, 0.0);
  transition_apply(g, out.values, y);
  double residual = 0.0;
  for (std::uint64_t u = 0; u < n; ++u) {
    const double target = (1.0 - alpha) * y[u] + (u == v ? alpha : 0.0);
    residual += std::abs(out.values[u] - target);
  }
  out.residual = residual;
  return out;
}

/// Stationary law of the walk that is killed on hub entry and reborn at v:
/// non-hub steps follow P, any hub step (and each restart) jumps back to v.
struct HubRestrictedPpr {
  PprVector vec;
  double hub_mass = 0.0;  // stationary mass sitting on the hub set
};

inline HubRestrictedPpr ppr_hub_restricted(const DirectedMultigraph& g,
                                           const HubPartition& hubs, NodeId v,
                                           double alpha, double tol = kDefaultTol,
                                           std::uint64_t max_iter = kDefaultMaxIter) {
  detail::check_walk_args(g, v, alpha, tol);
  hubs.validate(g.node_count);
  require(!hubs.is_hub(v), "owner of a hub-restricted walk must not be a hub");
  const std::uint64_t n = g.node_count;
  std::vector<double> x(n, 0.0), y(n, 0.0);
  x[v] = 1.0;
  HubRestrictedPpr out;
  out.vec.alpha = alpha;
  out.vec.owner = v;
  auto hub_mass_of = [&](const std::vector<double>& z) {
    double m = 0.0;
    for (NodeId k : hubs.hub_list) m += z[k];
    return m;
  };
  bool settled = false;
  while (out.vec.iterations < max_iter) {
    std::fill(y.begin(), y.end(), 0.0);
    restricted_apply(g, hubs, x, y);
    for (auto& w : y) w *= (1.0 - alpha);
    y[v] += alpha + (1.0 - alpha) * hub_mass_of(x);
    ++out.vec.iterations;
    double delta = 0.0;
    for (std::uint64_t u = 0; u < n; ++u) delta += std::abs(y[u] - x[u]);
    x.swap(y);
    if (delta <= tol) {
      settled = true;
      break;
    }
  }
  std::fill(y.begin(), y.end(), 0.0);
  restricted_apply(g, hubs, x, y);
  const double restart = alpha + (1.0 - alpha) * hub_mass_of(x);
  double residual = 0.0;
  for (std::uint64_t u = 0; u < n; ++u) {
    const double target = (1.0 - alpha) * y[u] + (u == v ? restart : 0.0);
    residual += std::abs(x[u] - target);
  }
  out.vec.values = std::move(x);
  out.vec.residual = residual;
  out.hub_mass = hub_mass_of(out.vec.values);
  if (!settled && residual > tol) {
    throw NotConvergedError("hub-restricted iteration exhausted " +
                                std::to_string(max_iter) + " iterations (residual " +
                                fmt_double(residual) + ")",
                            std::move(out.vec));
  }
  return out;
}

/// Partial sums of the killed walk: mass = sum_{j<=m} (1-alpha)^j * (survival
/// mass outside the hub set after j hub-avoiding steps), tail = the j=m term.
struct MuTruncated {
  double mass = 0.0;
  double tail = 0.0;
};

inline MuTruncated mu_truncated(const DirectedMultigraph& g, const HubPartition& hubs,
                                NodeId v, double alpha, std::uint32_t m) {
  detail::check_walk_args(g, v, alpha, 1.0);
  hubs.validate(g.node_count);
  const std::uint64_t n = g.node_count;
  std::vector<double> x(n, 0.0), y(n, 0.0);
  x[v] = 1.0;
  double decay = 1.0;
  auto outside_mass = [&](const std::vector<double>& z) {
    double s = 0.0;
    for (std::uint64_t u = 0; u < n; ++u)
      if (hubs.non_hub[u]) s += z[u];
    return s;
  };
  MuTruncated out;
  double term = decay * outside_mass(x);
  out.mass = term;
  out.tail = term;
  for (std::uint32_t j = 1; j <= m; ++j) {
    std::fill(y.begin(), y.end(), 0.0);
    restricted_apply(g, hubs, x, y);
    x.swap(y);
    decay *= (1.0 - alpha);
    term = decay * outside_mass(x);
    out.mass += term;
    out.tail = term;
  }
  return out;
}

/// Nodes within ceil(ln(1/tau)/alpha) hops of s, and the restart-walk mass
/// they capture.
struct NeighborhoodMass {
  std::uint64_t radius = 0;
  std::uint64_t size = 0;
  double mass = 0.0;
};

inline NeighborhoodMass neighborhood_mass(const DirectedMultigraph& g, NodeId s,
                                          double alpha, double tau,
                                          double tol = kDefaultTol) {
  detail::check_walk_args(g, s, alpha, tol);
  require(tau > 0.0 && tau < 1.0, "tau must lie in (0,1)");
  NeighborhoodMass out;
  out.radius = static_cast<std::uint64_t>(std::ceil(std::log(1.0 / tau) / alpha));
  std::vector<std::uint64_t> dist(g.node_count, UINT64_MAX);
  std::queue<NodeId> frontier;
  dist[s] = 0;
  frontier.push(s);
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    if (dist[u] == out.radius) continue;
    for (NodeId t : g.out_edges(u)) {
      if (dist[t] == UINT64_MAX) {
        dist[t] = dist[u] + 1;
        frontier.push(t);
      }
    }
  }
  const auto pi = ppr_exact(g, s, alpha, tol);
  for (std::uint64_t u = 0; u < g.node_count; ++u) {
    if (dist[u] != UINT64_MAX) {
      ++out.size;
      out.mass += pi.values[u];
    }
  }
  return out;
}

// ---- serialization ---------------------------------------------------------

/// CSV rows carry the non-zero support only.
inline void save_ppr_csv(const std::string& path, const PprVector& p,
                         const Provenance& prov) {
  atomic_write_file(path, [&](std::ostream& os) {
    write_csv_provenance(os, prov,
                         {{"alpha", fmt_double(p.alpha)},
                          {"owner", std::to_string(p.owner)},
                          {"iterations", std::to_string(p.iterations)},
                          {"residual", fmt_double(p.residual)}});
    os << "node,value\n";
    for (std::uint64_t u = 0; u < p.values.size(); ++u) {
      if (p.values[u] != 0.0) os << u << ',' << fmt_double(p.values[u]) << '\n';
    }
  });
}

namespace detail {
inline constexpr char kVectorMagic[8] = {'P', 'P', 'R', 'H', 'U', 'B', 'V', '1'};
}

inline void save_ppr_binary(const std::string& path, const PprVector& p) {
  atomic_write_file(
      path,
      [&](std::ostream& os) {
        BinaryWriter w(os);
        w.bytes(detail::kVectorMagic, sizeof(detail::kVectorMagic));
        w.u32(1);
        w.u32(p.owner);
        w.f64(p.alpha);
        w.u64(p.iterations);
        w.f64(p.residual);
        w.u64(p.values.size());
        std::uint64_t support = 0;
        for (double v : p.values) support += (v != 0.0);
        w.u64(support);
        for (std::uint64_t u = 0; u < p.values.size(); ++u) {
          if (p.values[u] != 0.0) {
            w.u32(static_cast<std::uint32_t>(u));
            w.f64(p.values[u]);
          }
        }
      },
      /*binary=*/true);
}

inline PprVector load_ppr_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.is_open(), "cannot open vector file: " + path);
  BinaryReader r(is);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  require(std::equal(magic, magic + 8, detail::kVectorMagic),
          path + ": not a vector file");
  require(r.u32() == 1, path + ": unsupported vector file version");
  PprVector p;
  p.owner = r.u32();
  p.alpha = r.f64();
  p.iterations = r.u64();
  p.residual = r.f64();
  const std::uint64_t n = r.u64();
  const std::uint64_t support = r.u64();
  p.values.assign(n, 0.0);
  for (std::uint64_t i = 0; i < support; ++i) {
    const std::uint32_t u = r.u32();
    require(u < n, path + ": vector entry out of range");
    p.values[u] = r.f64();
  }
  return p;
}

}  // namespace pprhub
