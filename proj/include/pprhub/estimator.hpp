#pragma once

// Hub-based PPR estimation: mixing weights, the a-posteriori error
// certificate, truncated-iteration error bounds, and the summary curves
// (dimensionality profile, error histogram) built on top of them.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include "pprhub/common.hpp"
#include "pprhub/graph.hpp"
#include "pprhub/io.hpp"
#include "pprhub/parallel.hpp"
#include "pprhub/ppr.hpp"

namespace pprhub {

// Ties between the observed hub mass and the certificate threshold closer
// than this are reported as indeterminate (and conservatively not passed).
inline constexpr double kCertTieTol = 1e-12;

// ---------------------------------------------------------------------------
// Mixing weights
// ---------------------------------------------------------------------------

// Convex-ish mixing weights over hub vectors recovered from a
// hub-restricted solve: beta(k) = x(k) / (alpha + (1-alpha) * x(K)).
struct BetaWeights {
  NodeId owner = 0;
  double alpha = 0.0;
  double denom = 0.0;
  // Nonzero weights only, ascending hub id.
  std::vector<std::pair<NodeId, double>> weights;

  double sum() const {
    double s = 0.0;
    for (const auto& [k, w] : weights) s += w;
    return s;
  }
};

inline BetaWeights beta_weights(const HubRestrictedPpr& hpr,
                                const HubPartition& hubs) {
  require(hpr.vec.values.size() == hubs.non_hub.size(),
          "hub partition does not match the restricted vector");
  BetaWeights beta;
  beta.owner = hpr.vec.owner;
  beta.alpha = hpr.vec.alpha;
  beta.denom = hpr.vec.alpha + (1.0 - hpr.vec.alpha) * hpr.hub_mass;
  beta.weights.reserve(hubs.hub_list.size());
  for (const NodeId k : hubs.hub_list) {
    const double w = hpr.vec.values[k] / beta.denom;
    if (w > 0.0) beta.weights.emplace_back(k, w);
  }
  return beta;
}

// ---------------------------------------------------------------------------
// Hub vector stores
// ---------------------------------------------------------------------------

// Read access to the precomputed PPR vectors of the hub nodes. Rows are
// dense, indexed by position in hub_ids() (which is sorted ascending).
class HubVectorStore {
 public:
  virtual ~HubVectorStore() = default;
  virtual std::uint64_t node_count() const = 0;
  virtual double alpha() const = 0;
  virtual const std::vector<NodeId>& hub_ids() const = 0;
  virtual std::span<const double> row(std::size_t index) const = 0;

  std::optional<std::size_t> index_of(NodeId hub) const {
    const auto& ids = hub_ids();
    const auto it = std::lower_bound(ids.begin(), ids.end(), hub);
    if (it == ids.end() || *it != hub) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
  }
};

class InMemoryHubStore final : public HubVectorStore {
 public:
  InMemoryHubStore(std::uint64_t node_count, std::vector<NodeId> ids,
                   double alpha = 0.0)
      : n_(node_count), alpha_(alpha), ids_(std::move(ids)),
        data_(ids_.size() * node_count, 0.0) {
    require(std::is_sorted(ids_.begin(), ids_.end()),
            "hub ids must be sorted");
  }

  std::uint64_t node_count() const override { return n_; }
  double alpha() const override { return alpha_; }
  const std::vector<NodeId>& hub_ids() const override { return ids_; }
  std::span<const double> row(std::size_t index) const override {
    require(index < ids_.size(), "hub row index out of range");
    return {data_.data() + index * n_, n_};
  }
  std::span<double> mutable_row(std::size_t index) {
    require(index < ids_.size(), "hub row index out of range");
    return {data_.data() + index * n_, n_};
  }

 private:
  std::uint64_t n_;
  double alpha_;
  std::vector<NodeId> ids_;
  std::vector<double> data_;
};

// Solves one exact PPR per hub node.
inline InMemoryHubStore compute_hub_vectors(const DirectedMultigraph& g,
                                            const HubPartition& hubs,
                                            double alpha,
                                            double tol = kDefaultTol) {
  InMemoryHubStore store(g.node_count, hubs.hub_list, alpha);
  const auto& ids = store.hub_ids();
  parallel_for(ids.size(), [&](std::size_t i) {
    const auto vec = ppr_exact(g, ids[i], alpha, tol);
    auto out = store.mutable_row(i);
    std::copy(vec.values.begin(), vec.values.end(), out.begin());
  });
  return store;
}

namespace detail {

inline constexpr char kHubStoreMagic[8] = {'P', 'P', 'R', 'H',
                                           'U', 'B', 'M', '1'};

inline std::size_t hub_store_rows_offset(std::size_t hub_count) {
  // magic + version + node_count + hub_count + alpha + ids, padded so the
  // double rows land 8-byte aligned for mmap access.
  const std::size_t raw = 8 + 4 + 8 + 8 + 8 + 4 * hub_count;
  return (raw + 7) / 8 * 8;
}

inline double clip_bound(double raw, double alpha) {
  // The iterate is a sub-probability vector, so the bound lives in
  // [0, 1-alpha]; clip accumulated rounding dust.
  return std::clamp(raw, 0.0, 1.0 - alpha);
}

}  // namespace detail

inline void save_hub_vectors(const std::string& path,
                             const HubVectorStore& store, double alpha) {
  atomic_write_file(
      path,
      [&](std::ostream& os) {
        BinaryWriter w(os);
        w.bytes(detail::kHubStoreMagic, 8);
        w.u32(1);
        w.u64(store.node_count());
        w.u64(store.hub_ids().size());
        w.f64(alpha);
        for (const NodeId id : store.hub_ids()) w.u32(id);
        const std::size_t written = 8 + 4 + 8 + 8 + 8 + 4 * store.hub_ids().size();
        for (std::size_t pad = written; pad % 8 != 0; ++pad) w.u8(0);
        for (std::size_t i = 0; i < store.hub_ids().size(); ++i)
          for (const double x : store.row(i)) w.f64(x);
      },
      /*binary=*/true);
}

// Maps a saved hub-vector file read-only. Requires a little-endian host
// (rows are accessed in place).
class MmapHubStore final : public HubVectorStore {
 public:
  explicit MmapHubStore(const std::string& path) {
    require(std::endian::native == std::endian::little,
            "mapped hub stores need a little-endian host");
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) throw ValidationError("cannot open hub store: " + path);
    struct stat st{};
    if (::fstat(fd_, &st) != 0 || st.st_size < 36) {
      ::close(fd_);
      throw ValidationError("hub store truncated: " + path);
    }
    size_ = static_cast<std::size_t>(st.st_size);
    void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd_, 0);
    if (p == MAP_FAILED) {
      ::close(fd_);
      throw ValidationError("cannot map hub store: " + path);
    }
    base_ = static_cast<const unsigned char*>(p);
    if (std::memcmp(base_, detail::kHubStoreMagic, 8) != 0)
      fail(path, "bad magic");
    std::uint32_t version;
    std::memcpy(&version, base_ + 8, 4);
    if (version != 1) fail(path, "unsupported version");
    std::memcpy(&n_, base_ + 12, 8);
    std::uint64_t k;
    std::memcpy(&k, base_ + 20, 8);
    std::memcpy(&alpha_, base_ + 28, 8);
    const std::size_t off = detail::hub_store_rows_offset(k);
    if (size_ != off + k * n_ * sizeof(double)) fail(path, "size mismatch");
    ids_.resize(k);
    std::memcpy(ids_.data(), base_ + 36, 4 * k);
    if (!std::is_sorted(ids_.begin(), ids_.end())) fail(path, "ids unsorted");
    rows_ = reinterpret_cast<const double*>(base_ + off);
  }

  MmapHubStore(const MmapHubStore&) = delete;
  MmapHubStore& operator=(const MmapHubStore&) = delete;

  ~MmapHubStore() override {
    if (base_ != nullptr) ::munmap(const_cast<unsigned char*>(base_), size_);
    if (fd_ >= 0) ::close(fd_);
  }

  std::uint64_t node_count() const override { return n_; }
  double alpha() const override { return alpha_; }
  const std::vector<NodeId>& hub_ids() const override { return ids_; }
  std::span<const double> row(std::size_t index) const override {
    require(index < ids_.size(), "hub row index out of range");
    return {rows_ + index * n_, n_};
  }

 private:
  [[noreturn]] void fail(const std::string& path, const char* what) {
    ::munmap(const_cast<unsigned char*>(base_), size_);
    ::close(fd_);
    base_ = nullptr;
    fd_ = -1;
    throw ValidationError("invalid hub store " + path + ": " + what);
  }

  int fd_ = -1;
  std::size_t size_ = 0;
  const unsigned char* base_ = nullptr;
  std::uint64_t n_ = 0;
  double alpha_ = 0.0;
  std::vector<NodeId> ids_;
  const double* rows_ = nullptr;
};

// ---------------------------------------------------------------------------
// Estimation and certification
// ---------------------------------------------------------------------------

// pi_hat_v = sum_k beta_v(k) * pi_k. The caller adds alpha * e_v to obtain
// the full approximation of pi_v.
inline PprVector estimate_pi_hat(const BetaWeights& beta,
                                 const HubVectorStore& store,
                                 std::uint64_t node_count) {
  require(store.node_count() == node_count,
          "hub store node count does not match the graph");
  PprVector out;
  out.values.assign(node_count, 0.0);
  out.alpha = beta.alpha;
  out.owner = beta.owner;
  out.iterations = 0;
  out.residual = 0.0;
  for (const auto& [k, w] : beta.weights) {
    const auto idx = store.index_of(k);
    require(idx.has_value(), "hub store is missing a required hub vector");
    require(std::abs(store.alpha() - beta.alpha) <= 1e-15,
            "hub store was computed at a different alpha");
    const auto r = store.row(*idx);
    for (std::uint64_t u = 0; u < node_count; ++u) out.values[u] += w * r[u];
  }
  return out;
}

// Hub mass above which the exact l1 error of the estimate is below epsilon.
inline double certificate_threshold(double alpha, double epsilon) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(epsilon >= 0.0 && std::isfinite(epsilon),
          "epsilon must be finite and non-negative");
  const double s = epsilon + alpha;
  return alpha * (1.0 - s) / (epsilon + alpha * (2.0 - s));
}

struct ErrorCertificate {
  NodeId owner = 0;
  double alpha = 0.0;
  double epsilon = 0.0;
  double hub_mass = 0.0;
  double threshold = 0.0;
  // Exact l1 error of alpha*e_v + pi_hat_v, recovered from the restricted
  // solve alone (no hub vectors needed).
  double certified_l1_bound = 0.0;
  bool passes = false;
  bool indeterminate = false;
};

inline ErrorCertificate certify(const HubRestrictedPpr& hpr,
                                const HubPartition& hubs, double epsilon) {
  require(hpr.vec.values.size() == hubs.non_hub.size(),
          "hub partition does not match the restricted vector");
  ErrorCertificate cert;
  cert.owner = hpr.vec.owner;
  cert.alpha = hpr.vec.alpha;
  cert.epsilon = epsilon;
  cert.hub_mass = hpr.hub_mass;
  cert.threshold = certificate_threshold(cert.alpha, epsilon);
  double outside = 0.0;
  for (std::uint64_t u = 0; u < hpr.vec.values.size(); ++u)
    if (hubs.non_hub[u] != 0) outside += hpr.vec.values[u];
  const double denom = cert.alpha + (1.0 - cert.alpha) * cert.hub_mass;
  cert.certified_l1_bound =
      detail::clip_bound(cert.alpha * (outside / denom - 1.0), cert.alpha);
  cert.indeterminate = std::abs(cert.hub_mass - cert.threshold) <= kCertTieTol;
  cert.passes = !cert.indeterminate && cert.hub_mass > cert.threshold;
  return cert;
}

// ---------------------------------------------------------------------------
// Truncated-iteration error bounds
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t bound_iteration_count(double alpha, double tol) {
  require(tol > 0.0 && tol < 1.0, "tolerance must lie in (0, 1)");
  const double raw = std::log(tol) / std::log1p(-alpha);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(raw)));
}

struct BoundResult {
  double bound = 0.0;
  std::uint64_t iterations = 0;
};

// x^{(i)} = alpha * r + (1-alpha) * x^{(i-1)} * P_restricted, reporting
// x^{(i)}(V \ K) - alpha. With forced_iters == 0 the loop runs the number
// of steps needed for a (1-alpha)^i <= tol gap, stopping early if the
// bound hits exact zero (it then stays zero forever).
inline BoundResult bound_from_restart(const DirectedMultigraph& g,
                                      const HubPartition& hubs,
                                      std::span<const double> restart,
                                      double alpha, double tol,
                                      std::uint64_t forced_iters,
                                      std::vector<double>& cur,
                                      std::vector<double>& next) {
  const std::uint64_t steps =
      forced_iters > 0 ? forced_iters : bound_iteration_count(alpha, tol);
  cur.assign(restart.begin(), restart.end());
  next.resize(g.node_count);
  BoundResult res;
  for (std::uint64_t i = 1; i <= steps; ++i) {
    std::fill(next.begin(), next.end(), 0.0);
    restricted_apply(g, hubs, cur, next);
    for (std::uint64_t u = 0; u < g.node_count; ++u)
      next[u] = (1.0 - alpha) * next[u] + alpha * restart[u];
    cur.swap(next);
    double outside = 0.0;
    for (std::uint64_t u = 0; u < g.node_count; ++u)
      if (hubs.non_hub[u] != 0) outside += cur[u];
    res.bound = clip_bound(outside - alpha, alpha);
    res.iterations = i;
    if (forced_iters == 0 && res.bound == 0.0) break;
  }
  return res;
}

// One step of w <- P_restricted * w (multiplication from the right): hub
// rows vanish, dangling non-hub rows self-absorb.
inline void restricted_apply_right(const DirectedMultigraph& g,
                                   const HubPartition& hubs,
                                   std::span<const double> in,
                                   std::span<double> out) {
  for (std::uint64_t v = 0; v < g.node_count; ++v) {
    if (hubs.non_hub[v] == 0) {
      out[v] = 0.0;
      continue;
    }
    const auto edges = g.out_edges(v);
    if (edges.empty()) {
      out[v] = in[v];
      continue;
    }
    double s = 0.0;
    for (const NodeId t : edges) s += in[t];
    out[v] = s / static_cast<double>(edges.size());
  }
}

}  // namespace detail

struct IterBoundState {
  NodeId owner = 0;
  std::uint64_t iterations = 0;
  double bound = 0.0;
};

// Certified l1 bound for node v after a truncated hub-restricted iteration.
// forced_iters > 0 runs exactly that many steps (no early exit).
inline IterBoundState iter_error_bound(const DirectedMultigraph& g,
                                       const HubPartition& hubs, NodeId v,
                                       double alpha, double tol = kDefaultTol,
                                       std::uint64_t forced_iters = 0) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(v < g.node_count, "node out of range");
  require(hubs.non_hub[v] != 0, "iteration bound is defined for non-hubs");
  std::vector<double> restart(g.node_count, 0.0), cur, next;
  restart[v] = 1.0;
  const auto res =
      detail::bound_from_restart(g, hubs, restart, alpha, tol, forced_iters,
                                 cur, next);
  return {v, res.iterations, res.bound};
}

// Mean of the per-node bounds over V \ K, computed by a single iteration
// from the uniform non-hub restart (the bound map is linear in the restart).
inline double avg_error_bound(const DirectedMultigraph& g,
                              const HubPartition& hubs, double alpha,
                              double tol = kDefaultTol,
                              std::uint64_t forced_iters = 0) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  const std::uint64_t outside = g.node_count - hubs.hub_count();
  require(outside > 0, "no non-hub nodes to average over");
  std::vector<double> restart(g.node_count, 0.0), cur, next;
  const double w = 1.0 / static_cast<double>(outside);
  for (std::uint64_t v = 0; v < g.node_count; ++v)
    if (hubs.non_hub[v] != 0) restart[v] = w;
  return detail::bound_from_restart(g, hubs, restart, alpha, tol, forced_iters,
                                    cur, next)
      .bound;
}

// Per-node bounds for the whole graph in O(edges * iterations): accumulate
// alpha * (1-alpha)^j * (P_r^j 1_{V\K})(v) plus the final tail term, which
// expands to the same quantity as iter_error_bound for every v at once.
// Hub entries are NaN.
inline std::vector<double> per_node_error_bounds(const DirectedMultigraph& g,
                                                 const HubPartition& hubs,
                                                 double alpha,
                                                 double tol = kDefaultTol) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  const std::uint64_t n = g.node_count;
  const std::uint64_t steps = detail::bound_iteration_count(alpha, tol);
  std::vector<double> cur(n), next(n), acc(n, 0.0);
  for (std::uint64_t v = 0; v < n; ++v)
    cur[v] = hubs.non_hub[v] != 0 ? 1.0 : 0.0;
  double decay = 1.0;
  for (std::uint64_t j = 1; j <= steps; ++j) {
    detail::restricted_apply_right(g, hubs, cur, next);
    cur.swap(next);
    decay *= 1.0 - alpha;
    const double coeff = j < steps ? alpha * decay : decay;
    for (std::uint64_t v = 0; v < n; ++v) acc[v] += coeff * cur[v];
  }
  for (std::uint64_t v = 0; v < n; ++v)
    acc[v] = hubs.non_hub[v] != 0
                 ? detail::clip_bound(acc[v], alpha)
                 : std::numeric_limits<double>::quiet_NaN();
  return acc;
}

// ---------------------------------------------------------------------------
// Summary curves
// ---------------------------------------------------------------------------

struct DimensionalityCurve {
  std::vector<double> epsilons;
  std::vector<std::uint64_t> delta_values;
  std::uint64_t hub_count = 0;
};

// delta(eps) = |K| + #{v outside K : bound_v >= eps and bound_v > 0}: the
// number of PPR vectors one must keep to serve every node at accuracy eps.
inline DimensionalityCurve dimensionality_curve(
    const DirectedMultigraph& g, const HubPartition& hubs, double alpha,
    std::vector<double> epsilons, double tol = kDefaultTol) {
  require(!epsilons.empty(), "epsilon grid must be non-empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(std::isfinite(epsilons[i]) && epsilons[i] >= 0.0,
            "epsilon values must be finite and non-negative");
    require(i == 0 || epsilons[i] >= epsilons[i - 1],
            "epsilon grid must be non-decreasing");
  }
  const auto bounds = per_node_error_bounds(g, hubs, alpha, tol);
  std::vector<double> positive;
  positive.reserve(bounds.size());
  for (const double b : bounds)
    if (!std::isnan(b) && b > 0.0) positive.push_back(b);
  std::sort(positive.begin(), positive.end());
  DimensionalityCurve curve;
  curve.hub_count = hubs.hub_count();
  curve.epsilons = std::move(epsilons);
  curve.delta_values.reserve(curve.epsilons.size());
  for (const double eps : curve.epsilons) {
    const auto it =
        std::lower_bound(positive.begin(), positive.end(), eps);
    const std::uint64_t kept = positive.end() - (eps > 0.0 ? it
                                                           : positive.begin());
    curve.delta_values.push_back(curve.hub_count + kept);
  }
  return curve;
}

struct BinSpec {
  std::uint32_t count = 20;
};

struct Histogram {
  // First bin is the exact-zero spike [0, 0]; the remaining bins partition
  // (0, 1-alpha] left-open right-closed. Frequencies are counts / n.
  std::vector<double> bin_left;
  std::vector<double> bin_right;
  std::vector<double> frequency;
};

inline Histogram error_histogram(const DirectedMultigraph& g,
                                 const HubPartition& hubs, double alpha,
                                 BinSpec spec, double tol = kDefaultTol) {
  require(spec.count >= 1, "histogram needs at least one bin");
  const auto bounds = per_node_error_bounds(g, hubs, alpha, tol);
  Histogram h;
  h.bin_left.push_back(0.0);
  h.bin_right.push_back(0.0);
  std::vector<double> edges(spec.count + 1);
  for (std::uint32_t i = 0; i <= spec.count; ++i)
    edges[i] = (1.0 - alpha) * static_cast<double>(i) /
               static_cast<double>(spec.count);
  for (std::uint32_t i = 0; i < spec.count; ++i) {
    h.bin_left.push_back(edges[i]);
    h.bin_right.push_back(edges[i + 1]);
  }
  std::vector<std::uint64_t> counts(h.bin_left.size(), 0);
  for (const double b : bounds) {
    if (std::isnan(b)) continue;
    if (b == 0.0) {
      ++counts[0];
      continue;
    }
    const auto it = std::lower_bound(edges.begin() + 1, edges.end(), b);
    const std::size_t bin = 1 + (it - (edges.begin() + 1));
    counts[std::min(bin, counts.size() - 1)]++;
  }
  const double n = static_cast<double>(g.node_count);
  h.frequency.reserve(counts.size());
  for (const std::uint64_t c : counts)
    h.frequency.push_back(static_cast<double>(c) / n);
  return h;
}

// ---------------------------------------------------------------------------
// End-to-end scheme
// ---------------------------------------------------------------------------

struct SchemeReport {
  double alpha = 0.0;
  double epsilon = 0.0;
  std::uint64_t node_count = 0;
  std::uint64_t hub_count = 0;
  // Non-hubs whose certificate passed (served by the hub estimate) and the
  // nodes needing a full solve (hubs plus certificate failures).
  std::vector<NodeId> estimated;
  std::vector<NodeId> computed_exactly;
  // n*|K| hub vectors + |K| mixing weights per non-hub + n per failure.
  std::uint64_t ppr_values_computed = 0;
  bool degenerate = false;
};

inline SchemeReport full_scheme(const DirectedMultigraph& g,
                                const HubPartition& hubs, double alpha,
                                double epsilon, double tol = kDefaultTol) {
  SchemeReport report;
  report.alpha = alpha;
  report.epsilon = epsilon;
  report.node_count = g.node_count;
  report.hub_count = hubs.hub_count();
  report.degenerate = hubs.hub_count() == 0;
  std::vector<NodeId> failed;
  for (std::uint64_t v = 0; v < g.node_count; ++v) {
    if (hubs.non_hub[v] == 0) continue;
    const auto hpr =
        ppr_hub_restricted(g, hubs, static_cast<NodeId>(v), alpha, tol);
    const auto cert = certify(hpr, hubs, epsilon);
    if (cert.passes)
      report.estimated.push_back(static_cast<NodeId>(v));
    else
      failed.push_back(static_cast<NodeId>(v));
  }
  report.computed_exactly.reserve(hubs.hub_list.size() + failed.size());
  std::merge(hubs.hub_list.begin(), hubs.hub_list.end(), failed.begin(),
             failed.end(), std::back_inserter(report.computed_exactly));
  const std::uint64_t k = report.hub_count;
  const std::uint64_t n = report.node_count;
  report.ppr_values_computed =
      n * k + k * (n - k) + n * static_cast<std::uint64_t>(failed.size());
  return report;
}

}  // namespace pprhub
