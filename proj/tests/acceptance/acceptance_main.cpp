// Acceptance gate: one check per shipped guarantee, each printed as a single
// [PASS]/[FAIL]/[SKIP] line with the measured quantity. Run with no arguments
// for the full gate or with --criterion <id|name> for one check.
//
// Seeds are fixed, so every verdict is reproducible; statistical checks state
// their own confidence in the detail text.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pprhub/branching.hpp"
#include "pprhub/common.hpp"
#include "pprhub/dcm.hpp"
#include "pprhub/degrees.hpp"
#include "pprhub/estimator.hpp"
#include "pprhub/graph.hpp"
#include "pprhub/ppr.hpp"
#include "pprhub/rng.hpp"
#include "pprhub/stats.hpp"
#include "support/test_util.hpp"

using namespace pprhub;

namespace {

struct Outcome {
  enum Status { kPass, kFail, kSkip };
  Status status = kFail;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Outcome skip(std::string d) { return {Outcome::kSkip, std::move(d)}; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Shared graph families (fixed seeds; other criteria reference them by index)
// ---------------------------------------------------------------------------

struct SmallCase {
  DirectedMultigraph g;
  HubPartition hubs;
  double alpha = 0.0;
};

// Random multigraphs, n in [20, 80], every out-degree >= 1, random hub sets
// of size 1..n/3, alpha cycling over {0.05, 0.2, 0.5}.
SmallCase small_case(std::uint64_t i) {
  auto rng = make_rng(0xACC000 + i);
  const std::uint64_t n = 20 + uniform_below(rng, 61);
  auto g = testutil::random_multigraph(rng, n, n + uniform_below(rng, 2 * n));
  const std::size_t k =
      1 + static_cast<std::size_t>(uniform_below(rng, std::max<std::uint64_t>(n / 3, 1)));
  auto hubs = testutil::random_hubs(rng, n, k);
  constexpr double kAlphas[3] = {0.05, 0.2, 0.5};
  return {std::move(g), std::move(hubs), kAlphas[i % 3]};
}

// Seeded configuration-model draws with mixed out-degree models.
struct BuildCase {
  DegreeSequence seq;
  HubPartition hubs;
  ConstructionTrace trace;
};

BuildCase build_case(std::uint64_t i) {
  const std::uint64_t n = 100 + 37 * (i % 11);
  OutDegreeModel model = OutDegreeModel::constant(3);
  if (i % 3 == 1) model = OutDegreeModel::poisson(2.5);
  if (i % 3 == 2) model = OutDegreeModel::power_law(2.5);
  BuildCase c;
  c.seq = gen_power_law_degrees(n, 2.0, model, 0xBC0000 + i);
  c.hubs = select_hubs_psi(c.seq, 0.7);
  const SourceMode mode =
      i % 2 == 0 ? SourceMode::kUniformAll : SourceMode::kUniformNonHub;
  c.trace = construct_dcm(c.seq, c.hubs, mode, 0xBC8000 + i);
  return c;
}

// alpha * e_v + sum_k beta_v(k) pi_k, all solves at the given tolerance.
PprVector reconstruct(const DirectedMultigraph& g, const HubPartition& hubs,
                      const HubVectorStore& store, NodeId v, double alpha,
                      double tol) {
  const auto hpr = ppr_hub_restricted(g, hubs, v, alpha, tol);
  const auto beta = beta_weights(hpr, hubs);
  PprVector est = estimate_pi_hat(beta, store, g.node_count);
  est.values[v] += alpha;
  return est;
}

// ---------------------------------------------------------------------------
// C1: exact decomposition of every non-hub vector through the hub vectors:
// pi_v(w) = (alpha 1{w not hub} rpr_v(w) + sum_k rpr_v(k) pi_k(w)) / denom
// with denom = alpha + (1-alpha) * (restricted mass on the hub set)
// ---------------------------------------------------------------------------

Outcome c1_decomposition() {
  constexpr double kTol = 1e-10;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const SmallCase cs = small_case(i);
    const auto store = compute_hub_vectors(cs.g, cs.hubs, cs.alpha, kTol);
    for (std::uint64_t v = 0; v < cs.g.node_count; ++v) {
      if (cs.hubs.non_hub[v] == 0) continue;
      const auto exact =
          ppr_exact(cs.g, static_cast<NodeId>(v), cs.alpha, kTol);
      const auto hpr = ppr_hub_restricted(cs.g, cs.hubs,
                                          static_cast<NodeId>(v), cs.alpha,
                                          kTol);
      const auto beta = beta_weights(hpr, cs.hubs);
      const PprVector hub_part =
          estimate_pi_hat(beta, store, cs.g.node_count);
      const double denom = cs.alpha + (1.0 - cs.alpha) * hpr.hub_mass;
      for (std::uint64_t w = 0; w < cs.g.node_count; ++w) {
        double rec = hub_part.values[w];
        if (cs.hubs.non_hub[w] != 0)
          rec += cs.alpha * hpr.vec.values[w] / denom;
        worst = std::max(worst, std::abs(exact.values[w] - rec));
      }
    }
  }
  const std::string d =
      "max componentwise deviation " + fmt(worst) + " over 100 graphs";
  return worst <= 1e-8 ? pass(d) : fail(d + ", limit 1e-8");
}

// ---------------------------------------------------------------------------
// C2: certificate verdict agrees with the directly measured l1 error
// ---------------------------------------------------------------------------

Outcome c2_certificate() {
  constexpr double kTol = 1e-10;
  auto rng = make_rng(0xACC200);
  std::uint64_t agreed = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const SmallCase cs = small_case(1000 + t);
    std::vector<NodeId> outside;
    for (std::uint64_t v = 0; v < cs.g.node_count; ++v)
      if (cs.hubs.non_hub[v] != 0) outside.push_back(static_cast<NodeId>(v));
    const NodeId v = outside[uniform_below(rng, outside.size())];

    const auto store = compute_hub_vectors(cs.g, cs.hubs, cs.alpha, kTol);
    const auto exact = ppr_exact(cs.g, v, cs.alpha, kTol);
    const auto est = reconstruct(cs.g, cs.hubs, store, v, cs.alpha, kTol);
    const double err = testutil::l1_diff(exact.values, est.values);

    // epsilon straddles the measured error by at least 1e-9; every tenth
    // case sits exactly at that minimum separation
    const double d =
        t % 10 == 0 ? 1e-9 : 1e-9 + 0.05 * uniform01(rng);
    const bool above = (t / 10) % 2 == 0;
    double eps = above ? err + d : err - d;
    if (eps <= 0.0) eps = err + d;

    const auto hpr = ppr_hub_restricted(cs.g, cs.hubs, v, cs.alpha, kTol);
    const auto cert = certify(hpr, cs.hubs, eps);
    if (!cert.indeterminate && cert.passes == (err < eps)) ++agreed;
  }
  const std::string d = std::to_string(agreed) + "/200 verdicts agree";
  return agreed == 200 ? pass(d) : fail(d);
}

// ---------------------------------------------------------------------------
// C3: truncated-iteration bound sandwiches the true error
// ---------------------------------------------------------------------------

Outcome c3_bound_sandwich() {
  constexpr double kTol = 1e-10;
  constexpr double kGap = 1e-6;    // bound may exceed the truth by this much
  constexpr double kSlack = 1e-8;  // fp slack on the lower side
  double worst_low = 0.0, worst_high = 0.0;
  std::uint64_t zero_set = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const SmallCase cs = small_case(3000 + i);
    const auto store = compute_hub_vectors(cs.g, cs.hubs, cs.alpha, kTol);
    for (std::uint64_t v = 0; v < cs.g.node_count; ++v) {
      if (cs.hubs.non_hub[v] == 0) continue;
      const double bound =
          iter_error_bound(cs.g, cs.hubs, static_cast<NodeId>(v), cs.alpha, kTol)
              .bound;
      const auto exact =
          ppr_exact(cs.g, static_cast<NodeId>(v), cs.alpha, kTol);
      const auto est = reconstruct(cs.g, cs.hubs, store,
                                   static_cast<NodeId>(v), cs.alpha, kTol);
      const double truth = testutil::l1_diff(exact.values, est.values);
      worst_low = std::max(worst_low, truth - bound);
      worst_high = std::max(worst_high, bound - truth);
      if (bound > 1.0 - cs.alpha + 1e-12)
        return fail("bound " + fmt(bound) + " above 1-alpha cap");
      bool all_into_hubs = true;
      for (const NodeId t : cs.g.out_edges(static_cast<NodeId>(v)))
        if (cs.hubs.non_hub[t] != 0) all_into_hubs = false;
      if (all_into_hubs) {
        ++zero_set;
        if (bound != 0.0)
          return fail("zero-error node got bound " + fmt(bound));
      }
    }
  }
  const std::string d = "truth-bound gap in [-" + fmt(worst_low) + ", " +
                        fmt(worst_high) + "], " + std::to_string(zero_set) +
                        " zero-set nodes exact";
  return worst_low <= kSlack && worst_high <= kGap
             ? pass(d)
             : fail(d + ", limits " + fmt(kSlack) + "/" + fmt(kGap));
}

// ---------------------------------------------------------------------------
// C4: aggregate bound iterate equals the mean of per-node iterates
// ---------------------------------------------------------------------------

Outcome c4_linearity() {
  constexpr double kTol = 1e-10;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const SmallCase cs = small_case(4000 + t);
    const std::uint64_t iters = 1 + t % 6;
    const double agg =
        avg_error_bound(cs.g, cs.hubs, cs.alpha, kTol, iters);
    double mean = 0.0;
    std::uint64_t outside = 0;
    for (std::uint64_t v = 0; v < cs.g.node_count; ++v) {
      if (cs.hubs.non_hub[v] == 0) continue;
      mean += iter_error_bound(cs.g, cs.hubs, static_cast<NodeId>(v),
                               cs.alpha, kTol, iters)
                  .bound;
      ++outside;
    }
    mean /= static_cast<double>(outside);
    worst = std::max(worst, std::abs(agg - mean));
  }
  const std::string d = "max |aggregate - mean| = " + fmt(worst);
  return worst <= 1e-12 ? pass(d) : fail(d + ", limit 1e-12");
}

// ---------------------------------------------------------------------------
// C5: pairing preserves degrees exactly; labels equal hub-avoiding reach
// ---------------------------------------------------------------------------

Outcome c5_construction() {
  for (std::uint64_t i = 0; i < 100; ++i) {
    const BuildCase c = build_case(i);
    const DegreeSequence got = DegreeSequence::from_graph(c.trace.graph);
    if (got.in_deg != c.seq.in_deg || got.out_deg != c.seq.out_deg)
      return fail("degree mismatch in run " + std::to_string(i));

    // hub-avoiding BFS over the finished graph
    const std::uint64_t n = c.trace.graph.node_count;
    std::vector<char> reach(n, 0);
    if (c.hubs.non_hub[c.trace.source] != 0) {
      std::deque<NodeId> q{c.trace.source};
      reach[c.trace.source] = 1;
      while (!q.empty()) {
        const NodeId u = q.front();
        q.pop_front();
        for (const NodeId w : c.trace.graph.out_edges(u)) {
          if (reach[w] || c.hubs.non_hub[w] == 0) continue;
          reach[w] = 1;
          q.push_back(w);
        }
      }
    }
    for (std::uint64_t v = 0; v < n; ++v) {
      const bool labeled = c.trace.labels[v] == NodeLabel::kHubFree;
      if (labeled != (reach[v] != 0))
        return fail("label/reach mismatch at node " + std::to_string(v) +
                    " in run " + std::to_string(i));
    }
  }
  return pass("100 constructions: degrees exact, labels equal reach");
}

// ---------------------------------------------------------------------------
// C6: until the coupling breaks, graph mass equals tree mass exactly
// ---------------------------------------------------------------------------

Outcome c6_coupling_exact() {
  const DegreeSequence seq =
      gen_power_law_degrees(2000, 2.0, OutDegreeModel::constant(3), 0xACC600);
  const HubPartition hubs = select_hubs_psi(seq, 0.8);
  constexpr double kAlpha = 0.3;
  std::uint64_t qualified = 0;
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const std::uint64_t m = 1 + r % 3;
    const auto run =
        simultaneous_construct(seq, hubs, kAlpha, m, 0xACC700 + r);
    if (run.trace.break_iteration <= m) continue;
    ++qualified;
    const double graph_mass =
        mu_truncated(run.trace.graph, hubs, run.trace.source, kAlpha,
                     static_cast<std::uint32_t>(m))
            .mass;
    double tree_mass = 0.0;
    for (std::uint64_t j = 0; j <= m; ++j)
      tree_mass += j < run.weights.per_generation.size()
                       ? run.weights.per_generation[j]
                       : 0.0;
    worst = std::max(worst, std::abs(graph_mass - tree_mass));
  }
  const std::string d = "max |graph - tree| = " + fmt(worst) + " over " +
                        std::to_string(qualified) + "/200 unbroken runs";
  if (qualified < 50) return fail("too few unbroken runs: " + d);
  return worst <= 1e-12 ? pass(d) : fail(d + ", limit 1e-12");
}

// ---------------------------------------------------------------------------
// C7: conditioned graph mass and tree mass agree in distribution
// ---------------------------------------------------------------------------

Outcome c7_coupling_distribution() {
  constexpr double kAlpha = 0.3;
  std::uint64_t passed = 0;
  std::string pvals;
  for (std::uint64_t meta = 0; meta < 10; ++meta) {
    const DegreeSequence seq = gen_power_law_degrees(
        10000, 2.0, OutDegreeModel::constant(3), 0xACC710 + meta);
    const HubPartition hubs = select_hubs_psi(seq, 0.8);
    const auto check = coupling_distribution_check(seq, hubs, kAlpha, 2, 500,
                                                   0xACC7F0 + 131 * meta);
    if (check.insufficient) continue;
    if (check.p_value > 0.01) ++passed;
    pvals += (meta ? " " : "") + fmt(check.p_value);
  }
  const std::string d =
      std::to_string(passed) + "/10 meta-runs with p > 0.01 (p: " + pvals + ")";
  return passed >= 9 ? pass(d) : fail(d);
}

// ---------------------------------------------------------------------------
// C8: generation weights are martingale-unbiased under the size-biased law
// ---------------------------------------------------------------------------

Outcome c8_martingale() {
  const DegreeSequence seq =
      gen_power_law_degrees(2000, 2.0, OutDegreeModel::constant(3), 0xACC800);
  const HubPartition hubs = select_hubs_psi(seq, 0.8);
  const auto dist = AttributeDistributions::build(seq, hubs);
  constexpr double kAlpha = 0.3;
  constexpr std::uint64_t kTrees = 10000;
  const double drift = (1.0 - kAlpha) * dist.non_hub_share();

  std::vector<std::vector<double>> ratios(3);
  for (std::uint64_t t = 0; t < kTrees; ++t) {
    const auto tree = grow_tree(dist, 3, 0xACC810 + t);
    const auto w = tree_weights(tree, kAlpha);
    for (std::uint64_t j = 1; j <= 3; ++j) {
      const double x =
          j < w.per_generation.size() ? w.per_generation[j] : 0.0;
      ratios[j - 1].push_back(x / std::pow(drift, static_cast<double>(j)));
    }
  }
  std::string d;
  for (std::uint64_t j = 1; j <= 3; ++j) {
    const auto& r = ratios[j - 1];
    const double m = mean(r);
    const double se = std::sqrt(sample_variance(r) / static_cast<double>(kTrees));
    d += (j > 1 ? ", " : "") + std::string("j=") + std::to_string(j) +
         ": mean " + fmt(m) + " (se " + fmt(se) + ")";
    if (std::abs(m - 1.0) > 3.0 * se)
      return fail(d + " outside 3 standard errors of 1");
  }
  return pass(d);
}

// ---------------------------------------------------------------------------
// C9: random-walk estimator matches power iteration within sampling error
// ---------------------------------------------------------------------------

Outcome c9_monte_carlo() {
  constexpr double kTol = 1e-10;
  constexpr std::uint64_t kWalks = 100000;
  auto rng = make_rng(0xACC900);
  double worst_sigma = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const SmallCase cs = small_case(9000 + t);
    const NodeId v =
        static_cast<NodeId>(uniform_below(rng, cs.g.node_count));
    const auto exact = ppr_exact(cs.g, v, cs.alpha, kTol);
    MonteCarloStats stats;
    const auto mc =
        ppr_monte_carlo(cs.g, v, cs.alpha, kWalks, 0xACC910 + t, &stats);
    for (std::uint64_t w = 0; w < cs.g.node_count; ++w) {
      const double diff = std::abs(mc.values[w] - exact.values[w]);
      const double sigma = stats.std_error[w];
      if (sigma > 0.0) {
        worst_sigma = std::max(worst_sigma, diff / sigma);
        if (diff > 4.0 * sigma)
          return fail("coordinate off by " + fmt(diff / sigma) +
                      " sigma on graph " + std::to_string(t));
      } else if (mc.values[w] == 0.0) {
        // zero observed visits are consistent with mass up to 16*alpha/walks
        if (exact.values[w] > 16.0 * cs.alpha / static_cast<double>(kWalks))
          return fail("unvisited coordinate with mass " +
                      fmt(exact.values[w]));
      } else if (diff > 1e-12) {
        return fail("deterministic coordinate off by " + fmt(diff));
      }
    }
  }
  return pass("20 graphs, worst coordinate at " + fmt(worst_sigma) +
              " sigma (limit 4)");
}

// ---------------------------------------------------------------------------
// C10: hub instub fraction stays in a factor-2 band, away from 0 and 1
// ---------------------------------------------------------------------------

Outcome c10_hub_fraction() {
  const std::uint64_t ns[3] = {1000, 10000, 100000};
  const double kappas[3] = {0.6, 0.7, 0.8};
  std::string d;
  for (const double kappa : kappas) {
    double lo = 1.0, hi = 0.0;
    for (std::uint64_t i = 0; i < 3; ++i) {
      const DegreeSequence seq = gen_power_law_degrees(
          ns[i], 2.0, OutDegreeModel::constant(3), 0xACCA00 + i);
      const double f = instub_hub_fraction(seq, select_hubs_psi(seq, kappa));
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    d += "kappa " + fmt(kappa) + ": [" + fmt(lo) + ", " + fmt(hi) + "] ";
    if (!(lo > 0.05 && hi < 0.95))
      return fail(d + "outside (0.05, 0.95)");
    if (hi > 2.0 * lo) return fail(d + "wider than a factor 2");
  }
  return pass(d + "all within factor-2 bands inside (0.05, 0.95)");
}

// ---------------------------------------------------------------------------
// C11: average certified bound strictly decreases along the n ladder
// ---------------------------------------------------------------------------

Outcome c11_avg_bound_ladder() {
  const std::uint64_t ns[3] = {1000, 10000, 100000};
  double medians[3] = {0.0, 0.0, 0.0};
  for (std::uint64_t i = 0; i < 3; ++i) {
    const double alpha = 1.0 / std::log(static_cast<double>(ns[i]));
    std::vector<double> vals;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const DegreeSequence seq = gen_power_law_degrees(
          ns[i], 2.0, OutDegreeModel::constant(3), 0xACCB00 + 10 * i + s);
      const HubPartition hubs = select_hubs_psi(seq, 0.8);
      const auto trace = construct_dcm(seq, hubs, SourceMode::kUniformAll,
                                       0xACCB80 + 10 * i + s);
      vals.push_back(avg_error_bound(trace.graph, hubs, alpha));
    }
    std::sort(vals.begin(), vals.end());
    medians[i] = vals[2];
  }
  const std::string d = "medians " + fmt(medians[0]) + " > " +
                        fmt(medians[1]) + " > " + fmt(medians[2]);
  return medians[0] > medians[1] && medians[1] > medians[2]
             ? pass(d)
             : fail(d + " not strictly decreasing");
}

// ---------------------------------------------------------------------------
// C12: l-step neighborhood carries at least 1 - (1-alpha)^l of the mass
// ---------------------------------------------------------------------------

Outcome c12_neighborhood_floor() {
  constexpr double kTau = 0.1;
  double worst = 1.0;  // min slack of mass - floor
  std::uint64_t checked = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const SmallCase cs = small_case(i);
    for (std::uint64_t v = 0; v < cs.g.node_count; ++v) {
      if (cs.hubs.non_hub[v] == 0) continue;
      const auto nb =
          neighborhood_mass(cs.g, static_cast<NodeId>(v), cs.alpha, kTau);
      const double floor =
          1.0 - std::pow(1.0 - cs.alpha, static_cast<double>(nb.radius));
      worst = std::min(worst, nb.mass - floor);
      ++checked;
      if (nb.mass < floor - 1e-12)
        return fail("mass " + fmt(nb.mass) + " below floor " + fmt(floor));
    }
  }
  for (std::uint64_t i = 0; i < 100; ++i) {
    const BuildCase c = build_case(i);
    const auto nb = neighborhood_mass(c.trace.graph, c.trace.source, 0.2, kTau);
    const double floor =
        1.0 - std::pow(0.8, static_cast<double>(nb.radius));
    worst = std::min(worst, nb.mass - floor);
    ++checked;
    if (nb.mass < floor - 1e-12)
      return fail("mass " + fmt(nb.mass) + " below floor " + fmt(floor));
  }
  return pass(std::to_string(checked) + " (graph, source) pairs, min slack " +
              fmt(worst));
}

// ---------------------------------------------------------------------------
// C13: optional large-dataset dimensionality check (needs a real edge list)
// ---------------------------------------------------------------------------

Outcome c13_dataset() {
  const char* path = std::getenv("PPRHUB_POKEC_PATH");
  if (path == nullptr || *path == '\0')
    return skip("set PPRHUB_POKEC_PATH to a soc-Pokec edge list to enable");
  const auto loaded = load_edge_list(path);
  const auto& g = loaded.graph;
  const double alpha = 1.0 / std::log(static_cast<double>(g.node_count));
  const HubPartition hubs = select_hubs_psi(g, 0.8);
  const double eps = (1.0 - alpha) / 3.0;
  const auto curve = dimensionality_curve(g, hubs, alpha, {eps});
  const double ratio = static_cast<double>(curve.delta_values[0]) /
                       static_cast<double>(g.node_count);
  const auto hist = error_histogram(g, hubs, alpha, BinSpec{20});
  const bool spikes =
      hist.frequency.front() > 0.0 && hist.frequency.back() > 0.0;
  const std::string d = "delta/n = " + fmt(ratio) + " (target 0.09 +- 0.03), " +
                        std::string(spikes ? "both" : "missing") +
                        " histogram spikes";
  return std::abs(ratio - 0.09) <= 0.03 && spikes ? pass(d) : fail(d);
}

// ---------------------------------------------------------------------------

struct Criterion {
  std::string id;
  std::string name;
  Outcome (*fn)();
};

const std::vector<Criterion> kCriteria = {
    {"C1", "decomposition-exactness", c1_decomposition},
    {"C2", "certificate-equivalence", c2_certificate},
    {"C3", "bound-sandwich", c3_bound_sandwich},
    {"C4", "bound-linearity", c4_linearity},
    {"C5", "construction-degrees-and-labels", c5_construction},
    {"C6", "coupling-exact-mass", c6_coupling_exact},
    {"C7", "coupling-distribution", c7_coupling_distribution},
    {"C8", "tree-martingale", c8_martingale},
    {"C9", "monte-carlo-oracle", c9_monte_carlo},
    {"C10", "hub-fraction-band", c10_hub_fraction},
    {"C11", "avg-bound-ladder", c11_avg_bound_ladder},
    {"C12", "neighborhood-mass-floor", c12_neighborhood_floor},
    {"C13", "dataset-dimensionality", c13_dataset},
};

}  // namespace

int main(int argc, char** argv) {
  std::string filter;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--criterion" && a + 1 < argc) {
      filter = argv[++a];
    } else if (arg == "--list") {
      for (const auto& c : kCriteria)
        std::cout << c.id << " " << c.name << "\n";
      return 0;
    } else {
      std::cout << "usage: acceptance [--criterion <id|name>] [--list]\n";
      return 2;
    }
  }

  int failures = 0;
  bool matched = false;
  for (const auto& c : kCriteria) {
    if (!filter.empty() && filter != c.id && filter != c.name) continue;
    matched = true;
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out = fail(std::string("exception: ") + e.what());
    }
    const char* tag = out.status == Outcome::kPass   ? "[PASS]"
                      : out.status == Outcome::kSkip ? "[SKIP]"
                                                     : "[FAIL]";
    std::cout << tag << " " << c.id << " " << c.name << ": " << out.detail
              << "\n";
    if (out.status == Outcome::kFail) ++failures;
  }
  if (!matched) {
    std::cout << "no criterion matches '" << filter << "'\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
