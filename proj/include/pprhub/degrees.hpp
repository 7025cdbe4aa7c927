#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pprhub/common.hpp"
#include "pprhub/graph.hpp"
#include "pprhub/io.hpp"
#include "pprhub/rng.hpp"

namespace pprhub {

/// Prescribed (in, out) degree pair per node; instub count of v is in_deg[v].
struct DegreeSequence {
  std::vector<std::uint32_t> in_deg;
  std::vector<std::uint32_t> out_deg;

  std::uint64_t node_count() const { return in_deg.size(); }

  std::uint64_t total_instubs() const {
    return std::accumulate(in_deg.begin(), in_deg.end(), std::uint64_t{0});
  }
  std::uint64_t total_outstubs() const {
    return std::accumulate(out_deg.begin(), out_deg.end(), std::uint64_t{0});
  }
  bool balanced() const { return total_instubs() == total_outstubs(); }

  void validate() const {
    require(!in_deg.empty(), "degree sequence must be non-empty");
    require(in_deg.size() == out_deg.size(), "in/out degree arrays differ in length");
  }

  static DegreeSequence from_graph(const DirectedMultigraph& g) {
    DegreeSequence seq;
    seq.in_deg = g.in_degrees;
    seq.out_deg.resize(g.node_count);
    for (std::uint64_t v = 0; v < g.node_count; ++v)
      seq.out_deg[v] = g.out_degree(static_cast<NodeId>(v));
    return seq;
  }
};

struct OutDegreeModel {
  enum class Kind : std::uint8_t { kConstant, kPowerLaw, kPoisson };
  Kind kind = Kind::kConstant;
  double param = 1.0;

  static OutDegreeModel constant(std::uint32_t c) {
    return {Kind::kConstant, static_cast<double>(c)};
  }
  static OutDegreeModel power_law(double exponent) { return {Kind::kPowerLaw, exponent}; }
  static OutDegreeModel poisson(double mean) { return {Kind::kPoisson, mean}; }
};

namespace detail {

/// Categorical on {1..n} with mass proportional to x^(-exponent).
inline AliasSampler truncated_power_law_sampler(std::uint64_t n, double exponent) {
  std::vector<double> weights(n);
  for (std::uint64_t x = 1; x <= n; ++x)
    weights[x - 1] = std::pow(static_cast<double>(x), -exponent);
  return AliasSampler(weights);
}

}  // namespace detail

/// In-degrees iid truncated power law on {1..n}; out-degrees per model; the
/// deficit side is then topped up one unit at a time at uniformly random
/// nodes until the stub counts match.
inline DegreeSequence gen_power_law_degrees(std::uint64_t n, double exponent,
                                            OutDegreeModel out_model,
                                            std::uint64_t seed) {
  require(n >= 1, "need at least one node");
  require(exponent > 0.0, "power-law exponent must be positive");
  Rng rng = make_rng(seed);
  DegreeSequence seq;
  seq.in_deg.resize(n);
  seq.out_deg.resize(n);

  const AliasSampler in_sampler = detail::truncated_power_law_sampler(n, exponent);
  for (auto& d : seq.in_deg) d = in_sampler.draw(rng) + 1;

  switch (out_model.kind) {
    case OutDegreeModel::Kind::kConstant: {
      require(out_model.param >= 0.0, "constant out-degree must be non-negative");
      const auto c = static_cast<std::uint32_t>(out_model.param);
      std::fill(seq.out_deg.begin(), seq.out_deg.end(), c);
      break;
    }
    case OutDegreeModel::Kind::kPowerLaw: {
      require(out_model.param > 0.0, "power-law exponent must be positive");
      const AliasSampler out_sampler =
          detail::truncated_power_law_sampler(n, out_model.param);
      for (auto& d : seq.out_deg) d = out_sampler.draw(rng) + 1;
      break;
    }
    case OutDegreeModel::Kind::kPoisson: {
      for (auto& d : seq.out_deg)
        d = static_cast<std::uint32_t>(poisson(rng, out_model.param));
      break;
    }
  }

  std::uint64_t in_sum = seq.total_instubs();
  std::uint64_t out_sum = seq.total_outstubs();
  while (in_sum < out_sum) {
    ++seq.in_deg[uniform_below(rng, n)];
    ++in_sum;
  }
  while (out_sum < in_sum) {
    ++seq.out_deg[uniform_below(rng, n)];
    ++out_sum;
  }
  return seq;
}

/// ceil(n^kappa), the hub-set size of the top-in-degree selection rule.
inline std::uint64_t psi_hub_count(std::uint64_t n, double kappa) {
  require(kappa > 0.0 && kappa < 1.0, "kappa must lie in (0,1)");
  require(n >= 1, "need at least one node");
  const double raw = std::pow(static_cast<double>(n), kappa);
  auto k = static_cast<std::uint64_t>(std::ceil(raw));
  if (k < 1) k = 1;
  if (k > n) k = n;
  return k;
}

/// Top ceil(n^kappa) nodes by in-degree; ties broken toward lower node ids.
inline HubPartition select_hubs_psi(std::span<const std::uint32_t> in_degrees,
                                    double kappa) {
  const std::uint64_t n = in_degrees.size();
  const std::uint64_t k = psi_hub_count(n, kappa);
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   order.end(), [&](NodeId a, NodeId b) {
                     if (in_degrees[a] != in_degrees[b])
                       return in_degrees[a] > in_degrees[b];
                     return a < b;
                   });
  order.resize(k);
  return HubPartition::from_hub_list(n, order);
}

inline HubPartition select_hubs_psi(const DegreeSequence& seq, double kappa) {
  return select_hubs_psi(std::span<const std::uint32_t>(seq.in_deg), kappa);
}

inline HubPartition select_hubs_psi(const DirectedMultigraph& g, double kappa) {
  return select_hubs_psi(std::span<const std::uint32_t>(g.in_degrees), kappa);
}

/// Fraction of all instubs owned by hub nodes.
inline double instub_hub_fraction(const DegreeSequence& seq, const HubPartition& hubs) {
  seq.validate();
  hubs.validate(seq.node_count());
  const std::uint64_t total = seq.total_instubs();
  require(total > 0, "degree sequence has no instubs");
  std::uint64_t hub_stubs = 0;
  for (NodeId k : hubs.hub_list) hub_stubs += seq.in_deg[k];
  return static_cast<double>(hub_stubs) / static_cast<double>(total);
}

/// Raw empirical moments of the degree sequence relative to a hub partition.
/// Ratios with zero denominators come back as quiet NaN.
struct AssumptionDiagnostics {
  double eta1 = 0.0;         // sum N_h / n
  double eta2 = 0.0;         // sum N_h D_h / n
  double eta3 = 0.0;         // sum U_h N_h^2 / n
  double zeta_star = 0.0;    // sum U_h D_h / sum U_h
  double lambda_star = 0.0;  // sum U_h N_h / sum U_h
  double p_hat = 0.0;        // sum U_h N_h / sum N_h
  double zeta = 0.0;         // eta2 / eta1
  double lambda = 0.0;       // eta3 / eta1
};

inline AssumptionDiagnostics assumption_diagnostics(const DegreeSequence& seq,
                                                    const HubPartition& hubs) {
  seq.validate();
  hubs.validate(seq.node_count());
  const std::uint64_t n = seq.node_count();
  double sum_n = 0.0, sum_nd = 0.0, sum_un2 = 0.0;
  double sum_u = 0.0, sum_ud = 0.0, sum_un = 0.0;
  for (std::uint64_t v = 0; v < n; ++v) {
    const double N = seq.in_deg[v];
    const double D = seq.out_deg[v];
    const double U = hubs.non_hub[v];
    sum_n += N;
    sum_nd += N * D;
    sum_un2 += U * N * N;
    sum_u += U;
    sum_ud += U * D;
    sum_un += U * N;
  }
  const auto ratio = [](double a, double b) {
    return b == 0.0 ? std::numeric_limits<double>::quiet_NaN() : a / b;
  };
  AssumptionDiagnostics d;
  d.eta1 = sum_n / static_cast<double>(n);
  d.eta2 = sum_nd / static_cast<double>(n);
  d.eta3 = sum_un2 / static_cast<double>(n);
  d.zeta_star = ratio(sum_ud, sum_u);
  d.lambda_star = ratio(sum_un, sum_u);
  d.p_hat = ratio(sum_un, sum_n);
  d.zeta = ratio(d.eta2, d.eta1);
  d.lambda = ratio(d.eta3, d.eta1);
  return d;
}

// ---- serialization ---------------------------------------------------------

inline void save_degree_sequence_text(const std::string& path, const DegreeSequence& seq,
                                      const Provenance* provenance = nullptr) {
  seq.validate();
  atomic_write_file(path, [&](std::ostream& os) {
    if (provenance) write_csv_provenance(os, *provenance);
    for (std::uint64_t v = 0; v < seq.node_count(); ++v)
      os << seq.in_deg[v] << ' ' << seq.out_deg[v] << '\n';
  });
}

inline DegreeSequence load_degree_sequence_text(const std::string& path) {
  std::ifstream is(path);
  require(is.is_open(), "cannot open degree file: " + path);
  DegreeSequence seq;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream fields(line);
    std::int64_t in_d = -1, out_d = -1;
    if (!(fields >> in_d >> out_d) || in_d < 0 || out_d < 0) {
      throw ValidationError(path + ": malformed degree pair at line " +
                            std::to_string(line_no));
    }
    seq.in_deg.push_back(static_cast<std::uint32_t>(in_d));
    seq.out_deg.push_back(static_cast<std::uint32_t>(out_d));
  }
  require(!seq.in_deg.empty(), path + ": no degree pairs found");
  return seq;
}

namespace detail {
inline constexpr char kDegreeMagic[8] = {'P', 'P', 'R', 'H', 'U', 'B', 'D', '1'};
}

inline void save_degree_sequence_cache(const std::string& path,
                                       const DegreeSequence& seq) {
  seq.validate();
  atomic_write_file(
      path,
      [&](std::ostream& os) {
        BinaryWriter w(os);
        w.bytes(detail::kDegreeMagic, sizeof(detail::kDegreeMagic));
        w.u32(1);
        w.u64(seq.node_count());
        for (std::uint32_t d : seq.in_deg) w.u32(d);
        for (std::uint32_t d : seq.out_deg) w.u32(d);
      },
      /*binary=*/true);
}

inline DegreeSequence load_degree_sequence_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.is_open(), "cannot open degree cache: " + path);
  BinaryReader r(is);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  require(std::equal(magic, magic + 8, detail::kDegreeMagic),
          path + ": not a degree cache file");
  require(r.u32() == 1, path + ": unsupported cache version");
  const std::uint64_t n = r.u64();
  DegreeSequence seq;
  seq.in_deg.resize(n);
  for (auto& d : seq.in_deg) d = r.u32();
  seq.out_deg.resize(n);
  for (auto& d : seq.out_deg) d = r.u32();
  seq.validate();
  return seq;
}

}  // namespace pprhub
