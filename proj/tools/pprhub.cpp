// Command line driver: every library operation behind a subcommand, driven by
// a flat key=value config file plus CLI overrides (flags win). Outputs are
// plot-ready CSV/JSON, each carrying a provenance header (config hash, seed,
// version); a config plus seed reproduces every byte.
//
// Exit codes: 0 success, 2 config/validation error, 3 runtime numerical
// failure. Errors print one machine-readable JSON object on stderr.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pprhub/branching.hpp"
#include "pprhub/common.hpp"
#include "pprhub/dcm.hpp"
#include "pprhub/degrees.hpp"
#include "pprhub/estimator.hpp"
#include "pprhub/graph.hpp"
#include "pprhub/io.hpp"
#include "pprhub/parallel.hpp"
#include "pprhub/ppr.hpp"
#include "pprhub/rng.hpp"
#include "pprhub/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pprhub;

namespace {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Flat string key=value store. Values stay strings until a typed getter
// parses them, so the canonical text (and the config hash) is exactly what
// the user wrote, independent of whether a key came from the file or a flag.
class ConfigBag {
 public:
  void set(const std::string& key, const std::string& value) {
    require(!key.empty(), "config key must be non-empty");
    kv_[key] = value;
  }

  void set_pair(const std::string& kv) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos && eq > 0,
            "override must look like key=value, got: " + kv);
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  void load_file(const std::string& path) {
    std::ifstream is(path);
    require(is.is_open(), "cannot open config file: " + path);
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (t.find('=') == std::string::npos)
        throw ValidationError(path + ": line " + std::to_string(line_no) +
                              " is not key=value");
      set_pair(t);
    }
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& dflt) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  double num(const std::string& key, double dflt) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? dflt : parse_num(key, it->second);
  }

  double num_required(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end())
      throw ValidationError("missing required config key: " + key);
    return parse_num(key, it->second);
  }

  std::uint64_t integer(const std::string& key, std::uint64_t dflt) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? dflt : parse_integer(key, it->second);
  }

  bool flag(const std::string& key, bool dflt) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config key '" + key + "' is not a boolean: " + v);
  }

  // Comma-separated values; the raw tokens ride along for readable CSV echo.
  std::vector<std::pair<std::string, double>> num_list(
      const std::string& key, const std::string& dflt) const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& tok : split_list(str(key, dflt)))
      out.emplace_back(tok, parse_num(key, tok));
    require(!out.empty(), "config key '" + key + "' needs at least one value");
    return out;
  }

  std::vector<std::uint64_t> int_list(const std::string& key,
                                      const std::string& dflt) const {
    std::vector<std::uint64_t> out;
    for (const auto& tok : split_list(str(key, dflt)))
      out.push_back(parse_integer(key, tok));
    require(!out.empty(), "config key '" + key + "' needs at least one value");
    return out;
  }

  // out_dir is placement, not an experiment parameter: two runs that differ
  // only in where they write must hash (and byte-compare) identically.
  std::string canonical(const std::string& command) const {
    std::string s = "command=" + command + "\n";
    for (const auto& [k, v] : kv_)
      if (k != "out_dir") s += k + "=" + v + "\n";
    return s;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> toks;
    std::string cur;
    std::istringstream is(raw);
    while (std::getline(is, cur, ',')) {
      const std::string t = trim(cur);
      if (!t.empty()) toks.push_back(t);
    }
    return toks;
  }

  static double parse_num(const std::string& key, const std::string& raw) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw, &pos);
      require(pos == raw.size(),
              "config key '" + key + "' has trailing junk: " + raw);
      return v;
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw ValidationError("config key '" + key + "' is not a number: " + raw);
    }
  }

  // Integers accept scientific notation (n=1e5) as long as the value is
  // exactly integral.
  static std::uint64_t parse_integer(const std::string& key,
                                     const std::string& raw) {
    const double v = parse_num(key, raw);
    require(v >= 0.0 && v <= 9.007199254740992e15 && v == std::floor(v),
            "config key '" + key + "' is not a non-negative integer: " + raw);
    return static_cast<std::uint64_t>(v);
  }

  std::map<std::string, std::string> kv_;
};

// ---------------------------------------------------------------------------
// Run context
// ---------------------------------------------------------------------------

struct RunContext {
  std::string command;
  ConfigBag cfg;
  fs::path out_dir;
  std::uint64_t seed = 0;
  Provenance prov;
  std::vector<std::string> outputs;

  void init() {
    seed = cfg.integer("seed", 0);
    out_dir = cfg.str("out_dir", "out");
    fs::create_directories(out_dir);
    prov = Provenance::from_config_text(cfg.canonical(command), seed);
  }

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (out_dir / name).string();
  }

  json base_json() const {
    json j;
    j["pprhub_version"] = prov.version;
    j["config_hash"] = prov.config_hash;
    j["seed"] = seed;
    j["command"] = command;
    return j;
  }

  void finish_json(json& j) {
    j["config"] = json(cfg.entries());
    j["outputs"] = outputs;
  }

  void write_json_file(const std::string& name, const json& j) {
    atomic_write_file(path(name), [&](std::ostream& os) {
      os << j.dump(2) << "\n";
    });
  }
};

void write_csv(RunContext& ctx, const std::string& name,
               const std::map<std::string, std::string>& extra,
               const std::string& header,
               const std::function<void(std::ostream&)>& body) {
  atomic_write_file(ctx.path(name), [&](std::ostream& os) {
    write_csv_provenance(os, ctx.prov, extra);
    os << header << "\n";
    body(os);
  });
}

// ---------------------------------------------------------------------------
// Shared parameter plumbing
// ---------------------------------------------------------------------------

OutDegreeModel out_model_from(const ConfigBag& cfg) {
  const std::string kind = cfg.str("out_model", "constant");
  const double param = cfg.num("out_param", 3.0);
  if (kind == "constant") {
    require(param >= 0.0 && param == std::floor(param) && param <= 4.0e9,
            "constant out_param must be a small non-negative integer");
    return OutDegreeModel::constant(static_cast<std::uint32_t>(param));
  }
  if (kind == "power_law") return OutDegreeModel::power_law(param);
  if (kind == "poisson") return OutDegreeModel::poisson(param);
  throw ValidationError("unknown out_model '" + kind +
                        "' (constant | power_law | poisson)");
}

SourceMode source_mode_from(const ConfigBag& cfg) {
  const std::string mode = cfg.str("source_mode", "uniform_all");
  if (mode == "uniform_all") return SourceMode::kUniformAll;
  if (mode == "uniform_non_hub") return SourceMode::kUniformNonHub;
  throw ValidationError("unknown source_mode '" + mode +
                        "' (uniform_all | uniform_non_hub)");
}

DanglingPolicy dangling_from(const ConfigBag& cfg) {
  const std::string p = cfg.str("dangling", "absorb");
  if (p == "absorb") return DanglingPolicy::kAbsorb;
  if (p == "drop") return DanglingPolicy::kDrop;
  throw ValidationError("unknown dangling policy '" + p + "' (absorb | drop)");
}

AlphaSchedule alpha_schedule_from(const ConfigBag& cfg) {
  const std::string mode = cfg.str("alpha_mode", "constant");
  if (mode == "constant") return AlphaSchedule::constant(cfg.num("alpha", 0.2));
  if (mode == "log_inverse") return AlphaSchedule::log_inverse();
  if (mode == "depth_budget")
    return AlphaSchedule::depth_budget(cfg.num("rho", 2.0), cfg.num("tau", 0.1),
                                 cfg.num("zeta", 2.0));
  throw ValidationError("unknown alpha_mode '" + mode +
                        "' (constant | log_inverse | depth_budget)");
}

NodeId node_id(std::uint64_t v, std::uint64_t n) {
  require(v < n, "node " + std::to_string(v) + " out of range (n = " +
                     std::to_string(n) + ")");
  return static_cast<NodeId>(v);
}

DegreeSequence sequence_from(const ConfigBag& cfg, std::uint64_t seed) {
  if (cfg.has("seq_file")) {
    DegreeSequence seq = load_degree_sequence_text(cfg.str("seq_file", ""));
    if (!seq.balanced())
      throw ValidationError(
          "degree sequence is unbalanced: " +
          std::to_string(seq.total_instubs()) + " instubs vs " +
          std::to_string(seq.total_outstubs()) + " outstubs");
    return seq;
  }
  return gen_power_law_degrees(cfg.integer("n", 1000), cfg.num("exponent", 2.0),
                               out_model_from(cfg), seed);
}

// Graph plus the degree/hub context every analysis command needs. Files give
// their empirical sequence; otherwise a fresh configuration-model draw.
struct GraphBundle {
  DirectedMultigraph graph;
  DegreeSequence seq;
  HubPartition hubs;
  std::string origin;
};

// Hub vectors are stored exactly, so mixture commands only accept non-hubs.
void require_non_hub(const GraphBundle& b, NodeId v) {
  if (!b.hubs.is_hub(v)) return;
  throw ValidationError(
      "node " + std::to_string(v) + " is one of the " +
      std::to_string(b.hubs.hub_count()) +
      " hubs, so its vector is computed exactly rather than estimated; "
      "pick a non-hub v (certify lists them in scheme_nodes.csv) or use "
      "the ppr command");
}

GraphBundle acquire_graph(const ConfigBag& cfg, std::uint64_t seed) {
  GraphBundle b;
  const double kappa = cfg.num("kappa", 0.8);
  if (cfg.has("graph_file")) {
    const std::string path = cfg.str("graph_file", "");
    if (path.ends_with(".bin"))
      b.graph = load_graph_cache(path).graph;
    else
      b.graph = load_edge_list(path, dangling_from(cfg)).graph;
    b.seq = DegreeSequence::from_graph(b.graph);
    b.hubs = select_hubs_psi(b.seq, kappa);
    b.origin = "file:" + path;
    return b;
  }
  b.seq = sequence_from(cfg, splitmix64(seed));
  b.hubs = select_hubs_psi(b.seq, kappa);
  b.graph =
      construct_dcm(b.seq, b.hubs, source_mode_from(cfg), splitmix64(seed + 1))
          .graph;
  b.origin = cfg.has("seq_file") ? "dcm:seq_file" : "dcm:power_law";
  return b;
}

json diagnostics_json(const AssumptionDiagnostics& d) {
  return json{{"eta1", d.eta1},
              {"eta2", d.eta2},
              {"eta3", d.eta3},
              {"zeta_star", d.zeta_star},
              {"lambda_star", d.lambda_star},
              {"p_hat", d.p_hat},
              {"zeta", d.zeta},
              {"lambda", d.lambda}};
}

// ---------------------------------------------------------------------------
// generate: degree sequence + one configuration-model graph + histograms
// ---------------------------------------------------------------------------

int cmd_generate(RunContext& ctx) {
  const ConfigBag& cfg = ctx.cfg;
  const DegreeSequence seq = sequence_from(cfg, splitmix64(ctx.seed));
  const double kappa = cfg.num("kappa", 0.8);
  const HubPartition hubs = select_hubs_psi(seq, kappa);
  const ConstructionTrace trace =
      construct_dcm(seq, hubs, source_mode_from(cfg), splitmix64(ctx.seed + 1));
  const AssumptionDiagnostics diag = assumption_diagnostics(seq, hubs);

  save_degree_sequence_text(ctx.path("degrees.tsv"), seq, &ctx.prov);
  save_graph_cache(ctx.path("graph.bin"), trace.graph);

  std::map<std::uint32_t, std::uint64_t> hist;
  for (const std::uint32_t d : seq.in_deg) ++hist[d];
  write_csv(ctx, "indegree_histogram.csv", {}, "in_degree,count",
            [&](std::ostream& os) {
              for (const auto& [d, c] : hist) os << d << "," << c << "\n";
            });

  std::array<std::uint64_t, 4> label_counts{};
  for (const NodeLabel lab : trace.labels)
    ++label_counts[static_cast<std::size_t>(lab)];

  json j = ctx.base_json();
  j["n"] = seq.node_count();
  j["edges"] = trace.graph.edge_count();
  j["kappa"] = kappa;
  j["hub_count"] = hubs.hub_count();
  j["instub_hub_fraction"] = instub_hub_fraction(seq, hubs);
  j["diagnostics"] = diagnostics_json(diag);
  json cons;
  cons["source"] = trace.source;
  cons["break_iteration"] = trace.break_iteration == kNoBreak
                                ? json(nullptr)
                                : json(trace.break_iteration);
  cons["rejection_count"] = trace.rejection_count;
  cons["bfs_layers"] = trace.bfs_layers.size();
  cons["labels"] = json{{"outside", label_counts[0]},
                        {"hub_reached", label_counts[1]},
                        {"shielded", label_counts[2]},
                        {"hub_free", label_counts[3]}};
  j["construction"] = cons;
  ctx.finish_json(j);
  ctx.write_json_file("provenance.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// hubfrac: instub hub fraction across an n ladder, per kappa
// ---------------------------------------------------------------------------

int cmd_hubfrac(RunContext& ctx) {
  const ConfigBag& cfg = ctx.cfg;
  const auto n_list = cfg.int_list("n_list", "1000,3162,10000");
  require(std::is_sorted(n_list.begin(), n_list.end()),
          "n_list must be sorted ascending");
  const auto kappas = cfg.num_list("kappa_list", "0.6,0.7,0.8");
  const std::uint64_t reps = cfg.integer("reps", 3);
  require(reps >= 1, "reps must be at least 1");
  const double exponent = cfg.num("exponent", 2.0);
  const OutDegreeModel model = out_model_from(cfg);

  struct Cell {
    std::vector<std::uint64_t> hub_count;
    std::vector<double> fraction;
  };
  const std::size_t cells = n_list.size() * reps;
  std::vector<Cell> grid(cells);
  parallel_for(cells, [&](std::size_t c) {
    const std::uint64_t n = n_list[c / reps];
    const std::uint64_t cell_seed =
        splitmix64(ctx.seed + 0x9e3779b97f4a7c15ULL * (c + 1));
    const DegreeSequence seq =
        gen_power_law_degrees(n, exponent, model, cell_seed);
    for (const auto& [tok, kappa] : kappas) {
      (void)tok;
      const HubPartition hubs = select_hubs_psi(seq, kappa);
      grid[c].hub_count.push_back(hubs.hub_count());
      grid[c].fraction.push_back(instub_hub_fraction(seq, hubs));
    }
  });

  write_csv(ctx, "hub_fraction.csv", {}, "n,kappa,rep,hub_count,fraction",
            [&](std::ostream& os) {
              for (std::size_t c = 0; c < cells; ++c) {
                const std::uint64_t n = n_list[c / reps];
                const std::uint64_t rep = c % reps;
                for (std::size_t k = 0; k < kappas.size(); ++k) {
                  os << n << "," << kappas[k].first << "," << rep << ","
                     << grid[c].hub_count[k] << ","
                     << fmt_double(grid[c].fraction[k]) << "\n";
                }
              }
            });

  // Per kappa: slope of the rep-averaged fraction against ln n. A flat line
  // (small slope, fraction inside (0,1)) is the scale-free hub signature.
  write_csv(
      ctx, "hub_fraction_summary.csv", {},
      "kappa,points,slope,intercept,min_fraction,max_fraction",
      [&](std::ostream& os) {
        for (std::size_t k = 0; k < kappas.size(); ++k) {
          std::vector<double> xs, ys;
          double lo = 1.0, hi = 0.0;
          for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
            double mean = 0.0;
            for (std::uint64_t r = 0; r < reps; ++r) {
              const double f = grid[ni * reps + r].fraction[k];
              mean += f;
              lo = std::min(lo, f);
              hi = std::max(hi, f);
            }
            xs.push_back(std::log(static_cast<double>(n_list[ni])));
            ys.push_back(mean / static_cast<double>(reps));
          }
          os << kappas[k].first << "," << xs.size() << ",";
          const bool distinct =
              std::adjacent_find(n_list.begin(), n_list.end()) == n_list.end();
          if (xs.size() >= 2 && distinct) {
            const LineFit fit = fit_line(xs, ys);
            os << fmt_double(fit.slope) << "," << fmt_double(fit.intercept);
          } else {
            os << ",";
          }
          os << "," << fmt_double(lo) << "," << fmt_double(hi) << "\n";
        }
      });

  json j = ctx.base_json();
  j["cells"] = cells;
  j["reps"] = reps;
  ctx.finish_json(j);
  ctx.write_json_file("hub_fraction_meta.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// errors: certified-bound histogram, dimensionality curve, kappa ladder
// ---------------------------------------------------------------------------

int cmd_errors(RunContext& ctx) {
  const ConfigBag& cfg = ctx.cfg;
  const GraphBundle b = acquire_graph(cfg, ctx.seed);
  const std::uint64_t n = b.graph.node_count;
  const double alpha = alpha_schedule_from(cfg).value_at(n);
  const double tol = cfg.num("tol", 1e-10);
  const auto bins = static_cast<std::uint32_t>(cfg.integer("bins", 20));

  const Histogram hist =
      error_histogram(b.graph, b.hubs, alpha, BinSpec{bins}, tol);
  write_csv(ctx, "histogram.csv", {{"alpha", fmt_double(alpha)}},
            "bin_left,bin_right,frequency", [&](std::ostream& os) {
              for (std::size_t i = 0; i < hist.frequency.size(); ++i)
                os << fmt_double(hist.bin_left[i]) << ","
                   << fmt_double(hist.bin_right[i]) << ","
                   << fmt_double(hist.frequency[i]) << "\n";
            });

  std::vector<double> grid;
  if (cfg.has("epsilons")) {
    for (const auto& [tok, v] : cfg.num_list("epsilons", "")) {
      (void)tok;
      grid.push_back(v);
    }
  } else {
    for (int k = 0; k <= 32; ++k)
      grid.push_back((1.0 - alpha) * static_cast<double>(k) / 32.0);
  }
  const DimensionalityCurve curve =
      dimensionality_curve(b.graph, b.hubs, alpha, grid, tol);
  write_csv(ctx, "dimensionality.csv", {{"alpha", fmt_double(alpha)}},
            "epsilon,delta,delta_over_n", [&](std::ostream& os) {
              for (std::size_t i = 0; i < curve.epsilons.size(); ++i)
                os << fmt_double(curve.epsilons[i]) << ","
                   << curve.delta_values[i] << ","
                   << fmt_double(static_cast<double>(curve.delta_values[i]) /
                                 static_cast<double>(n))
                   << "\n";
            });

  const double eps_third = (1.0 - alpha) / 3.0;
  const std::uint64_t delta_third =
      dimensionality_curve(b.graph, b.hubs, alpha, {eps_third}, tol)
          .delta_values[0];

  const auto kappas = cfg.num_list("kappa_list", "0.5,0.6,0.7,0.8,0.9");
  std::vector<std::uint64_t> ladder_hubs(kappas.size());
  std::vector<double> ladder_avg(kappas.size());
  parallel_for(kappas.size(), [&](std::size_t i) {
    const HubPartition h = select_hubs_psi(b.seq, kappas[i].second);
    ladder_hubs[i] = h.hub_count();
    ladder_avg[i] = avg_error_bound(b.graph, h, alpha, tol);
  });
  write_csv(ctx, "avg_error.csv", {{"alpha", fmt_double(alpha)}},
            "kappa,hub_count,avg_bound", [&](std::ostream& os) {
              for (std::size_t i = 0; i < kappas.size(); ++i)
                os << kappas[i].first << "," << ladder_hubs[i] << ","
                   << fmt_double(ladder_avg[i]) << "\n";
            });

  json j = ctx.base_json();
  j["n"] = n;
  j["origin"] = b.origin;
  j["alpha"] = alpha;
  j["kappa"] = cfg.num("kappa", 0.8);
  j["hub_count"] = b.hubs.hub_count();
  j["zero_bound_fraction"] = hist.frequency[0];
  j["epsilon_third"] = eps_third;
  j["delta_at_third"] = delta_third;
  j["delta_over_n_at_third"] =
      static_cast<double>(delta_third) / static_cast<double>(n);
  ctx.finish_json(j);
  ctx.write_json_file("errors_summary.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// coupling: two-sample KS check of graph mass vs branching-tree mass
// ---------------------------------------------------------------------------

int cmd_coupling(RunContext& ctx) {
  const ConfigBag& cfg = ctx.cfg;
  const auto n_list =
      cfg.int_list("n_list", std::to_string(cfg.integer("n", 2000)));
  require(std::is_sorted(n_list.begin(), n_list.end()),
          "n_list must be sorted ascending");
  const auto m = static_cast<std::uint32_t>(cfg.integer("m", 2));
  const std::uint64_t runs = cfg.integer("runs", 200);
  const double kappa = cfg.num("kappa", 0.8);
  const double exponent = cfg.num("exponent", 2.0);
  const OutDegreeModel model = out_model_from(cfg);
  const AlphaSchedule schedule = alpha_schedule_from(cfg);

  struct NCell {
    double alpha = 0.0;
    CouplingCheck check;
    AssumptionDiagnostics diag;
  };
  std::vector<NCell> cells(n_list.size());
  parallel_for(n_list.size(), [&](std::size_t i) {
    const std::uint64_t base = splitmix64(ctx.seed ^ (0xa5a5ULL * (i + 1)));
    const DegreeSequence seq =
        gen_power_law_degrees(n_list[i], exponent, model, splitmix64(base));
    const HubPartition hubs = select_hubs_psi(seq, kappa);
    cells[i].alpha = schedule.value_at(n_list[i]);
    cells[i].diag = assumption_diagnostics(seq, hubs);
    cells[i].check = coupling_distribution_check(seq, hubs, cells[i].alpha, m,
                                                 runs, splitmix64(base + 1));
  });

  const NCell& main = cells.back();
  write_csv(ctx, "coupling_samples.csv",
            {{"n", std::to_string(n_list.back())},
             {"m", std::to_string(m)},
             {"alpha", fmt_double(main.alpha)}},
            "side,value", [&](std::ostream& os) {
              for (const double v : main.check.graph_samples)
                os << "graph," << fmt_double(v) << "\n";
              for (const double v : main.check.tree_samples)
                os << "tree," << fmt_double(v) << "\n";
            });

  write_csv(ctx, "coupling_trend.csv", {{"m", std::to_string(m)}},
            "n,alpha,runs,n_graph,rejection_rate,ks_stat,p_value,insufficient",
            [&](std::ostream& os) {
              for (std::size_t i = 0; i < cells.size(); ++i) {
                const CouplingCheck& c = cells[i].check;
                os << n_list[i] << "," << fmt_double(cells[i].alpha) << ","
                   << runs << "," << c.n_graph << ","
                   << fmt_double(c.rejection_rate) << ","
                   << fmt_double(c.ks_stat) << "," << fmt_double(c.p_value)
                   << "," << (c.insufficient ? 1 : 0) << "\n";
              }
            });

  json j = ctx.base_json();
  j["m"] = m;
  j["runs"] = runs;
  j["kappa"] = kappa;
  auto cell_json = [&](std::size_t i) {
    const CouplingCheck& c = cells[i].check;
    return json{{"n", n_list[i]},          {"alpha", cells[i].alpha},
                {"ks_stat", c.ks_stat},    {"p_value", c.p_value},
                {"n_graph", c.n_graph},    {"n_tree", c.n_tree},
                {"rejection_rate", c.rejection_rate},
                {"insufficient", c.insufficient}};
  };
  j["main"] = cell_json(cells.size() - 1);
  json trend = json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) trend.push_back(cell_json(i));
  j["trend"] = trend;
  j["diagnostics"] = diagnostics_json(main.diag);
  // Depth rule m = c * log n from the measured offspring statistics; omitted
  // when the measured values leave every branch undefined.
  try {
    CouplingDepthParams params;
    params.delta = cfg.num("delta", 0.5);
    params.p = cfg.num("depth_p", main.diag.p_hat);
    params.zeta = cfg.num("depth_zeta", main.diag.zeta);
    params.rho = cfg.num("rho", 2.0);
    params.tau = cfg.num("tau", 0.1);
    params.epsilon = cfg.num("epsilon", 0.1);
    const CouplingDepthConstant c = coupling_depth_constant(params);
    j["depth_constant"] = json{{"value", c.value},
                               {"branch", c.branch},
                               {"branches", c.branches}};
  } catch (const ValidationError& e) {
    j["depth_constant"] = json(nullptr);
    j["depth_constant_skipped"] = e.what();
  }
  ctx.finish_json(j);
  ctx.write_json_file("coupling.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// ppr: one personalized vector, exact or Monte Carlo
// ---------------------------------------------------------------------------

int cmd_ppr(RunContext& ctx) {
  const ConfigBag& cfg = ctx.cfg;
  const GraphBundle b = acquire_graph(cfg, ctx.seed);
  const std::uint64_t n = b.graph.node_count;
  const NodeId v = node_id(cfg.integer("v", 0), n);
  const double alpha = alpha_schedule_from(cfg).value_at(n);
  const double tol = cfg.num("tol", 1e-10);
  const std::string method = cfg.str("method", "power");

  PprVector vec;
  json mc;
  if (method == "power") {
    vec = ppr_exact(b.graph, v, alpha, tol);
  } else if (method == "monte_carlo" || method == "mc") {
    const std::uint64_t walks = cfg.integer("walks", 100000);
    MonteCarloStats stats;
    vec = ppr_monte_carlo(b.graph, v, alpha, walks,
                          splitmix64(ctx.seed + 2), &stats);
    double se = 0.0;
    for (const double s : stats.std_error) se = std::max(se, s);
    mc = json{{"walks", walks}, {"max_std_error", se}};
  } else {
    throw ValidationError("unknown method '" + method +
                          "' (power | monte_carlo)");
  }
  save_ppr_csv(ctx.path("ppr.csv"), vec, ctx.prov);

  const double mass_tau = cfg.num("mass_tau", 0.1);
  const NeighborhoodMass nb = neighborhood_mass(b.graph, v, alpha, mass_tau, tol);

  json j = ctx.base_json();
  j["n"] = n;
  j["origin"] = b.origin;
  j["v"] = v;
  j["alpha"] = alpha;
  j["method"] = method;
  j["iterations"] = vec.iterations;
  j["residual"] = vec.residual;
  j["l1"] = vec.l1();
  if (!mc.is_null()) j["monte_carlo"] = mc;
  j["neighborhood"] = json{
      {"tau", mass_tau},
      {"radius", nb.radius},
      {"size", nb.size},
      {"mass", nb.mass},
      {"lower_bound", 1.0 - std::pow(1.0 - alpha, static_cast<double>(nb.radius))}};
  ctx.finish_json(j);
  ctx.write_json_file("ppr_summary.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// estimate: hub mixture approximation of one vector
// ---------------------------------------------------------------------------

int cmd_estimate(RunContext& ctx) {
  const ConfigBag& cfg = ctx.cfg;
  const GraphBundle b = acquire_graph(cfg, ctx.seed);
  const std::uint64_t n = b.graph.node_count;
  const NodeId v = node_id(cfg.integer("v", 0), n);
  require_non_hub(b, v);
  const double alpha = alpha_schedule_from(cfg).value_at(n);
  const double tol = cfg.num("tol", 1e-10);

  std::unique_ptr<HubVectorStore> store;
  std::string store_origin;
  if (cfg.has("hub_store")) {
    store = std::make_unique<MmapHubStore>(cfg.str("hub_store", ""));
    store_origin = "loaded";
  } else {
    store = std::make_unique<InMemoryHubStore>(
        compute_hub_vectors(b.graph, b.hubs, alpha, tol));
    store_origin = "computed";
  }
  if (cfg.has("hub_store_out"))
    save_hub_vectors(cfg.str("hub_store_out", ""), *store, alpha);

  const HubRestrictedPpr hpr = ppr_hub_restricted(b.graph, b.hubs, v, alpha, tol);
  const BetaWeights beta = beta_weights(hpr, b.hubs);
  PprVector est = estimate_pi_hat(beta, *store, n);
  est.values[v] += alpha;  // full approximation alpha*e_v + pi_hat

  save_ppr_csv(ctx.path("estimate.csv"), est, ctx.prov);
  write_csv(ctx, "beta.csv", {{"v", std::to_string(v)}}, "hub,weight",
            [&](std::ostream& os) {
              for (const auto& [k, w] : beta.weights)
                os << k << "," << fmt_double(w) << "\n";
            });

  json j = ctx.base_json();
  j["n"] = n;
  j["origin"] = b.origin;
  j["v"] = v;
  j["alpha"] = alpha;
  j["hub_count"] = b.hubs.hub_count();
  j["hub_store"] = store_origin;
  j["hub_mass"] = hpr.hub_mass;
  j["denom"] = beta.denom;
  j["beta_sum"] = beta.sum();
  j["nonzero_weights"] = beta.weights.size();
  j["iterations"] = hpr.vec.iterations;
  j["estimate_l1"] = est.l1();
  double outside_mass = 0.0;
  for (std::uint64_t u = 0; u < n; ++u)
    if (b.hubs.non_hub[u] != 0) outside_mass += hpr.vec.values[u];
  j["certified_l1_bound"] =
      detail::clip_bound(alpha * (outside_mass / beta.denom - 1.0), alpha);
  if (cfg.flag("check_exact", false)) {
    const PprVector exact = ppr_exact(b.graph, v, alpha, tol);
    double err = 0.0;
    for (std::uint64_t u = 0; u < n; ++u)
      err += std::abs(exact.values[u] - est.values[u]);
    j["exact_l1_error"] = err;
  }
  ctx.finish_json(j);
  ctx.write_json_file("estimate_summary.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// certify: error certificate for one node, or the full serving scheme
// ---------------------------------------------------------------------------

int cmd_certify(RunContext& ctx) {
  const ConfigBag& cfg = ctx.cfg;
  const GraphBundle b = acquire_graph(cfg, ctx.seed);
  const std::uint64_t n = b.graph.node_count;
  const double alpha = alpha_schedule_from(cfg).value_at(n);
  const double epsilon = cfg.num_required("epsilon");
  const double tol = cfg.num("tol", 1e-10);

  json j = ctx.base_json();
  j["n"] = n;
  j["origin"] = b.origin;
  j["alpha"] = alpha;
  j["epsilon"] = epsilon;
  j["hub_count"] = b.hubs.hub_count();

  if (cfg.has("v")) {
    const NodeId v = node_id(cfg.integer("v", 0), n);
    require_non_hub(b, v);
    const HubRestrictedPpr hpr =
        ppr_hub_restricted(b.graph, b.hubs, v, alpha, tol);
    const ErrorCertificate cert = certify(hpr, b.hubs, epsilon);
    j["certificate"] = json{{"v", cert.owner},
                            {"hub_mass", cert.hub_mass},
                            {"threshold", cert.threshold},
                            {"certified_l1_bound", cert.certified_l1_bound},
                            {"passes", cert.passes},
                            {"indeterminate", cert.indeterminate}};
    ctx.finish_json(j);
    ctx.write_json_file("certify.json", j);
    return 0;
  }

  const SchemeReport report = full_scheme(b.graph, b.hubs, alpha, epsilon, tol);
  write_csv(ctx, "scheme_nodes.csv",
            {{"alpha", fmt_double(alpha)}, {"epsilon", fmt_double(epsilon)}},
            "node,served_by", [&](std::ostream& os) {
              for (const NodeId u : report.estimated)
                os << u << ",estimate\n";
              for (const NodeId u : report.computed_exactly)
                os << u << ",exact\n";
            });
  const std::uint64_t outside = n - report.hub_count;
  j["estimated_count"] = report.estimated.size();
  j["exact_count"] = report.computed_exactly.size();
  j["estimated_fraction"] =
      outside == 0 ? 0.0
                   : static_cast<double>(report.estimated.size()) /
                         static_cast<double>(outside);
  j["ppr_values_computed"] = report.ppr_values_computed;
  j["degenerate"] = report.degenerate;
  ctx.finish_json(j);
  ctx.write_json_file("scheme.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// tree: one size-biased branching tree and its generation weights
// ---------------------------------------------------------------------------

int cmd_tree(RunContext& ctx) {
  const ConfigBag& cfg = ctx.cfg;
  const DegreeSequence seq = sequence_from(cfg, splitmix64(ctx.seed));
  const HubPartition hubs = select_hubs_psi(seq, cfg.num("kappa", 0.8));
  const double alpha =
      alpha_schedule_from(cfg).value_at(seq.node_count());
  const std::uint64_t m = cfg.integer("m", 3);
  const std::uint64_t cap = cfg.integer("node_cap", kDefaultTreeNodeCap);

  const AttributeDistributions dist = AttributeDistributions::build(seq, hubs);
  const GenerationTree tree = grow_tree(dist, m, splitmix64(ctx.seed + 1), cap);
  const TreeWeights weights = tree_weights(tree, alpha);

  const double drift = (1.0 - alpha) * dist.non_hub_share();
  write_csv(ctx, "tree.csv",
            {{"alpha", fmt_double(alpha)},
             {"non_hub_share", fmt_double(dist.non_hub_share())}},
            "generation,nodes,weight_sum,martingale_ref",
            [&](std::ostream& os) {
              for (std::size_t g = 0; g < tree.gen_ranges.size(); ++g) {
                const auto& [begin, end] = tree.gen_ranges[g];
                os << g << "," << (end - begin) << ","
                   << fmt_double(weights.per_generation[g]) << ","
                   << fmt_double(std::pow(drift, static_cast<double>(g)))
                   << "\n";
              }
            });

  json j = ctx.base_json();
  j["n"] = seq.node_count();
  j["alpha"] = alpha;
  j["m"] = m;
  j["hub_count"] = hubs.hub_count();
  j["non_hub_share"] = dist.non_hub_share();
  j["node_count"] = tree.nodes.size();
  j["generations"] = tree.gen_ranges.size();
  j["tail_quantity"] = tail_quantity(weights, alpha, m);
  ctx.finish_json(j);
  ctx.write_json_file("tree_summary.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// Option plumbing
// ---------------------------------------------------------------------------

// Every key can come from the config file, --set key=value, or a dedicated
// flag (underscores become dashes). Later sources win: file < --set < flag.
const std::vector<std::string> kTypedKeys = {
    "seed",       "out_dir",   "n",         "n_list",     "alpha",
    "alpha_mode", "kappa",     "kappa_list", "epsilon",   "epsilons",
    "tol",        "m",         "runs",      "reps",       "v",
    "method",     "walks",     "graph_file", "seq_file",  "exponent",
    "out_model",  "out_param", "bins",      "node_cap",   "source_mode",
    "dangling",   "hub_store", "hub_store_out",           "mass_tau",
    "rho",        "tau",       "zeta",      "delta",      "depth_p",
    "depth_zeta", "check_exact"};

struct SubOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> typed;
  std::map<std::string, CLI::Option*> handles;
};

void register_options(CLI::App* sub, SubOpts& o) {
  sub->add_option("--config", o.config_path, "flat key=value config file");
  sub->add_option("--set", o.sets, "override one key=value (repeatable)");
  for (const std::string& key : kTypedKeys) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    o.handles[key] = sub->add_option(flag, o.typed[key], "");
  }
}

ConfigBag resolve_config(const SubOpts& o) {
  ConfigBag bag;
  if (!o.config_path.empty()) bag.load_file(o.config_path);
  for (const std::string& kv : o.sets) bag.set_pair(kv);
  for (const std::string& key : kTypedKeys)
    if (o.handles.at(key)->count() > 0) bag.set(key, o.typed.at(key));
  return bag;
}

int emit_error(int code, const std::string& kind, const std::string& message) {
  json j;
  j["error"] = json{{"code", code}, {"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"personalized-pagerank hub decomposition toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate", "degree sequence + configuration-model graph"},
      {"hubfrac", "instub hub fraction across an n ladder"},
      {"errors", "certified error histogram and dimensionality curve"},
      {"coupling", "KS check of graph mass vs branching-tree mass"},
      {"ppr", "one personalized vector (power iteration or Monte Carlo)"},
      {"estimate", "hub mixture approximation of one vector"},
      {"certify", "error certificate for one node or the full scheme"},
      {"tree", "grow one size-biased branching tree"}};
  std::map<std::string, SubOpts> opts;
  for (const auto& [name, desc] : commands)
    register_options(app.add_subcommand(name, desc), opts[name]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return emit_error(2, "cli", e.what());
  }

  const std::map<std::string, int (*)(RunContext&)> dispatch = {
      {"generate", cmd_generate}, {"hubfrac", cmd_hubfrac},
      {"errors", cmd_errors},     {"coupling", cmd_coupling},
      {"ppr", cmd_ppr},           {"estimate", cmd_estimate},
      {"certify", cmd_certify},   {"tree", cmd_tree}};

  try {
    for (const auto& [name, fn] : dispatch) {
      if (!app.got_subcommand(name)) continue;
      RunContext ctx;
      ctx.command = name;
      ctx.cfg = resolve_config(opts.at(name));
      ctx.init();
      return fn(ctx);
    }
    return emit_error(2, "cli", "no subcommand selected");
  } catch (const ValidationError& e) {
    return emit_error(2, "validation", e.what());
  } catch (const NotConvergedError& e) {
    return emit_error(3, "not_converged", e.what());
  } catch (const TreeExplodedError& e) {
    return emit_error(3, "tree_cap", e.what());
  } catch (const NumericError& e) {
    return emit_error(3, "numeric", e.what());
  } catch (const std::exception& e) {
    return emit_error(3, "runtime", e.what());
  }
}
