// Drives the command line binary end to end: argv[1] is the path to it.
// Each scenario checks the external contract (files written, exit codes,
// stderr JSON, byte-for-byte reproducibility), not library internals.

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

#define CHECK_TRUE(cond)                                          \
  do {                                                            \
    if (!(cond)) {                                                \
      ++failures;                                                 \
      std::cerr << "FAIL " << __FILE__ << ":" << __LINE__ << ": " \
                << #cond << "\n";                                 \
    }                                                             \
  } while (0)

std::string g_cli;
fs::path g_scratch;

struct RunResult {
  int code = -1;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const fs::path err_file = g_scratch / "stderr.txt";
  const std::string cmd =
      "\"" + g_cli + "\" " + args + " >/dev/null 2>\"" + err_file.string() + "\"";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  if (WIFEXITED(raw)) r.code = WEXITSTATUS(raw);
  std::ifstream is(err_file);
  std::stringstream ss;
  ss << is.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json load_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is.is_open()) {
    ++failures;
    std::cerr << "FAIL missing json file: " << p << "\n";
    return json::object();
  }
  json j = json::parse(is, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    ++failures;
    std::cerr << "FAIL unparseable json: " << p << "\n";
    return json::object();
  }
  return j;
}

json parse_stderr(const RunResult& r) {
  json j = json::parse(r.err, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    ++failures;
    std::cerr << "FAIL stderr is not json: '" << r.err << "'\n";
    return json::object();
  }
  return j;
}

std::string dir_arg(const std::string& name) {
  return " --out-dir \"" + (g_scratch / name).string() + "\"";
}

// ---------------------------------------------------------------------------

void generate_is_reproducible() {
  const std::string params = "generate --n 400 --kappa 0.7 --seed 42";
  CHECK_TRUE(run_cli(params + dir_arg("gen_a")).code == 0);
  CHECK_TRUE(run_cli(params + dir_arg("gen_b")).code == 0);
  for (const char* f :
       {"degrees.tsv", "graph.bin", "indegree_histogram.csv"}) {
    CHECK_TRUE(fs::exists(g_scratch / "gen_a" / f));
    CHECK_TRUE(slurp(g_scratch / "gen_a" / f) == slurp(g_scratch / "gen_b" / f));
  }
  const json j = load_json(g_scratch / "gen_a" / "provenance.json");
  CHECK_TRUE(j.at("n") == 400);
  CHECK_TRUE(j.at("seed") == 42);
  CHECK_TRUE(j.at("config_hash").get<std::string>().size() == 16);
  CHECK_TRUE(j.at("hub_count").get<std::uint64_t>() > 0);
  const std::string head = slurp(g_scratch / "gen_a" / "degrees.tsv");
  CHECK_TRUE(head.rfind("# pprhub_version=", 0) == 0);
}

void unbalanced_sequence_exits_2() {
  const fs::path seq = g_scratch / "bad_seq.txt";
  std::ofstream(seq) << "3 1\n2 1\n";
  const RunResult r = run_cli("generate --seq-file \"" + seq.string() +
                              "\" --kappa 0.5" + dir_arg("gen_bad"));
  CHECK_TRUE(r.code == 2);
  const json e = parse_stderr(r);
  CHECK_TRUE(e.value("error", json::object()).value("code", -1) == 2);
  CHECK_TRUE(e.value("error", json::object()).value("kind", "") == "validation");
}

void bad_config_value_exits_2() {
  const RunResult r = run_cli("generate --set n=abc" + dir_arg("gen_abc"));
  CHECK_TRUE(r.code == 2);
  CHECK_TRUE(parse_stderr(r).value("error", json::object()).value("code", -1) == 2);
}

void tree_cap_exits_3() {
  const RunResult r =
      run_cli("tree --n 400 --set kappa=0.01 --m 10 --alpha 0.3 "
              "--set node_cap=50" +
              dir_arg("tree_cap"));
  CHECK_TRUE(r.code == 3);
  CHECK_TRUE(parse_stderr(r).value("error", json::object()).value("kind", "") == "tree_cap");
}

// Depth 0 mass is 1 on both sides (non-hub root), so the KS statistic
// degenerates to zero.
void coupling_m0_has_ks_zero() {
  const RunResult r = run_cli(
      "coupling --n 300 --m 0 --runs 20 --kappa 0.8 --alpha 0.3 --seed 3" +
      dir_arg("coup0"));
  CHECK_TRUE(r.code == 0);
  const json j = load_json(g_scratch / "coup0" / "coupling.json");
  CHECK_TRUE(j.at("main").at("ks_stat") == 0.0);
  CHECK_TRUE(j.at("main").at("p_value") == 1.0);
  CHECK_TRUE(j.at("main").at("rejection_rate") == 0.0);
}

// Star graph: every non-hub points only at the top hub, so every certified
// bound is exactly zero and the histogram is a single spike at the origin.
void all_shielded_histogram_is_a_spike() {
  const fs::path edges = g_scratch / "star.txt";
  {
    std::ofstream os(edges);
    os << "0 1\n";
    for (int v = 1; v <= 8; ++v) os << v << " 0\n";
  }
  const RunResult r =
      run_cli("errors --graph-file \"" + edges.string() +
              "\" --kappa 0.3 --alpha 0.2" + dir_arg("spike"));
  CHECK_TRUE(r.code == 0);
  const json j = load_json(g_scratch / "spike" / "errors_summary.json");
  CHECK_TRUE(j.at("hub_count") == 2);
  const double spike = j.at("zero_bound_fraction").get<double>();
  CHECK_TRUE(spike > 0.77 && spike < 0.78);  // 7 of 9 nodes
  // every non-zero bin of the histogram is empty
  std::istringstream hist(slurp(g_scratch / "spike" / "histogram.csv"));
  std::string line;
  bool first_data = true;
  while (std::getline(hist, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("bin_left", 0) == 0)
      continue;
    const auto last_comma = line.rfind(',');
    const double freq = std::stod(line.substr(last_comma + 1));
    if (first_data) {
      CHECK_TRUE(freq > 0.0);
      first_data = false;
    } else {
      CHECK_TRUE(freq == 0.0);
    }
  }
  CHECK_TRUE(!first_data);
}

void full_scheme_counts_are_consistent() {
  const RunResult r = run_cli(
      "certify --n 200 --kappa 0.7 --alpha 0.2 --epsilon 0.05 --seed 9" +
      dir_arg("scheme"));
  CHECK_TRUE(r.code == 0);
  const json j = load_json(g_scratch / "scheme" / "scheme.json");
  const auto est = j.at("estimated_count").get<std::uint64_t>();
  const auto exact = j.at("exact_count").get<std::uint64_t>();
  CHECK_TRUE(est + exact == j.at("n").get<std::uint64_t>());
  CHECK_TRUE(exact >= j.at("hub_count").get<std::uint64_t>());
  CHECK_TRUE(fs::exists(g_scratch / "scheme" / "scheme_nodes.csv"));
}

void hub_store_roundtrip_is_exact() {
  // Fixed edge list so the hub set (and a known non-hub owner) is forced.
  const fs::path edges = g_scratch / "star2.txt";
  {
    std::ofstream os(edges);
    os << "0 1\n";
    for (int v = 1; v <= 8; ++v) os << v << " 0\n";
  }
  const fs::path store = g_scratch / "hubs.bin";
  const std::string base = "estimate --graph-file \"" + edges.string() +
                           "\" --v 3 --kappa 0.3 --alpha 0.2 --seed 9";
  CHECK_TRUE(run_cli(base + " --hub-store-out \"" + store.string() + "\"" +
                     dir_arg("est_a"))
                 .code == 0);
  CHECK_TRUE(run_cli(base + " --hub-store \"" + store.string() + "\"" +
                     dir_arg("est_b"))
                 .code == 0);
  // The two configs differ (store written vs store read), so the provenance
  // hash differs by design; the numbers must not.
  auto strip_hash = [](std::string s) {
    const auto b = s.find("# config_hash=");
    const auto e = s.find('\n', b);
    return s.erase(b, e - b);
  };
  CHECK_TRUE(strip_hash(slurp(g_scratch / "est_a" / "estimate.csv")) ==
             strip_hash(slurp(g_scratch / "est_b" / "estimate.csv")));
  const json a = load_json(g_scratch / "est_a" / "estimate_summary.json");
  const json b = load_json(g_scratch / "est_b" / "estimate_summary.json");
  CHECK_TRUE(a.at("hub_store") == "computed");
  CHECK_TRUE(b.at("hub_store") == "loaded");
  CHECK_TRUE(a.at("estimate_l1") == b.at("estimate_l1"));
}

void monte_carlo_is_seeded() {
  const std::string base =
      "ppr --n 300 --v 2 --alpha 0.25 --method monte_carlo --walks 5000 "
      "--seed 17";
  CHECK_TRUE(run_cli(base + dir_arg("mc_a")).code == 0);
  CHECK_TRUE(run_cli(base + dir_arg("mc_b")).code == 0);
  CHECK_TRUE(slurp(g_scratch / "mc_a" / "ppr.csv") ==
             slurp(g_scratch / "mc_b" / "ppr.csv"));
}

void config_file_and_overrides_compose() {
  const fs::path cfg = g_scratch / "exp.cfg";
  std::ofstream(cfg) << "# comment\nn = 300\nkappa = 0.6\nseed = 4\n";
  const RunResult r = run_cli("generate --config \"" + cfg.string() +
                              "\" --set kappa=0.7 --n 400" + dir_arg("prec"));
  CHECK_TRUE(r.code == 0);
  const json j = load_json(g_scratch / "prec" / "provenance.json");
  CHECK_TRUE(j.at("n") == 400);
  CHECK_TRUE(j.at("kappa") == 0.7);
  CHECK_TRUE(j.at("seed") == 4);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cout << "usage: cli_tests <path-to-cli>\n";
    return 2;
  }
  g_cli = argv[1];
  g_scratch = fs::temp_directory_path() /
              ("pprhub_cli_test_" + std::to_string(::getpid()));
  fs::remove_all(g_scratch);
  fs::create_directories(g_scratch);

  const std::pair<const char*, void (*)()> scenarios[] = {
      {"generate_is_reproducible", generate_is_reproducible},
      {"unbalanced_sequence_exits_2", unbalanced_sequence_exits_2},
      {"bad_config_value_exits_2", bad_config_value_exits_2},
      {"tree_cap_exits_3", tree_cap_exits_3},
      {"coupling_m0_has_ks_zero", coupling_m0_has_ks_zero},
      {"all_shielded_histogram_is_a_spike", all_shielded_histogram_is_a_spike},
      {"full_scheme_counts_are_consistent", full_scheme_counts_are_consistent},
      {"hub_store_roundtrip_is_exact", hub_store_roundtrip_is_exact},
      {"monte_carlo_is_seeded", monte_carlo_is_seeded},
      {"config_file_and_overrides_compose", config_file_and_overrides_compose},
  };
  for (const auto& [name, fn] : scenarios) {
    try {
      fn();
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "FAIL " << name << " threw: " << e.what() << "\n";
    }
  }

  if (failures == 0) {
    fs::remove_all(g_scratch);
    std::cout << "cli: all scenarios passed\n";
    return 0;
  }
  std::cout << "cli: " << failures << " check(s) failed, scratch kept at "
            << g_scratch << "\n";
  return 1;
}
