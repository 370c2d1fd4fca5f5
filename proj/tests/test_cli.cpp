// End-to-end tests for the command-line driver.  Each test invokes the real
// binary (path injected via the SPCA_CLI_BIN compile definition) in a scratch
// directory, then checks exit codes, stdout, and the output files against the
// library computing the same quantities in-process.

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spca/chain.hpp"
#include "spca/gibbs.hpp"
#include "spca/instance_io.hpp"
#include "spca/landscape.hpp"
#include "spca/model.hpp"
#include "spca/rng.hpp"
#include "spca/theory.hpp"
#include "spca/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Scratch directory removed on destruction.  Each test gets its own so CLI
// runs never see a previous test's outputs.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    dir_ = fs::temp_directory_path() /
           ("spca_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return dir_; }
  fs::path sub(const std::string& name) const { return dir_ / name; }
  std::string str(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot read " << p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const TempDir& dir, const json& cfg,
                      const std::string& name = "cfg.json") {
  const fs::path p = dir.sub(name);
  std::ofstream out(p, std::ios::binary);
  out << cfg.dump(2) << '\n';
  REQUIRE(out.good());
  return p;
}

struct RunOutput {
  int exit_code = -1;
  std::string out;  // combined stdout + stderr
};

// Runs the CLI binary through the shell, capturing combined output.  An
// optional env prefix (e.g. "SPCA_THREADS=3") is prepended verbatim.
RunOutput run_cli(const TempDir& scratch, const std::string& args,
                  const std::string& env_prefix = "") {
  static int run_counter = 0;
  const fs::path capture =
      scratch.sub("capture_" + std::to_string(run_counter++) + ".txt");
  std::string cmd;
  if (!env_prefix.empty()) cmd += env_prefix + " ";
  cmd += std::string(SPCA_CLI_BIN) + " " + args + " > " + capture.string() +
         " 2>&1";
  const int status = std::system(cmd.c_str());
  RunOutput r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(capture);
  return r;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

// Reads a CSV written by the tool (fields never quoted in these tables).
// Element [0] is the header row.
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot read " << p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_fields(line));
  }
  return rows;
}

void check_meta(const json& j, std::uint64_t expect_seed) {
  REQUIRE(j.contains("tool_version"));
  CHECK(j.at("tool_version").get<std::string>() == spca::kVersion);
  REQUIRE(j.contains("config_digest"));
  const std::string digest = j.at("config_digest").get<std::string>();
  CHECK(digest.size() == 16);
  CHECK(digest.find_first_not_of("0123456789abcdef") == std::string::npos);
  REQUIRE(j.contains("master_seed"));
  CHECK(j.at("master_seed").get<std::uint64_t>() == expect_seed);
}

// Two planted supports of equal strength: H has global minima at both the
// signal block and the decoy block, with an energy barrier between them.
spca::Instance double_spike_instance(double lambda) {
  const int n = 12;
  const std::vector<int> x{0, 1, 2, 3, 4, 5};
  spca::SymmetricMatrix w(n);
  for (int i = 6; i < n; ++i) {
    for (int j = i; j < n; ++j) w.set(i, j, lambda / 6.0);
  }
  return spca::build_observation(n, x, lambda, std::move(w));
}

}  // namespace

TEST_CASE("cli: gen writes a loadable instance and reruns byte-identically") {
  TempDir dir;
  json cfg{{"n", 12}, {"k", 4},        {"lambda", 2.0},
           {"seed", 5}, {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "gen --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  const fs::path inst_path = dir.sub("run") / "instance.json";
  CHECK(r.out.find("instance.json") != std::string::npos);
  REQUIRE(fs::exists(inst_path));

  const json doc = json::parse(slurp(inst_path));
  check_meta(doc, 5);

  const spca::Instance inst = spca::load_instance(inst_path.string());
  CHECK(inst.n == 12);
  CHECK(inst.k == 4);
  CHECK(inst.lambda == 2.0);
  CHECK(inst.seed == 5);
  REQUIRE(inst.x.size() == 4);

  // The loaded instance must match an in-process build from the same seed,
  // and y must equal the spike-plus-noise construction bit for bit.
  const spca::Instance ref = spca::make_instance(12, 4, 2.0, 5, false);
  CHECK(inst.x == ref.x);
  std::vector<int> in_support(12, 0);
  for (int i : inst.x) in_support[i] = 1;
  for (int i = 0; i < 12; ++i) {
    for (int j = i; j < 12; ++j) {
      CHECK(inst.w(i, j) == ref.w(i, j));
      const double spike = (in_support[i] && in_support[j]) ? 2.0 / 4.0 : 0.0;
      CHECK(inst.y(i, j) == inst.w(i, j) + spike);
    }
  }

  const std::string first_bytes = slurp(inst_path);
  fs::remove(inst_path);
  const RunOutput r2 = run_cli(dir, "gen --config " + cfg_path.string());
  CHECK(r2.exit_code == 0);
  CHECK(slurp(inst_path) == first_bytes);
}

TEST_CASE("cli: gen honors zero_noise plus --seed and --out flag overrides") {
  TempDir dir;
  json cfg{{"n", 10},     {"k", 3},
           {"lambda", 1.5}, {"seed", 5},
           {"zero_noise", true}, {"out", dir.str("config_out")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r =
      run_cli(dir, "gen --config " + cfg_path.string() + " --seed 123 --out " +
                       dir.str("flag_out"));
  CHECK(r.exit_code == 0);
  CHECK_FALSE(fs::exists(dir.sub("config_out") / "instance.json"));
  const fs::path inst_path = dir.sub("flag_out") / "instance.json";
  REQUIRE(fs::exists(inst_path));

  const json doc = json::parse(slurp(inst_path));
  check_meta(doc, 123);

  const spca::Instance inst = spca::load_instance(inst_path.string());
  CHECK(inst.seed == 123);
  CHECK(inst.w.frobenius_norm() == 0.0);
  const spca::Instance ref = spca::make_instance(10, 3, 1.5, 123, true);
  CHECK(inst.x == ref.x);
  for (int i = 0; i < 10; ++i) {
    for (int j = i; j < 10; ++j) CHECK(inst.y(i, j) == ref.y(i, j));
  }
}

TEST_CASE("cli: gen rejects an impossible sparsity level") {
  TempDir dir;
  json cfg{{"n", 4}, {"k", 6}, {"lambda", 1.0}, {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);
  const RunOutput r = run_cli(dir, "gen --config " + cfg_path.string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: depth emits the exact enumeration value and theory columns") {
  TempDir dir;
  json cfg{{"n", 10},   {"k", 3},   {"k_prime", 3}, {"lambda", 1.5},
           {"beta", 0.7}, {"ell", 1}, {"seed", 3},    {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "depth --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  const fs::path csv_path = dir.sub("run") / "depth.csv";
  CHECK(r.out.find("depth.csv") != std::string::npos);
  REQUIRE(fs::exists(csv_path));

  const json sidecar = json::parse(slurp(dir.sub("run") / "depth.csv.meta.json"));
  check_meta(sidecar, 3);

  const auto rows = read_csv(csv_path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"lambda", "beta", "ell", "depth",
                                            "ht_bound", "ell_applicable",
                                            "k_prime_applicable"});
  const auto& row = rows[1];
  REQUIRE(row.size() == 7);
  CHECK(std::stod(row[0]) == 1.5);
  CHECK(std::stod(row[1]) == 0.7);
  CHECK(row[2] == "1");

  const spca::Instance inst = spca::make_instance(10, 3, 1.5, 3, false);
  const spca::GibbsProfile profile = spca::gibbs_profile(inst, 0.7, 3);
  CHECK(std::stod(row[3]) == spca::few_depth(profile, 1));

  spca::ModelParams p;
  p.n = 10;
  p.k = 3;
  p.k_prime = 3;
  p.lambda = 1.5;
  p.beta = 0.7;
  p.delta = 0.1;
  const spca::HighTempBound bound = spca::high_temp_depth_bound(p, 1);
  CHECK(std::stod(row[4]) == bound.bound);
  CHECK(row[5] == (bound.ell_applicable ? "true" : "false"));
  CHECK(row[6] == (bound.k_prime_applicable ? "true" : "false"));
}

TEST_CASE("cli: depth grid rows weaken monotonically as lambda grows") {
  TempDir dir;
  json cfg{{"n", 10},
           {"k", 3},
           {"k_prime", 3},
           {"lambda_grid", json::array({0.5, 1.5, 2.5})},
           {"beta", 0.8},
           {"ell", 1},
           {"seed", 3},
           {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "depth --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  const auto rows = read_csv(dir.sub("run") / "depth.csv");
  REQUIRE(rows.size() == 4);
  // Same seed for every lambda, so the depth comparison is signal-only.
  const double d0 = std::stod(rows[1][3]);
  const double d1 = std::stod(rows[2][3]);
  const double d2 = std::stod(rows[3][3]);
  CHECK(std::stod(rows[1][0]) == 0.5);
  CHECK(std::stod(rows[3][0]) == 2.5);
  CHECK(d0 >= d1 - 1e-9);
  CHECK(d1 >= d2 - 1e-9);
}

TEST_CASE("cli: depth reports undefined rows for an empty energy band") {
  TempDir dir;
  // k = k' = 6 in dimension 8 forces every candidate to overlap the signal in
  // at least 4 coordinates, so the band [1, 2) contains no states at all.
  json cfg{{"n", 8},      {"k", 6},   {"k_prime", 6}, {"lambda", 1.0},
           {"beta", 1.0}, {"ell", 1}, {"seed", 1},    {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "depth --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  const auto rows = read_csv(dir.sub("run") / "depth.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][3] == "undefined");
  CHECK(std::isfinite(std::stod(rows[1][4])));
}

TEST_CASE("cli: hit writes an escape table consistent with its summary") {
  TempDir dir;
  json cfg{{"n", 10},         {"k", 3},     {"lambda", 2.0},
           {"beta", 0.5},     {"k_prime", 3}, {"ell", 1},
           {"replications", 40}, {"t_max", 200}, {"seed", 11},
           {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "hit --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  const fs::path csv_path = dir.sub("run") / "escape.csv";
  REQUIRE(fs::exists(csv_path));
  REQUIRE(fs::exists(dir.sub("run") / "escape.csv.meta.json"));

  const json summary = json::parse(slurp(dir.sub("run") / "escape_summary.json"));
  check_meta(summary, 11);
  CHECK(summary.at("replications").get<int>() == 40);
  CHECK(summary.at("seed").get<std::uint64_t>() == 11);
  const int timeouts = summary.at("timeout_count").get<int>();
  CHECK(timeouts >= 0);
  CHECK(timeouts <= 40);

  // depth_used must be the exact enumerated well depth for this instance.
  const double depth_used = summary.at("depth_used").get<double>();
  const spca::Instance inst = spca::make_instance(10, 3, 2.0, 11, false);
  CHECK(depth_used == spca::few_depth(spca::gibbs_profile(inst, 0.5, 3), 1));

  const auto rows = read_csv(csv_path);
  const std::vector<std::int64_t> times = spca::log_spaced_times(200);
  REQUIRE(rows.size() == times.size() + 1);
  CHECK(rows[0] == std::vector<std::string>{"t", "emp_prob", "bound", "vacuous"});
  double prev_prob = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 4);
    const auto t = static_cast<double>(times[i - 1]);
    CHECK(std::stod(rows[i][0]) == t);
    const double emp = std::stod(rows[i][1]);
    CHECK(emp >= prev_prob);  // CDF of the escape time
    CHECK(emp <= 1.0);
    prev_prob = emp;
    const double bound = std::stod(rows[i][2]);
    const double expected = t * std::exp(-depth_used);
    CHECK(std::abs(bound - expected) <= 1e-12 * std::max(1.0, expected));
    CHECK(rows[i][3] == (bound >= 1.0 ? "true" : "false"));
  }
}

TEST_CASE("cli: hit rejects a zero replication count") {
  TempDir dir;
  json cfg{{"n", 10},     {"k", 3},       {"lambda", 2.0},   {"beta", 0.5},
           {"k_prime", 3}, {"ell", 1},     {"replications", 0}, {"seed", 11},
           {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);
  const RunOutput r = run_cli(dir, "hit --config " + cfg_path.string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: ogp scan on a monotone landscape reports no certificate") {
  TempDir dir;
  json cfg{{"n", 12},          {"k", 4},    {"k_prime", 4},
           {"lambda", 2.0},    {"seed", 2}, {"zero_noise", true},
           {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "ogp --config " + cfg_path.string());
  CHECK(r.exit_code == 0);

  const json cert = json::parse(slurp(dir.sub("run") / "ogp_certificate.json"));
  check_meta(cert, 2);
  CHECK(cert.at("holds").get<bool>() == false);
  CHECK(cert.at("instance_seed").get<std::uint64_t>() == 2);

  // Noise-free profile: phi(ell) = -lambda * ell^2 / k on every class.
  const auto rows = read_csv(dir.sub("run") / "phi_curve.csv");
  REQUIRE(rows.size() == 6);  // header + overlap classes 0..4
  CHECK(rows[0] == std::vector<std::string>{"ell", "phi", "argmin_indices"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double ell = std::stod(rows[i][0]);
    CHECK(ell == static_cast<double>(i - 1));
    CHECK(std::stod(rows[i][1]) == doctest::Approx(-2.0 * ell * ell / 4.0)
                                       .epsilon(1e-12));
  }
}

TEST_CASE("cli: ogp certifies the gap on a two-spike instance from disk") {
  TempDir dir;
  const spca::Instance decoy = double_spike_instance(2.0);
  const std::string decoy_path = dir.str("decoy.json");
  spca::save_instance(decoy, decoy_path);

  json cfg{{"instance", decoy_path}, {"k_prime", 6}, {"out", dir.str("scan")}};
  const fs::path cfg_path = write_config(dir, cfg, "scan.json");

  const RunOutput r = run_cli(dir, "ogp --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  const json cert = json::parse(slurp(dir.sub("scan") / "ogp_certificate.json"));
  REQUIRE(cert.at("holds").get<bool>());
  CHECK(cert.at("zeta1").get<int>() == 0);
  CHECK(cert.at("zeta2").get<int>() == 6);
  CHECK(cert.at("gap_width").get<int>() == 6);
  CHECK(cert.at("witness_low").get<std::vector<int>>() ==
        std::vector<int>{6, 7, 8, 9, 10, 11});
  CHECK(cert.at("witness_high").get<std::vector<int>>() ==
        std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(cert.at("witness_low_energy").get<double>() ==
        doctest::Approx(-12.0).epsilon(1e-12));
  CHECK(cert.at("witness_high_energy").get<double>() ==
        doctest::Approx(-12.0).epsilon(1e-12));

  // The scan's threshold must revalidate against a fresh in-process curve.
  const spca::Instance loaded = spca::load_instance(decoy_path);
  const spca::PhiCurve curve = spca::phi_curve(loaded, 6);
  const double scan_r = cert.at("r").get<double>();
  CHECK(spca::ogp_certify(curve, 0, 6, scan_r).holds);

  // Explicit threshold below the interior barrier: certificate holds.
  json hold_cfg{{"instance", decoy_path}, {"k_prime", 6}, {"zeta1", 0},
                {"zeta2", 6},             {"r", -10.0},   {"out", dir.str("hold")}};
  const RunOutput r_hold =
      run_cli(dir, "ogp --config " + write_config(dir, hold_cfg, "hold.json").string());
  CHECK(r_hold.exit_code == 0);
  CHECK(json::parse(slurp(dir.sub("hold") / "ogp_certificate.json"))
            .at("holds")
            .get<bool>());

  // Threshold above the barrier: the interior band dips below r, no gap.
  json fail_cfg{{"instance", decoy_path}, {"k_prime", 6}, {"zeta1", 0},
                {"zeta2", 6},             {"r", -6.0},    {"out", dir.str("fail")}};
  const RunOutput r_fail =
      run_cli(dir, "ogp --config " + write_config(dir, fail_cfg, "fail.json").string());
  CHECK(r_fail.exit_code == 0);
  CHECK_FALSE(json::parse(slurp(dir.sub("fail") / "ogp_certificate.json"))
                  .at("holds")
                  .get<bool>());
}

TEST_CASE("cli: curves outputs are self-consistent and rerun byte-identically") {
  TempDir dir;
  json cfg{{"n", 20},      {"k", 4},    {"k_prime", 4},
           {"lambda", 1.0}, {"seed", 0}, {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "curves --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  const fs::path csv_path = dir.sub("run") / "gamma_curve.csv";
  const fs::path summary_path = dir.sub("run") / "curves_summary.json";
  const fs::path sidecar_path = dir.sub("run") / "gamma_curve.csv.meta.json";
  REQUIRE(fs::exists(csv_path));
  REQUIRE(fs::exists(summary_path));
  REQUIRE(fs::exists(sidecar_path));

  const auto rows = read_csv(csv_path);
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == std::vector<std::string>{"ell", "gamma", "A_ell",
                                            "finite_difference"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 4);
    // With no second-moment correction the rate equals the annealed count.
    CHECK(rows[i][1] == rows[i][2]);
    const bool last = (i + 1 == rows.size());
    CHECK(rows[i][3].empty() == last);
  }

  const json summary = json::parse(slurp(summary_path));
  check_meta(summary, 0);
  CHECK(summary.at("n").get<int>() == 20);
  CHECK(summary.at("k").get<int>() == 4);
  CHECK(summary.at("k_prime").get<int>() == 4);
  CHECK(summary.at("lambda").get<double>() == 1.0);
  CHECK(summary.at("delta").get<double>() == 0.1);
  CHECK(summary.at("alpha_n").get<double>() == 0.0);
  REQUIRE(summary.contains("shape_report"));
  CHECK(summary.at("shape_report").is_object());
  REQUIRE(summary.contains("informative_ranges"));
  const json& ranges = summary.at("informative_ranges");
  for (const char* key : {"ell_low_exclusive", "ell_high", "k_prime_low",
                          "k_prime_high", "k_prime_valid"}) {
    CHECK(ranges.contains(key));
  }
  CHECK(summary.at("conjectured_runtime_exponent_scale").is_number());

  const std::string csv_bytes = slurp(csv_path);
  const std::string summary_bytes = slurp(summary_path);
  const std::string sidecar_bytes = slurp(sidecar_path);
  fs::remove(csv_path);
  fs::remove(summary_path);
  fs::remove(sidecar_path);
  const RunOutput r2 = run_cli(dir, "curves --config " + cfg_path.string());
  CHECK(r2.exit_code == 0);
  CHECK(slurp(csv_path) == csv_bytes);
  CHECK(slurp(summary_path) == summary_bytes);
  CHECK(slurp(sidecar_path) == sidecar_bytes);
}

TEST_CASE("cli: recover runs every method exactly on a noiseless observation") {
  TempDir dir;
  json cfg{{"n", 20},          {"k", 4},   {"lambda", 2.0},
           {"zero_noise", true}, {"seeds", 2}, {"seed", 9},
           {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "recover --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  const fs::path csv_path = dir.sub("run") / "recovery_benchmark.csv";
  REQUIRE(fs::exists(csv_path));
  REQUIRE(fs::exists(dir.sub("run") / "recovery_benchmark.csv.meta.json"));

  const auto rows = read_csv(csv_path);
  const std::vector<std::string> methods{"diag", "power", "boost", "mle",
                                         "subexp"};
  REQUIRE(rows.size() == 1 + methods.size() * 2);
  CHECK(rows[0] == std::vector<std::string>{"method", "n", "k", "k_prime",
                                            "lambda", "seed", "exact", "overlap",
                                            "enumerations", "wall_time"});
  for (std::size_t s = 0; s < 2; ++s) {
    const std::uint64_t inst_seed = spca::derive_stream(9, s, 0);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto& row = rows[1 + s * methods.size() + m];
      REQUIRE(row.size() == 10);
      CHECK(row[0] == methods[m]);
      CHECK(row[1] == "20");
      CHECK(row[2] == "4");
      CHECK(std::stoi(row[3]) >= 1);
      CHECK(std::stod(row[4]) == 2.0);
      CHECK(row[5] == std::to_string(inst_seed));
      CHECK(row[6] == "true");
      CHECK(row[7] == "4");
      CHECK(std::stoll(row[8]) >= 0);
      CHECK(std::stod(row[9]) == 0.0);  // timing off: reproducible zeros
    }
  }

  const std::string first_bytes = slurp(csv_path);
  const RunOutput r2 = run_cli(dir, "recover --config " + cfg_path.string());
  CHECK(r2.exit_code == 0);
  CHECK(slurp(csv_path) == first_bytes);
}

TEST_CASE("cli: recover rejects unknown or empty method lists") {
  TempDir dir;
  json cfg{{"n", 12},          {"k", 3},  {"lambda", 1.0},
           {"zero_noise", true}, {"seed", 1}, {"out", dir.str("run")},
           {"methods", json::array({"bogus"})}};
  const RunOutput r =
      run_cli(dir, "recover --config " + write_config(dir, cfg).string());
  CHECK(r.exit_code == 2);

  cfg["methods"] = json::array();
  const RunOutput r2 = run_cli(
      dir, "recover --config " + write_config(dir, cfg, "cfg2.json").string());
  CHECK(r2.exit_code == 2);
}

TEST_CASE("cli: sweep computes a full grid with derived per-cell streams") {
  TempDir dir;
  json cfg{{"n", 10},
           {"k", 3},
           {"k_prime", 3},
           {"ell", 1},
           {"lambda_grid", json::array({0.5, 1.0})},
           {"beta_grid", json::array({0.0, 0.5, 1.0})},
           {"replications", 5},
           {"t_max", 50},
           {"seed", 4},
           {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput r = run_cli(dir, "sweep --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("sweep.csv (6 cells, 0 reused)") != std::string::npos);
  const fs::path csv_path = dir.sub("run") / "sweep.csv";
  REQUIRE(fs::exists(csv_path));
  REQUIRE(fs::exists(dir.sub("run") / "sweep.csv.meta.json"));

  const auto rows = read_csv(csv_path);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"i", "j", "lambda", "beta",
                                            "k_prime", "ell", "stream", "depth",
                                            "emp_escape"});
  const std::vector<double> lambdas{0.5, 1.0};
  const std::vector<double> betas{0.0, 0.5, 1.0};
  for (std::size_t flat = 0; flat < 6; ++flat) {
    const auto& row = rows[flat + 1];
    REQUIRE(row.size() == 9);
    const std::size_t i = flat / 3;
    const std::size_t j = flat % 3;
    CHECK(row[0] == std::to_string(i));
    CHECK(row[1] == std::to_string(j));
    CHECK(std::stod(row[2]) == lambdas[i]);
    CHECK(std::stod(row[3]) == betas[j]);
    CHECK(row[4] == "3");
    CHECK(row[5] == "1");
    CHECK(row[6] == std::to_string(spca::derive_stream(4, i, j)));
    CHECK(row[7] != "undefined");
    const double escape = std::stod(row[8]);
    CHECK(escape >= 0.0);
    CHECK(escape <= 1.0);
  }

  const json checkpoint =
      json::parse(slurp(dir.sub("run") / "sweep_checkpoint.json"));
  CHECK(checkpoint == json::array({0, 1, 2, 3, 4, 5}));
}

TEST_CASE("cli: sweep resumes from a checkpoint and reproduces identical bytes") {
  TempDir dir;
  json cfg{{"n", 10},
           {"k", 3},
           {"k_prime", 3},
           {"ell", 1},
           {"lambda_grid", json::array({0.5, 1.0})},
           {"beta_grid", json::array({0.0, 0.5, 1.0})},
           {"replications", 5},
           {"t_max", 50},
           {"seed", 4},
           {"out", dir.str("full")}};
  const RunOutput full =
      run_cli(dir, "sweep --config " + write_config(dir, cfg, "full.json").string());
  REQUIRE(full.exit_code == 0);
  const std::string full_bytes = slurp(dir.sub("full") / "sweep.csv");

  // Simulate an interrupted run: header plus the first three rows, with a
  // checkpoint recording exactly those flat indices as complete.
  fs::create_directories(dir.sub("resume"));
  std::istringstream in(full_bytes);
  std::string line;
  std::string truncated;
  for (int i = 0; i < 4 && std::getline(in, line); ++i) {
    truncated += line + "\n";
  }
  {
    std::ofstream out(dir.sub("resume") / "sweep.csv", std::ios::binary);
    out << truncated;
  }
  {
    std::ofstream out(dir.sub("resume") / "sweep_checkpoint.json",
                      std::ios::binary);
    out << "[0,1,2]\n";
  }

  cfg["out"] = dir.str("resume");
  const RunOutput resumed = run_cli(
      dir, "sweep --config " + write_config(dir, cfg, "resume.json").string());
  CHECK(resumed.exit_code == 0);
  CHECK(resumed.out.find("(6 cells, 3 reused)") != std::string::npos);
  CHECK(slurp(dir.sub("resume") / "sweep.csv") == full_bytes);
  CHECK(json::parse(slurp(dir.sub("resume") / "sweep_checkpoint.json")) ==
        json::array({0, 1, 2, 3, 4, 5}));
}

TEST_CASE("cli: sweep over k_prime leaves the escape column empty") {
  TempDir dir;
  json cfg{{"n", 10},
           {"k", 3},
           {"ell", 1},
           {"lambda", 1.0},
           {"k_prime_grid", json::array({2, 3})},
           {"beta_grid", json::array({0.5})},
           {"replications", 0},
           {"seed", 4},
           {"out", dir.str("run")}};
  const RunOutput r =
      run_cli(dir, "sweep --config " + write_config(dir, cfg).string());
  CHECK(r.exit_code == 0);
  const auto rows = read_csv(dir.sub("run") / "sweep.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][4] == "2");
  CHECK(rows[2][4] == "3");
  CHECK(rows[1][8].empty());  // depth-only sweep: no chain statistics
  CHECK(rows[2][8].empty());

  // Supplying both sweep axes at once is a config contradiction.
  cfg["lambda_grid"] = json::array({0.5, 1.0});
  const RunOutput r2 = run_cli(
      dir, "sweep --config " + write_config(dir, cfg, "both.json").string());
  CHECK(r2.exit_code == 2);
}

TEST_CASE("cli: config and usage errors exit with code 2") {
  TempDir dir;
  CHECK(run_cli(dir, "gen --config /nonexistent/cfg.json").exit_code == 2);

  const fs::path mangled = dir.sub("mangled.json");
  {
    std::ofstream out(mangled, std::ios::binary);
    out << "{ this is not json";
  }
  CHECK(run_cli(dir, "gen --config " + mangled.string()).exit_code == 2);

  CHECK(run_cli(dir, "frobnicate").exit_code == 2);
  CHECK(run_cli(dir, "").exit_code == 2);

  // Missing required key (lambda).
  json cfg{{"n", 10}, {"k", 3}, {"out", dir.str("run")}};
  CHECK(run_cli(dir, "gen --config " + write_config(dir, cfg).string())
            .exit_code == 2);
}

TEST_CASE("cli: --version reports the tool version and exits cleanly") {
  TempDir dir;
  const RunOutput r = run_cli(dir, "--version");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find(spca::kVersion) != std::string::npos);
}

TEST_CASE("cli: blowing the enumeration budget exits with code 3") {
  TempDir dir;
  json cfg{{"n", 40},     {"k", 4},   {"k_prime", 20}, {"lambda", 1.0},
           {"beta", 0.0}, {"ell", 1}, {"budget", 1000}, {"seed", 1},
           {"out", dir.str("run")}};
  const RunOutput r =
      run_cli(dir, "depth --config " + write_config(dir, cfg).string());
  CHECK(r.exit_code == 3);
}

TEST_CASE("cli: SPCA_THREADS env fallback is validated but flags win") {
  TempDir dir;
  json cfg{{"n", 10}, {"k", 3}, {"lambda", 1.0}, {"out", dir.str("run")}};
  const fs::path cfg_path = write_config(dir, cfg);

  const RunOutput bad =
      run_cli(dir, "gen --config " + cfg_path.string(), "SPCA_THREADS=abc");
  CHECK(bad.exit_code == 2);
  CHECK(bad.out.find("SPCA_THREADS") != std::string::npos);

  const RunOutput flag_wins = run_cli(
      dir, "gen --config " + cfg_path.string() + " --threads 1", "SPCA_THREADS=abc");
  CHECK(flag_wins.exit_code == 0);

  json with_key = cfg;
  with_key["threads"] = 2;
  const RunOutput key_wins =
      run_cli(dir, "gen --config " + write_config(dir, with_key, "k.json").string(),
              "SPCA_THREADS=abc");
  CHECK(key_wins.exit_code == 0);
}

TEST_CASE("cli: results do not depend on the worker thread count") {
  TempDir dir;
  json depth_cfg{{"n", 10},
                 {"k", 3},
                 {"k_prime", 3},
                 {"lambda_grid", json::array({0.5, 1.5, 2.5})},
                 {"beta", 0.8},
                 {"ell", 1},
                 {"seed", 3}};
  depth_cfg["out"] = dir.str("d1");
  const RunOutput d1 = run_cli(
      dir, "depth --config " + write_config(dir, depth_cfg, "d1.json").string() +
               " --threads 1");
  depth_cfg["out"] = dir.str("d4");
  const RunOutput d4 = run_cli(
      dir, "depth --config " + write_config(dir, depth_cfg, "d4.json").string() +
               " --threads 4");
  REQUIRE(d1.exit_code == 0);
  REQUIRE(d4.exit_code == 0);
  CHECK(slurp(dir.sub("d1") / "depth.csv") == slurp(dir.sub("d4") / "depth.csv"));

  json hit_cfg{{"n", 10},         {"k", 3},     {"lambda", 2.0},
               {"beta", 0.5},     {"k_prime", 3}, {"ell", 1},
               {"replications", 30}, {"t_max", 100}, {"seed", 11}};
  hit_cfg["out"] = dir.str("h1");
  const RunOutput h1 = run_cli(
      dir, "hit --config " + write_config(dir, hit_cfg, "h1.json").string() +
               " --threads 1");
  hit_cfg["out"] = dir.str("h3");
  const RunOutput h3 = run_cli(
      dir, "hit --config " + write_config(dir, hit_cfg, "h3.json").string() +
               " --threads 3");
  REQUIRE(h1.exit_code == 0);
  REQUIRE(h3.exit_code == 0);
  CHECK(slurp(dir.sub("h1") / "escape.csv") == slurp(dir.sub("h3") / "escape.csv"));
}
