// Command-line driver: exposes the experiment suite as subcommands with flat
// JSON configs, seeded determinism, and CSV/JSON outputs.
//
// Exit codes: 0 success, 2 config error, 3 budget exceeded, 4 numeric failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spca/chain.hpp"
#include "spca/csv.hpp"
#include "spca/errors.hpp"
#include "spca/experiments.hpp"
#include "spca/gibbs.hpp"
#include "spca/instance_io.hpp"
#include "spca/landscape.hpp"
#include "spca/model.hpp"
#include "spca/subsets.hpp"
#include "spca/theory.hpp"
#include "spca/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw spca::InvalidParameterError("cannot read config file: " + path);
  }
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw spca::InvalidParameterError("config parse error in " + path + ": " +
                                      e.what());
  }
  if (!cfg.is_object()) {
    throw spca::InvalidParameterError("config must be a flat JSON object");
  }
  return cfg;
}

[[noreturn]] void bad_key(const std::string& key, const char* expected) {
  throw spca::InvalidParameterError("config key '" + key + "' must be " +
                                    expected);
}

int require_int(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) {
    throw spca::InvalidParameterError("missing config key: " + key);
  }
  const json& v = cfg.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    bad_key(key, "an integer");
  }
  return v.get<int>();
}

int get_int(const json& cfg, const std::string& key, int dflt) {
  return cfg.contains(key) ? require_int(cfg, key) : dflt;
}

std::int64_t get_i64(const json& cfg, const std::string& key, std::int64_t dflt) {
  if (!cfg.contains(key)) return dflt;
  const json& v = cfg.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    bad_key(key, "an integer");
  }
  return v.get<std::int64_t>();
}

std::uint64_t get_u64(const json& cfg, const std::string& key,
                      std::uint64_t dflt) {
  if (!cfg.contains(key)) return dflt;
  const json& v = cfg.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad_key(key, "a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

double require_num(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) {
    throw spca::InvalidParameterError("missing config key: " + key);
  }
  const json& v = cfg.at(key);
  if (!v.is_number()) bad_key(key, "a number");
  return v.get<double>();
}

double get_num(const json& cfg, const std::string& key, double dflt) {
  return cfg.contains(key) ? require_num(cfg, key) : dflt;
}

bool get_bool(const json& cfg, const std::string& key, bool dflt) {
  if (!cfg.contains(key)) return dflt;
  const json& v = cfg.at(key);
  if (!v.is_boolean()) bad_key(key, "a boolean");
  return v.get<bool>();
}

std::string get_str(const json& cfg, const std::string& key,
                    const std::string& dflt) {
  if (!cfg.contains(key)) return dflt;
  const json& v = cfg.at(key);
  if (!v.is_string()) bad_key(key, "a string");
  return v.get<std::string>();
}

// Grid keys come either as "<name>_grid": [array] or as a scalar "<name>".
std::vector<double> num_grid(const json& cfg, const std::string& name) {
  const std::string grid_key = name + "_grid";
  if (cfg.contains(grid_key)) {
    const json& v = cfg.at(grid_key);
    if (!v.is_array() || v.empty()) bad_key(grid_key, "a nonempty array");
    std::vector<double> grid;
    for (const json& e : v) {
      if (!e.is_number()) bad_key(grid_key, "an array of numbers");
      grid.push_back(e.get<double>());
    }
    return grid;
  }
  return {require_num(cfg, name)};
}

std::vector<int> int_grid(const json& cfg, const std::string& name) {
  const std::string grid_key = name + "_grid";
  if (cfg.contains(grid_key)) {
    const json& v = cfg.at(grid_key);
    if (!v.is_array() || v.empty()) bad_key(grid_key, "a nonempty array");
    std::vector<int> grid;
    for (const json& e : v) {
      if (!e.is_number_integer() && !e.is_number_unsigned()) {
        bad_key(grid_key, "an array of integers");
      }
      grid.push_back(e.get<int>());
    }
    return grid;
  }
  return {require_int(cfg, name)};
}

// ---------------------------------------------------------------------------
// Shared run context
// ---------------------------------------------------------------------------

struct Ctx {
  json cfg;            // effective config (file merged with flag overrides)
  std::string digest;  // hex FNV-1a of the effective config
  std::uint64_t seed = 0;
  fs::path out_dir;
  std::uint64_t budget = spca::kDefaultEnumerationBudget;
  int threads = 0;  // 0 = auto

  spca::RunMetadata meta() const {
    spca::RunMetadata m;
    m.config_digest = digest;
    m.master_seed = seed;
    return m;
  }

  void embed_meta(json& j) const {
    j["tool_version"] = spca::kVersion;
    j["config_digest"] = digest;
    j["master_seed"] = seed;
  }
};

Ctx make_ctx(json cfg) {
  Ctx c;
  c.digest = spca::hex64(spca::fnv1a64(cfg.dump()));
  c.seed = get_u64(cfg, "seed", 0);
  c.out_dir = get_str(cfg, "out", ".");
  c.budget = get_u64(cfg, "budget", spca::kDefaultEnumerationBudget);
  c.threads = get_int(cfg, "threads", 0);
  if (c.threads < 0) bad_key("threads", "a nonnegative integer");
  c.cfg = std::move(cfg);
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec && !fs::is_directory(c.out_dir)) {
    throw spca::Error("cannot create output directory: " + c.out_dir.string());
  }
  return c;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw spca::Error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw spca::Error("write failed: " + path.string());
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw spca::Error("cannot open for writing: " + path.string());
  return out;
}

void finish_csv(std::ofstream& out, const fs::path& path, const Ctx& c) {
  out.flush();
  if (!out) throw spca::Error("write failed: " + path.string());
  out.close();
  spca::write_metadata_sidecar(path.string(), c.meta());
}

// Reads the instance named by the "instance" config key, or samples one from
// (n, k, lambda) and the master seed.  Inputs are never modified.
spca::Instance instance_from_config(const Ctx& c) {
  if (c.cfg.contains("instance")) {
    return spca::load_instance(get_str(c.cfg, "instance", ""));
  }
  const int n = require_int(c.cfg, "n");
  const int k = require_int(c.cfg, "k");
  const double lambda = require_num(c.cfg, "lambda");
  const bool zero_noise = get_bool(c.cfg, "zero_noise", false);
  return spca::make_instance(n, k, lambda, c.seed, zero_noise);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_gen(const Ctx& c) {
  const int n = require_int(c.cfg, "n");
  const int k = require_int(c.cfg, "k");
  const double lambda = require_num(c.cfg, "lambda");
  const bool zero_noise = get_bool(c.cfg, "zero_noise", false);
  const spca::Instance inst =
      spca::make_instance(n, k, lambda, c.seed, zero_noise);
  json j = spca::instance_to_json(inst);
  c.embed_meta(j);
  const fs::path path = c.out_dir / "instance.json";
  write_json_file(path, j);
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_depth(const Ctx& c) {
  spca::DepthGridConfig cfg;
  cfg.n = require_int(c.cfg, "n");
  cfg.k = require_int(c.cfg, "k");
  cfg.k_prime = require_int(c.cfg, "k_prime");
  cfg.lambda_grid = num_grid(c.cfg, "lambda");
  cfg.beta_grid = num_grid(c.cfg, "beta");
  cfg.ell_grid = int_grid(c.cfg, "ell");
  cfg.delta = get_num(c.cfg, "delta", 0.1);
  cfg.seed = c.seed;
  cfg.zero_noise = get_bool(c.cfg, "zero_noise", false);
  cfg.budget = c.budget;
  const std::vector<spca::DepthRow> rows = spca::run_depth_grid(cfg, c.threads);
  const fs::path path = c.out_dir / "depth.csv";
  std::ofstream out = open_csv(path);
  spca::write_depth_csv(rows, out);
  finish_csv(out, path, c);
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_hit(const Ctx& c) {
  const spca::Instance inst = instance_from_config(c);
  spca::ChainConfig cfg;
  cfg.beta = require_num(c.cfg, "beta");
  cfg.k_prime = require_int(c.cfg, "k_prime");
  cfg.ell = require_int(c.cfg, "ell");
  cfg.t_max = get_i64(c.cfg, "t_max", 1000);
  cfg.replications = require_int(c.cfg, "replications");
  cfg.init = spca::parse_init_mode(
      get_str(c.cfg, "init", "conditional-on-A"));
  if (c.cfg.contains("fixed_init")) {
    cfg.fixed_init = c.cfg.at("fixed_init").get<spca::SparseSupport>();
  }
  cfg.budget = c.budget;
  const spca::GibbsProfile profile =
      spca::gibbs_profile(inst, cfg.beta, cfg.k_prime, c.budget);
  const double depth = spca::few_depth(profile, cfg.ell);
  const spca::EscapeTable table =
      spca::escape_experiment(inst, cfg, c.seed, depth, c.threads);
  const fs::path csv_path = c.out_dir / "escape.csv";
  std::ofstream out = open_csv(csv_path);
  spca::write_escape_csv(table, out);
  finish_csv(out, csv_path, c);
  json summary = spca::escape_summary_json(table);
  c.embed_meta(summary);
  write_json_file(c.out_dir / "escape_summary.json", summary);
  std::cout << csv_path.string() << '\n';
  return 0;
}

int cmd_ogp(const Ctx& c) {
  const spca::Instance inst = instance_from_config(c);
  const int k_prime = require_int(c.cfg, "k_prime");
  const spca::PhiCurve curve = spca::phi_curve(inst, k_prime, c.budget);
  const fs::path csv_path = c.out_dir / "phi_curve.csv";
  std::ofstream out = open_csv(csv_path);
  spca::write_phi_csv(curve, out);
  finish_csv(out, csv_path, c);
  std::optional<spca::OgpCertificate> cert;
  if (c.cfg.contains("zeta1") || c.cfg.contains("zeta2") || c.cfg.contains("r")) {
    cert = spca::ogp_certify(curve, require_int(c.cfg, "zeta1"),
                             require_int(c.cfg, "zeta2"),
                             require_num(c.cfg, "r"));
  } else {
    cert = spca::ogp_scan(curve);
  }
  json j;
  if (cert) {
    j = spca::certificate_to_json(*cert, inst.seed);
  } else {
    j["holds"] = false;
    j["instance_seed"] = inst.seed;
  }
  c.embed_meta(j);
  write_json_file(c.out_dir / "ogp_certificate.json", j);
  std::cout << csv_path.string() << '\n';
  return 0;
}

int cmd_curves(const Ctx& c) {
  spca::ModelParams p;
  p.n = require_int(c.cfg, "n");
  p.k = require_int(c.cfg, "k");
  p.k_prime = require_int(c.cfg, "k_prime");
  p.lambda = require_num(c.cfg, "lambda");
  if (c.cfg.contains("beta")) p.beta = require_num(c.cfg, "beta");
  p.delta = get_num(c.cfg, "delta", 0.1);
  const double alpha_n = get_num(c.cfg, "alpha_n", 0.0);
  const fs::path csv_path = c.out_dir / "gamma_curve.csv";
  std::ofstream out = open_csv(csv_path);
  spca::write_gamma_csv(p, alpha_n, out);
  finish_csv(out, csv_path, c);

  json summary;
  summary["n"] = p.n;
  summary["k"] = p.k;
  summary["k_prime"] = p.k_prime;
  summary["lambda"] = p.lambda;
  if (p.beta) summary["beta"] = *p.beta;
  summary["delta"] = p.delta;
  summary["alpha_n"] = alpha_n;
  summary["shape_report"] = spca::shape_report_to_json(spca::gamma_shape_report(p));
  const spca::InformativeRanges ranges = spca::informative_ranges(p);
  json jr;
  jr["ell_low_exclusive"] = ranges.ell_low_exclusive;
  jr["ell_high"] = ranges.ell_high;
  jr["k_prime_low"] = ranges.k_prime_low;
  jr["k_prime_high"] = ranges.k_prime_high;
  jr["k_prime_valid"] = ranges.k_prime_valid;
  summary["informative_ranges"] = jr;
  summary["conjectured_runtime_exponent_scale"] = spca::conjectured_runtime(p);
  c.embed_meta(summary);
  write_json_file(c.out_dir / "curves_summary.json", summary);
  std::cout << csv_path.string() << '\n';
  return 0;
}

int cmd_recover(const Ctx& c) {
  spca::RecoverConfig cfg;
  cfg.n = require_int(c.cfg, "n");
  cfg.k = require_int(c.cfg, "k");
  cfg.lambda = require_num(c.cfg, "lambda");
  if (c.cfg.contains("methods")) {
    const json& m = c.cfg.at("methods");
    if (!m.is_array() || m.empty()) bad_key("methods", "a nonempty array");
    cfg.methods.clear();
    for (const json& e : m) {
      if (!e.is_string()) bad_key("methods", "an array of strings");
      cfg.methods.push_back(e.get<std::string>());
    }
  }
  cfg.seeds = get_int(c.cfg, "seeds", 1);
  cfg.seed = c.seed;
  cfg.zero_noise = get_bool(c.cfg, "zero_noise", false);
  cfg.tol = get_num(c.cfg, "tol", 1e-9);
  cfg.max_iter = get_int(c.cfg, "max_iter", 10'000);
  cfg.c_mult = get_num(c.cfg, "c_mult", 1.0);
  cfg.epsilon = get_num(c.cfg, "epsilon", 0.0);
  cfg.timing = get_bool(c.cfg, "timing", false);
  cfg.budget = c.budget;
  const std::vector<spca::BenchmarkRow> rows =
      spca::run_recovery_benchmark(cfg, c.threads);
  const fs::path path = c.out_dir / "recovery_benchmark.csv";
  std::ofstream out = open_csv(path);
  spca::write_benchmark_csv(cfg, rows, out);
  finish_csv(out, path, c);
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_sweep(const Ctx& c) {
  spca::SweepConfig cfg;
  cfg.n = require_int(c.cfg, "n");
  cfg.k = require_int(c.cfg, "k");
  if (c.cfg.contains("k_prime_grid")) {
    cfg.k_prime_grid = int_grid(c.cfg, "k_prime");
    cfg.lambda = require_num(c.cfg, "lambda");
    if (c.cfg.contains("lambda_grid")) {
      throw spca::InvalidParameterError(
          "sweep: provide exactly one of lambda_grid or k_prime_grid");
    }
  } else {
    cfg.lambda_grid = num_grid(c.cfg, "lambda");
    cfg.k_prime = require_int(c.cfg, "k_prime");
  }
  cfg.beta_grid = num_grid(c.cfg, "beta");
  cfg.ell = require_int(c.cfg, "ell");
  cfg.t_max = get_i64(c.cfg, "t_max", 1000);
  cfg.replications = get_int(c.cfg, "replications", 0);
  cfg.seed = c.seed;
  cfg.zero_noise = get_bool(c.cfg, "zero_noise", false);
  cfg.budget = c.budget;
  const fs::path csv_path = c.out_dir / "sweep.csv";
  const fs::path checkpoint_path = c.out_dir / "sweep_checkpoint.json";
  const spca::SweepOutcome outcome =
      spca::run_sweep(cfg, csv_path, checkpoint_path, c.threads);
  spca::write_metadata_sidecar(csv_path.string(), c.meta());
  std::cout << csv_path.string() << " (" << outcome.total_cells << " cells, "
            << outcome.reused_cells << " reused)" << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  CLI::App app{"sparse-support landscape, sampling, and recovery experiments"};
  app.set_version_flag("--version", spca::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::uint64_t budget = 0;
  int threads = 0;
  app.add_option("--config", config_path, "flat JSON config file");
  app.add_option("--seed", seed, "master seed (overrides config key 'seed')");
  app.add_option("--out", out_dir, "output directory (overrides config key 'out')");
  app.add_option("--budget", budget,
                 "enumeration budget (overrides config key 'budget')");
  app.add_option("--threads", threads,
                 "worker threads, 0 = auto (overrides config key 'threads'; "
                 "env SPCA_THREADS is the fallback)");

  const std::vector<std::pair<std::string, std::string>> subcommands = {
      {"gen", "sample an instance and write it as JSON"},
      {"depth", "exact well depth over a (lambda, beta, ell) grid"},
      {"hit", "escape-time experiment with the theoretical bound"},
      {"ogp", "overlap-gap certificate and energy profile"},
      {"curves", "deterministic first-moment curves and shape report"},
      {"recover", "support-recovery benchmark across methods and seeds"},
      {"sweep", "phase-diagram sweep with checkpointed resume"},
  };
  for (const auto& [name, help] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json cfg = config_path.empty() ? json::object() : load_config_file(config_path);
    if (app.count("--seed") > 0) cfg["seed"] = seed;
    if (app.count("--out") > 0) cfg["out"] = out_dir;
    if (app.count("--budget") > 0) cfg["budget"] = budget;
    if (app.count("--threads") > 0) {
      cfg["threads"] = threads;
    } else if (!cfg.contains("threads")) {
      if (const char* env = std::getenv("SPCA_THREADS")) {
        try {
          cfg["threads"] = std::stoi(env);
        } catch (const std::exception&) {
          throw spca::InvalidParameterError(
              "SPCA_THREADS must be an integer, got: " + std::string(env));
        }
      }
    }
    const Ctx ctx = make_ctx(std::move(cfg));
    if (app.got_subcommand("gen")) return cmd_gen(ctx);
    if (app.got_subcommand("depth")) return cmd_depth(ctx);
    if (app.got_subcommand("hit")) return cmd_hit(ctx);
    if (app.got_subcommand("ogp")) return cmd_ogp(ctx);
    if (app.got_subcommand("curves")) return cmd_curves(ctx);
    if (app.got_subcommand("recover")) return cmd_recover(ctx);
    if (app.got_subcommand("sweep")) return cmd_sweep(ctx);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const spca::BudgetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const spca::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const spca::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
}
