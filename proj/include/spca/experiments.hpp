#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spca/chain.hpp"
#include "spca/csv.hpp"
#include "spca/errors.hpp"
#include "spca/gibbs.hpp"
#include "spca/instance_io.hpp"
#include "spca/landscape.hpp"
#include "spca/model.hpp"
#include "spca/numerics.hpp"
#include "spca/recovery.hpp"
#include "spca/rng.hpp"
#include "spca/theory.hpp"
#include "spca/threading.hpp"

namespace spca {

// ---------------------------------------------------------------------------
// Depth grid: exact well depth across (lambda, beta, ell)
// ---------------------------------------------------------------------------

struct DepthGridConfig {
  int n = 0;
  int k = 0;
  int k_prime = 0;
  std::vector<double> lambda_grid;
  std::vector<double> beta_grid;
  std::vector<int> ell_grid;
  double delta = 0.1;
  std::uint64_t seed = 0;
  bool zero_noise = false;
  std::uint64_t budget = kDefaultEnumerationBudget;
};

struct DepthRow {
  double lambda = 0.0;
  double beta = 0.0;
  int ell = 0;
  std::optional<double> depth;  // empty = undefined (zero-mass band)
  double ht_bound = 0.0;
  bool ell_applicable = false;
  bool k_prime_applicable = false;
};

// One row per (lambda, beta, ell) grid point.  The same master seed is used
// for every lambda, so rows differ only through the observation's signal
// strength -- this is what makes cross-lambda depth comparisons meaningful.
inline std::vector<DepthRow> run_depth_grid(const DepthGridConfig& cfg,
                                            int threads = 1) {
  if (cfg.lambda_grid.empty() || cfg.beta_grid.empty() || cfg.ell_grid.empty()) {
    throw InvalidParameterError("depth grid: all grids must be nonempty");
  }
  std::vector<DepthRow> rows(cfg.lambda_grid.size() * cfg.beta_grid.size() *
                             cfg.ell_grid.size());
  parallel_for(cfg.lambda_grid.size(), threads, [&](std::size_t li) {
    const double lambda = cfg.lambda_grid[li];
    const Instance inst =
        make_instance(cfg.n, cfg.k, lambda, cfg.seed, cfg.zero_noise);
    for (std::size_t bi = 0; bi < cfg.beta_grid.size(); ++bi) {
      const double beta = cfg.beta_grid[bi];
      const GibbsProfile profile =
          gibbs_profile(inst, beta, cfg.k_prime, cfg.budget);
      for (std::size_t ei = 0; ei < cfg.ell_grid.size(); ++ei) {
        const int ell = cfg.ell_grid[ei];
        DepthRow row;
        row.lambda = lambda;
        row.beta = beta;
        row.ell = ell;
        try {
          row.depth = few_depth(profile, ell);
        } catch (const UndefinedDepthError&) {
          row.depth = std::nullopt;
        }
        ModelParams p;
        p.n = cfg.n;
        p.k = cfg.k;
        p.k_prime = cfg.k_prime;
        p.lambda = lambda;
        p.beta = beta;
        p.delta = cfg.delta;
        const HighTempBound bound = high_temp_depth_bound(p, ell);
        row.ht_bound = bound.bound;
        row.ell_applicable = bound.ell_applicable;
        row.k_prime_applicable = bound.k_prime_applicable;
        const std::size_t at =
            (li * cfg.beta_grid.size() + bi) * cfg.ell_grid.size() + ei;
        rows[at] = row;
      }
    }
  });
  return rows;
}

inline void write_depth_csv(const std::vector<DepthRow>& rows, std::ostream& out) {
  CsvWriter csv(out);
  csv.write_row({"lambda", "beta", "ell", "depth", "ht_bound", "ell_applicable",
                 "k_prime_applicable"});
  for (const DepthRow& row : rows) {
    csv.write_row({format_double(row.lambda), format_double(row.beta),
                   std::to_string(row.ell),
                   row.depth ? format_double(*row.depth) : std::string("undefined"),
                   format_double(row.ht_bound),
                   row.ell_applicable ? "true" : "false",
                   row.k_prime_applicable ? "true" : "false"});
  }
}

// ---------------------------------------------------------------------------
// Recovery benchmark
// ---------------------------------------------------------------------------

struct RecoverConfig {
  int n = 0;
  int k = 0;
  double lambda = 1.0;
  std::vector<std::string> methods{"diag", "power", "boost", "mle", "subexp"};
  int seeds = 1;                 // number of instance seeds
  std::uint64_t seed = 0;        // master seed
  bool zero_noise = false;
  double tol = 1e-9;
  int max_iter = 10'000;
  double c_mult = 1.0;
  double epsilon = 0.0;
  bool timing = false;           // real wall times break byte-reproducibility
  std::uint64_t budget = kDefaultEnumerationBudget;
};

struct BenchmarkRow {
  std::string method;
  std::uint64_t seed = 0;
  RecoveryResult result;
};

inline RecoveryResult run_recovery_method(const Instance& inst,
                                          const std::string& method,
                                          const RecoverConfig& cfg,
                                          RngState& rng) {
  if (method == "diag") return diagonal_thresholding(inst);
  if (method == "power") {
    return power_iteration_recovery(inst, cfg.tol, cfg.max_iter, rng);
  }
  if (method == "boost") return boost_recovery(inst, rng, cfg.epsilon);
  if (method == "mle") return mle_exhaustive(inst, cfg.budget);
  if (method == "subexp") {
    return subexp_search(inst, cfg.c_mult, rng, cfg.budget, cfg.epsilon);
  }
  throw InvalidParameterError("unknown recovery method '" + method + "'");
}

inline std::vector<BenchmarkRow> run_recovery_benchmark(const RecoverConfig& cfg,
                                                        int threads = 1) {
  if (cfg.seeds < 1) {
    throw InvalidParameterError("recovery benchmark: seeds must be >= 1");
  }
  if (cfg.methods.empty()) {
    throw InvalidParameterError("recovery benchmark: no methods selected");
  }
  std::vector<BenchmarkRow> rows(cfg.methods.size() *
                                 static_cast<std::size_t>(cfg.seeds));
  parallel_for(static_cast<std::size_t>(cfg.seeds), threads, [&](std::size_t s) {
    const std::uint64_t inst_seed = derive_stream(cfg.seed, s, 0);
    const Instance inst =
        make_instance(cfg.n, cfg.k, cfg.lambda, inst_seed, cfg.zero_noise);
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      RngState rng(cfg.seed, derive_stream(cfg.seed, s, m + 1));
      BenchmarkRow row;
      row.method = cfg.methods[m];
      row.seed = inst_seed;
      row.result = run_recovery_method(inst, row.method, cfg, rng);
      rows[s * cfg.methods.size() + m] = std::move(row);
    }
  });
  return rows;
}

inline void write_benchmark_csv(const RecoverConfig& cfg,
                                const std::vector<BenchmarkRow>& rows,
                                std::ostream& out) {
  CsvWriter csv(out);
  csv.write_row({"method", "n", "k", "k_prime", "lambda", "seed", "exact",
                 "overlap", "enumerations", "wall_time"});
  for (const BenchmarkRow& row : rows) {
    const int k_prime =
        row.result.k_prime_used > 0 ? row.result.k_prime_used : cfg.k;
    csv.write_row({row.result.method, std::to_string(cfg.n), std::to_string(cfg.k),
                   std::to_string(k_prime), format_double(cfg.lambda),
                   std::to_string(row.seed), row.result.exact ? "true" : "false",
                   std::to_string(row.result.overlap),
                   std::to_string(row.result.enumerations),
                   format_double(cfg.timing ? row.result.wall_time : 0.0)});
  }
}

// ---------------------------------------------------------------------------
// Phase-diagram sweep with checkpointed resume
// ---------------------------------------------------------------------------

struct SweepConfig {
  int n = 0;
  int k = 0;
  int k_prime = 0;                  // fixed k' (lambda x beta sweep) ...
  std::vector<int> k_prime_grid;    // ... or a k' grid (k' x beta sweep)
  std::vector<double> lambda_grid;  // exactly one of lambda_grid/k_prime_grid
  double lambda = 1.0;              // fixed lambda for k' sweeps
  std::vector<double> beta_grid;
  int ell = 1;
  std::int64_t t_max = 1000;
  int replications = 0;  // 0 = depth only, no chains
  std::uint64_t seed = 0;
  bool zero_noise = false;
  std::uint64_t budget = kDefaultEnumerationBudget;

  bool sweeps_k_prime() const { return !k_prime_grid.empty(); }
  std::size_t rows_axis() const {
    return sweeps_k_prime() ? k_prime_grid.size() : lambda_grid.size();
  }
};

struct SweepCell {
  std::size_t i = 0;  // lambda (or k') grid index
  std::size_t j = 0;  // beta grid index
  double lambda = 0.0;
  double beta = 0.0;
  int k_prime = 0;
  int ell = 0;
  std::uint64_t stream = 0;
  std::optional<double> depth;
  std::optional<double> emp_escape;  // Pr{tau <= t_max}, when replications > 0
};

inline void validate_sweep_config(const SweepConfig& cfg) {
  if (cfg.sweeps_k_prime() == !cfg.lambda_grid.empty()) {
    throw InvalidParameterError(
        "sweep: provide exactly one of lambda_grid or k_prime_grid");
  }
  if (cfg.beta_grid.empty()) {
    throw InvalidParameterError("sweep: beta_grid must be nonempty");
  }
  if (cfg.replications < 0) {
    throw InvalidParameterError("sweep: replications must be >= 0");
  }
}

// Computes one grid cell.  All randomness flows through the cell's derived
// stream, so cells are order- and thread-independent.
inline SweepCell compute_sweep_cell(const SweepConfig& cfg, std::size_t i,
                                    std::size_t j) {
  SweepCell cell;
  cell.i = i;
  cell.j = j;
  cell.beta = cfg.beta_grid[j];
  cell.k_prime = cfg.sweeps_k_prime() ? cfg.k_prime_grid[i] : cfg.k_prime;
  cell.lambda = cfg.sweeps_k_prime() ? cfg.lambda : cfg.lambda_grid[i];
  cell.ell = cfg.ell;
  cell.stream = derive_stream(cfg.seed, i, j);
  const Instance inst =
      make_instance(cfg.n, cfg.k, cell.lambda, cfg.seed, cfg.zero_noise);
  const GibbsProfile profile =
      gibbs_profile(inst, cell.beta, cell.k_prime, cfg.budget);
  double depth = 0.0;
  bool depth_defined = true;
  try {
    depth = few_depth(profile, cell.ell);
    cell.depth = depth;
  } catch (const UndefinedDepthError&) {
    depth_defined = false;
  }
  if (cfg.replications > 0 && depth_defined) {
    ChainConfig chain_cfg;
    chain_cfg.beta = cell.beta;
    chain_cfg.k_prime = cell.k_prime;
    chain_cfg.ell = cell.ell;
    chain_cfg.t_max = cfg.t_max;
    chain_cfg.replications = cfg.replications;
    chain_cfg.init = InitMode::kConditionalOnA;
    chain_cfg.budget = cfg.budget;
    int escaped = 0;
    for (int rep = 0; rep < cfg.replications; ++rep) {
      RngState rng(cell.stream, static_cast<std::uint64_t>(rep));
      const HitResult hit = hitting_time(inst, chain_cfg, rng);
      if (!hit.timed_out) ++escaped;
    }
    cell.emp_escape =
        static_cast<double>(escaped) / static_cast<double>(cfg.replications);
  }
  return cell;
}

inline std::vector<std::string> sweep_csv_header() {
  return {"i",   "j",      "lambda", "beta",      "k_prime",
          "ell", "stream", "depth",  "emp_escape"};
}

inline std::vector<std::string> sweep_cell_fields(const SweepCell& cell) {
  return {std::to_string(cell.i),
          std::to_string(cell.j),
          format_double(cell.lambda),
          format_double(cell.beta),
          std::to_string(cell.k_prime),
          std::to_string(cell.ell),
          std::to_string(cell.stream),
          cell.depth ? format_double(*cell.depth) : std::string("undefined"),
          cell.emp_escape ? format_double(*cell.emp_escape) : std::string()};
}

// Naive CSV line splitter for resume parsing.  Only used on files this tool
// wrote itself; the sweep table never contains quoted fields.
inline std::vector<std::string> split_csv_line(const std::string& line) {
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

// Reads previously completed rows (per the checkpoint index list) from an
// interrupted sweep's CSV.  Rows not listed in the checkpoint are discarded
// and recomputed.
inline std::map<std::size_t, std::vector<std::string>> load_sweep_progress(
    const std::filesystem::path& csv_path,
    const std::filesystem::path& checkpoint_path, std::size_t n_cols) {
  std::map<std::size_t, std::vector<std::string>> done;
  if (!std::filesystem::exists(csv_path) ||
      !std::filesystem::exists(checkpoint_path)) {
    return done;
  }
  std::ifstream ck(checkpoint_path);
  nlohmann::json completed_json;
  try {
    ck >> completed_json;
  } catch (const nlohmann::json::exception&) {
    return done;  // unreadable checkpoint: recompute everything
  }
  if (!completed_json.is_array()) return done;
  std::vector<std::size_t> completed;
  for (const auto& v : completed_json) {
    if (v.is_number_unsigned() || v.is_number_integer()) {
      completed.push_back(v.get<std::size_t>());
    }
  }
  std::sort(completed.begin(), completed.end());
  std::ifstream in(csv_path);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;  // header
      continue;
    }
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != sweep_csv_header().size()) continue;
    const std::size_t i = std::stoull(fields[0]);
    const std::size_t j = std::stoull(fields[1]);
    const std::size_t flat = i * n_cols + j;
    if (std::binary_search(completed.begin(), completed.end(), flat)) {
      done[flat] = fields;
    }
  }
  return done;
}

inline void write_checkpoint(const std::filesystem::path& checkpoint_path,
                             const std::vector<std::size_t>& completed) {
  nlohmann::json j = completed;
  std::ofstream out(checkpoint_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + checkpoint_path.string());
  out << j.dump() << '\n';
}

struct SweepOutcome {
  std::size_t total_cells = 0;
  std::size_t reused_cells = 0;
};

// Runs (or resumes) the sweep.  Completed cells recorded in the checkpoint
// are reused verbatim from the existing CSV.  As each pending cell finishes,
// a single serialized writer appends its row and refreshes the checkpoint, so
// an interrupted run loses at most the cells in flight.  Once every cell is
// done the CSV is rewritten in full, sorted by grid indices, which makes a
// resumed run byte-identical to an uninterrupted one.
inline SweepOutcome run_sweep(const SweepConfig& cfg,
                              const std::filesystem::path& csv_path,
                              const std::filesystem::path& checkpoint_path,
                              int threads = 1) {
  validate_sweep_config(cfg);
  const std::size_t n_rows = cfg.rows_axis();
  const std::size_t n_cols = cfg.beta_grid.size();
  const std::size_t total = n_rows * n_cols;
  std::map<std::size_t, std::vector<std::string>> done =
      load_sweep_progress(csv_path, checkpoint_path, n_cols);
  SweepOutcome outcome;
  outcome.total_cells = total;
  outcome.reused_cells = done.size();
  std::vector<std::size_t> pending;
  for (std::size_t flat = 0; flat < total; ++flat) {
    if (!done.count(flat)) pending.push_back(flat);
  }

  if (!pending.empty()) {
    // Progress file: reused rows first, then fresh rows in completion order.
    std::ofstream progress(csv_path, std::ios::binary | std::ios::trunc);
    if (!progress) {
      throw Error("cannot open for writing: " + csv_path.string());
    }
    CsvWriter progress_csv(progress);
    progress_csv.write_row(sweep_csv_header());
    std::vector<std::size_t> completed;
    completed.reserve(total);
    for (const auto& [flat, fields] : done) {
      progress_csv.write_row(fields);
      completed.push_back(flat);
    }
    progress.flush();
    std::mutex writer_mutex;
    parallel_for(pending.size(), threads, [&](std::size_t p) {
      const std::size_t flat = pending[p];
      const SweepCell cell =
          compute_sweep_cell(cfg, flat / n_cols, flat % n_cols);
      std::vector<std::string> fields = sweep_cell_fields(cell);
      const std::lock_guard<std::mutex> lock(writer_mutex);
      progress_csv.write_row(fields);
      progress.flush();
      completed.push_back(flat);
      write_checkpoint(checkpoint_path, completed);
      done[flat] = std::move(fields);
    });
    if (!progress) throw Error("write failed: " + csv_path.string());
  }

  // Final deterministic rewrite, sorted by grid indices.
  std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + csv_path.string());
  CsvWriter csv(out);
  csv.write_row(sweep_csv_header());
  for (std::size_t flat = 0; flat < total; ++flat) {
    csv.write_row(done.at(flat));
  }
  out.flush();
  if (!out) throw Error("write failed: " + csv_path.string());
  std::vector<std::size_t> completed;
  completed.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) completed.push_back(flat);
  write_checkpoint(checkpoint_path, completed);
  return outcome;
}

}  // namespace spca
