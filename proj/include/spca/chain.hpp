#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spca/csv.hpp"
#include "spca/errors.hpp"
#include "spca/gibbs.hpp"
#include "spca/model.hpp"
#include "spca/numerics.hpp"
#include "spca/rng.hpp"
#include "spca/subsets.hpp"
#include "spca/threading.hpp"

namespace spca {

enum class InitMode {
  kConditionalOnA,  // exact draw from the Gibbs measure restricted to A
  kUniform,         // uniform over all k'-sparse supports
  kFixed,           // caller-supplied support (must lie in A)
};

inline InitMode parse_init_mode(const std::string& name) {
  if (name == "conditional-on-A") return InitMode::kConditionalOnA;
  if (name == "uniform") return InitMode::kUniform;
  if (name == "fixed") return InitMode::kFixed;
  throw InvalidParameterError("unknown init mode '" + name +
                              "' (expected conditional-on-A, uniform or fixed)");
}

struct ChainConfig {
  double beta = 0.0;
  int k_prime = 1;
  int ell = 1;                    // low-overlap region is {<v,x> < ell}
  std::int64_t t_max = 1000;
  int replications = 1;
  InitMode init = InitMode::kConditionalOnA;
  SparseSupport fixed_init;       // used only with InitMode::kFixed
  std::uint64_t budget = kDefaultEnumerationBudget;
  bool record_trace = false;
};

struct HitResult {
  std::int64_t tau = 0;      // meaningful only when !timed_out
  bool timed_out = false;
  std::int64_t accepted = 0; // accepted-move count over the whole run
  std::vector<int> overlap_trace;  // <X_t, x> for t = 0.., if recorded
};

// Metropolis chain over k'-sparse supports with swap proposals.
//
// Moves exchange one in-support index for one out-of-support index, chosen
// uniformly among the k'*(n-k') pairs, and are accepted with probability
// min{1, exp(-beta * deltaH)}.  A per-site row-sum cache r[i] = sum_{j in v}
// y[i][j] makes the energy difference O(1) per proposal and O(n) to update
// per accepted move.  Each step consumes exactly one proposal pair and, only
// when beta*deltaH > 0, one acceptance draw.
class MetropolisChain {
 public:
  MetropolisChain(const Instance& inst, double beta, SparseSupport init)
      : inst_(&inst), beta_(beta) {
    if (beta < 0.0) throw InvalidParameterError("chain: beta must be >= 0");
    validate_support(init, inst.n);
    const int k_prime = static_cast<int>(init.size());
    if (k_prime < 1 || k_prime >= inst.n) {
      throw InvalidParameterError(
          "chain: requires 1 <= k' < n (no swap moves exist otherwise)");
    }
    v_ = std::move(init);
    in_v_.assign(static_cast<std::size_t>(inst.n), 0);
    for (std::int32_t i : v_) in_v_[static_cast<std::size_t>(i)] = 1;
    comp_.reserve(static_cast<std::size_t>(inst.n - k_prime));
    for (int i = 0; i < inst.n; ++i) {
      if (!in_v_[static_cast<std::size_t>(i)]) comp_.push_back(i);
    }
    in_x_.assign(static_cast<std::size_t>(inst.n), 0);
    for (std::int32_t i : inst.x) in_x_[static_cast<std::size_t>(i)] = 1;
    overlap_ = overlap(v_, inst.x);
    rebuild_row_sums();
    energy_ = hamiltonian(inst, v_);
  }

  const SparseSupport& state() const noexcept { return v_; }
  int overlap_with_signal() const noexcept { return overlap_; }
  double energy() const noexcept { return energy_; }
  std::int64_t accepted() const noexcept { return accepted_; }
  std::int64_t steps() const noexcept { return steps_; }

  // Advances one step; returns true when the proposal was accepted.
  bool step(RngState& rng) {
    const int k_prime = static_cast<int>(v_.size());
    const std::size_t pos_out =
        static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(k_prime)));
    const std::size_t pos_in = static_cast<std::size_t>(
        rng.next_below(static_cast<std::uint64_t>(inst_->n - k_prime)));
    const int i_out = v_[pos_out];
    const int i_in = comp_[pos_in];
    const SymmetricMatrix& y = inst_->y;
    const double delta = 2.0 * r_[static_cast<std::size_t>(i_out)] -
                         y(i_out, i_out) -
                         2.0 * r_[static_cast<std::size_t>(i_in)] +
                         2.0 * y(i_in, i_out) - y(i_in, i_in);
    ++steps_;
    const double exponent = beta_ * delta;
    bool accept = exponent <= 0.0;
    if (!accept) accept = rng.next_unit() < std::exp(-exponent);
    if (!accept) return false;
    apply_swap(i_out, i_in, delta);
    return true;
  }

  // Full recomputation of the cached energy; used by consistency tests.
  double recompute_energy() const { return hamiltonian(*inst_, v_); }

 private:
  void rebuild_row_sums() {
    r_.assign(static_cast<std::size_t>(inst_->n), 0.0);
    for (int i = 0; i < inst_->n; ++i) {
      double s = 0.0;
      for (std::int32_t j : v_) s += inst_->y(i, j);
      r_[static_cast<std::size_t>(i)] = s;
    }
  }

  void apply_swap(int i_out, int i_in, double delta) {
    auto out_it = std::lower_bound(v_.begin(), v_.end(), i_out);
    v_.erase(out_it);
    v_.insert(std::lower_bound(v_.begin(), v_.end(), i_in), i_in);
    auto in_it = std::lower_bound(comp_.begin(), comp_.end(), i_in);
    comp_.erase(in_it);
    comp_.insert(std::lower_bound(comp_.begin(), comp_.end(), i_out), i_out);
    in_v_[static_cast<std::size_t>(i_out)] = 0;
    in_v_[static_cast<std::size_t>(i_in)] = 1;
    const SymmetricMatrix& y = inst_->y;
    for (int i = 0; i < inst_->n; ++i) {
      r_[static_cast<std::size_t>(i)] += y(i, i_in) - y(i, i_out);
    }
    overlap_ += static_cast<int>(in_x_[static_cast<std::size_t>(i_in)]) -
                static_cast<int>(in_x_[static_cast<std::size_t>(i_out)]);
    energy_ += delta;
    ++accepted_;
  }

  const Instance* inst_;
  double beta_;
  SparseSupport v_;
  std::vector<std::int32_t> comp_;  // sorted complement of v_
  std::vector<char> in_v_;
  std::vector<char> in_x_;
  std::vector<double> r_;           // r[i] = sum_{j in v} y[i][j]
  int overlap_ = 0;
  double energy_ = 0.0;
  std::int64_t accepted_ = 0;
  std::int64_t steps_ = 0;
};

// One Metropolis step as a pure function (fresh support in, fresh support
// out).  Uses the same proposal and acceptance layout as MetropolisChain.
inline SparseSupport metropolis_step(const SparseSupport& state,
                                     const Instance& inst, double beta,
                                     RngState& rng) {
  MetropolisChain chain(inst, beta, state);
  chain.step(rng);
  return chain.state();
}

namespace detail {

// Draws the initial support for a chain run.  Conditional-on-A uses the
// exact conditional sampler when the full enumeration fits the budget and
// falls back to rejection from the uniform distribution otherwise (the
// fallback matches the conditional measure exactly only at beta = 0; it is
// the documented approximation for over-budget instances).
inline SparseSupport draw_chain_init(const Instance& inst, const ChainConfig& cfg,
                                     RngState& rng) {
  switch (cfg.init) {
    case InitMode::kUniform:
      return sample_signal(inst.n, cfg.k_prime, rng);
    case InitMode::kFixed: {
      validate_support(cfg.fixed_init, inst.n);
      if (static_cast<int>(cfg.fixed_init.size()) != cfg.k_prime) {
        throw InvalidParameterError("fixed init: support size != k'");
      }
      if (overlap(cfg.fixed_init, inst.x) >= cfg.ell) {
        throw InvalidParameterError(
            "fixed init: support lies outside the low-overlap region");
      }
      return cfg.fixed_init;
    }
    case InitMode::kConditionalOnA: {
      const RegionSpec region{cfg.ell, RegionSpec::Kind::kLowOverlap};
      if (binomial_count_saturating(inst.n, cfg.k_prime) <= cfg.budget) {
        return sample_conditional(inst, cfg.beta, cfg.k_prime, region, rng,
                                  cfg.budget);
      }
      constexpr int kMaxAttempts = 1'000'000;
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        SparseSupport v = sample_signal(inst.n, cfg.k_prime, rng);
        if (overlap(v, inst.x) < cfg.ell) return v;
      }
      throw NumericError(
          "conditional-on-A rejection sampling failed to land in the "
          "low-overlap region");
    }
  }
  throw InvalidParameterError("unknown init mode");
}

}  // namespace detail

// Runs one chain until the overlap reaches ell ("leaving the low-overlap
// region") or until t_max steps have been taken.  tau counts steps, so
// tau = t means the region was first left at step t.  A uniform start can
// already lie outside the region; that run reports tau = 0.
inline HitResult hitting_time(const Instance& inst, const ChainConfig& cfg,
                              RngState& rng) {
  if (cfg.t_max < 1) throw InvalidParameterError("hitting_time: t_max must be >= 1");
  validate_region(cfg.ell, inst.k, cfg.k_prime);
  SparseSupport init = detail::draw_chain_init(inst, cfg, rng);
  MetropolisChain chain(inst, cfg.beta, std::move(init));
  HitResult result;
  if (cfg.record_trace) {
    result.overlap_trace.reserve(static_cast<std::size_t>(cfg.t_max) + 1);
    result.overlap_trace.push_back(chain.overlap_with_signal());
  }
  if (chain.overlap_with_signal() >= cfg.ell) {
    // Only a uniform start can legally begin outside the region.
    result.tau = 0;
    result.accepted = 0;
    return result;
  }
  for (std::int64_t t = 1; t <= cfg.t_max; ++t) {
    chain.step(rng);
    if (cfg.record_trace) result.overlap_trace.push_back(chain.overlap_with_signal());
    if (chain.overlap_with_signal() >= cfg.ell) {
      result.tau = t;
      result.accepted = chain.accepted();
      return result;
    }
  }
  result.tau = cfg.t_max;
  result.timed_out = true;
  result.accepted = chain.accepted();
  return result;
}

// beta = 0 random walk on k'-sparse supports until a fixed target support is
// hit.  The signal plays no role; the walk starts uniform, so tau = 0 is
// possible (start at the target) and tau >= 1 otherwise.
inline HitResult random_walk_cover(int n, int k_prime, const SparseSupport& target,
                                   std::int64_t t_max, RngState& rng) {
  validate_support(target, n);
  if (static_cast<int>(target.size()) != k_prime) {
    throw InvalidParameterError("random_walk_cover: target size != k'");
  }
  if (t_max < 1) throw InvalidParameterError("random_walk_cover: t_max must be >= 1");
  // The walk never evaluates energies at beta = 0; a zero-noise instance
  // supplies the state space.  The planted support is set to the target so
  // the chain's overlap tracking detects the hit.
  SymmetricMatrix w(n);
  const Instance shell = build_observation(n, target, 1.0, std::move(w));
  MetropolisChain chain(shell, 0.0, sample_signal(n, k_prime, rng));
  HitResult result;
  if (chain.overlap_with_signal() == k_prime) {
    result.tau = 0;
    return result;
  }
  for (std::int64_t t = 1; t <= t_max; ++t) {
    chain.step(rng);
    if (chain.overlap_with_signal() == k_prime) {
      result.tau = t;
      result.accepted = chain.accepted();
      return result;
    }
  }
  result.tau = t_max;
  result.timed_out = true;
  result.accepted = chain.accepted();
  return result;
}

// ---------------------------------------------------------------------------
// Escape experiment
// ---------------------------------------------------------------------------

struct EscapeRow {
  std::int64_t t = 0;
  double emp_prob = 0.0;  // empirical Pr{tau <= t}
  double bound = 0.0;     // t * exp(-depth)
  bool vacuous = false;   // bound >= 1
};

struct EscapeTable {
  double depth_used = 0.0;
  int replications = 0;
  std::uint64_t seed = 0;
  int timeout_count = 0;
  std::vector<EscapeRow> rows;
  std::vector<std::int64_t> taus;  // per replication; t_max+1 encodes timeout
};

// Logarithmically spaced report times: 1, ..., t_max (deduplicated).
inline std::vector<std::int64_t> log_spaced_times(std::int64_t t_max,
                                                  int points = 24) {
  std::vector<std::int64_t> times;
  times.push_back(1);
  const double lo = 0.0;
  const double hi = std::log(static_cast<double>(t_max));
  for (int j = 1; j <= points; ++j) {
    const double w = lo + (hi - lo) * static_cast<double>(j) / points;
    const std::int64_t t = static_cast<std::int64_t>(std::llround(std::exp(w)));
    if (t > times.back() && t <= t_max) times.push_back(t);
  }
  if (times.back() != t_max && t_max > 1) times.push_back(t_max);
  return times;
}

// Runs `replications` independent chains (one rng stream per replication)
// and tabulates the empirical escape CDF against t * exp(-depth).  The
// depth is computed by the caller (exact enumeration) and passed in.
inline EscapeTable escape_experiment(const Instance& inst, const ChainConfig& cfg,
                                     std::uint64_t master_seed, double depth,
                                     int threads = 1) {
  if (cfg.replications < 1) {
    throw InvalidParameterError("escape_experiment: replications must be >= 1");
  }
  EscapeTable table;
  table.depth_used = depth;
  table.replications = cfg.replications;
  table.seed = master_seed;
  table.taus.assign(static_cast<std::size_t>(cfg.replications), 0);
  parallel_for(static_cast<std::size_t>(cfg.replications), threads,
               [&](std::size_t rep) {
                 RngState rng(master_seed,
                              derive_stream(master_seed, static_cast<std::uint64_t>(rep)));
                 const HitResult hit = hitting_time(inst, cfg, rng);
                 table.taus[rep] = hit.timed_out ? cfg.t_max + 1 : hit.tau;
               });
  table.timeout_count = static_cast<int>(
      std::count(table.taus.begin(), table.taus.end(), cfg.t_max + 1));
  std::vector<std::int64_t> sorted_taus = table.taus;
  std::sort(sorted_taus.begin(), sorted_taus.end());
  for (std::int64_t t : log_spaced_times(cfg.t_max)) {
    EscapeRow row;
    row.t = t;
    const auto upper = std::upper_bound(sorted_taus.begin(), sorted_taus.end(), t);
    row.emp_prob = static_cast<double>(upper - sorted_taus.begin()) /
                   static_cast<double>(cfg.replications);
    row.bound = static_cast<double>(t) * std::exp(-depth);
    row.vacuous = row.bound >= 1.0;
    table.rows.push_back(row);
  }
  return table;
}

inline void write_escape_csv(const EscapeTable& table, std::ostream& out) {
  CsvWriter csv(out);
  csv.write_row({"t", "emp_prob", "bound", "vacuous"});
  for (const EscapeRow& row : table.rows) {
    csv.write_row({std::to_string(row.t), format_double(row.emp_prob),
                   format_double(row.bound), row.vacuous ? "true" : "false"});
  }
}

inline nlohmann::json escape_summary_json(const EscapeTable& table) {
  nlohmann::json j;
  j["depth_used"] = table.depth_used;
  j["replications"] = table.replications;
  j["seed"] = table.seed;
  j["timeout_count"] = table.timeout_count;
  return j;
}

// ---------------------------------------------------------------------------
// Explicit chain (small instances): transition matrix and stationarity
// ---------------------------------------------------------------------------

// All k'-sparse supports in lexicographic order together with the dense
// Metropolis transition matrix P (row-stochastic, self-loops from rejection).
struct ExplicitChain {
  std::vector<SparseSupport> states;
  std::vector<double> p;  // row-major |states| x |states|
  double& at(std::size_t i, std::size_t j) { return p[i * states.size() + j]; }
  double at(std::size_t i, std::size_t j) const { return p[i * states.size() + j]; }
};

inline ExplicitChain build_explicit_chain(const Instance& inst, double beta,
                                          int k_prime,
                                          std::uint64_t budget = 10'000) {
  ExplicitChain chain;
  for_each_subset(inst.n, k_prime, budget, [&](const std::vector<int>& idx) {
    chain.states.emplace_back(idx.begin(), idx.end());
  });
  const std::size_t count = chain.states.size();
  chain.p.assign(count * count, 0.0);
  const double proposal_prob =
      1.0 / (static_cast<double>(k_prime) * static_cast<double>(inst.n - k_prime));
  for (std::size_t a = 0; a < count; ++a) {
    const SparseSupport& v = chain.states[a];
    KahanSum moved;
    for (std::int32_t i_out : v) {
      for (int i_in = 0; i_in < inst.n; ++i_in) {
        if (std::binary_search(v.begin(), v.end(), i_in)) continue;
        const double delta = hamiltonian_delta(inst, v, i_out, i_in);
        const double accept = std::min(1.0, std::exp(-beta * delta));
        SparseSupport u = v;
        u.erase(std::lower_bound(u.begin(), u.end(), i_out));
        u.insert(std::lower_bound(u.begin(), u.end(), i_in),
                 static_cast<std::int32_t>(i_in));
        const auto it = std::lower_bound(chain.states.begin(), chain.states.end(), u);
        const std::size_t b = static_cast<std::size_t>(it - chain.states.begin());
        chain.at(a, b) += proposal_prob * accept;
        moved.add(proposal_prob * accept);
      }
    }
    // Rejection mass; clamped so rounding never yields a negative entry.
    chain.at(a, a) = std::max(0.0, 1.0 - moved.value());
  }
  return chain;
}

// Exact Gibbs distribution over the explicit chain's states.
inline std::vector<double> explicit_gibbs_distribution(const Instance& inst,
                                                       double beta,
                                                       const ExplicitChain& chain) {
  std::vector<double> log_w(chain.states.size());
  LogSumExp lse;
  for (std::size_t i = 0; i < chain.states.size(); ++i) {
    log_w[i] = -beta * hamiltonian(inst, chain.states[i]);
    lse.add(log_w[i]);
  }
  std::vector<double> mu(chain.states.size());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = std::exp(log_w[i] - lse.value());
  return mu;
}

// l1 distance between mu P and mu; stationarity check for tests.
inline double stationarity_gap(const ExplicitChain& chain,
                               const std::vector<double>& mu) {
  const std::size_t count = chain.states.size();
  double gap = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    KahanSum col;
    for (std::size_t i = 0; i < count; ++i) col.add(mu[i] * chain.at(i, j));
    gap += std::abs(col.value() - mu[j]);
  }
  return gap;
}

}  // namespace spca
