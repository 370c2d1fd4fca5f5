#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "spca/csv.hpp"
#include "spca/errors.hpp"
#include "spca/model.hpp"
#include "spca/numerics.hpp"
#include "spca/rng.hpp"
#include "spca/subsets.hpp"

namespace spca {

// Gibbs measure over k'-sparse supports, aggregated by overlap with the
// planted support.  log_mass[m] = log sum_{|v|=k', <v,x>=m} exp(-beta H(v)),
// log_z is the log of the full partition sum, and class_count[m] is the
// exact number of supports in each overlap class (uint64; exact whenever the
// enumeration was possible at all).
struct GibbsProfile {
  int n = 0;
  int k = 0;
  int k_prime = 0;
  double beta = 0.0;
  std::vector<double> log_mass;             // index m = 0 .. min(k, k')
  std::vector<std::uint64_t> class_count;   // same indexing
  double log_z = kNegInf;

  int max_overlap() const noexcept { return static_cast<int>(log_mass.size()) - 1; }
};

// Overlap band [ell, 2*ell] used as the reference region of a well-depth
// statement; the complementary low-overlap region is [0, ell).  Valid
// parameters satisfy 1 <= 2*ell <= min(k, k').
struct RegionSpec {
  enum class Kind {
    kLowOverlap,  // 0 <= <v,x> < ell
    kBand,        // ell <= <v,x> <= 2*ell
  };
  int ell = 0;
  Kind kind = Kind::kLowOverlap;
};

inline void validate_region(int ell, int k, int k_prime) {
  const int cap = std::min(k, k_prime);
  if (ell < 1 || 2 * ell > cap) {
    throw InvalidParameterError(
        "region: requires 1 <= 2*ell <= min(k, k'), got ell=" +
        std::to_string(ell) + " with min(k, k')=" + std::to_string(cap));
  }
}

inline bool region_contains(const RegionSpec& region, int m) noexcept {
  if (region.kind == RegionSpec::Kind::kLowOverlap) return m < region.ell;
  return m >= region.ell && m <= 2 * region.ell;
}

// Exhaustive Gibbs profile over all k'-sparse supports.  At beta = 0 every
// support has unit weight, so the energy evaluation is skipped and
// log_mass[m] is exactly log(class_count[m]).
inline GibbsProfile gibbs_profile(const Instance& inst, double beta, int k_prime,
                                  std::uint64_t budget = kDefaultEnumerationBudget) {
  if (k_prime < 1 || k_prime > inst.n) {
    throw InvalidParameterError("gibbs_profile: requires 1 <= k' <= n");
  }
  if (beta < 0.0) {
    throw InvalidParameterError("gibbs_profile: beta must be >= 0");
  }
  GibbsProfile profile;
  profile.n = inst.n;
  profile.k = inst.k;
  profile.k_prime = k_prime;
  profile.beta = beta;
  const int m_max = std::min(inst.k, k_prime);
  profile.class_count.assign(static_cast<std::size_t>(m_max) + 1, 0);
  std::vector<LogSumExp> acc(static_cast<std::size_t>(m_max) + 1);
  SparseSupport v;
  for_each_subset(inst.n, k_prime, budget, [&](const std::vector<int>& idx) {
    v.assign(idx.begin(), idx.end());
    const int m = overlap(v, inst.x);
    ++profile.class_count[static_cast<std::size_t>(m)];
    if (beta != 0.0) {
      acc[static_cast<std::size_t>(m)].add(-beta * hamiltonian(inst, v));
    }
  });
  profile.log_mass.assign(static_cast<std::size_t>(m_max) + 1, kNegInf);
  LogSumExp total;
  for (int m = 0; m <= m_max; ++m) {
    const std::size_t s = static_cast<std::size_t>(m);
    if (beta == 0.0) {
      profile.log_mass[s] = (profile.class_count[s] == 0)
                                ? kNegInf
                                : std::log(static_cast<double>(profile.class_count[s]));
    } else {
      profile.log_mass[s] = acc[s].value();
    }
    total.add(profile.log_mass[s]);
  }
  profile.log_z = total.value();
  return profile;
}

// Log probability of an overlap region under the profile's Gibbs measure.
inline double region_log_mass(const GibbsProfile& profile, const RegionSpec& region) {
  LogSumExp acc;
  for (int m = 0; m <= profile.max_overlap(); ++m) {
    if (region_contains(region, m)) acc.add(profile.log_mass[static_cast<std::size_t>(m)]);
  }
  return acc.value() - profile.log_z;
}

// Well depth between the low-overlap region A = {<v,x> < ell} and the band
// B = {ell <= <v,x> <= 2*ell}:  depth = log mu(A) - log mu(B).
//
// An empty (zero-mass) band makes the depth undefined and raises; a
// zero-mass A yields -inf (the well is trivially shallow), which is a valid
// value for downstream bounds.
inline double few_depth(const GibbsProfile& profile, int ell) {
  validate_region(ell, profile.k, profile.k_prime);
  const RegionSpec low{ell, RegionSpec::Kind::kLowOverlap};
  const RegionSpec band{ell, RegionSpec::Kind::kBand};
  const double log_b = region_log_mass(profile, band);
  if (log_b == kNegInf) {
    throw UndefinedDepthError(
        "well depth undefined: overlap band [" + std::to_string(ell) + "," +
        std::to_string(2 * ell) + "] has zero probability mass");
  }
  return region_log_mass(profile, low) - log_b;
}

// Draws one support from the Gibbs measure conditioned on an overlap region,
// by exact inversion over the enumerated supports: pass one accumulates the
// region's log mass, pass two walks the same enumeration until the running
// mass crosses a uniform target.  Consumes exactly one uniform draw.
inline SparseSupport sample_conditional(const Instance& inst, double beta,
                                        int k_prime, const RegionSpec& region,
                                        RngState& rng,
                                        std::uint64_t budget = kDefaultEnumerationBudget) {
  validate_region(region.ell, inst.k, k_prime);
  LogSumExp region_mass;
  std::uint64_t region_count = 0;
  SparseSupport v;
  for_each_subset(inst.n, k_prime, budget, [&](const std::vector<int>& idx) {
    v.assign(idx.begin(), idx.end());
    const int m = overlap(v, inst.x);
    if (!region_contains(region, m)) return;
    ++region_count;
    region_mass.add(beta == 0.0 ? 0.0 : -beta * hamiltonian(inst, v));
  });
  if (region_count == 0) {
    throw InvalidParameterError("sample_conditional: region has zero mass");
  }
  const double target = std::log(rng.next_unit_open()) + region_mass.value();
  LogSumExp running;
  SparseSupport result;
  bool found = false;
  for_each_subset(inst.n, k_prime, budget, [&](const std::vector<int>& idx) {
    if (found) return;
    v.assign(idx.begin(), idx.end());
    const int m = overlap(v, inst.x);
    if (!region_contains(region, m)) return;
    running.add(beta == 0.0 ? 0.0 : -beta * hamiltonian(inst, v));
    result = v;  // keep the last visited region support as a rounding guard
    if (running.value() >= target) found = true;
  });
  return result;
}

// Writes the overlap-resolved free-energy curve as CSV with header
// "m,log_mass,prob".  Empty classes print "-inf" mass and zero probability.
inline void write_free_energy_curve_csv(const GibbsProfile& profile,
                                        std::ostream& out) {
  CsvWriter csv(out);
  csv.write_row({"m", "log_mass", "prob"});
  for (int m = 0; m <= profile.max_overlap(); ++m) {
    const double lm = profile.log_mass[static_cast<std::size_t>(m)];
    const double prob = (lm == kNegInf) ? 0.0 : std::exp(lm - profile.log_z);
    csv.write_row({std::to_string(m), format_double(lm), format_double(prob)});
  }
}

}  // namespace spca
