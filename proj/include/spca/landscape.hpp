#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spca/csv.hpp"
#include "spca/errors.hpp"
#include "spca/gibbs.hpp"
#include "spca/model.hpp"
#include "spca/numerics.hpp"
#include "spca/subsets.hpp"
#include "spca/threading.hpp"

namespace spca {

// Restricted optimum over one overlap class T_ell = {v : |v| = k',
// <v,x> = ell}: the minimum energy, one optimizer (ties broken toward the
// lexicographically smallest support), and a feasibility flag for classes
// that contain no support at all.
struct PhiPoint {
  int ell = 0;
  bool feasible = false;
  double phi = std::numeric_limits<double>::quiet_NaN();
  SparseSupport argmin;
};

// The landscape profile phi_{k'}(ell) over every existing overlap class
// ell in [max(0, k + k' - n), min(k, k')].  declared_domain_start records
// floor(k*k'/n), the conventional left endpoint of the interesting domain;
// classes below it are still computed because certificates and sandwich
// bounds quantify over all of them.
struct PhiCurve {
  int n = 0;
  int k = 0;
  int k_prime = 0;
  int declared_domain_start = 0;
  std::vector<PhiPoint> points;  // index ell = 0 .. min(k, k')

  int max_overlap() const noexcept { return static_cast<int>(points.size()) - 1; }

  const PhiPoint& at(int ell) const {
    if (ell < 0 || ell > max_overlap()) {
      throw InvalidParameterError("phi curve: overlap " + std::to_string(ell) +
                                  " out of range");
    }
    return points[static_cast<std::size_t>(ell)];
  }
};

namespace detail {

// Enumerates the overlap class T_ell by the nested scheme: choose ell
// in-signal indices and k'-ell out-of-signal indices, merge sorted.
template <class Visitor>
void for_each_class_support(const Instance& inst, int k_prime, int ell,
                            std::uint64_t budget, Visitor&& visit) {
  const int k = inst.k;
  const int out_pool = inst.n - k;
  const int out_pick = k_prime - ell;
  if (ell < 0 || ell > std::min(k, k_prime) || out_pick < 0 || out_pick > out_pool) {
    return;  // empty class
  }
  std::vector<std::int32_t> comp;
  comp.reserve(static_cast<std::size_t>(out_pool));
  std::vector<char> in_x(static_cast<std::size_t>(inst.n), 0);
  for (std::int32_t i : inst.x) in_x[static_cast<std::size_t>(i)] = 1;
  for (int i = 0; i < inst.n; ++i) {
    if (!in_x[static_cast<std::size_t>(i)]) comp.push_back(i);
  }
  SparseSupport v(static_cast<std::size_t>(k_prime));
  for_each_subset(k, ell, budget, [&](const std::vector<int>& in_pos) {
    for_each_subset(out_pool, out_pick, budget, [&](const std::vector<int>& out_pos) {
      // Merge the chosen signal indices with the chosen complement indices;
      // both pieces are already sorted.
      std::size_t a = 0, b = 0, w = 0;
      while (a < in_pos.size() && b < out_pos.size()) {
        const std::int32_t x_idx = inst.x[static_cast<std::size_t>(in_pos[a])];
        const std::int32_t c_idx = comp[static_cast<std::size_t>(out_pos[b])];
        if (x_idx < c_idx) {
          v[w++] = x_idx;
          ++a;
        } else {
          v[w++] = c_idx;
          ++b;
        }
      }
      while (a < in_pos.size()) v[w++] = inst.x[static_cast<std::size_t>(in_pos[a++])];
      while (b < out_pos.size()) v[w++] = comp[static_cast<std::size_t>(out_pos[b++])];
      visit(v);
    });
  });
}

}  // namespace detail

// Minimum energy over each overlap class by nested enumeration.  All classes
// share one budget check (their union is the whole support space).
inline PhiCurve phi_curve(const Instance& inst, int k_prime,
                          std::uint64_t budget = kDefaultEnumerationBudget,
                          int threads = 1) {
  if (k_prime < 1 || k_prime > inst.n) {
    throw InvalidParameterError("phi_curve: requires 1 <= k' <= n");
  }
  check_enumeration_budget(inst.n, k_prime, budget);
  PhiCurve curve;
  curve.n = inst.n;
  curve.k = inst.k;
  curve.k_prime = k_prime;
  curve.declared_domain_start =
      static_cast<int>((static_cast<std::int64_t>(inst.k) * k_prime) / inst.n);
  const int m_max = std::min(inst.k, k_prime);
  curve.points.assign(static_cast<std::size_t>(m_max) + 1, PhiPoint{});
  parallel_for(static_cast<std::size_t>(m_max) + 1, threads, [&](std::size_t e) {
    PhiPoint& point = curve.points[e];
    point.ell = static_cast<int>(e);
    detail::for_each_class_support(
        inst, k_prime, point.ell, budget, [&](const SparseSupport& v) {
          const double h = hamiltonian(inst, v);
          if (!point.feasible || h < point.phi ||
              (h == point.phi && v < point.argmin)) {
            point.feasible = true;
            point.phi = h;
            point.argmin = v;
          }
        });
  });
  return curve;
}

// Oracle route for tests: one flat enumeration over all supports, grouped by
// overlap.  Must agree exactly with phi_curve.
inline PhiCurve phi_curve_flat(const Instance& inst, int k_prime,
                               std::uint64_t budget = kDefaultEnumerationBudget) {
  if (k_prime < 1 || k_prime > inst.n) {
    throw InvalidParameterError("phi_curve: requires 1 <= k' <= n");
  }
  PhiCurve curve;
  curve.n = inst.n;
  curve.k = inst.k;
  curve.k_prime = k_prime;
  curve.declared_domain_start =
      static_cast<int>((static_cast<std::int64_t>(inst.k) * k_prime) / inst.n);
  const int m_max = std::min(inst.k, k_prime);
  curve.points.assign(static_cast<std::size_t>(m_max) + 1, PhiPoint{});
  for (int e = 0; e <= m_max; ++e) curve.points[static_cast<std::size_t>(e)].ell = e;
  SparseSupport v;
  for_each_subset(inst.n, k_prime, budget, [&](const std::vector<int>& idx) {
    v.assign(idx.begin(), idx.end());
    const int m = overlap(v, inst.x);
    PhiPoint& point = curve.points[static_cast<std::size_t>(m)];
    const double h = hamiltonian(inst, v);
    if (!point.feasible || h < point.phi || (h == point.phi && v < point.argmin)) {
      point.feasible = true;
      point.phi = h;
      point.argmin = v;
    }
  });
  return curve;
}

// Maximum of the noise quadratic form v^T w v over one overlap class.
// Satisfies phi(ell) = -lambda * ell^2 / k - psi(ell) on every feasible
// class (the spike contributes exactly (lambda/k) * ell^2 there).
inline double psi_curve(const SymmetricMatrix& w, const SparseSupport& x,
                        int k_prime, int ell,
                        std::uint64_t budget = kDefaultEnumerationBudget) {
  const int n = w.dim();
  validate_support(x, n);
  if (k_prime < 1 || k_prime > n) {
    throw InvalidParameterError("psi_curve: requires 1 <= k' <= n");
  }
  check_enumeration_budget(n, k_prime, budget);
  // Reuse the nested enumerator through a shell instance with zero spike, so
  // the energy is exactly -v^T w v.
  Instance shell = build_observation(n, x, 0.0, w);
  bool any = false;
  double best = kNegInf;
  detail::for_each_class_support(shell, k_prime, ell, budget,
                                 [&](const SparseSupport& v) {
                                   any = true;
                                   best = std::max(best, -hamiltonian(shell, v));
                                 });
  if (!any) {
    throw InvalidParameterError("psi_curve: overlap class " + std::to_string(ell) +
                                " is empty");
  }
  return best;
}

// ---------------------------------------------------------------------------
// Overlap-gap certificates
// ---------------------------------------------------------------------------

struct OgpCertificate {
  bool holds = false;
  int zeta1 = 0;
  int zeta2 = 0;
  double r = 0.0;
  int gap_width = 0;  // zeta2 - zeta1
  // Witnesses realizing the two low-energy sides (valid when holds).
  SparseSupport witness_low;   // overlap <= zeta1, energy <= r
  SparseSupport witness_high;  // overlap >= zeta2, energy <= r
  double witness_low_energy = 0.0;
  double witness_high_energy = 0.0;
  double band_min = 0.0;  // min phi strictly inside (zeta1, zeta2)
};

// Decides whether the curve certifies an overlap gap at (zeta1, zeta2, r):
// some class at or below zeta1 and some class at or above zeta2 reach energy
// <= r, while every feasible class strictly inside the band stays above r.
inline OgpCertificate ogp_certify(const PhiCurve& curve, int zeta1, int zeta2,
                                  double r) {
  if (zeta2 <= zeta1 + 2) {
    throw InvalidParameterError("ogp_certify: requires zeta2 > zeta1 + 2");
  }
  const int m_max = curve.max_overlap();
  bool band_has_feasible = false;
  double band_min = std::numeric_limits<double>::infinity();
  for (int m = std::max(0, zeta1 + 1); m <= std::min(m_max, zeta2 - 1); ++m) {
    const PhiPoint& p = curve.at(m);
    if (!p.feasible) continue;
    band_has_feasible = true;
    band_min = std::min(band_min, p.phi);
  }
  if (!band_has_feasible) {
    throw InvalidParameterError(
        "ogp_certify: no feasible overlap class strictly inside (" +
        std::to_string(zeta1) + "," + std::to_string(zeta2) + ")");
  }
  OgpCertificate cert;
  cert.zeta1 = zeta1;
  cert.zeta2 = zeta2;
  cert.r = r;
  cert.gap_width = zeta2 - zeta1;
  cert.band_min = band_min;
  const PhiPoint* low = nullptr;
  for (int m = 0; m <= std::min(m_max, zeta1); ++m) {
    const PhiPoint& p = curve.at(m);
    if (p.feasible && (low == nullptr || p.phi < low->phi)) low = &p;
  }
  const PhiPoint* high = nullptr;
  for (int m = zeta2; m <= m_max; ++m) {
    const PhiPoint& p = curve.at(m);
    if (p.feasible && (high == nullptr || p.phi < high->phi)) high = &p;
  }
  if (low == nullptr || high == nullptr) {
    cert.holds = false;
    return cert;
  }
  cert.witness_low = low->argmin;
  cert.witness_high = high->argmin;
  cert.witness_low_energy = low->phi;
  cert.witness_high_energy = high->phi;
  cert.holds = std::max(low->phi, high->phi) <= r && r < band_min;
  return cert;
}

inline OgpCertificate ogp_certify(const Instance& inst, int k_prime, int zeta1,
                                  int zeta2, double r,
                                  std::uint64_t budget = kDefaultEnumerationBudget) {
  return ogp_certify(phi_curve(inst, k_prime, budget), zeta1, zeta2, r);
}

// Searches all (zeta1, zeta2, r) for the widest certified gap.  Energy
// thresholds only need to be checked at midpoints between consecutive
// distinct phi values: the verdict is constant between them.  Ties on gap
// width prefer smaller zeta1, then the smallest holding threshold.
inline std::optional<OgpCertificate> ogp_scan(const PhiCurve& curve) {
  std::vector<double> values;
  for (const PhiPoint& p : curve.points) {
    if (p.feasible) values.push_back(p.phi);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> thresholds;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    thresholds.push_back(0.5 * (values[i] + values[i + 1]));
  }
  const int m_max = curve.max_overlap();
  std::optional<OgpCertificate> best;
  for (int zeta1 = 0; zeta1 <= m_max; ++zeta1) {
    for (int zeta2 = zeta1 + 3; zeta2 <= m_max; ++zeta2) {
      bool band_feasible = false;
      for (int m = zeta1 + 1; m < zeta2; ++m) {
        if (curve.at(m).feasible) {
          band_feasible = true;
          break;
        }
      }
      if (!band_feasible) continue;
      for (double r : thresholds) {
        const OgpCertificate cert = ogp_certify(curve, zeta1, zeta2, r);
        if (!cert.holds) continue;
        if (!best || cert.gap_width > best->gap_width) best = cert;
        break;  // same pair means same width; the smallest holding r wins
      }
    }
  }
  return best;
}

inline std::optional<OgpCertificate> ogp_scan(const Instance& inst, int k_prime,
                                              std::uint64_t budget = kDefaultEnumerationBudget) {
  return ogp_scan(phi_curve(inst, k_prime, budget));
}

// ---------------------------------------------------------------------------
// Depth vs landscape sandwich
// ---------------------------------------------------------------------------

struct SandwichCheck {
  double depth = 0.0;
  double center = 0.0;  // beta * (min phi over the band - min phi below ell)
  double lower = 0.0;   // center - log C(n, k')
  double upper = 0.0;   // center + log C(n, k')
  bool pass = false;
};

// Exact two-sided control of the well depth by the landscape: writing
// phi_A = min over feasible classes m < ell and phi_B = min over feasible
// classes ell <= m <= 2*ell,
//
//   | depth - beta * (phi_B - phi_A) | <= log C(n, k').
//
// This follows from bracketing each region's partition sum between its
// largest term and (largest term) * (region size).
inline SandwichCheck few_sandwich_check(const Instance& inst, double beta,
                                        int k_prime, int ell,
                                        std::uint64_t budget = kDefaultEnumerationBudget,
                                        double slack = 1e-8) {
  validate_region(ell, inst.k, k_prime);
  const GibbsProfile profile = gibbs_profile(inst, beta, k_prime, budget);
  const PhiCurve curve = phi_curve(inst, k_prime, budget);
  double phi_a = std::numeric_limits<double>::infinity();
  for (int m = 0; m < ell && m <= curve.max_overlap(); ++m) {
    const PhiPoint& p = curve.at(m);
    if (p.feasible) phi_a = std::min(phi_a, p.phi);
  }
  double phi_b = std::numeric_limits<double>::infinity();
  for (int m = ell; m <= 2 * ell && m <= curve.max_overlap(); ++m) {
    const PhiPoint& p = curve.at(m);
    if (p.feasible) phi_b = std::min(phi_b, p.phi);
  }
  if (!std::isfinite(phi_b)) {
    throw UndefinedDepthError("sandwich check: overlap band [" +
                              std::to_string(ell) + "," + std::to_string(2 * ell) +
                              "] contains no supports");
  }
  if (!std::isfinite(phi_a)) {
    throw UndefinedDepthError("sandwich check: low-overlap region below " +
                              std::to_string(ell) + " contains no supports");
  }
  SandwichCheck check;
  check.depth = few_depth(profile, ell);
  check.center = beta * (phi_b - phi_a);
  const double width = log_binomial(inst.n, k_prime);
  check.lower = check.center - width;
  check.upper = check.center + width;
  check.pass = check.depth >= check.lower - slack && check.depth <= check.upper + slack;
  return check;
}

// ---------------------------------------------------------------------------
// Output formats
// ---------------------------------------------------------------------------

// CSV rows cover the feasible classes; argmin indices are space separated.
inline void write_phi_csv(const PhiCurve& curve, std::ostream& out) {
  CsvWriter csv(out);
  csv.write_row({"ell", "phi", "argmin_indices"});
  for (const PhiPoint& p : curve.points) {
    if (!p.feasible) continue;
    std::string indices;
    for (std::size_t i = 0; i < p.argmin.size(); ++i) {
      if (i > 0) indices += ' ';
      indices += std::to_string(p.argmin[i]);
    }
    csv.write_row({std::to_string(p.ell), format_double(p.phi), indices});
  }
}

inline nlohmann::json certificate_to_json(const OgpCertificate& cert,
                                          std::uint64_t instance_seed) {
  nlohmann::json j;
  j["holds"] = cert.holds;
  j["zeta1"] = cert.zeta1;
  j["zeta2"] = cert.zeta2;
  j["r"] = cert.r;
  j["gap_width"] = cert.gap_width;
  j["witness_low"] = cert.witness_low;
  j["witness_high"] = cert.witness_high;
  j["witness_low_energy"] = cert.witness_low_energy;
  j["witness_high_energy"] = cert.witness_high_energy;
  j["band_min"] = cert.band_min;
  j["instance_seed"] = instance_seed;
  return j;
}

}  // namespace spca
