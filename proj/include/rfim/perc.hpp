#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rfim/fields.hpp"
#include "rfim/lattice.hpp"
#include "rfim/stats.hpp"
#include "rfim/sw_chain.hpp"

namespace rfim {

struct CriticalValue {
  double value = 1.0;
  std::string provenance;
};

/// Bond and site percolation thresholds on Z^d, d = 1, 2, 3.
class CriticalConstants {
 public:
  static CriticalConstants defaults();

  double pc_bond(int d) const { return lookup(bond_, d, "bond").value; }
  double pc_site(int d) const { return lookup(site_, d, "site").value; }
  const CriticalValue& bond_entry(int d) const { return lookup(bond_, d, "bond"); }
  const CriticalValue& site_entry(int d) const { return lookup(site_, d, "site"); }
  void set_bond(int d, double v, std::string provenance = "override");
  void set_site(int d, double v, std::string provenance = "override");

 private:
  static const CriticalValue& lookup(const std::map<int, CriticalValue>& m, int d, const char* what);
  std::map<int, CriticalValue> bond_;
  std::map<int, CriticalValue> site_;
};

/// -ln(1 - p_c^b(d)) / 2; +inf when p_c^b = 1.
double beta_P(int d, const CriticalConstants& cc = CriticalConstants::defaults());
double beta_P_from_pc(double pc_bond);

/// Smallest H >= 0 with 1 - a(beta, H, 1)^2 < target (infimum; the inequality
/// is strict above it). Default target is p_c^s(d).
double h2_bound(double beta, int d, const CriticalConstants& cc = CriticalConstants::defaults(),
                std::optional<double> target = std::nullopt);

struct H3Bound {
  bool feasible = false;
  double H = 0.0;
  double delta = 0.0;
  std::string note;
};

/// Minimizes over a delta grid the smallest H with
/// P(|H_x| < delta) + 1 - a(beta, H, delta)^2 < target.
H3Bound h3_bound(double beta, int d, const FieldDistribution& nu,
                 const CriticalConstants& cc = CriticalConstants::defaults(), std::optional<double> target = std::nullopt);

/// Left-hand side of the h3 inequality.
double h3_lhs(double beta, double H, double delta, int d, const FieldDistribution& nu);

struct DecayPoint {
  double r;
  double p;
  double stderr_;
};

struct DecayFit {
  double rate = 0.0;
  double log_prefactor = 0.0;
  double r_squared = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  std::vector<DecayPoint> used;
  std::vector<std::string> log;
};

/// Weighted least squares of ln p against r. Points with p <= 2 stderr are
/// dropped (and logged). Throws std::domain_error with fewer than 3 usable points.
DecayFit decay_fit(std::span<const DecayPoint> points);

enum class Regime { Below, Above, Inconclusive };
const char* regime_name(Regime r);

struct ThetaPoint {
  int n;
  Estimate theta;
};

/// Decay-vs-plateau rule over an increasing n schedule. `replicas` is used
/// for the upper bound 3/replicas when no event was observed.
Regime classify_theta(std::span<const ThetaPoint> pts, int replicas);

struct ScanRow {
  double beta;
  double H;
  int n;
  Estimate theta;
  Regime regime;
};

struct KerteszScanParams {
  std::vector<int> schedule{8, 16, 32, 64};
  double H_lo = 0.0;
  double H_hi = 2.0;
  double width = 0.05;
  int max_evaluations = 20;
  int d = 2;
  ThetaBudget budget;
};

struct KerteszScanResult {
  double beta = 0.0;
  double H_lo = 0.0;                 // largest H classified below (or the initial lower end)
  double H_hi = 0.0;                 // smallest H classified above, +inf if none
  bool lo_confirmed = false;         // H_lo itself was classified below
  bool hi_confirmed = false;
  bool inconclusive = false;         // bracket wider than the requested width
  std::vector<ScanRow> rows;
};

/// Classify one H by estimating theta_n over the schedule.
Regime classify_H(double beta, double H, const KerteszScanParams& prm, std::uint64_t seed, std::vector<ScanRow>* rows);

/// Bisection for a bracket of the Kertesz line at fixed beta (q = 2).
KerteszScanResult kertesz_scan(double beta, const KerteszScanParams& prm, std::uint64_t seed);

/// CSV with header `beta, H, n, theta_hat, stderr, classification`.
void write_scan_csv(std::ostream& os, std::span<const ScanRow> rows);

struct AveragedSiteResult {
  Estimate connectivity;  // P(exterior boundary of delta joined to open exterior sites)
  Estimate one_site;      // P(a given site open), averaged over field and sites
  double bound = 0.0;     // P(|H| < delta) + 1 - a^2(beta, H, delta)
};

/// Joint Monte Carlo over field realizations and dominating site configurations.
AveragedSiteResult averaged_site_estimate(double beta, double H, const FieldDistribution& nu, const BoxGraph& g,
                                          std::span<const int> delta_sites,
                                          std::span<const std::uint8_t> open_exterior, int replicas,
                                          double delta, std::uint64_t seed);

/// Left-right crossing probability of independent percolation on an L^d box
/// (site or bond), face {x_0 = 0} to face {x_0 = L-1}.
Estimate crossing_probability(int d, int L, double p, bool site, int samples, std::uint64_t seed);

struct ThresholdRow {
  double beta;
  double H2;
  H3Bound H3;
  int d;
};

/// CSV with header `beta, H2, H3, delta_star, d`.
void write_threshold_csv(std::ostream& os, std::span<const ThresholdRow> rows);

}  // namespace rfim
