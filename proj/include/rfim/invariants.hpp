#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rfim/cluster.hpp"
#include "rfim/gibbs.hpp"

namespace rfim {

struct InvariantResult {
  std::string name;
  bool passed = true;
  double slack = 0.0;  // worst margin observed (>= -tol passes for inequalities; error for identities)
  int instances = 0;
  std::string detail;
};

struct OracleOptions {
  std::uint64_t seed = 1;
  int draws = 5;
  double tol = 1e-12;
  int spin_cap = kDefaultSpinCap;
  int edge_cap = kDefaultEdgeCap;
  /// Test hook: perturbs the joint spin-bond weight so the consistency check must fail.
  bool corrupt_weight = false;
};

/// Minimum over increasing events A of nu(A) - mu(A), for laws on {0,1}^bits
/// (index bit k = coordinate k). Exact, by a minimum cut on the Boolean lattice.
double min_upset_slack(std::span<const double> mu, std::span<const double> nu, int bits);

/// Same quantity by listing every increasing event (bits <= 4).
double min_upset_slack_bruteforce(std::span<const double> mu, std::span<const double> nu, int bits);

/// Small boxes used by the exact suites: (box, max edges in two-ghost mode).
std::vector<Box> tiny_boxes(int max_edges);

/// Joint spin-bond law on a two-ghost graph with spin boundary eta: spin and bond marginals.
struct JointMarginals {
  std::vector<double> spin;  // over 2^|box|
  std::vector<double> bond;  // over 2^|edges|
};
JointMarginals es_joint_marginals(const RcGraph& g, const SpinBoundary& eta, bool corrupt = false);

/// Indicator of the event that omega joins no two terminals (exterior sites,
/// g+ as +1, g- as -1) of different sign, using omega's own edges only.
bool boundary_separation_event(const RcGraph& g, const BondConfig& omega, const SpinBoundary& eta);

/// Exact P(some inner-boundary site of delta reaches the exterior through lattice edges) under a bond law.
double boundary_connection_probability(const RcGraph& g, const ExactDistribution& bonds, std::span<const int> delta);

/// Marginal of a bond law on the edges touching delta.
std::vector<double> delta_edge_marginal(const RcGraph& g, const ExactDistribution& bonds, std::span<const int> delta);

std::vector<InvariantResult> check_es_consistency(const OracleOptions& opt);
std::vector<InvariantResult> check_dominations(const OracleOptions& opt);
std::vector<InvariantResult> check_tv_bounds(const OracleOptions& opt, int draws = 20);
InvariantResult check_truncated_identity(const OracleOptions& opt);

}  // namespace rfim
