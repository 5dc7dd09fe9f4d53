#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "rfim/lattice.hpp"

namespace rfim {

enum class FieldKind { Bimodal, Gaussian, General };

/// Law of a single field variable H_x.
struct FieldDistribution {
  FieldKind kind = FieldKind::Bimodal;
  std::string name = "bimodal";
  /// General laws: maps a uniform in [0,1) to a draw.
  std::function<double(double)> inverse_cdf;
  /// General laws: P(|H_x| < delta).
  std::function<double(double)> abs_below_fn;
  /// Declared mass of the atom at zero; never estimated.
  double atom_at_zero = 0.0;

  static FieldDistribution bimodal();
  static FieldDistribution gaussian();
  static FieldDistribution general(std::string name, std::function<double(double)> inverse_cdf,
                                   double atom_at_zero, std::function<double(double)> abs_below);
  /// Symmetric two-point law at +-a (bimodal is a = 1).
  static FieldDistribution symmetric_atoms(double a);
  /// Point mass at zero.
  static FieldDistribution zero();

  /// P(|H_x| < delta).
  double abs_below(double delta) const;
  /// One draw from a uniform in [0,1) plus an auxiliary uniform (Gaussian only).
  double draw(double u, double v) const;
};

/// Parses "bimodal" or "gaussian".
FieldDistribution field_distribution_from_name(const std::string& name);

/// A quenched field h on a box, aligned with Box::sites().
struct FieldRealization {
  Box box;
  std::vector<double> values;
  std::string distribution;
  std::uint64_t seed = 0;

  double at(const Site& s) const;
};

/// Per-site values depend only on (seed, site coordinates), so a realization
/// restricted to a sub-box equals the sub-box's own realization.
FieldRealization sample_field(const FieldDistribution& dist, const Box& box, std::uint64_t seed);

/// H * h_x per site.
std::vector<double> effective_field(const FieldRealization& h, double H);

/// Text format: header `dim d, box L, dist NAME, seed S` then `x1 ... xd value` per site.
void write_field(std::ostream& os, const FieldRealization& h);
FieldRealization read_field(std::istream& is);

}  // namespace rfim
