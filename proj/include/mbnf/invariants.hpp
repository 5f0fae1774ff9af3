#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mbnf/normform.hpp"
#include "mbnf/potential.hpp"
#include "mbnf/simd.hpp"

namespace mbnf {

inline constexpr double kImaginaryResidueTol = 1e-11;

/// Formal integral expressed in the original variables; the polynomial slots
/// hold (rho, p_rho, z, p_z) and every coefficient is real.
struct FormalIntegral {
  Polynomial phi;
  Mode mode = Mode::nonresonant;
  int m1 = 0, m2 = 0;
  int order = 0;

  double operator()(double rho, double p_rho, double z, double p_z) const;
};

/// Phi in the canonical variables of the prepared Hamiltonian, before the
/// real substitution: exp(-L_chi_1) o ... o exp(-L_chi_r) applied to I1 or I_res.
Polynomial formal_integral_canonical(const NormalizationState& state);

/// Back-transformed integral; throws NonRealIntegralError when an imaginary
/// part of at least kImaginaryResidueTol times max(1, largest |coefficient|) survives.
FormalIntegral back_transform(const NormalizationState& state);

/// Phi on the section rho = 0, p_rho = +sqrt(2(E - V(0,z)) - p_z^2) as a
/// function of (z, p_z), with batched evaluation.
class SectionFunction {
 public:
  SectionFunction(const FormalIntegral& phi, const PotentialSpec& v, double E);

  double E() const { return E_; }
  /// p_rho on the section, or nullopt outside the allowed region.
  std::optional<double> p_rho(double z, double p_z) const;
  double operator()(double z, double p_z) const;
  /// Gradient of Phi_sect with respect to (z, p_z).
  std::array<double, 2> gradient(double z, double p_z) const;
  /// Values at valid points; invalid points get NaN.
  void evaluate(std::span<const double> z, std::span<const double> p_z, std::span<double> out) const;

 private:
  double E_;
  PotentialSpec v_;
  simd::TermTable table_;  // terms of phi at rho = 0 in (p_rho, z, p_z)
  FormalIntegral phi_, d_prho_, d_z_, d_pz_;
};

struct GridSpec {
  int nz = 400;
  int npz = 400;
  double z_min = -1.5, z_max = 1.5;
  /// p_z range; when unset the allowed band +-sqrt(2(E - min V(0,z))) is used.
  std::optional<double> pz_min, pz_max;
};

struct SectionGrid {
  double E = 0.0;
  int nz = 0, npz = 0;
  std::vector<double> z, p_z;  // axis values
  /// Row-major [i_pz * nz + i_z].
  std::vector<double> phi;
  std::vector<std::uint8_t> valid;

  double at(int iz, int ipz) const { return phi[std::size_t(ipz) * nz + iz]; }
  bool is_valid(int iz, int ipz) const { return valid[std::size_t(ipz) * nz + iz] != 0; }
};

struct SeedLevel {
  double z = 0.0, p_z = 0.0;
  double level = 0.0;
};

struct SectionLevels {
  SectionGrid grid;
  std::vector<SeedLevel> seeds;
};

SectionLevels section_levels(const SectionFunction& f, const GridSpec& grid,
                             const std::vector<std::array<double, 2>>& seeds, int threads = 1);

/// Island interiors at the seed levels: compact connected components of
/// {phi > level} or {phi < level} that avoid the grid edge, invalid cells and
/// the origin, and do not wind around it. Components of different seed levels
/// that share a cell count as one island.
struct Island {
  double z = 0.0, p_z = 0.0;  // extremum inside the component
  std::size_t cells = 0;
};

std::vector<Island> count_islands(const SectionLevels& levels, std::size_t min_cells = 4);

}  // namespace mbnf
