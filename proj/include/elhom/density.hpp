#pragma once

// Stored-energy densities W(y, F) on the unit cell Y = [0,1)^n, extended
// Y-periodically, with the microstructures used by the toolkit.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "elhom/tensor.hpp"

namespace elhom {

enum class BaseKind {
  /// W0(F) = dist^2(F, SO(n)).
  dist2,
  /// W0(F) = |F^T F - Id|^2 / 4.
  stvk,
};

enum class Microstructure {
  homogeneous,
  /// Stiff layers {y2 mod 1 in [0, 1/2)} in a soft matrix of stiffness alpha.
  layered,
  /// 3D composite: slab Y0 = [0,1)^2 x [0,1/2), prestressed rod along e1
  /// through (., 1/2, 3/4) of radius rho, void elsewhere.
  prestressed_perforated,
};

/// Restricts the prestressed composite to one of its two phases.
enum class Phase { all, slab, rod };

std::string to_string(BaseKind kind);
std::string to_string(Microstructure m);
BaseKind parse_base_kind(const std::string& name);
Microstructure parse_microstructure(const std::string& name);

/// Material response at one point: W(y, F) = weight * W0(F S) with S = Id
/// unless the point belongs to the prestressed rod.
struct MaterialPoint {
  double weight = 1.0;
  bool prestressed = false;
};

struct EnergyGradient {
  Mat grad;
  /// det F <= 0 for the dist2 base: grad is only a subgradient.
  bool nonsmooth = false;
};

class Density {
 public:
  static Density homogeneous(BaseKind base, int dim);
  static Density layered(BaseKind base, int dim, double alpha);
  static Density prestressed_perforated(BaseKind base, double s, double rho, Phase phase = Phase::all);

  BaseKind base() const { return base_; }
  Microstructure microstructure() const { return micro_; }
  Phase phase() const { return phase_; }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  double s() const { return s_; }
  double rho() const { return rho_; }
  /// Growth exponent p of (W1): 2 for dist2, 4 for stvk.
  double growth_p() const;
  /// Nominal constant a of the lower bound W >= dist^2 / a on orientation
  /// preserving F; infinite when the lower bound fails.
  double coercivity_a() const;
  /// Same density restricted to one phase of the prestressed composite.
  Density restricted_to(Phase phase) const;

  MaterialPoint material_at(const Point& y) const;

  double eval(const Point& y, const Mat& f) const;
  EnergyGradient grad_F(const Point& y, const Mat& f) const;

  /// W and dW/dF at a point whose material response is already known.
  double energy(const MaterialPoint& mp, const Mat& f) const;
  double energy_and_stress(const MaterialPoint& mp, const Mat& f, Mat& stress) const;

  /// Prestrain S = (Id + s e1 (x) e1)^{-1} of the rod phase.
  Mat prestrain() const;

  std::string describe() const;

 private:
  Density() = default;
  double base_energy(const Mat& f) const;
  double base_energy_and_stress(const Mat& f, Mat& stress) const;

  BaseKind base_ = BaseKind::dist2;
  Microstructure micro_ = Microstructure::homogeneous;
  Phase phase_ = Phase::all;
  int dim_ = 2;
  double alpha_ = 1.0;
  double s_ = 0.0;
  double rho_ = 0.0;
};

/// Base energies, exposed for oracles and tests.
double stvk_energy(const Mat& f);
Mat stvk_stress(const Mat& f);

/// y -> L(y) representing Q(y, G) = <L(y) G, G>, Y-periodic.
struct QuadraticField {
  int dim = 2;
  std::function<SymTensor4(const Point&)> sampler;
  /// Essential-sup constant c with Q(y, G) <= c |G|^2.
  double bound_c = 0.0;

  SymTensor4 operator()(const Point& y) const { return sampler(y); }
  double value(const Point& y, const Mat& g) const { return quad_value(sampler(y), g); }

  static QuadraticField constant(const SymTensor4& l);
};

/// y -> D^2 W(y, Id) / 2. Analytic for stvk, central differences otherwise.
/// Throws NotExpandable when the density contains the prestressed rod.
QuadraticField quadratic_term(const Density& w);

/// D^2 W0(Id) / 2 of a base energy by second-order central differences.
SymTensor4 base_hessian_fd(BaseKind base, int dim, double step = 1e-4);

struct ConditionCheck {
  std::string name;
  bool pass = false;
  /// Fitted constant (meaning depends on the condition); +inf if none fits.
  double fitted_constant = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ConditionCheck> conditions;  // W1, W2, W3, W4 in order
  /// Fitted local Lipschitz constant of (W1); informational only.
  double lipschitz_fit = 0.0;
  std::vector<double> w4_steps;
  std::vector<double> w4_residuals;
  int sample_count = 0;
  std::uint64_t seed = 0;

  bool all_pass() const;
  const ConditionCheck& condition(const std::string& name) const;
};

/// Randomized check of (W1)-(W4) over orientation-preserving F.
ValidationReport validate_class(const Density& w, int sample_count, std::uint64_t seed);

}  // namespace elhom
