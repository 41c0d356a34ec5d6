#pragma once

// The four functionals on a box domain clamped on the face x1 = 0:
//   I_eps_h(v)  = h^-2 int W(x/eps, Id + h grad v) - int f.v
//   I_lin_eps(v) = int Q(x/eps, grad v) - int f.v
//   I_h_hom(v)  = h^-2 int W_hom(Id + h grad v) - int f.v
//   I0(v)       = int Q1_hom(grad v) - int f.v
// their minimization, the diagram probe and the coercivity diagnostics.

#include <cstdint>
#include <string>
#include <vector>

#include "elhom/cell.hpp"

namespace elhom {

/// Box [0, L1] x ... with `res` elements per unit length; gamma is the face x1 = 0.
struct DomainMesh {
  int dim = 2;
  std::array<double, kMaxDim> lengths{1.0, 1.0, 1.0};
  int res = 16;

  Grid grid() const;
  bool on_gamma(const Grid& grid, int node) const;
  bool on_boundary(const Grid& grid, int node) const;
};

enum class LoadKind {
  /// v = G x on the boundary outside gamma (G x must vanish on gamma).
  affine_lift,
  /// Constant body force f; only gamma is clamped.
  body_force,
};

struct Load {
  LoadKind kind = LoadKind::affine_lift;
  Mat g = Mat::zero(2);
  std::array<double, kMaxDim> force{0.0, 0.0, 0.0};

  static Load lift(const Mat& g);
  static Load body(std::array<double, kMaxDim> f);
  /// 0.05 e1 (x) e1.
  static Load default_lift(int dim);
  /// |G| or |f|.
  double magnitude() const;
  std::string describe() const;
};

enum class Functional { eps_h, lin_eps, h_hom, zero };
std::string to_string(Functional f);

/// Homogenized density used by I_h_hom: the density itself when it has no
/// microstructure, otherwise a frame-indifferent fit W_hom(F) ~ P(E) with P a
/// polynomial of degree <= 3 in the Green strain E = (F^T F - Id) / 2, fitted
/// to cell minima over |E| <= radius.
class HomSurrogate {
 public:
  HomSurrogate() = default;
  static HomSurrogate passthrough(const Density& w);
  static HomSurrogate fit(const Density& w, double radius, int cell_res, const std::vector<int>& k_list,
                          const NonlinearOptions& options, std::uint64_t seed = 0);

  bool is_passthrough() const { return passthrough_; }
  double radius() const { return radius_; }
  int sample_count() const { return samples_; }
  /// Max |P(E_i) - W_i| over the samples.
  double fit_error() const { return fit_error_; }
  double energy(const Mat& f) const;
  double energy_and_stress(const Mat& f, Mat& stress) const;

 private:
  bool passthrough_ = true;
  Density w_ = Density::homogeneous(BaseKind::stvk, 2);
  int dim_ = 2;
  double radius_ = 0.0;
  int samples_ = 0;
  double fit_error_ = 0.0;
  std::vector<std::array<int, 6>> exponents_;
  std::vector<double> coeff_;
};

/// Everything the four functionals need for one density.
struct FunctionalData {
  Density w = Density::homogeneous(BaseKind::stvk, 2);
  QuadraticField q;
  SymTensor4 l_hom;
  HomSurrogate surrogate;
};

/// Builds the quadratic field (formal second derivative at Id for densities
/// that are not minimized there), Q1_hom on a unit cell of `cell_res` and
/// the W_hom surrogate on |E| <= surrogate_radius.
FunctionalData prepare_functionals(const Density& w, int cell_res, double surrogate_radius,
                                   const NonlinearOptions& options, std::uint64_t seed = 0);

struct DomainResult {
  double energy = 0.0;
  /// Displacement v including the boundary values.
  Field field;
  bool converged = false;
  int iterations = 0;
  std::string status;
};

/// Minimizes one functional over fields vanishing on gamma (and matching the
/// lift elsewhere on the boundary). eps = 1/m needs res to be a multiple of 2m.
/// Quadratic functionals use CG with relative tolerance `options.tol`,
/// nonlinear ones L-BFGS with stress tolerance `options.tol`.
DomainResult minimize_functional(Functional which, const FunctionalData& data, const DomainMesh& mesh,
                                 const Load& load, double eps, double h, const NonlinearOptions& options);

/// Value of a functional at a given admissible field (no minimization).
double functional_value(Functional which, const FunctionalData& data, const Field& v, const Load& load, double eps,
                        double h);

struct DiagramRow {
  std::string path;
  double eps = 0.0;
  double h = 0.0;
  double energy = 0.0;
  bool converged = false;
};

struct DiagramReport {
  /// path is one of eps_h, lin_eps, h_hom, zero; eps = 0 or h = 0 mark a
  /// limit already taken.
  std::vector<DiagramRow> rows;
  std::vector<double> eps_list;
  std::vector<double> h_list;
  /// h -> 0 first (I_lin_eps over eps), then eps -> 0 by Richardson.
  double limit_13 = 0.0;
  /// eps -> 0 first (I_h_hom over h), then h -> 0 by Richardson.
  double limit_24 = 0.0;
  double i0 = 0.0;
  double defect = 0.0;
  double relative_defect = 0.0;
  bool monotone_13 = true;
  bool monotone_24 = true;
  double surrogate_fit_error = 0.0;
};

struct DiagramOptions {
  NonlinearOptions solver;
  int cell_res = 8;
  /// Surrogate radius is surrogate_factor * max(h) * |load|.
  double surrogate_factor = 4.0;
  std::uint64_t seed = 0;
};

DiagramReport diagram_probe(const Density& w, const Load& load, const std::vector<double>& eps_list,
                            const std::vector<double>& h_list, const DomainMesh& mesh, const DiagramOptions& options);

/// Richardson extrapolation to x = 0 assuming a first-order error, from the
/// last two (x, value) pairs.
double richardson(const std::vector<double>& x, const std::vector<double>& values);

/// min_b int_gamma |F x - b|^2 by surface Gauss quadrature.
double gamma_seminorm(const Mat& f, const DomainMesh& mesh);

struct EquicoercivityReport {
  std::vector<double> h_list;
  /// inf over samples of I_eps_h(g) / |g|^2_{W1,2} for each h.
  std::vector<double> ratios;
  double c1 = 0.0;
  int sample_count = 0;
};

/// Smooth random fields vanishing on gamma; eps = 1/m as in minimize_functional.
EquicoercivityReport equicoercivity_probe(const Density& w, const DomainMesh& mesh, const std::vector<double>& h_list,
                                          int sample_count, std::uint64_t seed, double eps = 1.0);

}  // namespace elhom
