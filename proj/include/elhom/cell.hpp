#pragma once

// Cell problems: the linear corrector problem behind Q1_hom, the nonlinear
// k-cell problem behind W^(k)_hom, and the bending seeds used as starts.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "elhom/density.hpp"
#include "elhom/grid.hpp"
#include "elhom/optimize.hpp"

namespace elhom {

struct CellResult {
  /// Cell-average energy.
  double energy = 0.0;
  Field corrector;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  std::string start_label;
  std::string status;
  /// Smallest det(F + grad u) over loaded quadrature points.
  double min_det = 0.0;
};

struct HomTensor {
  SymTensor4 l_hom;
  /// One corrector per basis direction e_i (x) e_j, ordered n*i + j.
  std::vector<Field> correctors;
};

CellResult solve_linear_cell(const QuadraticField& q, const Mat& g, const Grid& grid, double tol = 1e-10);
HomTensor homogenized_tensor(const QuadraticField& q, const Grid& grid, double tol = 1e-10);

/// Cell-average energy u -> scale * sum_q w W(y_q, F + grad u(y_q)) on a grid,
/// with its gradient. scale defaults to 1 / measure(grid). With
/// `det_barrier` the energy is +inf as soon as det(F + grad u) <= 1e-8 at a
/// loaded quadrature point.
class CellEnergy {
 public:
  CellEnergy(const Density& w, const Mat& f, const Grid& grid, double energy_scale = 0.0, bool det_barrier = false);

  double operator()(std::span<const double> u, std::vector<double>& grad) const;
  double value(std::span<const double> u) const;
  /// Divides nodal forces so that the L-BFGS tolerance acts on stresses.
  double grad_scale() const;
  /// Smallest det(F + grad u) over loaded quadrature points.
  double min_det(std::span<const double> u) const;
  bool has_barrier() const { return barrier_; }
  double energy_scale() const { return scale_; }
  const Grid& grid() const { return grid_; }
  const Density& density() const { return w_; }
  const Mat& macro() const { return f_; }

 private:
  template <bool WithGrad>
  double eval(std::span<const double> u, std::vector<double>* grad) const;

  Density w_;
  Mat f_;
  Grid grid_;
  double scale_;
  std::vector<MaterialPoint> material_;
  bool barrier_;
};

struct Start {
  std::string label;
  Field field;
};
using StartSet = std::vector<Start>;

struct NonlinearOptions {
  double tol = 1e-8;
  int max_iter = 5000;
  int memory = 10;
  int threads = 1;
  /// Reject iterates with det(F + grad u) <= 1e-8 (dist2 base only).
  bool det_barrier = false;
};

/// Runs L-BFGS from each start and returns the lowest energy reached (ties
/// within 1e-12 go to the earlier start). Throws AllStartsFailed when no
/// start yields a finite energy.
CellResult minimize_cell(const CellEnergy& energy, const StartSet& starts, const NonlinearOptions& options);
CellResult solve_nonlinear_cell(const Density& w, const Mat& f, const Grid& grid, const StartSet& starts,
                                const NonlinearOptions& options);

/// Unit-speed planar curve with tangent angle a sin(2 pi t), a chosen so that
/// one period of length 1 advances by `shortening` along e1 (J0(a) = shortening).
class PeriodicCurve {
 public:
  explicit PeriodicCurve(double shortening);
  double amplitude() const { return amplitude_; }
  /// Position (x, y) and tangent angle at arc length t.
  void eval(double t, double& x, double& y, double& angle) const;

 private:
  static constexpr int kTerms = 24;
  double amplitude_;
  std::array<double, kTerms> bessel_{};
};

/// Periodic displacement of the layered bending construction on the kY
/// cell: every stiff layer follows a PeriodicCurve of period k shortened by
/// the factor 1 - delta, the soft layers interpolate. Mean zero.
Field bending_ansatz(double delta, int k, const Grid& grid);

/// Uniform random field in [-amplitude, amplitude], mean zero.
Field random_field(const Grid& grid, double amplitude, std::uint64_t seed);

/// zero, bending(delta) and its two perturbations when F is a compression
/// Id - delta e1 (x) e1 with 0 < delta < 1/2 in 2D, then three random fields.
StartSet default_starts(const Mat& f, const Grid& grid, std::uint64_t seed);

struct KhomPoint {
  int k = 1;
  CellResult result;
  /// min over the k values computed so far.
  double running_min = 0.0;
};

/// W^(k)_hom(F) for each k in k_list (ascending). Starts for k also include
/// the periodic extension of the best corrector of every listed divisor of k.
std::vector<KhomPoint> khom_curve(const Density& w, const Mat& f, const std::vector<int>& k_list, int res,
                                  std::uint64_t seed, const NonlinearOptions& options);

/// Rigidity ratio (1/h^2) int dist^2(Id + h grad u) / int |grad u|^2.
double rigidity_ratio(const Field& u, double h);

}  // namespace elhom
