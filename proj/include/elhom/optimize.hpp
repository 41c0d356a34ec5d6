#pragma once

// Unconstrained minimizers used by the cell and domain solvers.

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace elhom {

/// Returns f(x) and fills g = grad f(x). May return +inf for inadmissible x.
using Objective = std::function<double(std::span<const double> x, std::vector<double>& g)>;

/// Distance-to-boundary measure of an admissible x (larger is safer).
using MarginFn = std::function<double(std::span<const double> x)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 5000;
  /// Stop when max|g| / grad_scale <= grad_tol.
  double grad_tol = 1e-8;
  double grad_scale = 1.0;
  /// Stop as stalled when the energy changed by less than
  /// stall_tol * max(1, |f|) over stall_window consecutive iterations.
  double stall_tol = 1e-15;
  int stall_window = 20;
  /// When set, a trial point whose margin falls below fraction_to_boundary
  /// times the margin of the current iterate is treated as inadmissible.
  MarginFn margin;
  double fraction_to_boundary = 0.5;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  /// max|g| / grad_scale at x.
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// "converged", "max_iter", "line_search_stall", "stalled" or "infeasible_start".
  std::string status;
};

LbfgsResult lbfgs(const Objective& objective, std::vector<double> x0, const LbfgsOptions& options);

/// y = A x for a symmetric positive semi-definite operator.
using LinearOperator = std::function<void(std::span<const double> x, std::vector<double>& y)>;
/// In-place projection onto the admissible subspace (e.g. mean-zero fields).
using Projector = std::function<void(std::vector<double>& x)>;

struct CgOptions {
  /// Stop when |r| <= tol * max(|b|, tiny).
  double tol = 1e-10;
  int max_iter = 20000;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// 1/2 x.Ax - b.x after every iteration, starting with the initial guess.
  std::vector<double> energy_history;
};

/// Preconditioned conjugate gradients for A x = b. `diagonal` (may be empty)
/// is used as a Jacobi preconditioner. Throws IndefiniteForm on a negative
/// Rayleigh quotient and NotConverged when max_iter is exhausted.
CgResult conjugate_gradient(const LinearOperator& apply, const std::vector<double>& b, std::vector<double> x0,
                            const std::vector<double>& diagonal, const Projector& project, const CgOptions& options);

}  // namespace elhom
