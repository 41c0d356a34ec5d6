#pragma once

// Diagnostics built on the cell solvers: expansion residuals at the identity,
// the k-cell commutativity probe, the layered-composite buckling pipeline and
// the splitting identity of the prestressed composite.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "elhom/cell.hpp"

namespace elhom {

struct ExpansionReport {
  /// Unit direction actually used (the input normalized).
  Mat g;
  int k = 1;
  int res = 0;
  std::vector<double> h_list;
  std::vector<double> khom_values;
  std::vector<bool> converged;
  std::vector<std::string> start_labels;
  double qhom_value = 0.0;
  /// |W(k)_hom(Id + hG) - h^2 Q1_hom(G)| / h^2.
  std::vector<double> residuals;
  /// R(h_{i+1}) / R(h_i).
  std::vector<double> decay_ratios;
  /// max(0, W(k)_hom(Id + hG) / h^2 - Q1_hom(G)).
  std::vector<double> upper_slack;
  /// Result of validate_class; false labels the report out-of-class.
  bool in_class = true;

  bool residuals_decreasing() const;
};

ExpansionReport expansion_residuals(const Density& w, const Mat& g, int k, const std::vector<double>& h_list, int res,
                                    const NonlinearOptions& options, std::uint64_t seed = 0);

/// Least-squares fit E(h) - E(0) = sigma h + q h^2 with standard errors.
struct QuadFit {
  double sigma = 0.0;
  double q = 0.0;
  double sigma_se = 0.0;
  double q_se = 0.0;
  double residual_norm = 0.0;
};

/// Throws FitIllConditioned with fewer than 3 distinct nonzero h values.
QuadFit fit_expansion(const std::vector<double>& h, const std::vector<double>& increments);

/// k-cell energy at one macroscopic gradient, as used by the probes.
struct KcellValue {
  double energy = 0.0;
  bool converged = false;
  std::string start_label;
};
using KcellEvaluator = std::function<KcellValue(int k, const Mat& f)>;

/// Full kY cell solve with default_starts.
KcellEvaluator cell_evaluator(const Density& w, int res, std::uint64_t seed, const NonlinearOptions& options);

/// k-cell energy of the prestressed composite evaluated through the splitting
/// identity: one slab copy (periodic in y1, y2 with period k, free faces in
/// y3) plus one rod (periodic in y1 with period k, free in y2, y3), each on
/// its own reduced grid.
struct SplitValue {
  CellResult slab;
  CellResult rod;
  double energy = 0.0;
};
SplitValue split_kcell_energy(const Density& w, const Mat& f, int k, int res, std::uint64_t seed,
                              const NonlinearOptions& options);
KcellEvaluator split_evaluator(const Density& w, int res, std::uint64_t seed, const NonlinearOptions& options);

enum class Verdict { commutes, fails, inconclusive };
std::string to_string(Verdict v);

struct KExpansion {
  int k = 0;
  double base = 0.0;
  std::vector<double> energies;
  std::vector<bool> converged;
  QuadFit fit;
};

struct CommutativityVerdict {
  Mat g;
  std::vector<int> k_list;
  std::vector<double> h_list;
  std::vector<KExpansion> per_k;
  /// Running minimum over k at every h (the multi-cell surrogate).
  KExpansion multicell;
  /// Separation margin used for each k (same order as per_k).
  std::vector<double> margins;
  Verdict verdict = Verdict::inconclusive;
  std::string reason;
};

/// Fits the expansion coefficients of each k-cell energy along Id + hG and
/// compares q(k) with the multi-cell trend: fails when some q(k) exceeds it
/// by more than 3 (se_k + se_mc + tol / h_min^2). The prestressed composite
/// is evaluated through split_evaluator, everything else on the full cell.
CommutativityVerdict commutativity_probe(const Density& w, const Mat& g, const std::vector<int>& k_list,
                                         const std::vector<double>& h_list, int res, const NonlinearOptions& options,
                                         std::uint64_t seed = 0);
CommutativityVerdict commutativity_probe(const KcellEvaluator& eval, const Mat& g, const std::vector<int>& k_list,
                                         const std::vector<double>& h_list, double tol);

struct Counterexample1Row {
  double delta = 0.0;
  int k = 1;
  double energy = 0.0;
  std::string start_label;
  bool converged = false;
  double min_det = 0.0;
  /// energy / (q delta^2).
  double ratio = 0.0;
};

struct Counterexample1Report {
  double alpha = 0.0;
  int res = 0;
  /// Homogenized quadratic stiffness at e1 (x) e1 for alpha and 10 alpha.
  double q_stiff = 0.0;
  double q_stiff_alpha10 = 0.0;
  double stiff_variation = 0.0;
  std::vector<double> delta_list;
  std::vector<int> k_list;
  std::vector<Counterexample1Row> rows;
  /// max over rows with delta > 0 of energy / (alpha + k^-2).
  double bound_c = 0.0;
  /// min over k of the energy for each delta.
  std::vector<double> f_delta;
  bool f_monotone = true;
  bool f_convex = true;
};

Counterexample1Report counterexample1_pipeline(double alpha, const std::vector<double>& delta_list,
                                               const std::vector<int>& k_list, int res,
                                               const NonlinearOptions& options, std::uint64_t seed = 0);

struct SplitRow {
  Mat f;
  CellResult full;
  CellResult slab;
  CellResult rod;
  double defect = 0.0;
};

struct SplittingReport {
  double s = 0.0;
  double rho = 0.0;
  int k = 1;
  int res = 0;
  /// 10 x the combined energy tolerance of the three solves.
  double bound = 0.0;
  std::vector<SplitRow> rows;
  bool all_pass() const;
};

/// Solves the full prestressed k-cell problem and its slab and rod
/// restrictions on the same grid for every F.
SplittingReport splitting_check(BaseKind base, double s, double rho, int k, int res, const std::vector<Mat>& f_list,
                                const NonlinearOptions& options, std::uint64_t seed = 0);

}  // namespace elhom
