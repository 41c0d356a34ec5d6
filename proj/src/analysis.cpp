#include "elhom/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "elhom/errors.hpp"

namespace elhom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat unit_direction(const Mat& g) {
  const double n = norm(g);
  require(n > 0, "direction G must be nonzero");
  return (1.0 / n) * g;
}

StartSet with_zero_and_random(const Grid& grid, std::uint64_t seed) {
  StartSet s;
  s.push_back({"zero", Field::zeros(grid)});
  s.push_back({"random0", random_field(grid, 0.01, seed)});
  return s;
}

bool is_diagonal(const Mat& f) {
  for (int i = 0; i < f.dim(); ++i)
    for (int j = 0; j < f.dim(); ++j)
      if (i != j && f(i, j) != 0.0) return false;
  return true;
}

// Slab wrinkle along axis a (0 or 1): the mid-surface y3 = 1/4 follows a
// PeriodicCurve of period k in the (e_a, e3) plane, normals stay normal.
Field slab_wrinkle(const Grid& grid, const Mat& f, int axis, int k) {
  const double ratio = f(axis, axis);
  const PeriodicCurve curve(ratio);
  Field out = Field::zeros(grid);
  for (int node = 0; node < grid.node_count(); ++node) {
    const Point p = grid.node_position(node);
    double x, y, th;
    curve.eval(p[axis] / k, x, y, th);
    const double d = p[2] - 0.25;
    Point phi = p;
    phi[axis] = k * x - d * std::sin(th);
    phi[2] = 0.25 + k * y + d * std::cos(th);
    for (int i = 0; i < 3; ++i) {
      double fy = 0;
      for (int j = 0; j < 3; ++j) fy += f(i, j) * p[j];
      out.at(node, i) = phi[i] - fy;
    }
  }
  return out;
}

// Rod of natural length (1 + s) per unit bent in the (e1, e3) plane so that
// one period k spans f11 k.
Field rod_bend(const Grid& grid, const Mat& f, double s, int k) {
  const PeriodicCurve curve(f(0, 0) / (1.0 + s));
  const double c = k * (1.0 + s);
  Field out = Field::zeros(grid);
  for (int node = 0; node < grid.node_count(); ++node) {
    const Point p = grid.node_position(node);
    double x, y, th;
    curve.eval(p[0] / k, x, y, th);
    const double d = p[2] - 0.75;
    const Point phi{c * x - d * std::sin(th), p[1], 0.75 + c * y + d * std::cos(th)};
    for (int i = 0; i < 3; ++i) {
      double fy = 0;
      for (int j = 0; j < 3; ++j) fy += f(i, j) * p[j];
      out.at(node, i) = phi[i] - fy;
    }
  }
  return out;
}

}  // namespace

bool ExpansionReport::residuals_decreasing() const {
  for (std::size_t i = 1; i < residuals.size(); ++i)
    if (!(residuals[i] < residuals[i - 1])) return false;
  return true;
}

ExpansionReport expansion_residuals(const Density& w, const Mat& g, int k, const std::vector<double>& h_list, int res,
                                    const NonlinearOptions& options, std::uint64_t seed) {
  require(!h_list.empty(), "h_list is empty");
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    require(h_list[i] > 0, "h values must be positive");
    if (i > 0) require(h_list[i] < h_list[i - 1], "h_list must be strictly decreasing");
  }
  ExpansionReport r;
  r.g = unit_direction(g);
  r.k = k;
  r.res = res;
  r.h_list = h_list;
  r.in_class = validate_class(w, 200, seed).all_pass();
  const QuadraticField q = quadratic_term(w);
  r.qhom_value = quad_value(homogenized_tensor(q, Grid::periodic_cell(w.dim(), 1, res)).l_hom, r.g);

  const Grid grid = Grid::periodic_cell(w.dim(), k, res);
  for (double h : h_list) {
    const Mat f = Mat::identity(w.dim()) + h * r.g;
    const CellResult c = solve_nonlinear_cell(w, f, grid, default_starts(f, grid, seed), options);
    r.khom_values.push_back(c.energy);
    r.converged.push_back(c.converged);
    r.start_labels.push_back(c.start_label);
    r.residuals.push_back(std::abs(c.energy - h * h * r.qhom_value) / (h * h));
    r.upper_slack.push_back(std::max(0.0, c.energy / (h * h) - r.qhom_value));
  }
  for (std::size_t i = 1; i < r.residuals.size(); ++i)
    r.decay_ratios.push_back(r.residuals[i - 1] > 0 ? r.residuals[i] / r.residuals[i - 1] : 0.0);
  return r;
}

QuadFit fit_expansion(const std::vector<double>& h, const std::vector<double>& inc) {
  if (h.size() != inc.size()) throw LengthMismatch("fit_expansion: h and value counts differ");
  std::vector<double> distinct;
  for (double v : h)
    if (v != 0.0 && std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
  if (distinct.size() < 3) throw FitIllConditioned("expansion fit needs at least 3 distinct nonzero h values");
  const int m = static_cast<int>(h.size());
  Eigen::MatrixXd x(m, 2);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    x(i, 0) = h[i];
    x(i, 1) = h[i] * h[i];
    y(i) = inc[i];
  }
  const Eigen::Vector2d c = x.colPivHouseholderQr().solve(y);
  QuadFit fit;
  fit.sigma = c(0);
  fit.q = c(1);
  const Eigen::VectorXd r = y - x * c;
  fit.residual_norm = r.norm();
  const double s2 = r.squaredNorm() / (m - 2);
  const Eigen::Matrix2d cov = s2 * (x.transpose() * x).inverse();
  fit.sigma_se = std::sqrt(std::max(0.0, cov(0, 0)));
  fit.q_se = std::sqrt(std::max(0.0, cov(1, 1)));
  return fit;
}

KcellEvaluator cell_evaluator(const Density& w, int res, std::uint64_t seed, const NonlinearOptions& options) {
  return [w, res, seed, options](int k, const Mat& f) {
    const Grid grid = Grid::periodic_cell(w.dim(), k, res);
    const CellResult c = solve_nonlinear_cell(w, f, grid, default_starts(f, grid, seed + 1000 * k), options);
    return KcellValue{c.energy, c.converged, c.start_label};
  };
}

SplitValue split_kcell_energy(const Density& w, const Mat& f, int k, int res, std::uint64_t seed,
                              const NonlinearOptions& options) {
  require(w.microstructure() == Microstructure::prestressed_perforated, "split evaluation needs the prestressed composite");
  require(k >= 1 && res >= 2 && res % 2 == 0, "split evaluation needs k >= 1 and even res");
  const double hgrid = 1.0 / res;
  SplitValue out;

  const Grid slab(3, {k * res, k * res, res / 2}, {true, true, false}, hgrid);
  StartSet ss = with_zero_and_random(slab, seed);
  if (is_diagonal(f))
    for (int a = 0; a < 2; ++a)
      if (f(a, a) < 1.0 && f(a, a) > 0.0 && k >= 2)
        ss.push_back({"wrinkle" + std::to_string(a + 1), slab_wrinkle(slab, f, a, k)});
  out.slab = minimize_cell(CellEnergy(w.restricted_to(Phase::slab), f, slab, 1.0 / (k * k)), ss, options);

  const double rho = w.rho();
  const int lo2 = static_cast<int>(std::floor((0.5 - rho) * res)), hi2 = static_cast<int>(std::ceil((0.5 + rho) * res));
  const int lo3 = static_cast<int>(std::floor((0.75 - rho) * res)), hi3 = static_cast<int>(std::ceil((0.75 + rho) * res));
  const Grid rod(3, {k * res, hi2 - lo2, hi3 - lo3}, {true, false, false}, hgrid, {0.0, lo2 * hgrid, lo3 * hgrid});
  StartSet rs = with_zero_and_random(rod, seed + 1);
  bool axial = true;
  for (int i = 1; i < 3; ++i) axial = axial && f(i, 0) == 0.0;
  if (axial && f(0, 0) > 0.0 && f(0, 0) < 1.0 + w.s() && k >= 2) rs.push_back({"rod_bend", rod_bend(rod, f, w.s(), k)});
  out.rod = minimize_cell(CellEnergy(w.restricted_to(Phase::rod), f, rod, 1.0 / k), rs, options);
  out.energy = out.slab.energy + out.rod.energy;
  return out;
}

KcellEvaluator split_evaluator(const Density& w, int res, std::uint64_t seed, const NonlinearOptions& options) {
  return [w, res, seed, options](int k, const Mat& f) {
    const SplitValue v = split_kcell_energy(w, f, k, res, seed + 1000 * k, options);
    return KcellValue{v.energy, v.slab.converged && v.rod.converged, v.slab.start_label + "+" + v.rod.start_label};
  };
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::commutes:
      return "commutes";
    case Verdict::fails:
      return "fails";
    default:
      return "inconclusive";
  }
}

CommutativityVerdict commutativity_probe(const KcellEvaluator& eval, const Mat& g, const std::vector<int>& k_list,
                                         const std::vector<double>& h_list, double tol) {
  require(!k_list.empty(), "k_list is empty");
  CommutativityVerdict v;
  v.g = g;
  v.k_list = k_list;
  v.h_list = h_list;
  if (norm(g) == 0.0) {
    v.verdict = Verdict::inconclusive;
    v.reason = "G = 0 has no direction";
    return v;
  }
  std::vector<double> distinct;
  for (double h : h_list) {
    require(h > 0, "h values must be positive");
    if (std::find(distinct.begin(), distinct.end(), h) == distinct.end()) distinct.push_back(h);
  }
  if (distinct.size() < 3) throw FitIllConditioned("commutativity probe needs at least 3 distinct h values");

  const int n = g.dim();
  v.multicell.base = kInf;
  v.multicell.energies.assign(h_list.size(), kInf);
  v.multicell.converged.assign(h_list.size(), true);
  for (int k : k_list) {
    KExpansion e;
    e.k = k;
    e.base = eval(k, Mat::identity(n)).energy;
    for (double h : h_list) {
      const KcellValue kv = eval(k, Mat::identity(n) + h * g);
      e.energies.push_back(kv.energy);
      e.converged.push_back(kv.converged);
    }
    v.multicell.base = std::min(v.multicell.base, e.base);
    for (std::size_t i = 0; i < h_list.size(); ++i)
      if (e.energies[i] < v.multicell.energies[i]) {
        v.multicell.energies[i] = e.energies[i];
        v.multicell.converged[i] = e.converged[i];
      }
    v.per_k.push_back(std::move(e));
  }
  auto increments = [&](const KExpansion& e) {
    std::vector<double> inc;
    for (double x : e.energies) inc.push_back(x - e.base);
    return inc;
  };
  for (KExpansion& e : v.per_k) e.fit = fit_expansion(h_list, increments(e));
  v.multicell.fit = fit_expansion(h_list, increments(v.multicell));

  const double hmin = *std::min_element(h_list.begin(), h_list.end());
  bool any_fail = false, all_agree = true;
  for (const KExpansion& e : v.per_k) {
    const double margin = 3.0 * (e.fit.q_se + v.multicell.fit.q_se + tol / (hmin * hmin));
    v.margins.push_back(margin);
    const double gap = e.fit.q - v.multicell.fit.q;
    if (gap > margin) {
      any_fail = true;
      if (v.reason.empty())
        v.reason = "q(k=" + std::to_string(e.k) + ") exceeds the multi-cell trend by " + std::to_string(gap);
    }
    if (std::abs(gap) > margin) all_agree = false;
  }
  if (any_fail)
    v.verdict = Verdict::fails;
  else if (all_agree) {
    v.verdict = Verdict::commutes;
    v.reason = "all q(k) agree with the multi-cell trend within the fit margin";
  } else {
    v.verdict = Verdict::inconclusive;
    v.reason = "multi-cell trend exceeds some q(k) beyond the fit margin";
  }
  return v;
}

CommutativityVerdict commutativity_probe(const Density& w, const Mat& g, const std::vector<int>& k_list,
                                         const std::vector<double>& h_list, int res, const NonlinearOptions& options,
                                         std::uint64_t seed) {
  const KcellEvaluator eval = w.microstructure() == Microstructure::prestressed_perforated
                                  ? split_evaluator(w, res, seed, options)
                                  : cell_evaluator(w, res, seed, options);
  return commutativity_probe(eval, g, k_list, h_list, options.tol);
}

Counterexample1Report counterexample1_pipeline(double alpha, const std::vector<double>& delta_list,
                                               const std::vector<int>& k_list, int res,
                                               const NonlinearOptions& options, std::uint64_t seed) {
  require(alpha > 0, "alpha must be positive");
  require(!delta_list.empty() && std::is_sorted(delta_list.begin(), delta_list.end()),
          "delta_list must be non-empty and ascending");
  for (double d : delta_list) require(d >= 0 && d <= 0.3, "delta values must lie in [0, 0.3]");
  Counterexample1Report r;
  r.alpha = alpha;
  r.res = res;
  r.delta_list = delta_list;
  r.k_list = k_list;
  const Grid cell = Grid::periodic_cell(2, 1, res);
  const Mat e11 = Mat::unit(2, 0, 0);
  const Density w = Density::layered(BaseKind::dist2, 2, alpha);
  r.q_stiff = quad_value(homogenized_tensor(quadratic_term(w), cell).l_hom, e11);
  r.q_stiff_alpha10 =
      quad_value(homogenized_tensor(quadratic_term(Density::layered(BaseKind::dist2, 2, 10 * alpha)), cell).l_hom, e11);
  r.stiff_variation = std::abs(r.q_stiff_alpha10 - r.q_stiff) / r.q_stiff;

  for (double delta : delta_list) {
    Mat f = Mat::identity(2);
    f(0, 0) = 1.0 - delta;
    const auto curve = khom_curve(w, f, k_list, res, seed, options);
    double best = kInf;
    for (const KhomPoint& p : curve) {
      Counterexample1Row row;
      row.delta = delta;
      row.k = p.k;
      row.energy = p.result.energy;
      row.start_label = p.result.start_label;
      row.converged = p.result.converged;
      row.min_det = p.result.min_det;
      row.ratio = delta > 0 ? row.energy / (r.q_stiff * delta * delta) : 0.0;
      if (delta > 0) r.bound_c = std::max(r.bound_c, row.energy / (alpha + 1.0 / (p.k * p.k)));
      best = std::min(best, row.energy);
      r.rows.push_back(row);
    }
    r.f_delta.push_back(best);
  }
  for (std::size_t i = 1; i < r.f_delta.size(); ++i) {
    if (r.f_delta[i] < r.f_delta[i - 1] - 1e-12) r.f_monotone = false;
    if (i >= 2) {
      const double s0 = (r.f_delta[i - 1] - r.f_delta[i - 2]) / (delta_list[i - 1] - delta_list[i - 2]);
      const double s1 = (r.f_delta[i] - r.f_delta[i - 1]) / (delta_list[i] - delta_list[i - 1]);
      if (s1 < s0 - 1e-10) r.f_convex = false;
    }
  }
  return r;
}

bool SplittingReport::all_pass() const {
  for (const SplitRow& row : rows)
    if (!(row.defect <= bound)) return false;
  return !rows.empty();
}

SplittingReport splitting_check(BaseKind base, double s, double rho, int k, int res, const std::vector<Mat>& f_list,
                                const NonlinearOptions& options, std::uint64_t seed) {
  const Density w = Density::prestressed_perforated(base, s, rho);
  SplittingReport r;
  r.s = s;
  r.rho = rho;
  r.k = k;
  r.res = res;
  r.bound = 10.0 * 3.0 * options.tol;
  const Grid grid = Grid::periodic_cell(3, k, res);
  for (const Mat& f : f_list) {
    const StartSet starts = default_starts(f, grid, seed);
    SplitRow row;
    row.f = f;
    row.full = solve_nonlinear_cell(w, f, grid, starts, options);
    row.slab = solve_nonlinear_cell(w.restricted_to(Phase::slab), f, grid, starts, options);
    row.rod = solve_nonlinear_cell(w.restricted_to(Phase::rod), f, grid, starts, options);
    row.defect = std::abs(row.full.energy - (row.slab.energy + row.rod.energy));
    r.rows.push_back(std::move(row));
  }
  return r;
}

}  // namespace elhom
