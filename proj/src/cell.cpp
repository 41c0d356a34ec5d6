#include "elhom/cell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "elhom/errors.hpp"
#include "elhom/parallel.hpp"

namespace elhom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double frac(double x) { return x - std::floor(x); }

void require_periodic_cell(const Grid& grid) {
  require(grid.fully_periodic(), "cell problems need a fully periodic grid");
}

std::vector<SymTensor4> sample_tensors(const QuadraticField& q, const Grid& grid) {
  require(q.dim == grid.dim(), "quadratic field and grid dimensions differ");
  std::vector<SymTensor4> out;
  out.reserve(grid.quad_count());
  for (int e = 0; e < grid.element_count(); ++e)
    for (int k = 0; k < grid.quad_per_element(); ++k) out.push_back(q(grid.quad_point(e, k)));
  return out;
}

double quadratic_average(const std::vector<SymTensor4>& l, const Grid& grid, const Mat& g, const Field& phi,
                         const Field* psi = nullptr, const Mat* h = nullptr) {
  const int nq = grid.quad_per_element();
  const auto ga = gradient_at_quadrature(phi);
  std::vector<Mat> gb;
  if (psi) gb = gradient_at_quadrature(*psi);
  double s = 0;
  for (int i = 0; i < grid.element_count() * nq; ++i) {
    const Mat a = g + ga[i];
    s += psi ? bilinear(l[i], a, *h + gb[i]) : quad_value(l[i], a);
  }
  return s * grid.quad_weight() / grid.measure();
}

}  // namespace

CellResult solve_linear_cell(const QuadraticField& q, const Mat& g, const Grid& grid, double tol) {
  require_periodic_cell(grid);
  require(g.dim() == grid.dim(), "macroscopic gradient has the wrong dimension");
  const int n = grid.dim(), nq = grid.quad_per_element();
  const std::vector<SymTensor4> l = sample_tensors(q, grid);

  LinearOperator apply = [&](std::span<const double> u, std::vector<double>& y) {
    grid.assemble(u, &y, [&](int e, int k, const Mat& gu, Mat& stress) {
      stress = 2.0 * l[e * nq + k].apply(gu);
      return 0.0;
    });
  };
  std::vector<double> b;
  const std::vector<double> zero(static_cast<std::size_t>(grid.node_count()) * n, 0.0);
  grid.assemble(zero, &b, [&](int e, int k, const Mat&, Mat& stress) {
    stress = -2.0 * l[e * nq + k].apply(g);
    return 0.0;
  });

  std::vector<double> diag(zero.size(), 0.0);
  for (int e = 0; e < grid.element_count(); ++e) {
    const auto nodes = grid.element_nodes(e);
    for (int k = 0; k < nq; ++k) {
      const SymTensor4& lk = l[e * nq + k];
      for (int a = 0; a < grid.nodes_per_element(); ++a)
        for (int i = 0; i < n; ++i) {
          double s = 0;
          for (int j = 0; j < n; ++j)
            for (int m = 0; m < n; ++m) s += lk.at(i, j, i, m) * grid.shape_grad(k, a, j) * grid.shape_grad(k, a, m);
          diag[n * nodes[a] + i] += 2.0 * grid.quad_weight() * s;
        }
    }
  }
  Projector project = [&](std::vector<double>& x) {
    Field f{grid, std::move(x)};
    f = project_mean_zero(std::move(f));
    x = std::move(f.values);
  };
  CgOptions opt;
  opt.tol = tol;
  opt.max_iter = std::max(20000, 20 * static_cast<int>(zero.size()));
  const CgResult cg = conjugate_gradient(apply, b, {}, diag, project, opt);

  CellResult res;
  res.corrector = Field{grid, cg.x};
  res.energy = quadratic_average(l, grid, g, res.corrector);
  res.converged = cg.converged;
  res.iterations = cg.iterations;
  double bnorm = 0;
  for (double v : b) bnorm += v * v;
  res.grad_norm = bnorm > 0 ? cg.residual / std::sqrt(bnorm) : cg.residual;
  res.start_label = "zero";
  res.status = "converged";
  return res;
}

HomTensor homogenized_tensor(const QuadraticField& q, const Grid& grid, double tol) {
  const int n = grid.dim(), n2 = n * n;
  const std::vector<SymTensor4> l = sample_tensors(q, grid);
  HomTensor out;
  out.l_hom = SymTensor4(n);
  for (int a = 0; a < n2; ++a) out.correctors.push_back(solve_linear_cell(q, Mat::unit(n, a / n, a % n), grid, tol).corrector);
  for (int a = 0; a < n2; ++a)
    for (int b = a; b < n2; ++b) {
      const Mat ea = Mat::unit(n, a / n, a % n), eb = Mat::unit(n, b / n, b % n);
      const double v = quadratic_average(l, grid, ea, out.correctors[a], &out.correctors[b], &eb);
      out.l_hom(a, b) = v;
      out.l_hom(b, a) = v;
    }
  return out;
}

CellEnergy::CellEnergy(const Density& w, const Mat& f, const Grid& grid, double energy_scale, bool det_barrier)
    : w_(w), f_(f), grid_(grid), scale_(energy_scale > 0 ? energy_scale : 1.0 / grid.measure()) {
  require(w.dim() == grid.dim() && f.dim() == grid.dim(), "density, matrix and grid dimensions differ");
  require(f.all_finite(), "macroscopic gradient has non-finite entries");
  material_.reserve(grid.quad_count());
  for (int e = 0; e < grid.element_count(); ++e)
    for (int q = 0; q < grid.quad_per_element(); ++q) material_.push_back(w.material_at(grid.quad_point(e, q)));
  barrier_ = det_barrier && w.base() == BaseKind::dist2;
}

template <bool WithGrad>
double CellEnergy::eval(std::span<const double> u, std::vector<double>* grad) const {
  if (u.size() != static_cast<std::size_t>(grid_.node_count()) * grid_.dim())
    throw LengthMismatch("cell energy: field size does not match grid");
  const int nq = grid_.quad_per_element();
  const Mat s = w_.prestrain();
  bool infeasible = false;
  const double e = grid_.assemble(u, WithGrad ? grad : nullptr, [&](int el, int q, const Mat& gu, Mat& stress) {
    const MaterialPoint& mp = material_[el * nq + q];
    if (mp.weight == 0.0 || infeasible) {
      if constexpr (WithGrad) stress = Mat::zero(gu.dim());
      return 0.0;
    }
    const Mat f = f_ + gu;
    if (barrier_ && det(mp.prestressed ? f * s : f) <= 1e-8) {
      infeasible = true;
      if constexpr (WithGrad) stress = Mat::zero(gu.dim());
      return 0.0;
    }
    if constexpr (WithGrad)
      return w_.energy_and_stress(mp, f, stress);
    else
      return w_.energy(mp, f);
  });
  if (infeasible) return kInf;
  if constexpr (WithGrad)
    for (double& v : *grad) v *= scale_;
  return scale_ * e;
}

double CellEnergy::operator()(std::span<const double> u, std::vector<double>& grad) const {
  return eval<true>(u, &grad);
}

double CellEnergy::value(std::span<const double> u) const { return eval<false>(u, nullptr); }

double CellEnergy::min_det(std::span<const double> u) const {
  const int nq = grid_.quad_per_element();
  const Mat s = w_.prestrain();
  double m = kInf;
  grid_.assemble(u, nullptr, [&](int el, int q, const Mat& gu, Mat&) {
    const MaterialPoint& mp = material_[el * nq + q];
    if (mp.weight != 0.0) {
      const Mat f = f_ + gu;
      m = std::min(m, det(mp.prestressed ? f * s : f));
    }
    return 0.0;
  });
  return m;
}

double CellEnergy::grad_scale() const { return scale_ * std::pow(grid_.spacing(), grid_.dim() - 1); }

CellResult minimize_cell(const CellEnergy& energy, const StartSet& starts, const NonlinearOptions& options) {
  require(!starts.empty(), "start set is empty");
  for (const Start& s : starts)
    if (!(s.field.grid == energy.grid())) throw InvalidArgument("start '" + s.label + "' lives on a different grid");
  LbfgsOptions lo;
  lo.memory = options.memory;
  lo.max_iter = options.max_iter;
  lo.grad_tol = options.tol;
  lo.grad_scale = energy.grad_scale();
  if (energy.has_barrier()) lo.margin = [&energy](std::span<const double> x) { return energy.min_det(x); };
  const Objective obj = [&energy](std::span<const double> x, std::vector<double>& g) { return energy(x, g); };
  const auto runs = parallel_map(static_cast<int>(starts.size()), options.threads,
                                 [&](int i) { return lbfgs(obj, starts[i].field.values, lo); });
  int best = -1;
  for (int i = 0; i < static_cast<int>(runs.size()); ++i) {
    if (!std::isfinite(runs[i].f)) continue;
    if (best < 0 || runs[i].f < runs[best].f - 1e-12) best = i;
  }
  if (best < 0) throw AllStartsFailed("no start produced a finite energy");
  const LbfgsResult& r = runs[best];
  CellResult res;
  res.energy = r.f;
  res.corrector = Field{energy.grid(), r.x};
  if (energy.grid().fully_periodic()) res.corrector = project_mean_zero(std::move(res.corrector));
  res.converged = r.converged;
  res.iterations = r.iterations;
  res.grad_norm = r.grad_norm;
  res.start_label = starts[best].label;
  res.status = r.status;
  res.min_det = energy.min_det(res.corrector.values);
  return res;
}

CellResult solve_nonlinear_cell(const Density& w, const Mat& f, const Grid& grid, const StartSet& starts,
                                const NonlinearOptions& options) {
  require_periodic_cell(grid);
  return minimize_cell(CellEnergy(w, f, grid, 0.0, options.det_barrier), starts, options);
}

PeriodicCurve::PeriodicCurve(double shortening) {
  require(shortening > 0.0 && shortening <= 1.0, "curve shortening ratio must lie in (0, 1]");
  // J0 decreases on [0, 2.4048].
  double lo = 0.0, hi = 2.404825557695773;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::cyl_bessel_j(0.0, mid) > shortening ? lo : hi) = mid;
  }
  amplitude_ = 0.5 * (lo + hi);
  for (int m = 0; m < kTerms; ++m) bessel_[m] = std::cyl_bessel_j(static_cast<double>(m), amplitude_);
}

void PeriodicCurve::eval(double t, double& x, double& y, double& angle) const {
  const double w = 2.0 * M_PI;
  const double m0 = std::floor(t);
  t -= m0;
  x = bessel_[0] * (t + m0);
  y = 0.0;
  for (int m = 1; m < kTerms; ++m) {
    if (m % 2 == 0)
      x += 2.0 * bessel_[m] * std::sin(m * w * t) / (m * w);
    else
      y += 2.0 * bessel_[m] * (1.0 - std::cos(m * w * t)) / (m * w);
  }
  angle = amplitude_ * std::sin(w * t);
}

Field bending_ansatz(double delta, int k, const Grid& grid) {
  if (!(delta >= 0.0 && delta < 0.5)) throw InvalidDelta("bending ansatz needs 0 <= delta < 1/2");
  require(grid.dim() == 2 && grid.fully_periodic(), "bending ansatz needs a periodic 2D grid");
  require(k >= 1 && std::abs(grid.elements(0) * grid.spacing() - k) < 1e-12, "grid does not span kY");
  Field out = Field::zeros(grid);
  if (delta == 0.0) return out;
  const PeriodicCurve curve(1.0 - delta);
  for (int node = 0; node < grid.node_count(); ++node) {
    const Point p = grid.node_position(node);
    double x, y, phi;
    curve.eval(p[0] / k, x, y, phi);
    const double f2 = frac(p[1]);
    const double tent = f2 < 0.5 ? f2 : 1.0 - f2;
    out.at(node, 0) = k * x - (1.0 - delta) * p[0] - tent * std::sin(phi);
    out.at(node, 1) = k * y + tent * (std::cos(phi) - 1.0);
  }
  return project_mean_zero(std::move(out));
}

Field random_field(const Grid& grid, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-amplitude, amplitude);
  Field f = Field::zeros(grid);
  for (double& v : f.values) v = ud(rng);
  return project_mean_zero(std::move(f));
}

StartSet default_starts(const Mat& f, const Grid& grid, std::uint64_t seed) {
  StartSet starts;
  starts.push_back({"zero", Field::zeros(grid)});
  if (grid.dim() == 2 && grid.fully_periodic()) {
    const double delta = 1.0 - f(0, 0);
    Mat fd = Mat::identity(2);
    fd(0, 0) = 1.0 - delta;
    const int k = static_cast<int>(std::lround(grid.elements(0) * grid.spacing()));
    if (delta > 0 && delta < 0.5 && norm(f - fd) < 1e-14 && std::abs(grid.elements(0) * grid.spacing() - k) < 1e-12) {
      const Field b = bending_ansatz(delta, k, grid);
      const Field r = random_field(grid, 0.01, seed + 100);
      Field plus = b, minus = b;
      for (std::size_t i = 0; i < b.values.size(); ++i) {
        plus.values[i] += r.values[i];
        minus.values[i] -= r.values[i];
      }
      starts.push_back({"bending", b});
      starts.push_back({"bending+", std::move(plus)});
      starts.push_back({"bending-", std::move(minus)});
    }
  }
  for (int i = 0; i < 3; ++i) starts.push_back({"random" + std::to_string(i), random_field(grid, 0.01, seed + i)});
  return starts;
}

std::vector<KhomPoint> khom_curve(const Density& w, const Mat& f, const std::vector<int>& k_list, int res,
                                  std::uint64_t seed, const NonlinearOptions& options) {
  require(!k_list.empty() && std::is_sorted(k_list.begin(), k_list.end()) && k_list.front() >= 1,
          "k_list must be ascending positive integers");
  std::vector<KhomPoint> out;
  double running = kInf;
  for (int k : k_list) {
    const Grid grid = Grid::periodic_cell(w.dim(), k, res);
    StartSet starts = default_starts(f, grid, seed + 1000 * static_cast<std::uint64_t>(k));
    for (const KhomPoint& prev : out)
      if (k % prev.k == 0 && prev.k < k)
        starts.push_back({"extend_k" + std::to_string(prev.k), extend_periodic(prev.result.corrector, grid)});
    KhomPoint p;
    p.k = k;
    p.result = solve_nonlinear_cell(w, f, grid, starts, options);
    running = std::min(running, p.result.energy);
    p.running_min = running;
    out.push_back(std::move(p));
  }
  return out;
}

double rigidity_ratio(const Field& u, double h) {
  require(h > 0, "rigidity ratio needs h > 0");
  const auto grads = gradient_at_quadrature(u);
  const int n = u.grid.dim();
  double num = 0, den = 0;
  for (const Mat& g : grads) {
    num += dist2_SO(Mat::identity(n) + h * g);
    den += norm_sq(g);
  }
  require(den > 0, "rigidity ratio of a constant field");
  return num / (h * h * den);
}

}  // namespace elhom
