#include "elhom/domain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "elhom/errors.hpp"
#include "elhom/parallel.hpp"

namespace elhom {

namespace {

int eps_inverse(double eps) {
  require(eps > 0 && eps <= 1.0, "eps must lie in (0, 1]");
  const long m = std::lround(1.0 / eps);
  require(m >= 1 && std::abs(m * eps - 1.0) < 1e-9, "eps must be 1/m for an integer m");
  return static_cast<int>(m);
}

void check_eps_alignment(const Density& w, const DomainMesh& mesh, double eps) {
  const int m = eps_inverse(eps);
  if (w.microstructure() != Microstructure::homogeneous)
    require(mesh.res % (2 * m) == 0, "mesh res must be a multiple of 2m for eps = 1/m");
}

Point scaled(const Point& x, double eps) { return {x[0] / eps, x[1] / eps, x[2] / eps}; }

// Second derivative of f at Id by central differences, halved.
SymTensor4 formal_hessian(int n, const std::function<double(const Mat&)>& f, double step = 1e-4) {
  SymTensor4 l(n);
  const int n2 = n * n;
  const Mat id = Mat::identity(n);
  for (int a = 0; a < n2; ++a)
    for (int b = a; b < n2; ++b) {
      const Mat ea = step * Mat::unit(n, a / n, a % n), eb = step * Mat::unit(n, b / n, b % n);
      const double d = (f(id + ea + eb) - f(id + ea - eb) - f(id - ea + eb) + f(id - ea - eb)) / (4 * step * step);
      l(a, b) = 0.5 * d;
      l(b, a) = 0.5 * d;
    }
  return l;
}

QuadraticField quadratic_or_formal(const Density& w) {
  if (w.microstructure() != Microstructure::prestressed_perforated || w.phase() == Phase::slab) return quadratic_term(w);
  const int n = w.dim();
  const SymTensor4 plain = formal_hessian(n, [&](const Mat& f) { return w.energy({1.0, false}, f); });
  const SymTensor4 pre = formal_hessian(n, [&](const Mat& f) { return w.energy({1.0, true}, f); });
  QuadraticField q;
  q.dim = n;
  q.sampler = [w, plain, pre](const Point& y) {
    const MaterialPoint mp = w.material_at(y);
    SymTensor4 l = mp.prestressed ? pre : plain;
    l *= mp.weight;
    return l;
  };
  auto largest = [](SymTensor4 l) {
    l *= -1.0;
    return -l.min_eigenvalue();
  };
  q.bound_c = std::max(largest(plain), largest(pre));
  return q;
}

// Degrees of freedom of a domain problem: boundary values and free dofs.
struct Dofs {
  std::vector<double> lift;
  std::vector<int> free;
  std::vector<double> load;
};

std::vector<double> body_load(const Grid& grid, const Load& load) {
  const int n = grid.dim();
  std::vector<double> b(static_cast<std::size_t>(grid.node_count()) * n, 0.0);
  for (int e = 0; e < grid.element_count(); ++e) {
    const auto nodes = grid.element_nodes(e);
    for (int q = 0; q < grid.quad_per_element(); ++q)
      for (int a = 0; a < grid.nodes_per_element(); ++a)
        for (int i = 0; i < n; ++i) b[n * nodes[a] + i] += grid.quad_weight() * load.force[i] * grid.shape_value(q, a);
  }
  return b;
}

Dofs make_dofs(const DomainMesh& mesh, const Grid& grid, const Load& load) {
  const int n = grid.dim();
  require(load.g.dim() == n, "load gradient has the wrong dimension");
  Dofs d;
  d.lift.assign(static_cast<std::size_t>(grid.node_count()) * n, 0.0);
  d.load.assign(d.lift.size(), 0.0);
  if (load.kind == LoadKind::affine_lift) {
    for (int i = 0; i < n; ++i)
      for (int j = 1; j < n; ++j)
        if (load.g(i, j) != 0.0) throw UnsupportedLoad("affine lift G x must vanish on gamma (G e_j = 0 for j > 1)");
  }
  for (int node = 0; node < grid.node_count(); ++node) {
    const Point x = grid.node_position(node);
    const bool fixed = load.kind == LoadKind::affine_lift ? mesh.on_boundary(grid, node) : mesh.on_gamma(grid, node);
    for (int i = 0; i < n; ++i) {
      if (load.kind == LoadKind::affine_lift) {
        double v = 0;
        for (int j = 0; j < n; ++j) v += load.g(i, j) * x[j];
        d.lift[n * node + i] = v;
      }
      if (!fixed) d.free.push_back(n * node + i);
    }
  }
  if (load.kind == LoadKind::body_force) d.load = body_load(grid, load);
  return d;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Pointwise integrand for the nonlinear functionals: energy and dW/dF at F.
using PointEnergy = std::function<double(int quad, const Mat& f, Mat& stress)>;
// Quadratic integrand tensor at each quadrature point.
using PointTensor = std::function<const SymTensor4&(int quad)>;

double nonlinear_value(const Grid& grid, std::span<const double> u, std::vector<double>* grad, const PointEnergy& pe,
                       double h) {
  const int n = grid.dim(), nq = grid.quad_per_element();
  const Mat id = Mat::identity(n);
  return grid.assemble(u, grad, [&](int e, int q, const Mat& gu, Mat& stress) {
    Mat p(n);
    const double w = pe(e * nq + q, id + h * gu, p);
    stress = (1.0 / h) * p;
    return w / (h * h);
  });
}

double quadratic_value(const Grid& grid, std::span<const double> u, std::vector<double>* grad, const PointTensor& pt) {
  const int nq = grid.quad_per_element();
  return grid.assemble(u, grad, [&](int e, int q, const Mat& gu, Mat& stress) {
    const SymTensor4& l = pt(e * nq + q);
    stress = 2.0 * l.apply(gu);
    return quad_value(l, gu);
  });
}

std::vector<SymTensor4> tensors_at_quadrature(const Grid& grid, const std::function<SymTensor4(const Point&)>& f) {
  std::vector<SymTensor4> out;
  out.reserve(grid.quad_count());
  for (int e = 0; e < grid.element_count(); ++e)
    for (int q = 0; q < grid.quad_per_element(); ++q) out.push_back(f(grid.quad_point(e, q)));
  return out;
}

DomainResult solve_nonlinear(const Grid& grid, const Dofs& dofs, const PointEnergy& pe, double h,
                             const NonlinearOptions& options) {
  const std::size_t nf = dofs.free.size();
  std::vector<double> x0(nf);
  for (std::size_t i = 0; i < nf; ++i) x0[i] = dofs.lift[dofs.free[i]];
  std::vector<double> full = dofs.lift, gfull;
  const Objective obj = [&](std::span<const double> x, std::vector<double>& g) {
    for (std::size_t i = 0; i < nf; ++i) full[dofs.free[i]] = x[i];
    double f = nonlinear_value(grid, full, &gfull, pe, h) - dot(dofs.load, full);
    g.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) g[i] = gfull[dofs.free[i]] - dofs.load[dofs.free[i]];
    return f;
  };
  LbfgsOptions lo;
  lo.memory = options.memory;
  lo.max_iter = options.max_iter;
  lo.grad_tol = options.tol;
  lo.grad_scale = std::pow(grid.spacing(), grid.dim() - 1);
  const LbfgsResult r = lbfgs(obj, x0, lo);
  DomainResult out;
  out.field = Field{grid, dofs.lift};
  for (std::size_t i = 0; i < nf; ++i) out.field.values[dofs.free[i]] = r.x[i];
  out.energy = r.f;
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.status = r.status;
  return out;
}

DomainResult solve_quadratic(const Grid& grid, const Dofs& dofs, const PointTensor& pt, double tol) {
  const int n = grid.dim();
  const std::size_t nf = dofs.free.size();
  std::vector<double> full(dofs.lift.size()), y;
  const LinearOperator apply = [&](std::span<const double> x, std::vector<double>& out) {
    std::fill(full.begin(), full.end(), 0.0);
    for (std::size_t i = 0; i < nf; ++i) full[dofs.free[i]] = x[i];
    quadratic_value(grid, full, &y, pt);
    out.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) out[i] = y[dofs.free[i]];
  };
  // Boundary values enter through the right-hand side.
  std::vector<double> bvals = dofs.lift;
  std::vector<bool> is_free(bvals.size(), false);
  for (int i : dofs.free) is_free[i] = true;
  for (std::size_t i = 0; i < bvals.size(); ++i)
    if (is_free[i]) bvals[i] = 0.0;
  quadratic_value(grid, bvals, &y, pt);
  std::vector<double> b(nf), x0(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    b[i] = dofs.load[dofs.free[i]] - y[dofs.free[i]];
    x0[i] = dofs.lift[dofs.free[i]];
  }

  std::vector<double> diag_full(bvals.size(), 0.0);
  const int nq = grid.quad_per_element();
  for (int e = 0; e < grid.element_count(); ++e) {
    const auto nodes = grid.element_nodes(e);
    for (int q = 0; q < nq; ++q) {
      const SymTensor4& l = pt(e * nq + q);
      for (int a = 0; a < grid.nodes_per_element(); ++a)
        for (int i = 0; i < n; ++i) {
          double s = 0;
          for (int j = 0; j < n; ++j)
            for (int m = 0; m < n; ++m) s += l.at(i, j, i, m) * grid.shape_grad(q, a, j) * grid.shape_grad(q, a, m);
          diag_full[n * nodes[a] + i] += 2.0 * grid.quad_weight() * s;
        }
    }
  }
  std::vector<double> diag(nf);
  for (std::size_t i = 0; i < nf; ++i) diag[i] = diag_full[dofs.free[i]];

  CgOptions co;
  co.tol = tol;
  co.max_iter = std::max(20000, 20 * static_cast<int>(nf));
  const CgResult cg = conjugate_gradient(apply, b, x0, diag, nullptr, co);
  DomainResult out;
  out.field = Field{grid, bvals};
  for (std::size_t i = 0; i < nf; ++i) out.field.values[dofs.free[i]] = cg.x[i];
  out.energy = quadratic_value(grid, out.field.values, nullptr, pt) - dot(dofs.load, out.field.values);
  out.converged = cg.converged;
  out.iterations = cg.iterations;
  out.status = cg.converged ? "converged" : "max_iter";
  return out;
}

// Monomial exponents of total degree <= 3 in d variables.
std::vector<std::array<int, 6>> monomials(int d) {
  std::vector<std::array<int, 6>> out;
  std::array<int, 6> e{};
  std::function<void(int, int)> rec = [&](int var, int left) {
    if (var == d) {
      out.push_back(e);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[var] = p;
      rec(var + 1, left - p);
    }
    e[var] = 0;
  };
  rec(0, 3);
  return out;
}

// Green strain components: (11, 22, 12) in 2D, (11, 22, 33, 23, 13, 12) in 3D.
const int kVoigt2[3][2] = {{0, 0}, {1, 1}, {0, 1}};
const int kVoigt3[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};

int voigt_size(int n) { return n == 2 ? 3 : 6; }
const int* voigt(int n, int c) { return n == 2 ? kVoigt2[c] : kVoigt3[c]; }

}  // namespace

Grid DomainMesh::grid() const {
  require(dim == 2 || dim == 3, "domain dimension must be 2 or 3");
  require(res >= 2, "domain res must be at least 2");
  std::array<int, kMaxDim> el{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    const double cells = lengths[a] * res;
    require(lengths[a] > 0 && std::abs(cells - std::round(cells)) < 1e-9 && std::round(cells) >= 2,
            "domain lengths must be multiples of 1/res with at least two elements");
    el[a] = static_cast<int>(std::lround(cells));
  }
  return Grid(dim, el, {false, false, false}, 1.0 / res);
}

bool DomainMesh::on_gamma(const Grid& grid, int node) const { return grid.node_coords(node)[0] == 0; }

bool DomainMesh::on_boundary(const Grid& grid, int node) const {
  const auto c = grid.node_coords(node);
  for (int a = 0; a < grid.dim(); ++a)
    if (c[a] == 0 || c[a] == grid.nodes(a) - 1) return true;
  return false;
}

Load Load::lift(const Mat& g) {
  Load l;
  l.kind = LoadKind::affine_lift;
  l.g = g;
  return l;
}

Load Load::body(std::array<double, kMaxDim> f) {
  Load l;
  l.kind = LoadKind::body_force;
  l.force = f;
  return l;
}

Load Load::default_lift(int dim) { return lift(0.05 * Mat::unit(dim, 0, 0)); }

double Load::magnitude() const {
  if (kind == LoadKind::affine_lift) return norm(g);
  return std::sqrt(force[0] * force[0] + force[1] * force[1] + force[2] * force[2]);
}

std::string Load::describe() const {
  std::ostringstream os;
  if (kind == LoadKind::affine_lift) {
    os << "affine_lift(";
    for (int i = 0; i < g.dim(); ++i)
      for (int j = 0; j < g.dim(); ++j) os << (i + j ? "," : "") << g(i, j);
  } else {
    os << "body_force(" << force[0] << "," << force[1] << "," << force[2];
  }
  os << ")";
  return os.str();
}

std::string to_string(Functional f) {
  switch (f) {
    case Functional::eps_h:
      return "eps_h";
    case Functional::lin_eps:
      return "lin_eps";
    case Functional::h_hom:
      return "h_hom";
    default:
      return "zero";
  }
}

HomSurrogate HomSurrogate::passthrough(const Density& w) {
  require(w.microstructure() == Microstructure::homogeneous, "passthrough surrogate needs a homogeneous density");
  HomSurrogate s;
  s.passthrough_ = true;
  s.w_ = w;
  s.dim_ = w.dim();
  return s;
}

HomSurrogate HomSurrogate::fit(const Density& w, double radius, int cell_res, const std::vector<int>& k_list,
                               const NonlinearOptions& options, std::uint64_t seed) {
  require(radius > 0 && radius < 0.25, "surrogate radius must lie in (0, 1/4)");
  require(!k_list.empty(), "surrogate k_list is empty");
  HomSurrogate s;
  s.passthrough_ = false;
  s.w_ = w;
  s.dim_ = w.dim();
  s.radius_ = radius;
  const int n = w.dim(), d = voigt_size(n);
  s.exponents_ = monomials(d);
  const int nc = static_cast<int>(s.exponents_.size());
  const int m = 3 * nc;
  s.samples_ = m;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<std::array<double, 6>> z(m);
  for (int i = 1; i < m; ++i) {
    double r2 = 0;
    for (int c = 0; c < d; ++c) {
      z[i][c] = nd(rng);
      r2 += z[i][c] * z[i][c];
    }
    // Radii uniform in (0, 1] so that small strains are well represented.
    const double scale = ud(rng) / std::sqrt(r2);
    for (int c = 0; c < d; ++c) z[i][c] *= scale;
  }
  const auto values = parallel_map(m, options.threads, [&](int i) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < d; ++k) {
      const int* ij = voigt(n, k);
      c(ij[0], ij[1]) += 2.0 * radius * z[i][k];
      if (ij[0] != ij[1]) c(ij[1], ij[0]) += 2.0 * radius * z[i][k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    const Eigen::MatrixXd u = es.operatorSqrt();
    Mat f(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) f(a, b) = u(a, b);
    NonlinearOptions inner = options;
    inner.threads = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int k : k_list) {
      const Grid grid = Grid::periodic_cell(n, k, cell_res);
      best = std::min(best, solve_nonlinear_cell(w, f, grid, default_starts(f, grid, seed + i), inner).energy);
    }
    return best;
  });
  // Rows weighted towards relative accuracy: I_h_hom divides by h^2.
  Eigen::MatrixXd a(m, nc);
  Eigen::VectorXd y(m), wt(m);
  for (int i = 0; i < m; ++i) {
    double r2 = 0;
    for (int k = 0; k < d; ++k) r2 += z[i][k] * z[i][k];
    wt(i) = 1.0 / (r2 + 1e-2);
    for (int c = 0; c < nc; ++c) {
      double v = 1;
      for (int k = 0; k < d; ++k) v *= std::pow(z[i][k], s.exponents_[c][k]);
      a(i, c) = v;
    }
    y(i) = values[i];
  }
  const Eigen::VectorXd coef = (wt.asDiagonal() * a).colPivHouseholderQr().solve(wt.asDiagonal() * y);
  s.coeff_.assign(coef.data(), coef.data() + nc);
  s.fit_error_ = (a * coef - y).cwiseAbs().maxCoeff();
  return s;
}

double HomSurrogate::energy(const Mat& f) const {
  Mat stress(f.dim());
  return energy_and_stress(f, stress);
}

double HomSurrogate::energy_and_stress(const Mat& f, Mat& stress) const {
  if (passthrough_) return w_.energy_and_stress({1.0, false}, f, stress);
  const int n = dim_, d = voigt_size(n);
  const Mat e = 0.5 * (transpose(f) * f - Mat::identity(n));
  std::array<double, 6> z{};
  for (int c = 0; c < d; ++c) {
    const int* ij = voigt(n, c);
    z[c] = e(ij[0], ij[1]) / radius_;
  }
  double val = 0;
  std::array<double, 6> dz{};
  for (std::size_t m = 0; m < coeff_.size(); ++m) {
    const auto& ex = exponents_[m];
    double mono = 1;
    for (int c = 0; c < d; ++c) mono *= std::pow(z[c], ex[c]);
    val += coeff_[m] * mono;
    for (int c = 0; c < d; ++c) {
      if (ex[c] == 0) continue;
      double part = ex[c] * std::pow(z[c], ex[c] - 1);
      for (int o = 0; o < d; ++o)
        if (o != c) part *= std::pow(z[o], ex[o]);
      dz[c] += coeff_[m] * part;
    }
  }
  Mat s(n);
  for (int c = 0; c < d; ++c) {
    const int* ij = voigt(n, c);
    const double g = dz[c] / radius_;
    if (ij[0] == ij[1]) {
      s(ij[0], ij[0]) = g;
    } else {
      s(ij[0], ij[1]) = 0.5 * g;
      s(ij[1], ij[0]) = 0.5 * g;
    }
  }
  stress = f * s;
  return val;
}

FunctionalData prepare_functionals(const Density& w, int cell_res, double surrogate_radius,
                                   const NonlinearOptions& options, std::uint64_t seed) {
  FunctionalData d;
  d.w = w;
  d.q = quadratic_or_formal(w);
  if (w.microstructure() == Microstructure::homogeneous) {
    d.l_hom = d.q(Point{0, 0, 0});
    d.surrogate = HomSurrogate::passthrough(w);
  } else {
    d.l_hom = homogenized_tensor(d.q, Grid::periodic_cell(w.dim(), 1, cell_res)).l_hom;
    d.surrogate = HomSurrogate::fit(w, surrogate_radius, cell_res, {1}, options, seed);
  }
  return d;
}

DomainResult minimize_functional(Functional which, const FunctionalData& data, const DomainMesh& mesh,
                                 const Load& load, double eps, double h, const NonlinearOptions& options) {
  require(mesh.dim == data.w.dim(), "mesh and density dimensions differ");
  const Grid grid = mesh.grid();
  const Dofs dofs = make_dofs(mesh, grid, load);
  switch (which) {
    case Functional::eps_h: {
      require(h > 0, "h must be positive");
      check_eps_alignment(data.w, mesh, eps);
      std::vector<MaterialPoint> mp;
      for (int e = 0; e < grid.element_count(); ++e)
        for (int q = 0; q < grid.quad_per_element(); ++q) mp.push_back(data.w.material_at(scaled(grid.quad_point(e, q), eps)));
      const PointEnergy pe = [&](int i, const Mat& f, Mat& stress) { return data.w.energy_and_stress(mp[i], f, stress); };
      return solve_nonlinear(grid, dofs, pe, h, options);
    }
    case Functional::lin_eps: {
      check_eps_alignment(data.w, mesh, eps);
      const auto l = tensors_at_quadrature(grid, [&](const Point& x) { return data.q(scaled(x, eps)); });
      return solve_quadratic(grid, dofs, [&](int i) -> const SymTensor4& { return l[i]; }, options.tol);
    }
    case Functional::h_hom: {
      require(h > 0, "h must be positive");
      const PointEnergy pe = [&](int, const Mat& f, Mat& stress) { return data.surrogate.energy_and_stress(f, stress); };
      return solve_nonlinear(grid, dofs, pe, h, options);
    }
    default:
      return solve_quadratic(grid, dofs, [&](int) -> const SymTensor4& { return data.l_hom; }, options.tol);
  }
}

double functional_value(Functional which, const FunctionalData& data, const Field& v, const Load& load, double eps,
                        double h) {
  const Grid& grid = v.grid;
  const double work = load.kind == LoadKind::body_force ? dot(body_load(grid, load), v.values) : 0.0;
  const int nq = grid.quad_per_element();
  switch (which) {
    case Functional::eps_h:
      return nonlinear_value(grid, v.values, nullptr, [&](int i, const Mat& f, Mat& stress) {
               return data.w.energy_and_stress(data.w.material_at(scaled(grid.quad_point(i / nq, i % nq), eps)), f, stress);
             }, h) - work;
    case Functional::lin_eps: {
      const auto l = tensors_at_quadrature(grid, [&](const Point& x) { return data.q(scaled(x, eps)); });
      return quadratic_value(grid, v.values, nullptr, [&](int i) -> const SymTensor4& { return l[i]; }) - work;
    }
    case Functional::h_hom:
      return nonlinear_value(grid, v.values, nullptr, [&](int, const Mat& f, Mat& stress) {
               return data.surrogate.energy_and_stress(f, stress);
             }, h) - work;
    default:
      return quadratic_value(grid, v.values, nullptr, [&](int) -> const SymTensor4& { return data.l_hom; }) - work;
  }
}

double richardson(const std::vector<double>& x, const std::vector<double>& values) {
  require(!x.empty() && x.size() == values.size(), "richardson needs matching non-empty lists");
  const std::size_t m = x.size();
  if (m == 1) return values[0];
  const double x1 = x[m - 2], x2 = x[m - 1];
  require(x1 != x2, "richardson needs distinct abscissae");
  return (x1 * values[m - 1] - x2 * values[m - 2]) / (x1 - x2);
}

DiagramReport diagram_probe(const Density& w, const Load& load, const std::vector<double>& eps_list,
                            const std::vector<double>& h_list, const DomainMesh& mesh, const DiagramOptions& options) {
  require(!eps_list.empty() && !h_list.empty(), "eps_list and h_list must be non-empty");
  require(std::is_sorted(eps_list.rbegin(), eps_list.rend()) && std::is_sorted(h_list.rbegin(), h_list.rend()),
          "eps_list and h_list must be decreasing");
  for (double e : eps_list) check_eps_alignment(w, mesh, e);
  auto radius = [&](double h) { return std::min(0.2, options.surrogate_factor * h * std::max(load.magnitude(), 1e-3)); };
  const FunctionalData data = prepare_functionals(w, options.cell_res, radius(h_list.front()), options.solver, options.seed);
  // One surrogate per h, fitted on strains of the size that h produces.
  std::vector<FunctionalData> per_h(h_list.size(), data);
  if (!data.surrogate.is_passthrough())
    for (std::size_t i = 1; i < h_list.size(); ++i)
      per_h[i].surrogate = HomSurrogate::fit(w, radius(h_list[i]), options.cell_res, {1}, options.solver, options.seed);

  struct Task {
    Functional f;
    double eps, h;
  };
  std::vector<Task> tasks;
  for (double e : eps_list)
    for (double h : h_list) tasks.push_back({Functional::eps_h, e, h});
  for (double e : eps_list) tasks.push_back({Functional::lin_eps, e, 0.0});
  for (double h : h_list) tasks.push_back({Functional::h_hom, 0.0, h});
  tasks.push_back({Functional::zero, 0.0, 0.0});
  NonlinearOptions inner = options.solver;
  inner.threads = 1;
  const auto results = parallel_map(static_cast<int>(tasks.size()), options.solver.threads, [&](int i) {
    const Task& t = tasks[i];
    const FunctionalData& d =
        t.f == Functional::h_hom ? per_h[std::find(h_list.begin(), h_list.end(), t.h) - h_list.begin()] : data;
    return minimize_functional(t.f, d, mesh, load, t.eps > 0 ? t.eps : 1.0, t.h, inner);
  });

  DiagramReport r;
  r.eps_list = eps_list;
  r.h_list = h_list;
  for (const FunctionalData& d : per_h) r.surrogate_fit_error = std::max(r.surrogate_fit_error, d.surrogate.fit_error());
  std::vector<double> lin, hom;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    r.rows.push_back({to_string(tasks[i].f), tasks[i].eps, tasks[i].h, results[i].energy, results[i].converged});
    if (tasks[i].f == Functional::lin_eps) lin.push_back(results[i].energy);
    if (tasks[i].f == Functional::h_hom) hom.push_back(results[i].energy);
    if (tasks[i].f == Functional::zero) r.i0 = results[i].energy;
  }
  r.limit_13 = richardson(eps_list, lin);
  r.limit_24 = richardson(h_list, hom);
  r.defect = std::abs(r.limit_13 - r.limit_24);
  const double scale = std::max({std::abs(r.limit_13), std::abs(r.limit_24), 1e-300});
  r.relative_defect = r.defect / scale;
  auto monotone = [](const std::vector<double>& v) {
    bool up = true, down = true;
    for (std::size_t i = 1; i < v.size(); ++i) {
      up = up && v[i] >= v[i - 1] - 1e-14;
      down = down && v[i] <= v[i - 1] + 1e-14;
    }
    return up || down;
  };
  r.monotone_13 = monotone(lin);
  r.monotone_24 = monotone(hom);
  return r;
}

double gamma_seminorm(const Mat& f, const DomainMesh& mesh) {
  const Grid grid = mesh.grid();
  const int n = grid.dim();
  require(f.dim() == n, "matrix and mesh dimensions differ");
  const double hs = grid.spacing();
  const double gl = 0.5 * (1.0 - 0.57735026918962576451), gh = 0.5 * (1.0 + 0.57735026918962576451);
  std::vector<Point> pts;
  std::vector<double> wts;
  const int n2 = grid.elements(1), n3 = n == 3 ? grid.elements(2) : 1;
  for (int j = 0; j < n2; ++j)
    for (int k = 0; k < n3; ++k)
      for (int q = 0; q < (n == 3 ? 4 : 2); ++q) {
        const double t2 = (j + ((q & 1) ? gh : gl)) * hs;
        const double t3 = n == 3 ? (k + ((q & 2) ? gh : gl)) * hs : 0.0;
        pts.push_back({0.0, t2, t3});
        wts.push_back(n == 3 ? hs * hs / 4 : hs / 2);
      }
  std::array<double, kMaxDim> b{0, 0, 0};
  double wsum = 0;
  std::vector<std::array<double, kMaxDim>> fx(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    for (int i = 0; i < n; ++i) {
      double v = 0;
      for (int j = 0; j < n; ++j) v += f(i, j) * pts[p][j];
      fx[p][i] = v;
      b[i] += wts[p] * v;
    }
    wsum += wts[p];
  }
  for (int i = 0; i < n; ++i) b[i] /= wsum;
  double s = 0;
  for (std::size_t p = 0; p < pts.size(); ++p)
    for (int i = 0; i < n; ++i) s += wts[p] * (fx[p][i] - b[i]) * (fx[p][i] - b[i]);
  return s;
}

EquicoercivityReport equicoercivity_probe(const Density& w, const DomainMesh& mesh, const std::vector<double>& h_list,
                                          int sample_count, std::uint64_t seed, double eps) {
  require(sample_count >= 1 && !h_list.empty(), "equicoercivity probe needs samples and h values");
  check_eps_alignment(w, mesh, eps);
  const Grid grid = mesh.grid();
  const int n = grid.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Field> fields;
  for (int s = 0; s < sample_count; ++s) {
    // v_c = x1 sum a cos(p pi x1) cos(q pi x2) cos(r pi x3) over low modes.
    std::vector<double> a(static_cast<std::size_t>(n) * 27);
    for (double& v : a) v = nd(rng);
    Field f = Field::zeros(grid);
    for (int node = 0; node < grid.node_count(); ++node) {
      const Point x = grid.node_position(node);
      for (int c = 0; c < n; ++c) {
        double v = 0;
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q)
            for (int r = 0; r < (n == 3 ? 3 : 1); ++r)
              v += a[27 * c + 9 * p + 3 * q + r] * std::cos(p * M_PI * x[0]) * std::cos(q * M_PI * x[1]) *
                   std::cos(r * M_PI * x[2]);
        f.at(node, c) = x[0] * v;
      }
    }
    const auto g = gradient_at_quadrature(f);
    double gn = 0;
    for (const Mat& m : g) gn += norm_sq(m);
    gn = std::sqrt(gn * grid.quad_weight());
    for (double& v : f.values) v /= gn;
    fields.push_back(std::move(f));
  }
  FunctionalData data;
  data.w = w;
  EquicoercivityReport r;
  r.h_list = h_list;
  r.sample_count = sample_count;
  r.c1 = std::numeric_limits<double>::infinity();
  for (double h : h_list) {
    require(h > 0, "h values must be positive");
    double inf = std::numeric_limits<double>::infinity();
    for (const Field& f : fields) {
      const auto g = gradient_at_quadrature(f);
      double norm2 = 0;
      int i = 0;
      for (int e = 0; e < grid.element_count(); ++e)
        for (int q = 0; q < grid.quad_per_element(); ++q, ++i) {
          double v2 = 0;
          const auto nodes = grid.element_nodes(e);
          for (int c = 0; c < n; ++c) {
            double v = 0;
            for (int a = 0; a < grid.nodes_per_element(); ++a) v += grid.shape_value(q, a) * f.at(nodes[a], c);
            v2 += v * v;
          }
          norm2 += grid.quad_weight() * (v2 + norm_sq(g[i]));
        }
      const double e = functional_value(Functional::eps_h, data, f, Load::lift(Mat::zero(n)), eps, h);
      inf = std::min(inf, e / norm2);
    }
    r.ratios.push_back(inf);
    r.c1 = std::min(r.c1, inf);
  }
  return r;
}

}  // namespace elhom
