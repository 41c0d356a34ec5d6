#include <cmath>
#include <random>

#include "doctest.h"
#include "elhom/cell.hpp"
#include "elhom/errors.hpp"
#include "oracles.hpp"

using namespace elhom;

namespace {

Mat shear2() { return Mat::from_rows(2, {0, 1, 1, 0}); }

Mat e11(int n) { return Mat::unit(n, 0, 0); }

Mat compression(double delta) {
  Mat f = Mat::identity(2);
  f(0, 0) = 1.0 - delta;
  return f;
}

}  // namespace

TEST_CASE("linear cell with constant Q has zero corrector") {
  const QuadraticField q = QuadraticField::constant(SymTensor4::sym_projector(2));
  const Mat g = Mat::from_rows(2, {0.3, 0.1, -0.4, 0.2});
  const CellResult r = solve_linear_cell(q, g, Grid::periodic_cell(2, 1, 8));
  CHECK(r.converged);
  CHECK(r.energy == doctest::Approx(norm_sq(sym(g))));
  for (double v : r.corrector.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("linear cell: skew G costs nothing") {
  const QuadraticField q = quadratic_term(Density::layered(BaseKind::stvk, 2, 0.2));
  const CellResult r = solve_linear_cell(q, Mat::from_rows(2, {0, 1, -1, 0}), Grid::periodic_cell(2, 1, 8));
  CHECK(std::abs(r.energy) < 1e-14);
}

TEST_CASE("laminate shear matches the 1D reduced oracle") {
  for (double alpha : {0.5, 0.1}) {
    const QuadraticField q = quadratic_term(Density::layered(BaseKind::stvk, 2, alpha));
    const CellResult r = solve_linear_cell(q, shear2(), Grid::periodic_cell(2, 1, 32));
    const double ref = oracle::laminate_energy(q, shear2(), 320);
    CHECK(r.energy == doctest::Approx(ref).epsilon(1e-3));
    // Harmonic mean of the two shear moduli.
    CHECK(ref == doctest::Approx(4 * alpha / (1 + alpha)).epsilon(1e-12));
  }
}

TEST_CASE("homogenized tensor: symmetry, PSD, Voigt bound, laminate oracle") {
  const QuadraticField q = quadratic_term(Density::layered(BaseKind::stvk, 2, 0.5));
  const Grid grid = Grid::periodic_cell(2, 1, 16);
  const HomTensor h = homogenized_tensor(q, grid);
  CHECK(h.l_hom.max_asymmetry() < 1e-10);
  CHECK(h.l_hom.min_eigenvalue() > -1e-10);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  for (int s = 0; s < 10; ++s) {
    const Mat g = Mat::from_rows(2, {nd(rng), nd(rng), nd(rng), nd(rng)});
    const double voigt = 0.5 * (1 + 0.5) * norm_sq(sym(g));
    CHECK(quad_value(h.l_hom, g) <= voigt + 1e-10);
    CHECK(quad_value(h.l_hom, g) == doctest::Approx(oracle::laminate_energy(q, g, 160)).epsilon(1e-8));
  }
  for (int a = 0; a < 4; ++a) {
    const Mat ea = Mat::unit(2, a / 2, a % 2);
    CHECK(quad_value(h.l_hom, ea) == doctest::Approx(solve_linear_cell(q, ea, grid).energy).epsilon(1e-10));
  }
  CHECK(quad_value(h.l_hom, e11(2)) == doctest::Approx(0.75).epsilon(1e-8));
}

TEST_CASE("homogenized tensor of alpha = 1 equals the homogeneous one") {
  const Grid grid = Grid::periodic_cell(2, 1, 8);
  const HomTensor a = homogenized_tensor(quadratic_term(Density::layered(BaseKind::stvk, 2, 1.0)), grid);
  const SymTensor4 p = SymTensor4::sym_projector(2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(a.l_hom(i, j) == doctest::Approx(p(i, j)).scale(1.0));
}

TEST_CASE("linear corrector on 2Y coincides with the Y corrector") {
  const QuadraticField q = quadratic_term(Density::layered(BaseKind::stvk, 2, 0.3));
  const double e1 = solve_linear_cell(q, shear2(), Grid::periodic_cell(2, 1, 8)).energy;
  const double e2 = solve_linear_cell(q, shear2(), Grid::periodic_cell(2, 2, 8)).energy;
  CHECK(e2 == doctest::Approx(e1).epsilon(1e-9));
}

TEST_CASE("discrete Euler-Lagrange orthogonality of the linear corrector") {
  const QuadraticField q = quadratic_term(Density::layered(BaseKind::stvk, 2, 0.25));
  const Grid grid = Grid::periodic_cell(2, 1, 8);
  const Mat g = Mat::from_rows(2, {0.2, 0.7, -0.1, 0.4});
  const CellResult r = solve_linear_cell(q, g, grid, 1e-13);
  const auto gpsi = gradient_at_quadrature(r.corrector);
  for (int s = 0; s < 10; ++s) {
    const Field test = random_field(grid, 1.0, 500 + s);
    const auto gt = gradient_at_quadrature(test);
    double ip = 0;
    for (int e = 0; e < grid.element_count(); ++e)
      for (int k = 0; k < 4; ++k) {
        const int i = 4 * e + k;
        ip += bilinear(q(grid.quad_point(e, k)), gt[i] - gpsi[i], g + gpsi[i]);
      }
    CHECK(std::abs(ip * grid.quad_weight()) < 1e-8);
  }
}

TEST_CASE("nonlinear cell vanishes at the identity and at rotations") {
  NonlinearOptions opt;
  const Grid g2 = Grid::periodic_cell(2, 1, 8);
  for (BaseKind b : {BaseKind::dist2, BaseKind::stvk}) {
    const CellResult r = solve_nonlinear_cell(Density::layered(b, 2, 0.5), Mat::identity(2), g2,
                                              default_starts(Mat::identity(2), g2, 1), opt);
    CHECK(r.energy < 1e-14);
  }
  const double t = 0.7;
  const Mat rot = Mat::from_rows(2, {std::cos(t), -std::sin(t), std::sin(t), std::cos(t)});
  const CellResult r = solve_nonlinear_cell(Density::homogeneous(BaseKind::dist2, 2), rot, g2,
                                            default_starts(rot, g2, 2), opt);
  CHECK(r.energy < 1e-14);
}

TEST_CASE("homogeneous stvk under uniaxial stretch keeps the affine state") {
  const Grid g = Grid::periodic_cell(2, 1, 4);
  for (double h : {0.1, 0.05}) {
    const Mat f = Mat::identity(2) + h * e11(2);
    const CellResult r =
        solve_nonlinear_cell(Density::homogeneous(BaseKind::stvk, 2), f, g, default_starts(f, g, 3), NonlinearOptions{});
    CHECK(r.converged);
    CHECK(r.energy == doctest::Approx(h * h + h * h * h + h * h * h * h / 4).epsilon(1e-10));
  }
}

TEST_CASE("bending ansatz: zero at delta 0, mean zero, near-rotation on the stiff set") {
  const Grid g4 = Grid::periodic_cell(2, 4, 8);
  for (double v : bending_ansatz(0.0, 4, g4).values) CHECK(v == 0.0);
  CHECK_THROWS_AS(bending_ansatz(0.5, 4, g4), InvalidDelta);
  CHECK_THROWS_AS(bending_ansatz(-0.1, 4, g4), InvalidDelta);
  std::vector<double> fitted;
  for (int k : {4, 8}) {
    const Grid g = Grid::periodic_cell(2, k, 8);
    const Field b = bending_ansatz(0.2, k, g);
    CHECK(std::abs(field_mean(b)[0]) < 1e-12);
    const auto gr = gradient_at_quadrature(b);
    double mx = 0;
    for (int e = 0; e < g.element_count(); ++e)
      for (int q = 0; q < 4; ++q) {
        const Point p = g.quad_point(e, q);
        if (p[1] - std::floor(p[1]) < 0.5) mx = std::max(mx, dist2_SO(compression(0.2) + gr[4 * e + q]));
      }
    fitted.push_back(mx * k * k);
  }
  CHECK(fitted[1] == doctest::Approx(fitted[0]).epsilon(0.1));
}

TEST_CASE("bending ansatz energy is bounded by c (k^-2 + alpha) with a stable c") {
  const double alpha = 1e-3;
  const Density w = Density::layered(BaseKind::dist2, 2, alpha);
  std::vector<double> c;
  for (int k : {4, 8, 16}) {
    const Grid g = Grid::periodic_cell(2, k, 4);
    const CellEnergy ce(w, compression(0.2), g);
    c.push_back(ce.value(bending_ansatz(0.2, k, g).values) / (1.0 / (k * k) + alpha));
  }
  for (double v : c) CHECK(v < 1.5 * c[0]);
}

TEST_CASE("multi-cell energy does not exceed the one-cell energy") {
  const Density w = Density::layered(BaseKind::stvk, 2, 0.2);
  const Mat f = Mat::from_rows(2, {0.9, 0.05, 0.02, 1.05});
  const auto curve = khom_curve(w, f, {1, 2}, 4, 9, NonlinearOptions{});
  CHECK(curve[1].result.energy <= curve[0].result.energy + 1e-8);
  CHECK(curve[1].running_min <= curve[0].result.energy);
}

TEST_CASE("buckling lowers the multi-cell energy of a compressed laminate") {
  const Density w = Density::layered(BaseKind::dist2, 2, 1e-3);
  const auto curve = khom_curve(w, compression(0.2), {1, 4}, 4, 5, NonlinearOptions{});
  CHECK(curve[1].result.energy < 0.6 * curve[0].result.energy);
  CHECK(curve[1].result.min_det > 0);
}

TEST_CASE("nonlinear results are bitwise reproducible") {
  const Density w = Density::layered(BaseKind::dist2, 2, 0.1);
  const Mat f = Mat::from_rows(2, {0.95, 0.1, 0, 1.02});
  const Grid g = Grid::periodic_cell(2, 2, 4);
  NonlinearOptions serial, par;
  par.threads = 3;
  const CellResult a = solve_nonlinear_cell(w, f, g, default_starts(f, g, 4), serial);
  const CellResult b = solve_nonlinear_cell(w, f, g, default_starts(f, g, 4), par);
  CHECK(a.energy == b.energy);
  CHECK(a.corrector.values == b.corrector.values);
  CHECK(a.start_label == b.start_label);
}

TEST_CASE("periodic rigidity ratio is bounded below uniformly in k") {
  const Density w = Density::layered(BaseKind::dist2, 2, 0.5);
  const double h = 0.05;
  std::vector<double> ratios;
  for (int k : {1, 2, 4}) {
    const Grid g = Grid::periodic_cell(2, k, 4);
    const Mat f = Mat::identity(2) + h * Mat::from_rows(2, {0.3, 1.0, 0.2, -0.5});
    const CellResult r = solve_nonlinear_cell(w, f, g, default_starts(f, g, 6), NonlinearOptions{});
    Field psi = r.corrector;
    for (double& v : psi.values) v /= h;
    ratios.push_back(rigidity_ratio(psi, h));
  }
  for (double v : ratios) {
    CHECK(v > 0.05);
    CHECK(v < 2 * ratios[0]);
    CHECK(v > 0.5 * ratios[0]);
  }
}
