#include <cmath>

#include "doctest.h"
#include "elhom/analysis.hpp"
#include "elhom/errors.hpp"

using namespace elhom;

namespace {

NonlinearOptions quick() { return NonlinearOptions{}; }

}  // namespace

TEST_CASE("expansion fit recovers exact coefficients") {
  const std::vector<double> h{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> v;
  for (double x : h) v.push_back(0.3 * x + 1.7 * x * x);
  const QuadFit f = fit_expansion(h, v);
  CHECK(f.sigma == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(f.q == doctest::Approx(1.7).epsilon(1e-10));
  CHECK(f.q_se < 1e-8);
  CHECK_THROWS_AS(fit_expansion({0.1, 0.05}, {1, 2}), FitIllConditioned);
  CHECK_THROWS_AS(fit_expansion({0.1, 0.1, 0.05}, {1, 1, 2}), FitIllConditioned);
}

TEST_CASE("homogeneous stvk expansion residual equals h + h^2/4") {
  const auto r = expansion_residuals(Density::homogeneous(BaseKind::stvk, 2), Mat::unit(2, 0, 0), 1, {0.1, 0.05, 0.025},
                                     4, quick());
  CHECK(r.in_class);
  CHECK(r.qhom_value == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t i = 0; i < r.h_list.size(); ++i) {
    const double h = r.h_list[i];
    CHECK(r.residuals[i] == doctest::Approx(h + h * h / 4).epsilon(1e-7));
  }
  CHECK(r.residuals_decreasing());
  for (double d : r.decay_ratios) CHECK(d <= 0.7);
  for (std::size_t i = 1; i < r.upper_slack.size(); ++i) CHECK(r.upper_slack[i] < r.upper_slack[i - 1]);
}

TEST_CASE("skew direction: zero quadratic term and vanishing residual") {
  const Mat w = Mat::from_rows(2, {0, -1, 1, 0});
  const auto r = expansion_residuals(Density::homogeneous(BaseKind::stvk, 2), w, 1, {0.1, 0.05, 0.025}, 4, quick());
  CHECK(std::abs(r.qhom_value) < 1e-12);
  CHECK(r.residuals_decreasing());
  CHECK(r.residuals.back() < 1e-3);
}

TEST_CASE("layered expansion residual decreases and direction is normalized") {
  const auto r = expansion_residuals(Density::layered(BaseKind::stvk, 2, 0.5), 3.0 * Mat::unit(2, 0, 0), 1,
                                     {0.1, 0.05, 0.025}, 8, quick());
  CHECK(norm(r.g) == doctest::Approx(1.0));
  CHECK(r.qhom_value == doctest::Approx(0.75).epsilon(1e-8));
  CHECK(r.residuals_decreasing());
  CHECK_THROWS_AS(expansion_residuals(Density::homogeneous(BaseKind::stvk, 2), Mat::unit(2, 0, 0), 1, {0.05, 0.1}, 4, quick()),
                  InvalidArgument);
}

TEST_CASE("commutativity probe: class densities never fail") {
  const std::vector<double> h{0.1, 0.05, 0.025};
  const auto a = commutativity_probe(Density::layered(BaseKind::stvk, 2, 0.5), Mat::unit(2, 0, 0), {1, 2}, h, 4, quick());
  CHECK(a.verdict == Verdict::commutes);
  CHECK(a.per_k[0].fit.q == doctest::Approx(a.per_k[1].fit.q).epsilon(1e-6));
  const Mat shear = Mat::from_rows(2, {0, 1, 1, 0});
  const auto b = commutativity_probe(Density::homogeneous(BaseKind::dist2, 2), shear, {1, 2}, h, 4, quick());
  CHECK(b.verdict != Verdict::fails);
}

TEST_CASE("commutativity probe: degenerate inputs") {
  const Density w = Density::layered(BaseKind::stvk, 2, 0.5);
  CHECK(commutativity_probe(w, Mat::zero(2), {1}, {0.1, 0.05, 0.025}, 4, quick()).verdict == Verdict::inconclusive);
  CHECK_THROWS_AS(commutativity_probe(w, Mat::unit(2, 0, 0), {1}, {0.1, 0.05}, 4, quick()), FitIllConditioned);
}

TEST_CASE("verdict rule on synthetic k-cell energies") {
  // q(1) = 0.5 for every k while the k = 8 curve is linear in h.
  const KcellEvaluator eval = [](int k, const Mat& f) {
    const double h = 1.0 - f(1, 1);
    const double e = k == 8 ? std::min(0.5 * h * h, 0.01 * h) : 0.5 * h * h;
    return KcellValue{e, true, "synthetic"};
  };
  const auto v = commutativity_probe(eval, -1.0 * Mat::unit(2, 1, 1), {1, 8}, {0.1, 0.05, 0.025}, 1e-8);
  CHECK(v.verdict == Verdict::fails);
  CHECK(v.multicell.fit.sigma == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("split evaluation of the prestressed composite") {
  const Density w = Density::prestressed_perforated(BaseKind::stvk, 0.1, 0.15);
  const SplitValue id = split_kcell_energy(w, Mat::identity(3), 1, 4, 1, quick());
  CHECK(id.slab.energy < 1e-14);
  CHECK(id.rod.energy > 0);
  Mat f = Mat::identity(3);
  f(1, 1) = 0.95;
  const SplitValue c = split_kcell_energy(w, f, 1, 4, 1, quick());
  // Unbuckled slab: half the cell at W = |F^T F - Id|^2 / 4.
  CHECK(c.slab.energy == doctest::Approx(0.5 * std::pow(0.95 * 0.95 - 1, 2) / 4).epsilon(1e-8));
  // The rod is free in y2, so compressing e2 costs it nothing.
  CHECK(c.rod.energy == doctest::Approx(id.rod.energy).epsilon(1e-6));
}

TEST_CASE("splitting identity holds on a grid where the phases share no node") {
  Mat f = Mat::identity(3);
  f(0, 0) = 1.02;
  f(1, 2) = 0.03;
  const SplittingReport r = splitting_check(BaseKind::stvk, 0.1, 0.15, 1, 8, {Mat::identity(3), f}, quick(), 2);
  CHECK(r.all_pass());
  CHECK(r.rows[0].slab.energy < 1e-14);
  CHECK(r.rows[0].rod.energy > 0);
  CHECK(r.rows[1].slab.energy > 0);
}

TEST_CASE("counterexample I pipeline at coarse resolution") {
  const auto r = counterexample1_pipeline(1e-3, {0.0, 0.1, 0.2}, {1, 4}, 4, quick(), 3);
  CHECK(r.q_stiff == doctest::Approx(0.5005).epsilon(1e-4));
  CHECK(r.stiff_variation < 0.1);
  for (const auto& row : r.rows)
    if (row.delta == 0.0) CHECK(row.energy < 1e-14);
  CHECK(r.f_monotone);
  CHECK(r.f_delta.back() < r.rows[4].energy + 1e-15);
  CHECK(r.bound_c > 0);
  CHECK_THROWS_AS(counterexample1_pipeline(1e-3, {0.4}, {1}, 4, quick()), InvalidArgument);
}
