#include <cmath>
#include <random>

#include "doctest.h"
#include "elhom/errors.hpp"
#include "elhom/tensor.hpp"
#include "oracles.hpp"

using namespace elhom;

namespace {

Mat random_mat(int dim, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = nd(rng);
  return m;
}

Mat rot3(const std::array<double, 3>& axis_angle) {
  const double t = std::sqrt(axis_angle[0] * axis_angle[0] + axis_angle[1] * axis_angle[1] + axis_angle[2] * axis_angle[2]);
  if (t < 1e-15) return Mat::identity(3);
  Mat k = Mat::from_rows(3, {0, -axis_angle[2], axis_angle[1], axis_angle[2], 0, -axis_angle[0], -axis_angle[1], axis_angle[0], 0});
  k = (1.0 / t) * k;
  return Mat::identity(3) + std::sin(t) * k + (1 - std::cos(t)) * (k * k);
}

}  // namespace

TEST_CASE("det and inverse agree with elementary identities") {
  std::mt19937_64 rng(1);
  for (int dim : {2, 3})
    for (int s = 0; s < 20; ++s) {
      const Mat a = Mat::identity(dim) + random_mat(dim, rng, 0.3);
      const Mat b = random_mat(dim, rng, 1.0);
      CHECK(det(a * b) == doctest::Approx(det(a) * det(b)).epsilon(1e-10));
      const Mat e = a * inverse(a) - Mat::identity(dim);
      CHECK(norm(e) < 1e-12);
    }
}

TEST_CASE("signed svd reconstructs F with rotations and signed sigma") {
  std::mt19937_64 rng(2);
  for (int dim : {2, 3})
    for (int s = 0; s < 50; ++s) {
      const Mat f = random_mat(dim, rng, 1.0);
      const SignedSvd d = signed_svd(f);
      Mat sig(dim);
      for (int i = 0; i < dim; ++i) sig(i, i) = d.sigma[i];
      CHECK(norm(d.u * sig * transpose(d.v) - f) < 1e-11);
      CHECK(det(d.u) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(det(d.v) == doctest::Approx(1.0).epsilon(1e-12));
      for (int i = 0; i + 1 < dim; ++i) CHECK(std::abs(d.sigma[i]) >= std::abs(d.sigma[i + 1]) - 1e-12);
      for (int i = 0; i + 1 < dim; ++i) CHECK(d.sigma[i] >= 0);
    }
}

TEST_CASE("dist2 matches brute force over rotations in 2D") {
  std::mt19937_64 rng(3);
  for (int s = 0; s < 30; ++s) {
    const Mat f = random_mat(2, rng, 1.5);
    CHECK(dist2_SO(f) == doctest::Approx(oracle::brute_dist2_2d(f)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("dist2 is bounded above by sampled rotations in 3D and attained by the polar factor") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ud(-M_PI, M_PI);
  for (int s = 0; s < 10; ++s) {
    const Mat f = random_mat(3, rng, 1.0);
    const double d = dist2_SO(f);
    const PolarResult p = polar_rotation(f);
    CHECK(norm_sq(f - p.rotation) == doctest::Approx(d).epsilon(1e-10));
    CHECK(norm(transpose(p.rotation) * p.rotation - Mat::identity(3)) < 1e-12);
    CHECK(det(p.rotation) == doctest::Approx(1.0));
    for (int t = 0; t < 2000; ++t) {
      const Mat r = rot3({ud(rng), ud(rng), ud(rng)});
      CHECK(norm_sq(f - r) >= d - 1e-10);
    }
    // Local perturbations of the optimal rotation do not improve it.
    for (int t = 0; t < 200; ++t) {
      std::normal_distribution<double> nd(0, 1e-3);
      const Mat r = p.rotation * rot3({nd(rng), nd(rng), nd(rng)});
      CHECK(norm_sq(f - r) >= d - 1e-12);
    }
  }
}

TEST_CASE("dist2 properties: frame indifference, rotation zeros, isotropy") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-M_PI, M_PI);
  for (int s = 0; s < 30; ++s) {
    const Mat r = rot3({ud(rng), ud(rng), ud(rng)});
    const Mat q = rot3({ud(rng), ud(rng), ud(rng)});
    const Mat f = random_mat(3, rng, 1.0);
    CHECK(dist2_SO(r) < 1e-24);
    CHECK(dist2_SO(r * f) == doctest::Approx(dist2_SO(f)).epsilon(1e-10));
    CHECK(dist2_SO(f * q) == doctest::Approx(dist2_SO(f)).epsilon(1e-10));
    CHECK(dist2_SO(f) >= 0.0);
    CHECK(dist2_SO(oracle::rot2(ud(rng))) < 1e-24);
  }
}

TEST_CASE("dist2 near identity is |sym G|^2 to leading order") {
  std::mt19937_64 rng(6);
  for (int dim : {2, 3}) {
    const Mat g = random_mat(dim, rng, 1.0);
    const double h = 1e-4;
    const double v = dist2_SO(Mat::identity(dim) + h * g) / (h * h);
    CHECK(v == doctest::Approx(norm_sq(sym(g))).epsilon(1e-3));
  }
}

TEST_CASE("dist2 gradient matches central differences") {
  std::mt19937_64 rng(7);
  for (int dim : {2, 3})
    for (int s = 0; s < 10; ++s) {
      const Mat f = Mat::identity(dim) + random_mat(dim, rng, 0.4);
      if (det(f) <= 0.05) continue;
      Mat grad(dim);
      dist2_SO_with_grad(f, grad);
      const double e = 1e-6;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          Mat d = Mat::unit(dim, i, j);
          const double fd = (dist2_SO(f + e * d) - dist2_SO(f - e * d)) / (2 * e);
          CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("polar status flags singular and degenerate inputs") {
  CHECK(polar_rotation(Mat::from_rows(3, {2, 0, 0, 0, 1, 0, 0, 0, 0})).status == PolarStatus::singular_input);
  CHECK(polar_rotation(Mat::from_rows(2, {2, 0, 0, 0})).status == PolarStatus::singular_input);
  CHECK(polar_rotation(Mat::zero(3)).status == PolarStatus::degenerate_minimizer);
  CHECK(polar_rotation(Mat::identity(3)).status == PolarStatus::regular);
  // diag(1, 1, -1): the nearest rotation is not unique.
  CHECK(polar_rotation(Mat::from_rows(3, {1, 0, 0, 0, 1, 0, 0, 0, -1})).status == PolarStatus::degenerate_minimizer);
  CHECK(polar_rotation(Mat::from_rows(2, {1, 0, 0, -1})).status == PolarStatus::degenerate_minimizer);
}

TEST_CASE("non-finite input is rejected") {
  Mat f = Mat::identity(2);
  f(0, 1) = std::nan("");
  CHECK_THROWS_AS(dist2_SO(f), InvalidArgument);
}

TEST_CASE("SymTensor4 sym projector gives |sym G|^2 and symmetric min eigenvalue") {
  std::mt19937_64 rng(8);
  for (int dim : {2, 3}) {
    const SymTensor4 p = SymTensor4::sym_projector(dim);
    const Mat g = random_mat(dim, rng, 1.0);
    CHECK(quad_value(p, g) == doctest::Approx(norm_sq(sym(g))));
    CHECK(p.max_asymmetry() < 1e-15);
    CHECK(p.min_eigenvalue() == doctest::Approx(0.0).scale(1.0));
    CHECK(SymTensor4::identity(dim).min_eigenvalue() == doctest::Approx(1.0));
  }
}
