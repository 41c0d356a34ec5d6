#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "elhom/density.hpp"
#include "elhom/tensor.hpp"

namespace oracle {

inline elhom::Mat rot2(double t) {
  return elhom::Mat::from_rows(2, {std::cos(t), -std::sin(t), std::sin(t), std::cos(t)});
}

/// Angle of the rotation closest to F: fine angle grid, then golden section.
inline double brute_rotation_angle_2d(const elhom::Mat& f) {
  double best_t = 0, best = 1e300;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * M_PI * i / n;
    const double d = norm_sq(f - rot2(t));
    if (d < best) best = d, best_t = t;
  }
  double a = best_t - 2 * M_PI / n, b = best_t + 2 * M_PI / n;
  for (int it = 0; it < 100; ++it) {
    const double m1 = a + (b - a) * 0.381966, m2 = b - (b - a) * 0.381966;
    if (norm_sq(f - rot2(m1)) < norm_sq(f - rot2(m2))) b = m2; else a = m1;
  }
  const double t = 0.5 * (a + b);
  return norm_sq(f - rot2(t)) <= best ? t : best_t;
}

inline double brute_dist2_2d(const elhom::Mat& f) { return norm_sq(f - rot2(brute_rotation_angle_2d(f))); }

/// Energy of the 1D reduced cell problem for a field varying only in y2:
/// minimize avg_Y <L(y2)(G + a(y2) (x) e2), G + a (x) e2> over mean-zero a,
/// with L piecewise constant on `cells` intervals. Solved in closed form via
/// a Lagrange multiplier for the mean constraint.
inline double laminate_energy(const elhom::QuadraticField& q, const elhom::Mat& g, int cells) {
  const int n = g.dim();
  using MatX = Eigen::MatrixXd;
  using VecX = Eigen::VectorXd;
  std::vector<MatX> minv(cells);
  std::vector<VecX> rhs(cells);
  std::vector<elhom::SymTensor4> ls;
  MatX sum_minv = MatX::Zero(n, n);
  VecX sum_minv_b = VecX::Zero(n);
  for (int c = 0; c < cells; ++c) {
    const elhom::SymTensor4 l = q({0.37, (c + 0.5) / cells, 0.41});
    ls.push_back(l);
    MatX m(n, n);
    VecX b(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) m(i, k) = l.at(i, 1, k, 1);
      double s = 0;
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) s += l.at(i, 1, k, j) * g(k, j);
      b(i) = s;
    }
    minv[c] = m.completeOrthogonalDecomposition().pseudoInverse();
    rhs[c] = b;
    sum_minv += minv[c];
    sum_minv_b += minv[c] * b;
  }
  const VecX lambda = sum_minv.completeOrthogonalDecomposition().solve(sum_minv_b);
  double e = 0;
  for (int c = 0; c < cells; ++c) {
    const VecX a = minv[c] * (lambda - rhs[c]);
    elhom::Mat f = g;
    for (int i = 0; i < n; ++i) f(i, 1) += a(i);
    e += elhom::quad_value(ls[c], f);
  }
  return e / cells;
}

}  // namespace oracle

namespace oracle {

/// Minimum of int <L grad v, grad v> - int f.v over Q1 fields on the unit
/// square with `res` elements per side, v = 0 on x1 = 0, by dense assembly
/// in reference coordinates and a direct solve.
inline double clamped_square_energy(const elhom::SymTensor4& l, std::array<double, 2> f, int res) {
  const int nn = res + 1;
  auto dof = [&](int ix, int iy, int c) { return 2 * ((iy * nn + ix) - iy - 1) + c; };  // ix >= 1
  const int ndof = 2 * res * nn;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ndof, ndof);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ndof);
  const double hs = 1.0 / res, g = 1.0 / std::sqrt(3.0);
  const int cx[4] = {0, 1, 1, 0}, cy[4] = {0, 0, 1, 1};
  for (int ey = 0; ey < res; ++ey)
    for (int ex = 0; ex < res; ++ex)
      for (int qx = -1; qx <= 1; qx += 2)
        for (int qy = -1; qy <= 1; qy += 2) {
          const double xi = qx * g, eta = qy * g, w = hs * hs / 4;
          double n[4], dn[4][2];
          for (int a = 0; a < 4; ++a) {
            const double sx = cx[a] ? 1 : -1, sy = cy[a] ? 1 : -1;
            n[a] = (1 + sx * xi) * (1 + sy * eta) / 4;
            dn[a][0] = sx * (1 + sy * eta) / 4 * 2 / hs;
            dn[a][1] = sy * (1 + sx * xi) / 4 * 2 / hs;
          }
          for (int a = 0; a < 4; ++a) {
            const int ax = ex + cx[a], ay = ey + cy[a];
            if (ax == 0) continue;
            for (int i = 0; i < 2; ++i) {
              b(dof(ax, ay, i)) += w * f[i] * n[a];
              for (int c = 0; c < 4; ++c) {
                const int bx = ex + cx[c], by = ey + cy[c];
                if (bx == 0) continue;
                for (int kk = 0; kk < 2; ++kk) {
                  double s = 0;
                  for (int j = 0; j < 2; ++j)
                    for (int m = 0; m < 2; ++m) s += l.at(i, j, kk, m) * dn[a][j] * dn[c][m];
                  k(dof(ax, ay, i), dof(bx, by, kk)) += 2 * w * s;
                }
              }
            }
          }
        }
  const Eigen::VectorXd v = k.ldlt().solve(b);
  return 0.5 * v.dot(k * v) - b.dot(v);
}

}  // namespace oracle
