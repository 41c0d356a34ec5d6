#include "elhom/tensor.hpp"

#include <algorithm>
#include <utility>

#include "elhom/errors.hpp"

namespace elhom {

namespace {

constexpr double kSingularTol = 1e-12;
constexpr double kJacobiTol = 1e-14;

void check_dim(int dim) {
  if (dim != 2 && dim != 3) throw InvalidArgument("matrix dimension must be 2 or 3");
}

void check_same(const Mat& a, const Mat& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("matrix dimension mismatch");
}

Mat rotation2(double c, double s) { return Mat::from_rows(2, {c, -s, s, c}); }

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double length(const std::array<double, 3>& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

// Unit vector orthogonal to a (|a| = 1).
std::array<double, 3> any_orthogonal(const std::array<double, 3>& a) {
  int m = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(a[i]) < std::abs(a[m])) m = i;
  std::array<double, 3> e{0, 0, 0};
  e[m] = 1.0;
  auto c = cross(a, e);
  double l = length(c);
  return {c[0] / l, c[1] / l, c[2] / l};
}

SignedSvd signed_svd3(const Mat& f) {
  // One-sided Jacobi: rotate columns of W = F V until they are orthogonal.
  std::array<std::array<double, 3>, 3> w{};  // w[c] is column c
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) w[c][r] = f(r, c);
  Mat v = Mat::identity(3);
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        double alpha = 0, beta = 0, gamma = 0;
        for (int r = 0; r < 3; ++r) {
          alpha += w[p][r] * w[p][r];
          beta += w[q][r] * w[q][r];
          gamma += w[p][r] * w[q][r];
        }
        if (std::abs(gamma) <= kJacobiTol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (int r = 0; r < 3; ++r) {
          double wp = w[p][r], wq = w[q][r];
          w[p][r] = c * wp - s * wq;
          w[q][r] = s * wp + c * wq;
          double vp = v(r, p), vq = v(r, q);
          v(r, p) = c * vp - s * vq;
          v(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::array<double, 3> sig{length(w[0]), length(w[1]), length(w[2])};
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return sig[a] > sig[b]; });

  SignedSvd out;
  out.u = Mat(3);
  out.v = Mat(3);
  std::array<std::array<double, 3>, 3> ucol{};
  for (int c = 0; c < 3; ++c) {
    int src = order[c];
    out.sigma[c] = sig[src];
    for (int r = 0; r < 3; ++r) out.v(r, c) = v(r, src);
    if (sig[src] > kSingularTol * std::max(1.0, sig[order[0]]))
      for (int r = 0; r < 3; ++r) ucol[c][r] = w[src][r] / sig[src];
  }
  // Complete U for rank-deficient input.
  if (out.sigma[0] <= kSingularTol) ucol[0] = {1, 0, 0};
  if (out.sigma[1] <= kSingularTol * std::max(1.0, out.sigma[0])) ucol[1] = any_orthogonal(ucol[0]);
  if (out.sigma[2] <= kSingularTol * std::max(1.0, out.sigma[0])) ucol[2] = cross(ucol[0], ucol[1]);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) out.u(r, c) = ucol[c][r];

  if (det(out.v) < 0) {
    for (int r = 0; r < 3; ++r) out.v(r, 2) = -out.v(r, 2);
    for (int r = 0; r < 3; ++r) out.u(r, 2) = -out.u(r, 2);
  }
  if (det(out.u) < 0) {
    for (int r = 0; r < 3; ++r) out.u(r, 2) = -out.u(r, 2);
    out.sigma[2] = -out.sigma[2];
  }
  return out;
}

}  // namespace

Mat::Mat(int dim) : dim_(dim) { check_dim(dim); }

Mat Mat::identity(int dim) {
  Mat m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(int dim, std::initializer_list<double> entries) {
  Mat m(dim);
  if (static_cast<int>(entries.size()) != dim * dim) throw InvalidArgument("from_rows: expected dim*dim entries");
  int k = 0;
  for (double e : entries) {
    m(k / dim, k % dim) = e;
    ++k;
  }
  return m;
}

Mat Mat::unit(int dim, int i, int j) {
  Mat m(dim);
  m(i, j) = 1.0;
  return m;
}

Mat& Mat::operator+=(const Mat& other) {
  check_same(*this, other);
  for (int k = 0; k < 9; ++k) a_[k] += other.a_[k];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  check_same(*this, other);
  for (int k = 0; k < 9; ++k) a_[k] -= other.a_[k];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& x : a_) x *= s;
  return *this;
}

bool Mat::all_finite() const {
  return std::all_of(a_.begin(), a_.end(), [](double x) { return std::isfinite(x); });
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator-(Mat a) { return a *= -1.0; }
Mat operator*(double s, Mat a) { return a *= s; }
Mat operator*(Mat a, double s) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
  check_same(a, b);
  const int n = a.dim();
  Mat c(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

bool operator==(const Mat& a, const Mat& b) {
  if (a.dim() != b.dim()) return false;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

std::ostream& operator<<(std::ostream& os, const Mat& m) {
  os << '[';
  for (int i = 0; i < m.dim(); ++i) {
    os << (i ? ", [" : "[");
    for (int j = 0; j < m.dim(); ++j) os << (j ? ", " : "") << m(i, j);
    os << ']';
  }
  return os << ']';
}

Mat transpose(const Mat& a) {
  Mat t(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) t(i, j) = a(j, i);
  return t;
}

double trace(const Mat& a) {
  double s = 0;
  for (int i = 0; i < a.dim(); ++i) s += a(i, i);
  return s;
}

double det(const Mat& a) {
  if (a.dim() == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

double dot(const Mat& a, const Mat& b) {
  check_same(a, b);
  double s = 0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) s += a(i, j) * b(i, j);
  return s;
}

double norm_sq(const Mat& a) { return dot(a, a); }
double norm(const Mat& a) { return std::sqrt(norm_sq(a)); }

Mat inverse(const Mat& a) {
  const double d = det(a);
  if (d == 0.0) throw InvalidArgument("inverse of a singular matrix");
  Mat inv(a.dim());
  if (a.dim() == 2) {
    inv(0, 0) = a(1, 1) / d;
    inv(0, 1) = -a(0, 1) / d;
    inv(1, 0) = -a(1, 0) / d;
    inv(1, 1) = a(0, 0) / d;
    return inv;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
      inv(i, j) = (a(i1, j1) * a(i2, j2) - a(i1, j2) * a(i2, j1)) / d;
    }
  return inv;
}

Mat sym(const Mat& f) { return 0.5 * (f + transpose(f)); }
Mat skw(const Mat& f) { return 0.5 * (f - transpose(f)); }

SignedSvd signed_svd(const Mat& f) {
  if (f.dim() == 3) return signed_svd3(f);
  // Closed form: F = a Rot(theta) + b Refl(phi) with a = (s1 + s2) / 2 and
  // b = (s1 - s2) / 2 for the signed singular values.
  const double e = 0.5 * (f(0, 0) + f(1, 1)), h = 0.5 * (f(1, 0) - f(0, 1));
  const double g = 0.5 * (f(0, 0) - f(1, 1)), k = 0.5 * (f(1, 0) + f(0, 1));
  const double q = std::hypot(e, h), r = std::hypot(g, k);
  const double theta = std::atan2(h, e), phi = std::atan2(k, g);
  SignedSvd out;
  out.sigma = {q + r, q - r, 0.0};
  // U = Rot((theta + phi) / 2), V = Rot((phi - theta) / 2).
  const double bu = 0.5 * (theta + phi), bv = 0.5 * (phi - theta);
  out.u = rotation2(std::cos(bu), std::sin(bu));
  out.v = rotation2(std::cos(bv), std::sin(bv));
  return out;
}

PolarResult polar_rotation(const Mat& f) {
  require(f.all_finite(), "polar_rotation: non-finite entries");
  PolarResult out;
  if (f.dim() == 2) {
    const double e = f(0, 0) + f(1, 1), h = f(1, 0) - f(0, 1);
    const double q = std::hypot(e, h);
    const double r = std::hypot(f(0, 0) - f(1, 1), f(1, 0) + f(0, 1));
    if (q <= 2.0 * kSingularTol * std::max(1.0, r)) {
      out.rotation = Mat::identity(2);
      out.status = PolarStatus::degenerate_minimizer;
      return out;
    }
    out.rotation = rotation2(e / q, h / q);
    if (std::abs(0.5 * (q - r)) < kSingularTol) out.status = PolarStatus::singular_input;
    return out;
  }
  const SignedSvd svd = signed_svd3(f);
  out.rotation = svd.u * transpose(svd.v);
  if (svd.sigma[1] + svd.sigma[2] <= kSingularTol * std::max(1.0, svd.sigma[0]))
    out.status = PolarStatus::degenerate_minimizer;
  else if (std::abs(svd.sigma[2]) < kSingularTol)
    out.status = PolarStatus::singular_input;
  return out;
}

double dist2_SO(const Mat& f) {
  require(f.all_finite(), "dist2_SO: non-finite entries");
  if (f.dim() == 2) {
    // sum (s_i - 1)^2 = 2 (q - 1)^2 + 2 r^2 with q, r as in signed_svd;
    // q - 1 is formed without cancellation near the identity.
    const double t = f(0, 0) + f(1, 1) - 2.0, w = f(1, 0) - f(0, 1);
    const double hyp = std::hypot(2.0 + t, w);
    const double q_minus_1 = (4.0 * t + t * t + w * w) / (2.0 * (hyp + 2.0));
    const double r = 0.5 * std::hypot(f(0, 0) - f(1, 1), f(1, 0) + f(0, 1));
    return 2.0 * q_minus_1 * q_minus_1 + 2.0 * r * r;
  }
  const SignedSvd svd = signed_svd3(f);
  double s = 0;
  for (double x : svd.sigma) s += (x - 1.0) * (x - 1.0);
  return s;
}

double dist2_SO_with_grad(const Mat& f, Mat& grad) {
  const Mat r = polar_rotation(f).rotation;
  grad = 2.0 * (f - r);
  return dist2_SO(f);
}

SymTensor4::SymTensor4(int dim) : dim_(dim) { check_dim(dim); }

SymTensor4 SymTensor4::identity(int dim) {
  SymTensor4 t(dim);
  for (int a = 0; a < dim * dim; ++a) t(a, a) = 1.0;
  return t;
}

SymTensor4 SymTensor4::sym_projector(int dim) {
  SymTensor4 t(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      t.at(i, j, i, j) += 0.5;
      t.at(i, j, j, i) += 0.5;
    }
  return t;
}

Mat SymTensor4::apply(const Mat& g) const {
  if (g.dim() != dim_) throw InvalidArgument("SymTensor4::apply: dimension mismatch");
  const int n2 = size();
  Mat out(dim_);
  for (int kl = 0; kl < n2; ++kl) {
    double s = 0;
    for (int ij = 0; ij < n2; ++ij) s += (*this)(ij, kl) * g(ij / dim_, ij % dim_);
    out(kl / dim_, kl % dim_) = s;
  }
  return out;
}

SymTensor4& SymTensor4::operator*=(double s) {
  for (double& x : c_) x *= s;
  return *this;
}

SymTensor4& SymTensor4::operator+=(const SymTensor4& other) {
  if (other.dim_ != dim_) throw InvalidArgument("SymTensor4: dimension mismatch");
  for (int k = 0; k < 81; ++k) c_[k] += other.c_[k];
  return *this;
}

void SymTensor4::symmetrize() {
  const int n2 = size();
  for (int a = 0; a < n2; ++a)
    for (int b = a + 1; b < n2; ++b) {
      const double m = 0.5 * ((*this)(a, b) + (*this)(b, a));
      (*this)(a, b) = m;
      (*this)(b, a) = m;
    }
}

double SymTensor4::max_asymmetry() const {
  double m = 0;
  for (int a = 0; a < size(); ++a)
    for (int b = 0; b < size(); ++b) m = std::max(m, std::abs((*this)(a, b) - (*this)(b, a)));
  return m;
}

double SymTensor4::min_eigenvalue() const {
  // Cyclic Jacobi on the symmetric part.
  const int n2 = size();
  std::array<double, 81> a{};
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n2; ++j) a[9 * i + j] = 0.5 * ((*this)(i, j) + (*this)(j, i));
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n2; ++p)
      for (int q = p + 1; q < n2; ++q) off += a[9 * p + q] * a[9 * p + q];
    if (off < 1e-30) break;
    for (int p = 0; p < n2; ++p)
      for (int q = p + 1; q < n2; ++q) {
        const double apq = a[9 * p + q];
        if (std::abs(apq) < 1e-300) continue;
        const double zeta = (a[9 * q + q] - a[9 * p + p]) / (2.0 * apq);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (int k = 0; k < n2; ++k) {
          const double akp = a[9 * k + p], akq = a[9 * k + q];
          a[9 * k + p] = c * akp - s * akq;
          a[9 * k + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n2; ++k) {
          const double apk = a[9 * p + k], aqk = a[9 * q + k];
          a[9 * p + k] = c * apk - s * aqk;
          a[9 * q + k] = s * apk + c * aqk;
        }
      }
  }
  double m = a[0];
  for (int i = 1; i < n2; ++i) m = std::min(m, a[9 * i + i]);
  return m;
}

SymTensor4 operator*(double s, SymTensor4 t) { return t *= s; }

double quad_value(const SymTensor4& l, const Mat& g) { return dot(l.apply(g), g); }
double bilinear(const SymTensor4& l, const Mat& a, const Mat& b) { return dot(l.apply(a), b); }

}  // namespace elhom
