#pragma once

// Small dense matrix algebra for deformation gradients (n = 2 or 3),
// signed singular values, polar rotations and symmetric fourth-order
// tensors acting on n x n matrices.

#include <array>
#include <cmath>
#include <initializer_list>
#include <ostream>

namespace elhom {

inline constexpr int kMaxDim = 3;

/// A point of the reference configuration; unused trailing entries are zero.
using Point = std::array<double, kMaxDim>;

/// Square n x n matrix with n in {2, 3}. Entries beyond n are kept at zero.
class Mat {
 public:
  Mat() = default;
  explicit Mat(int dim);

  static Mat zero(int dim) { return Mat(dim); }
  static Mat identity(int dim);
  /// Row-major entries; the list length must be dim * dim.
  static Mat from_rows(int dim, std::initializer_list<double> entries);
  /// The matrix unit e_i (x) e_j.
  static Mat unit(int dim, int i, int j);

  int dim() const { return dim_; }
  double& operator()(int i, int j) { return a_[3 * i + j]; }
  double operator()(int i, int j) const { return a_[3 * i + j]; }

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  bool all_finite() const;

 private:
  int dim_ = 2;
  std::array<double, 9> a_{};
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator-(Mat a);
Mat operator*(double s, Mat a);
Mat operator*(Mat a, double s);
Mat operator*(const Mat& a, const Mat& b);
bool operator==(const Mat& a, const Mat& b);
std::ostream& operator<<(std::ostream& os, const Mat& m);

Mat transpose(const Mat& a);
double trace(const Mat& a);
double det(const Mat& a);
/// Frobenius inner product <A, B> = sum_ij A_ij B_ij.
double dot(const Mat& a, const Mat& b);
double norm_sq(const Mat& a);
double norm(const Mat& a);
Mat inverse(const Mat& a);

Mat sym(const Mat& f);
Mat skw(const Mat& f);

/// Signed singular value decomposition F = U diag(sigma) V^T with U, V in
/// SO(n). sigma is sorted by decreasing magnitude; when det F < 0 the last
/// (smallest) value carries the negative sign.
struct SignedSvd {
  Mat u;
  std::array<double, kMaxDim> sigma{};
  Mat v;
};

SignedSvd signed_svd(const Mat& f);

enum class PolarStatus {
  regular,
  /// F has a singular value below 1e-12; the distance is still exact.
  singular_input,
  /// The nearest rotation is not unique; a minimizer is returned.
  degenerate_minimizer,
};

struct PolarResult {
  Mat rotation;
  PolarStatus status = PolarStatus::regular;
};

/// Rotation R in SO(n) minimizing |F - R|.
PolarResult polar_rotation(const Mat& f);

/// dist^2(F, SO(n)) = sum_i (sigma_i - 1)^2 over signed singular values.
double dist2_SO(const Mat& f);

/// dist^2(F, SO(n)) together with its derivative 2 (F - R). The derivative
/// is a subgradient where the nearest rotation is not unique.
double dist2_SO_with_grad(const Mat& f, Mat& grad);

/// Symmetric linear map on n x n matrices, stored as an n^2 x n^2 array.
class SymTensor4 {
 public:
  SymTensor4() = default;
  explicit SymTensor4(int dim);

  static SymTensor4 identity(int dim);
  /// L G = sym(G).
  static SymTensor4 sym_projector(int dim);

  int dim() const { return dim_; }
  int size() const { return dim_ * dim_; }
  /// Entry coupling component (i, j) of the input with (k, l) of the output.
  double& operator()(int ij, int kl) { return c_[9 * ij + kl]; }
  double operator()(int ij, int kl) const { return c_[9 * ij + kl]; }
  double& at(int i, int j, int k, int l) { return c_[9 * (dim_ * i + j) + dim_ * k + l]; }
  double at(int i, int j, int k, int l) const { return c_[9 * (dim_ * i + j) + dim_ * k + l]; }

  Mat apply(const Mat& g) const;
  SymTensor4& operator*=(double s);
  SymTensor4& operator+=(const SymTensor4& other);

  /// Replaces the stored array by its symmetric part.
  void symmetrize();
  double max_asymmetry() const;
  /// Smallest eigenvalue of the stored n^2 x n^2 array.
  double min_eigenvalue() const;

 private:
  int dim_ = 2;
  std::array<double, 81> c_{};
};

SymTensor4 operator*(double s, SymTensor4 t);

/// Q(G) = <L G, G>.
double quad_value(const SymTensor4& l, const Mat& g);
/// <L A, B>.
double bilinear(const SymTensor4& l, const Mat& a, const Mat& b);

}  // namespace elhom
