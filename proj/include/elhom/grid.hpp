#pragma once

// Uniform Q1 grids on axis-aligned boxes with per-axis periodic
// identification, 2-point tensor Gauss quadrature, and nodal vector fields.

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "elhom/tensor.hpp"

namespace elhom {

class Grid {
 public:
  /// The 2D unit cell at resolution 2.
  Grid() : Grid(2, {2, 2, 2}, {true, true, true}, 0.5) { k_ = 1, res_ = 2; }

  /// Box with `elements[a]` cells of size `spacing` along axis a, starting
  /// at `origin`. Periodic axes identify the first and last node layer.
  Grid(int dim, std::array<int, kMaxDim> elements, std::array<bool, kMaxDim> periodic, double spacing,
       Point origin = {0, 0, 0});

  /// The multi-cell kY = [0,k)^n with `res` elements per unit length (res even).
  static Grid periodic_cell(int dim, int k, int res);

  int dim() const { return dim_; }
  /// Cell factor and resolution; k is 0 for grids that are not a kY cell.
  int k() const { return k_; }
  int res() const { return res_; }
  double spacing() const { return h_; }
  const Point& origin() const { return origin_; }
  bool periodic(int axis) const { return periodic_[axis]; }
  bool fully_periodic() const;
  int elements(int axis) const { return axis < dim_ ? elements_[axis] : 1; }
  int nodes(int axis) const { return axis < dim_ ? nodes_[axis] : 1; }
  int node_count() const { return node_count_; }
  int element_count() const { return element_count_; }
  int nodes_per_element() const { return 1 << dim_; }
  int quad_per_element() const { return 1 << dim_; }
  int quad_count() const { return element_count_ * quad_per_element(); }
  /// Quadrature weight (identical for every point).
  double quad_weight() const { return quad_weight_; }
  double measure() const;

  std::array<int, kMaxDim> node_coords(int node) const;
  /// Node index of integer coordinates; periodic axes wrap.
  int node_index(std::array<int, kMaxDim> c) const;
  Point node_position(int node) const;
  std::array<int, 8> element_nodes(int element) const;
  Point quad_point(int element, int q) const;
  /// d N_a / d y_j at quadrature point q of any element.
  double shape_grad(int q, int a, int j) const { return dshape_[(q * 8 + a) * 3 + j]; }
  /// N_a at quadrature point q.
  double shape_value(int q, int a) const;

  bool operator==(const Grid& other) const;

  /// Sum over quadrature points of weight * fn(e, q, grad u, stress). fn
  /// returns the energy density and fills the stress; when `grad_out` is not
  /// null the adjoint sum of stress : grad N is accumulated into it.
  template <class Fn>
  double assemble(std::span<const double> u, std::vector<double>* grad_out, Fn&& fn) const;

  /// Gradient of the Q1 interpolant of nodal values at every quadrature point.
  void gradients(std::span<const double> u, std::vector<Mat>& out) const;

 private:
  int dim_;
  int k_ = 0;
  int res_ = 0;
  double h_;
  Point origin_;
  std::array<int, kMaxDim> elements_{1, 1, 1};
  std::array<int, kMaxDim> nodes_{1, 1, 1};
  std::array<bool, kMaxDim> periodic_{false, false, false};
  int node_count_ = 0;
  int element_count_ = 0;
  double quad_weight_ = 0;
  std::array<double, 8 * 8 * 3> dshape_{};
};

/// Per-node vector field on a grid, node-major: values[dim * node + i].
struct Field {
  Grid grid;
  std::vector<double> values;

  static Field zeros(const Grid& grid);
  double& at(int node, int comp) { return values[grid.dim() * node + comp]; }
  double at(int node, int comp) const { return values[grid.dim() * node + comp]; }
};

using PeriodicField = Field;

std::vector<Mat> gradient_at_quadrature(const Field& field);
/// Quadrature sum of point values laid out element-major, point-minor.
double integrate(std::span<const double> values_at_quadrature, const Grid& grid);
/// Integral mean of each component.
std::array<double, kMaxDim> field_mean(const Field& field);
Field project_mean_zero(Field field);
/// Repeats a kY-periodic field over a k'Y grid with k' a multiple of k.
Field extend_periodic(const Field& field, const Grid& target);

/// CSV layout: "dim,k,res" header line, its values, then one row per node in
/// lexicographic order (first axis fastest).
void write_field_csv(const Field& field, std::ostream& os);
Field read_field_csv(std::istream& is);
/// Binary layout: int32 dim, k, res followed by float64 node values.
void write_field_binary(const Field& field, std::ostream& os);
Field read_field_binary(std::istream& is);

template <class Fn>
double Grid::assemble(std::span<const double> u, std::vector<double>* grad_out, Fn&& fn) const {
  const int n = dim_, nn = nodes_per_element(), nq = quad_per_element();
  if (grad_out) grad_out->assign(static_cast<std::size_t>(node_count_) * n, 0.0);
  double total = 0.0;
  Mat grad(n), stress(n);
  for (int e = 0; e < element_count_; ++e) {
    const std::array<int, 8> nodes = element_nodes(e);
    double local[8][3];
    for (int a = 0; a < nn; ++a)
      for (int i = 0; i < n; ++i) local[a][i] = u[n * nodes[a] + i];
    double elem_energy = 0.0;
    double elem_force[8][3] = {};
    for (int q = 0; q < nq; ++q) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0;
          for (int a = 0; a < nn; ++a) s += local[a][i] * shape_grad(q, a, j);
          grad(i, j) = s;
        }
      elem_energy += fn(e, q, grad, stress);
      if (grad_out)
        for (int a = 0; a < nn; ++a)
          for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int j = 0; j < n; ++j) s += stress(i, j) * shape_grad(q, a, j);
            elem_force[a][i] += s;
          }
    }
    total += quad_weight_ * elem_energy;
    if (grad_out)
      for (int a = 0; a < nn; ++a)
        for (int i = 0; i < n; ++i) (*grad_out)[n * nodes[a] + i] += quad_weight_ * elem_force[a][i];
  }
  return total;
}

}  // namespace elhom
