#include "elhom/grid.hpp"

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>

#include "elhom/errors.hpp"

namespace elhom {

namespace {

constexpr double kGaussLo = 0.5 * (1.0 - 0.57735026918962576451);
constexpr double kGaussHi = 0.5 * (1.0 + 0.57735026918962576451);

double gauss(int bit) { return bit ? kGaussHi : kGaussLo; }

}  // namespace

Grid::Grid(int dim, std::array<int, kMaxDim> elements, std::array<bool, kMaxDim> periodic, double spacing,
           Point origin)
    : dim_(dim), h_(spacing), origin_(origin) {
  require(dim == 2 || dim == 3, "grid dimension must be 2 or 3");
  require(spacing > 0 && std::isfinite(spacing), "grid spacing must be positive");
  node_count_ = 1;
  element_count_ = 1;
  for (int a = 0; a < dim; ++a) {
    require(elements[a] >= 1, "grid needs at least one element per axis");
    // A periodic axis with fewer than two elements would alias element nodes.
    require(!periodic[a] || elements[a] >= 2, "periodic axis needs at least two elements");
    elements_[a] = elements[a];
    periodic_[a] = periodic[a];
    nodes_[a] = periodic[a] ? elements[a] : elements[a] + 1;
    node_count_ *= nodes_[a];
    element_count_ *= elements_[a];
  }
  quad_weight_ = std::pow(h_, dim) / (1 << dim);
  for (int q = 0; q < (1 << dim); ++q)
    for (int a = 0; a < (1 << dim); ++a)
      for (int j = 0; j < dim; ++j) {
        double d = ((a >> j) & 1) ? 1.0 : -1.0;
        for (int i = 0; i < dim; ++i) {
          if (i == j) continue;
          const double xi = gauss((q >> i) & 1);
          d *= ((a >> i) & 1) ? xi : 1.0 - xi;
        }
        dshape_[(q * 8 + a) * 3 + j] = d / h_;
      }
}

Grid Grid::periodic_cell(int dim, int k, int res) {
  require(k >= 1, "cell factor k must be >= 1");
  require(res >= 2 && res % 2 == 0, "cell resolution must be an even integer >= 2");
  Grid g(dim, {k * res, k * res, k * res}, {true, true, true}, 1.0 / res);
  g.k_ = k;
  g.res_ = res;
  return g;
}

bool Grid::fully_periodic() const {
  for (int a = 0; a < dim_; ++a)
    if (!periodic_[a]) return false;
  return true;
}

double Grid::measure() const {
  double m = 1.0;
  for (int a = 0; a < dim_; ++a) m *= elements_[a] * h_;
  return m;
}

std::array<int, kMaxDim> Grid::node_coords(int node) const {
  std::array<int, kMaxDim> c{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    c[a] = node % nodes_[a];
    node /= nodes_[a];
  }
  return c;
}

int Grid::node_index(std::array<int, kMaxDim> c) const {
  int idx = 0, stride = 1;
  for (int a = 0; a < dim_; ++a) {
    int ca = c[a];
    if (periodic_[a]) ca = ((ca % nodes_[a]) + nodes_[a]) % nodes_[a];
    idx += ca * stride;
    stride *= nodes_[a];
  }
  return idx;
}

Point Grid::node_position(int node) const {
  const auto c = node_coords(node);
  Point p{0, 0, 0};
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + c[a] * h_;
  return p;
}

double Grid::shape_value(int q, int a) const {
  double v = 1.0;
  for (int i = 0; i < dim_; ++i) {
    const double xi = gauss((q >> i) & 1);
    v *= ((a >> i) & 1) ? xi : 1.0 - xi;
  }
  return v;
}

std::array<int, 8> Grid::element_nodes(int element) const {
  std::array<int, kMaxDim> base{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    base[a] = element % elements_[a];
    element /= elements_[a];
  }
  std::array<int, 8> out{};
  for (int l = 0; l < (1 << dim_); ++l) {
    std::array<int, kMaxDim> c = base;
    for (int a = 0; a < dim_; ++a) c[a] += (l >> a) & 1;
    out[l] = node_index(c);
  }
  return out;
}

Point Grid::quad_point(int element, int q) const {
  Point p{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    const int c = element % elements_[a];
    element /= elements_[a];
    p[a] = origin_[a] + (c + gauss((q >> a) & 1)) * h_;
  }
  return p;
}

bool Grid::operator==(const Grid& o) const {
  return dim_ == o.dim_ && h_ == o.h_ && origin_ == o.origin_ && elements_ == o.elements_ &&
         periodic_ == o.periodic_;
}

void Grid::gradients(std::span<const double> u, std::vector<Mat>& out) const {
  if (u.size() != static_cast<std::size_t>(node_count_) * dim_) throw LengthMismatch("field size does not match grid");
  out.assign(quad_count(), Mat(dim_));
  assemble(u, nullptr, [&](int e, int q, const Mat& g, Mat&) {
    out[e * quad_per_element() + q] = g;
    return 0.0;
  });
}

Field Field::zeros(const Grid& grid) {
  return Field{grid, std::vector<double>(static_cast<std::size_t>(grid.node_count()) * grid.dim(), 0.0)};
}

std::vector<Mat> gradient_at_quadrature(const Field& field) {
  std::vector<Mat> out;
  field.grid.gradients(field.values, out);
  return out;
}

double integrate(std::span<const double> values, const Grid& grid) {
  if (values.size() != static_cast<std::size_t>(grid.quad_count()))
    throw LengthMismatch("integrate: " + std::to_string(values.size()) + " values for " +
                         std::to_string(grid.quad_count()) + " quadrature points");
  double s = 0.0;
  for (double v : values) s += v;
  return grid.quad_weight() * s;
}

std::array<double, kMaxDim> field_mean(const Field& field) {
  const Grid& g = field.grid;
  const int n = g.dim();
  std::array<double, kMaxDim> mean{0, 0, 0};
  if (g.fully_periodic()) {
    for (int node = 0; node < g.node_count(); ++node)
      for (int i = 0; i < n; ++i) mean[i] += field.at(node, i);
    for (int i = 0; i < n; ++i) mean[i] /= g.node_count();
    return mean;
  }
  // Element averages of a Q1 function are the averages of its nodal values.
  for (int e = 0; e < g.element_count(); ++e) {
    const auto nodes = g.element_nodes(e);
    for (int a = 0; a < g.nodes_per_element(); ++a)
      for (int i = 0; i < n; ++i) mean[i] += field.at(nodes[a], i);
  }
  for (int i = 0; i < n; ++i) mean[i] /= static_cast<double>(g.element_count()) * g.nodes_per_element();
  return mean;
}

Field project_mean_zero(Field field) {
  const auto mean = field_mean(field);
  for (int node = 0; node < field.grid.node_count(); ++node)
    for (int i = 0; i < field.grid.dim(); ++i) field.at(node, i) -= mean[i];
  return field;
}

Field extend_periodic(const Field& field, const Grid& target) {
  const Grid& src = field.grid;
  require(src.fully_periodic() && target.fully_periodic(), "extend_periodic needs periodic grids");
  require(src.dim() == target.dim() && src.spacing() == target.spacing(), "extend_periodic: incompatible grids");
  for (int a = 0; a < src.dim(); ++a)
    require(target.nodes(a) % src.nodes(a) == 0, "extend_periodic: target is not a multiple of the source");
  Field out = Field::zeros(target);
  for (int node = 0; node < target.node_count(); ++node) {
    const int s = src.node_index(target.node_coords(node));
    for (int i = 0; i < src.dim(); ++i) out.at(node, i) = field.at(s, i);
  }
  return out;
}

void write_field_csv(const Field& field, std::ostream& os) {
  const Grid& g = field.grid;
  os << "dim,k,res\n" << g.dim() << ',' << g.k() << ',' << g.res() << '\n';
  os.precision(17);
  for (int node = 0; node < g.node_count(); ++node) {
    for (int i = 0; i < g.dim(); ++i) os << (i ? "," : "") << field.at(node, i);
    os << '\n';
  }
}

Field read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "dim,k,res") throw InvalidArgument("field CSV: missing header");
  int dim = 0, k = 0, res = 0;
  char c1, c2;
  if (!std::getline(is, line)) throw InvalidArgument("field CSV: missing header values");
  std::istringstream hs(line);
  if (!(hs >> dim >> c1 >> k >> c2 >> res)) throw InvalidArgument("field CSV: malformed header values");
  Field f = Field::zeros(Grid::periodic_cell(dim, k, res));
  for (int node = 0; node < f.grid.node_count(); ++node) {
    if (!std::getline(is, line)) throw LengthMismatch("field CSV: too few node rows");
    std::istringstream ls(line);
    for (int i = 0; i < dim; ++i) {
      if (i) ls >> c1;
      if (!(ls >> f.at(node, i))) throw InvalidArgument("field CSV: malformed node row");
    }
  }
  return f;
}

void write_field_binary(const Field& field, std::ostream& os) {
  const std::int32_t hdr[3] = {field.grid.dim(), field.grid.k(), field.grid.res()};
  os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  os.write(reinterpret_cast<const char*>(field.values.data()),
           static_cast<std::streamsize>(field.values.size() * sizeof(double)));
}

Field read_field_binary(std::istream& is) {
  std::int32_t hdr[3];
  if (!is.read(reinterpret_cast<char*>(hdr), sizeof hdr)) throw InvalidArgument("field binary: missing header");
  Field f = Field::zeros(Grid::periodic_cell(hdr[0], hdr[1], hdr[2]));
  if (!is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double))))
    throw LengthMismatch("field binary: too few node values");
  return f;
}

}  // namespace elhom
