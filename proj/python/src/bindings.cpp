#include <optional>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "elhom/analysis.hpp"
#include "elhom/domain.hpp"
#include "elhom/errors.hpp"
#include "elhom/report.hpp"

namespace py = pybind11;
using namespace elhom;

namespace {

using Rows = std::vector<std::vector<double>>;

Mat to_mat(const Rows& rows) {
  const int n = static_cast<int>(rows.size());
  if (n < 1 || n > kMaxDim) throw InvalidArgument("matrix must be 1x1 to 3x3");
  Mat m = Mat::zero(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) throw InvalidArgument("matrix must be square");
    for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Rows to_rows(const Mat& m) {
  Rows out(m.dim(), std::vector<double>(m.dim()));
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) out[i][j] = m(i, j);
  return out;
}

NonlinearOptions options(double tol, int max_iter, int threads) {
  NonlinearOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.threads = threads;
  return o;
}

// {"converged": ..., "result": ...} as a JSON string; decoded on the Python side.
std::string emit(const Report& r) {
  nlohmann::json j = {{"converged", r.converged}, {"result", r.result}, {"csv", r.csv}};
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings of the elhom homogenization library";

  py::register_exception<Error>(m, "ElhomError", PyExc_ValueError);

  m.def("dist2_so", [](const Rows& f) { return dist2_SO(to_mat(f)); }, py::arg("F"));
  m.def("polar_rotation", [](const Rows& f) { return to_rows(polar_rotation(to_mat(f)).rotation); }, py::arg("F"));

  py::class_<Density>(m, "Density")
      .def_static("homogeneous", [](const std::string& base, int dim) { return Density::homogeneous(parse_base_kind(base), dim); },
                  py::arg("base"), py::arg("dim") = 2)
      .def_static("layered",
                  [](const std::string& base, int dim, double alpha) { return Density::layered(parse_base_kind(base), dim, alpha); },
                  py::arg("base"), py::arg("dim") = 2, py::arg("alpha") = 0.5)
      .def_static("prestressed_perforated",
                  [](const std::string& base, double s, double rho) {
                    return Density::prestressed_perforated(parse_base_kind(base), s, rho);
                  },
                  py::arg("base") = "stvk", py::arg("s") = 0.1, py::arg("rho") = 0.15)
      .def_property_readonly("dim", &Density::dim)
      .def("eval",
           [](const Density& w, std::array<double, 3> y, const Rows& f) { return w.eval(Point{y[0], y[1], y[2]}, to_mat(f)); },
           py::arg("y"), py::arg("F"))
      .def("__repr__", &Density::describe);

  m.def(
      "validate", [](const Density& w, int samples, std::uint64_t seed) { return emit(validation_report(validate_class(w, samples, seed))); },
      py::arg("density"), py::arg("samples") = 200, py::arg("seed") = 0);

  m.def(
      "homogenize",
      [](const Density& w, const Rows& f, const std::vector<int>& k, int res, std::uint64_t seed, double tol, int max_iter, int threads) {
        const Mat fm = to_mat(f);
        py::gil_scoped_release release;
        return emit(homogenize_report(fm, khom_curve(w, fm, k, res, seed, options(tol, max_iter, threads))));
      },
      py::arg("density"), py::arg("F"), py::arg("k") = std::vector<int>{1}, py::arg("res") = 8, py::arg("seed") = 0,
      py::arg("tol") = 1e-8, py::arg("max_iter") = 5000, py::arg("threads") = 1);

  m.def(
      "quad_homogenize",
      [](const Density& w, int res, std::optional<Rows> g) {
        const HomTensor t = homogenized_tensor(quadratic_term(w), Grid::periodic_cell(w.dim(), 1, res));
        if (!g) return emit(quad_homogenize_report(t.l_hom, nullptr));
        const Mat gm = to_mat(*g);
        return emit(quad_homogenize_report(t.l_hom, &gm));
      },
      py::arg("density"), py::arg("res") = 16, py::arg("G") = py::none());

  m.def(
      "expand",
      [](const Density& w, const Rows& g, int k, const std::vector<double>& h, int res, std::uint64_t seed, double tol) {
        const Mat gm = to_mat(g);
        py::gil_scoped_release release;
        return emit(expansion_report(expansion_residuals(w, gm, k, h, res, options(tol, 5000, 1), seed)));
      },
      py::arg("density"), py::arg("G"), py::arg("k") = 1, py::arg("h") = std::vector<double>{0.1, 0.05, 0.025},
      py::arg("res") = 16, py::arg("seed") = 0, py::arg("tol") = 1e-8);

  m.def(
      "commutativity",
      [](const Density& w, const Rows& g, const std::vector<int>& k, const std::vector<double>& h, int res, std::uint64_t seed,
         double tol) {
        const Mat gm = to_mat(g);
        py::gil_scoped_release release;
        return emit(commutativity_report(commutativity_probe(w, gm, k, h, res, options(tol, 5000, 1), seed)));
      },
      py::arg("density"), py::arg("G"), py::arg("k") = std::vector<int>{1, 2}, py::arg("h") = std::vector<double>{0.1, 0.05, 0.025},
      py::arg("res") = 4, py::arg("seed") = 0, py::arg("tol") = 1e-8);

  m.def(
      "diagram",
      [](const Density& w, std::optional<Rows> lift, std::optional<std::vector<double>> force, const std::vector<double>& eps,
         const std::vector<double>& h, int res, int cell_res, std::uint64_t seed) {
        Load load = Load::default_lift(w.dim());
        if (lift) load = Load::lift(to_mat(*lift));
        if (force) {
          std::array<double, kMaxDim> f{0, 0, 0};
          for (std::size_t i = 0; i < force->size() && i < f.size(); ++i) f[i] = (*force)[i];
          load = Load::body(f);
        }
        DomainMesh mesh;
        mesh.dim = w.dim();
        mesh.res = res;
        DiagramOptions opt;
        opt.cell_res = cell_res;
        opt.seed = seed;
        py::gil_scoped_release release;
        return emit(diagram_report(diagram_probe(w, load, eps, h, mesh, opt)));
      },
      py::arg("density"), py::arg("lift") = py::none(), py::arg("force") = py::none(),
      py::arg("eps") = std::vector<double>{0.5, 0.25}, py::arg("h") = std::vector<double>{0.1, 0.05}, py::arg("res") = 16,
      py::arg("cell_res") = 8, py::arg("seed") = 0);

  m.def(
      "counterexample1",
      [](double alpha, const std::vector<double>& delta, const std::vector<int>& k, int res, std::uint64_t seed) {
        py::gil_scoped_release release;
        return emit(counterexample1_report(counterexample1_pipeline(alpha, delta, k, res, NonlinearOptions{}, seed)));
      },
      py::arg("alpha") = 1e-3, py::arg("delta") = std::vector<double>{0.1, 0.2}, py::arg("k") = std::vector<int>{1, 2},
      py::arg("res") = 8, py::arg("seed") = 0);

  m.def(
      "splitting",
      [](const std::vector<Rows>& fs, const std::string& base, double s, double rho, int k, int res, std::uint64_t seed) {
        std::vector<Mat> mats;
        for (const auto& f : fs) mats.push_back(to_mat(f));
        py::gil_scoped_release release;
        return emit(splitting_report(splitting_check(parse_base_kind(base), s, rho, k, res, mats, NonlinearOptions{}, seed)));
      },
      py::arg("F"), py::arg("base") = "stvk", py::arg("s") = 0.1, py::arg("rho") = 0.15, py::arg("k") = 1, py::arg("res") = 10,
      py::arg("seed") = 0);
}
