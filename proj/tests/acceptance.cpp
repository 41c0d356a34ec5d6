// Acceptance suite: one line per criterion, "criterion N: PASS|FAIL ...".
//
//   acceptance [--only 1,4,9] [--known-failure 6]
//
// Exit status is the number of failing criteria that are not listed as
// known failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "elhom/analysis.hpp"
#include "elhom/domain.hpp"
#include "elhom/report.hpp"
#include "oracles.hpp"

using namespace elhom;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Mat random_mat(int dim, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = nd(rng);
  return m;
}

Mat near_id(int dim, std::mt19937_64& rng, double scale) {
  for (;;) {
    const Mat f = Mat::identity(dim) + random_mat(dim, rng, scale);
    if (det(f) > 0.2) return f;
  }
}

Outcome tensor_oracle() {
  std::mt19937_64 rng(101);
  double worst_d = 0, worst_r = 0;
  for (int s = 0; s < 500; ++s) {
    const Mat f = random_mat(2, rng, 1.5);
    const double t = oracle::brute_rotation_angle_2d(f);
    const double ref = oracle::brute_dist2_2d(f);
    worst_d = std::max(worst_d, std::abs(dist2_SO(f) - ref) / ref);
    const Mat r = oracle::rot2(t);
    worst_r = std::max(worst_r, norm(polar_rotation(f).rotation - r) / norm(r));
  }
  return {worst_d <= 1e-6 && worst_r <= 1e-6,
          "max rel err dist2 " + fmt("%.2e", worst_d) + ", polar " + fmt("%.2e", worst_r) + " (<= 1e-6)"};
}

Outcome gradient_check() {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  double worst = 0;
  int points = 0;
  for (BaseKind b : {BaseKind::dist2, BaseKind::stvk})
    for (int s = 0; s < 200; ++s) {
      const int dim = 2 + s % 2;
      const Density w = s % 4 < 2 ? Density::homogeneous(b, dim) : Density::layered(b, dim, 0.3);
      const Point y{ud(rng), ud(rng), ud(rng)};
      const Mat f = near_id(dim, rng, 0.3);
      const Mat g = w.grad_F(y, f).grad;
      const double e = 1e-5;
      double err = 0;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          const Mat d = Mat::unit(dim, i, j);
          err = std::max(err, std::abs((w.eval(y, f + e * d) - w.eval(y, f - e * d)) / (2 * e) - g(i, j)));
        }
      worst = std::max(worst, err / norm(g));
      ++points;
    }
  return {worst < 1e-6, std::to_string(points) + " points, max rel err " + fmt("%.2e", worst) + " (< 1e-6)"};
}

Outcome laminate() {
  double worst = 0;
  const Mat shear = Mat::from_rows(2, {0, 1, 1, 0});
  for (double alpha : {0.5, 0.1}) {
    const QuadraticField q = quadratic_term(Density::layered(BaseKind::stvk, 2, alpha));
    const double fem = solve_linear_cell(q, shear, Grid::periodic_cell(2, 1, 32)).energy;
    const double ref = oracle::laminate_energy(q, shear, 320);
    worst = std::max(worst, std::abs(fem - ref) / ref);
  }
  return {worst <= 1e-3, "res 32 vs 1D oracle on 320 cells, max rel err " + fmt("%.2e", worst) + " (<= 1e-3)"};
}

Outcome expansion() {
  NonlinearOptions opt;
  bool ok = true;
  std::string detail;
  const std::pair<const char*, Density> cases[] = {{"homogeneous", Density::homogeneous(BaseKind::stvk, 2)},
                                                   {"layered", Density::layered(BaseKind::stvk, 2, 0.5)}};
  for (const auto& [name, w] : cases) {
    const ExpansionReport r = expansion_residuals(w, Mat::unit(2, 0, 0), 1, {0.1, 0.05, 0.025}, 16, opt, 1);
    const double ratio = r.residuals.back() / r.qhom_value;
    ok = ok && r.residuals_decreasing() && ratio <= 0.1;
    detail += std::string(detail.empty() ? "" : "; ") + name + " R = " + fmt("%.3e", r.residuals[0]) + "," +
              fmt("%.3e", r.residuals[1]) + "," + fmt("%.3e", r.residuals[2]) + " R/Q = " + fmt("%.3f", ratio);
  }
  return {ok, detail + " (decreasing, R/Q <= 0.1)"};
}

Outcome monotonicity() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> ua(0.2, 1.0);
  NonlinearOptions opt;
  double worst = -1e300;
  for (int s = 0; s < 10; ++s) {
    const BaseKind b = s % 2 ? BaseKind::stvk : BaseKind::dist2;
    const Density w = s % 3 == 0 ? Density::homogeneous(b, 2) : Density::layered(b, 2, ua(rng));
    const Mat f = near_id(2, rng, 0.15);
    const auto curve = khom_curve(w, f, {1, 2}, 8, 50 + s, opt);
    worst = std::max(worst, curve[1].result.energy - curve[0].result.energy);
  }
  return {worst <= 1e-8, "10 pairs, max E(2) - E(1) = " + fmt("%.2e", worst) + " (<= 1e-8)"};
}

Outcome counterexample_one() {
  NonlinearOptions opt;
  const double alpha = 1e-3, delta = 0.2;
  const int res = 16;
  auto stiffness = [&](double a) {
    const QuadraticField q = quadratic_term(Density::layered(BaseKind::dist2, 2, a));
    return quad_value(homogenized_tensor(q, Grid::periodic_cell(2, 1, res)).l_hom, Mat::unit(2, 0, 0));
  };
  const double q = stiffness(alpha), q10 = stiffness(10 * alpha);
  const double variation = std::abs(q10 - q) / q;
  Mat f = Mat::identity(2);
  f(0, 0) = 1 - delta;
  const Grid grid = Grid::periodic_cell(2, 8, res);
  StartSet starts;
  for (auto& s : default_starts(f, grid, 6))
    if (s.label == "bending") starts.push_back(std::move(s));
  const CellResult r = solve_nonlinear_cell(Density::layered(BaseKind::dist2, 2, alpha), f, grid, starts, opt);
  const double threshold = 0.1 * q * delta * delta;
  return {r.energy < threshold && variation < 0.1 && !starts.empty(),
          "W8(F_0.2) = " + fmt("%.3e", r.energy) + " from the bending start (" + r.status + ") vs 0.1 q d^2 = " +
              fmt("%.3e", threshold) + "; q = " + fmt("%.4f", q) + ", variation under 10x alpha " + fmt("%.2e", variation) +
              " (< 0.1)"};
}

Outcome splitting() {
  NonlinearOptions opt;
  Mat f2 = Mat::identity(3);
  f2(0, 0) = 1.03;
  f2(1, 2) = 0.02;
  const Mat f3 = Mat::from_rows(3, {0.98, 0.01, 0, -0.02, 1.01, 0.015, 0.0, 0.01, 0.99});
  const SplittingReport r = splitting_check(BaseKind::stvk, 0.1, 0.15, 1, 10, {Mat::identity(3), f2, f3}, opt, 7);
  double worst = 0;
  for (const auto& row : r.rows) worst = std::max(worst, row.defect);
  return {r.all_pass() && r.rows.size() == 3, "3 matrices, max defect " + fmt("%.2e", worst) + " (<= " + fmt("%.1e", r.bound) + ")"};
}

Outcome commutativity() {
  NonlinearOptions opt;
  const std::vector<double> h{0.1, 0.05, 0.025};
  const auto a = commutativity_probe(Density::layered(BaseKind::stvk, 2, 0.5), Mat::unit(2, 0, 0), {1, 2, 4}, h, 8, opt, 8);
  const auto b = commutativity_probe(Density::prestressed_perforated(BaseKind::stvk, 0.1, 0.15), -1.0 * Mat::unit(3, 1, 1),
                                     {1, 2, 4, 8}, h, 4, opt, 8);
  std::string qs;
  for (const auto& e : b.per_k) qs += (qs.empty() ? "" : ",") + fmt("%.3f", e.fit.q);
  return {a.verdict == Verdict::commutes && b.verdict == Verdict::fails,
          "layered: " + to_string(a.verdict) + "; prestressed G=-e2e2: " + to_string(b.verdict) + " (q(k) = " + qs +
              ", multi-cell q = " + fmt("%.3f", b.multicell.fit.q) + ")"};
}

Outcome diagram() {
  DomainMesh mesh;
  mesh.res = 16;
  DiagramOptions opt;
  const std::vector<double> eps{0.5, 0.25}, h{0.1, 0.05};
  const auto a = diagram_probe(Density::homogeneous(BaseKind::stvk, 2), Load::default_lift(2), eps, h, mesh, opt);
  const auto b = diagram_probe(Density::layered(BaseKind::stvk, 2, 0.5), Load::default_lift(2), eps, h, mesh, opt);
  return {a.relative_defect <= 1e-3 && b.relative_defect <= 0.05,
          "homogeneous rel defect " + fmt("%.2e", a.relative_defect) + " (<= 1e-3); layered " +
              fmt("%.2e", b.relative_defect) + " (<= 5%)"};
}

Outcome determinism() {
  NonlinearOptions opt;
  const Density w = Density::layered(BaseKind::dist2, 2, 0.3);
  const nlohmann::json config = {{"seed", 11}, {"res", 8}};
  auto expand = [&] {
    return render_json(expansion_report(expansion_residuals(w, Mat::unit(2, 0, 0), 2, {0.1, 0.05, 0.025}, 8, opt, 11)), config);
  };
  auto probe = [&] {
    return render_json(commutativity_report(commutativity_probe(w, Mat::from_rows(2, {0, 1, 1, 0}), {1, 2}, {0.1, 0.05, 0.025}, 4, opt, 11)),
                       config);
  };
  auto ce1 = [&] { return render_json(counterexample1_report(counterexample1_pipeline(1e-2, {0.1}, {1, 4}, 8, opt, 11)), config); };
  const bool same = expand() == expand() && probe() == probe() && ce1() == ce1();
  return {same, same ? "expand, probe and counterexample reports byte-identical across reruns" : "reports differ between reruns"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only, known;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--known-failure", known, "Criteria whose failure does not count in the exit status")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "tensor oracle", 5, tensor_oracle},
      {2, "gradient check", 5, gradient_check},
      {3, "laminate cell oracle", 30, laminate},
      {4, "expansion residuals", 120, expansion},
      {5, "multi-cell monotonicity", 300, monotonicity},
      {6, "layered buckling gap", 600, counterexample_one},
      {7, "splitting identity", 600, splitting},
      {8, "commutativity verdicts", 900, commutativity},
      {9, "diagram probe", 900, diagram},
      {10, "determinism", 600, determinism},
  };
  const std::set<int> selected(only.begin(), only.end()), known_set(known.begin(), known.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = t <= c.budget_s;
    const bool pass = o.pass && in_time;
    std::printf("criterion %d: %s  %s: %s; %.1f s (budget %.0f s)%s\n", c.id, pass ? "PASS" : "FAIL", c.name.c_str(),
                o.detail.c_str(), t, c.budget_s, !pass && known_set.count(c.id) ? " [known failure]" : "");
    std::fflush(stdout);
    if (!pass && !known_set.count(c.id)) ++failures;
  }
  return failures;
}
