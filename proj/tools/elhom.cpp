// elhom: command-line front end for the homogenization toolkit.
//
//   elhom [--config FILE] [--output-dir DIR] [--seed N] [--threads N] <command> [options]
//
// Exit codes: 0 ok, 2 validation failure, 3 solver non-convergence,
// 64 usage error, 65 config file error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "elhom/analysis.hpp"
#include "elhom/domain.hpp"
#include "elhom/errors.hpp"
#include "elhom/parallel.hpp"
#include "elhom/report.hpp"

namespace {

using namespace elhom;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitUsage = 64;
constexpr int kExitConfig = 65;

struct Globals {
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  double tol = 1e-8;
  int max_iter = 5000;
};

struct DensityArgs {
  std::string density;
  std::string base = "stvk";
  std::string microstructure = "homogeneous";
  double alpha = 0.5;
  double s = 0.1;
  double rho = 0.15;
  int dim = 2;

  Density build() const {
    std::string b = base, m = microstructure;
    if (!density.empty()) {
      if (density == "dist2" || density == "stvk") {
        b = density;
        m = "homogeneous";
      } else {
        m = density;
      }
    }
    const BaseKind kind = parse_base_kind(b);
    switch (parse_microstructure(m)) {
      case Microstructure::homogeneous:
        return Density::homogeneous(kind, dim);
      case Microstructure::layered:
        return Density::layered(kind, dim, alpha);
      case Microstructure::prestressed_perforated:
        return Density::prestressed_perforated(kind, s, rho);
    }
    throw InvalidArgument("unknown microstructure");
  }

  json to_json(const Density& w) const {
    json j = {{"base", to_string(w.base())}, {"microstructure", to_string(w.microstructure())}, {"dim", w.dim()}};
    if (w.microstructure() == Microstructure::layered) j["alpha"] = w.alpha();
    if (w.microstructure() == Microstructure::prestressed_perforated) {
      j["s"] = w.s();
      j["rho"] = w.rho();
    }
    return j;
  }
};

void add_density(CLI::App* cmd, DensityArgs& d) {
  cmd->add_option("--density", d.density, "Shorthand: dist2, stvk (homogeneous) or a microstructure name");
  cmd->add_option("--base", d.base, "Base energy: dist2 or stvk")->capture_default_str();
  cmd->add_option("--microstructure", d.microstructure, "homogeneous, layered or prestressed_perforated")
      ->capture_default_str();
  cmd->add_option("--alpha", d.alpha, "Soft-phase factor of the layered density")->capture_default_str();
  cmd->add_option("--s", d.s, "Prestrain of the prestressed rod")->capture_default_str();
  cmd->add_option("--rho", d.rho, "Rod radius")->capture_default_str();
  cmd->add_option("--dim", d.dim, "Space dimension (2 or 3)")->capture_default_str();
}

// "id", "e1e1", "e2e2", "e3e3", "sym-shear" with an optional sign and
// "<factor>*" prefix, or n*n comma-separated row-major entries.
Mat parse_matrix(const std::string& text, int dim) {
  std::string t = text;
  double factor = 1.0;
  if (const auto star = t.find('*'); star != std::string::npos) {
    factor = std::stod(t.substr(0, star));
    t = t.substr(star + 1);
  }
  if (!t.empty() && t[0] == '-' && t.find(',') == std::string::npos) {
    factor = -factor;
    t = t.substr(1);
  }
  if (t == "id") return factor * Mat::identity(dim);
  if (t == "zero") return Mat::zero(dim);
  if (t == "sym-shear") return factor * (Mat::unit(dim, 0, 1) + Mat::unit(dim, 1, 0));
  if (t.size() == 4 && t[0] == 'e' && t[2] == 'e') {
    const int i = t[1] - '1', j = t[3] - '1';
    if (i < 0 || j < 0 || i >= dim || j >= dim) throw InvalidArgument("matrix shorthand '" + text + "' outside dimension");
    return factor * Mat::unit(dim, i, j);
  }
  std::vector<double> v;
  std::stringstream ss(t);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) throw InvalidArgument("cannot parse matrix '" + text + "'");
    v.push_back(x);
  }
  if (static_cast<int>(v.size()) != dim * dim)
    throw InvalidArgument("matrix '" + text + "' needs " + std::to_string(dim * dim) + " entries");
  Mat m = Mat::zero(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = factor * v[i * dim + j];
  return m;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) throw InvalidArgument("cannot parse number list '" + text + "'");
    v.push_back(x);
  }
  if (v.empty()) throw InvalidArgument("empty number list");
  return v;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double x : parse_list(text)) {
    if (x != std::floor(x) || x < 1) throw InvalidArgument("expected positive integers in '" + text + "'");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

void require_decreasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(v[i] > 0, std::string(what) + " values must be positive");
    if (i) require(v[i] < v[i - 1], std::string(what) + " values must be strictly decreasing");
  }
}

void require_ascending(const std::vector<int>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i) require(v[i] > v[i - 1], std::string(what) + " values must be ascending");
}

void require_res(int res) { require(res >= 2 && res % 2 == 0, "res must be a positive even number"); }

// List options arrive split at commas (from flags and from INI arrays alike).
using Text = std::vector<std::string>;

std::string join(const Text& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

bool is_number(const std::string& t) {
  std::size_t used = 0;
  try {
    std::stod(t, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == t.size();
}

// Shorthand tokens stand alone, numeric entries come in runs of dim*dim.
std::vector<std::string> group_matrices(const Text& tokens, int dim) {
  std::vector<std::string> out;
  Text run;
  for (const auto& t : tokens) {
    if (!is_number(t)) {
      require(run.empty(), "incomplete matrix before '" + t + "'");
      out.push_back(t);
      continue;
    }
    run.push_back(t);
    if (static_cast<int>(run.size()) == dim * dim) {
      out.push_back(join(run));
      run.clear();
    }
  }
  require(run.empty(), "matrix entries must come in groups of " + std::to_string(dim * dim));
  return out;
}

json matrix_json(const Mat& m) { return to_json(m); }

int write_report(const Report& report, const json& config, const Globals& g, bool ok) {
  namespace fs = std::filesystem;
  fs::create_directories(g.output_dir);
  const fs::path base = fs::path(g.output_dir) / report.command;
  std::ofstream(base.string() + ".json", std::ios::binary) << render_json(report, config);
  std::ofstream(base.string() + ".csv", std::ios::binary) << report.csv;
  std::cout << report.command << ": wrote " << base.string() << ".json and .csv\n";
  if (!ok) return kExitValidation;
  if (!report.converged) {
    std::cerr << "warning: some solves stopped before reaching the tolerance\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear periodic homogenization near the identity"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "INI file with one section per command; flags override it");

  Globals g;
  app.add_option("--output-dir,-o", g.output_dir, "Directory for the JSON and CSV reports")->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (default: ELHOM_THREADS or 1)");
  app.add_option("--tol", g.tol, "Solver tolerance")->capture_default_str();
  app.add_option("--max-iter", g.max_iter, "L-BFGS iteration cap")->capture_default_str();

  DensityArgs dens;

  auto* validate = app.add_subcommand("validate", "Randomized check of the growth and coercivity conditions");
  int samples = 200;
  add_density(validate, dens);
  validate->add_option("--samples", samples)->capture_default_str();

  auto* homogenize = app.add_subcommand("homogenize", "Multi-cell homogenized energy at F");
  Text f_text{"id"}, k_text{"1"};
  int res = 0;
  add_density(homogenize, dens);
  homogenize->add_option("--F", f_text, "Macroscopic gradient")->delimiter(',')->capture_default_str();
  homogenize->add_option("--k", k_text, "Cell sizes, ascending")->delimiter(',')->capture_default_str();
  homogenize->add_option("--res", res, "Elements per unit length (default 8)");

  auto* quad = app.add_subcommand("quad-homogenize", "Homogenized tensor of the quadratic term");
  Text g_text;
  add_density(quad, dens);
  quad->add_option("--G", g_text, "Optional direction for Q_hom(G)")->delimiter(',');
  quad->add_option("--res", res, "Elements per unit length (default 16)");

  auto* expand = app.add_subcommand("expand", "Expansion residuals of the multi-cell energy at the identity");
  Text h_text{"0.1,0.05,0.025"};
  int k = 1;
  add_density(expand, dens);
  expand->add_option("--G", g_text, "Direction (normalized)")->delimiter(',')->required();
  expand->add_option("--k", k)->capture_default_str();
  expand->add_option("--h", h_text, "Step sizes, decreasing")->delimiter(',')->capture_default_str();
  expand->add_option("--res", res, "Elements per unit length (default 16)");

  auto* diagram = app.add_subcommand("diagram", "Domain functionals along both limit paths");
  std::string load_kind = "lift";
  Text eps_text{"0.5,0.25"}, diag_h_text{"0.1,0.05"}, force_text{"0.1,0"};
  double amplitude = 0.05;
  int cell_res = 8;
  add_density(diagram, dens);
  diagram->add_option("--load", load_kind, "lift or body")->capture_default_str();
  diagram->add_option("--G", g_text, "Lift direction (default e1e1), scaled by --amplitude")->delimiter(',');
  diagram->add_option("--amplitude", amplitude)->capture_default_str();
  diagram->add_option("--force", force_text, "Body force components")->delimiter(',')->capture_default_str();
  diagram->add_option("--eps", eps_text, "Periods 1/m, decreasing")->delimiter(',')->capture_default_str();
  diagram->add_option("--h", diag_h_text, "Step sizes, decreasing")->delimiter(',')->capture_default_str();
  diagram->add_option("--res", res, "Domain elements per unit length (default 16)");
  diagram->add_option("--cell-res", cell_res, "Cell resolution for the homogenized data")->capture_default_str();

  auto* ce1 = app.add_subcommand("counterexample1", "Layered composite: buckling below the quadratic prediction");
  double alpha1 = 1e-3;
  Text delta_text{"0.05,0.1,0.2"}, ce1_k_text{"1,2,4,8"};
  ce1->add_option("--alpha", alpha1)->capture_default_str();
  ce1->add_option("--delta", delta_text)->delimiter(',')->capture_default_str();
  ce1->add_option("--k", ce1_k_text)->delimiter(',')->capture_default_str();
  ce1->add_option("--res", res, "Elements per unit length (default 16)");

  auto* ce2 = app.add_subcommand("counterexample2", "Commutativity probe (default: prestressed composite)");
  Text ce2_k_text{"1,2,4,8"};
  DensityArgs dens2;
  dens2.microstructure = "prestressed_perforated";
  add_density(ce2, dens2);
  ce2->add_option("--G", g_text, "Direction (default -e2e2)")->delimiter(',');
  ce2->add_option("--k", ce2_k_text)->delimiter(',')->capture_default_str();
  ce2->add_option("--h", h_text)->delimiter(',')->capture_default_str();
  ce2->add_option("--res", res, "Elements per unit length (default 4)");

  auto* split = app.add_subcommand("splitting", "Splitting identity of the prestressed composite");
  double s = 0.1, rho = 0.15;
  std::string base = "stvk";
  Text f_list;
  int split_k = 1;
  split->add_option("--base", base)->capture_default_str();
  split->add_option("--s", s)->capture_default_str();
  split->add_option("--rho", rho)->capture_default_str();
  split->add_option("--k", split_k)->capture_default_str();
  split->add_option("--F", f_list, "Macroscopic gradients (repeatable)")->delimiter(',');
  split->add_option("--res", res, "Elements per unit length (default 10)");

  for (auto* sub : app.get_subcommands({})) sub->allow_config_extras(CLI::config_extras_mode::error);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CLI::FileError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (g.threads <= 0) g.threads = default_threads();
  NonlinearOptions opt;
  opt.tol = g.tol;
  opt.max_iter = g.max_iter;
  opt.threads = g.threads;

  json config = {{"seed", g.seed}, {"threads", g.threads},
                 {"tol", g.tol},               {"max_iter", g.max_iter}};
  auto with_default = [](int v, int d) { return v > 0 ? v : d; };

  try {
    require(g.tol > 0, "tol must be positive");
    require(g.max_iter > 0, "max-iter must be positive");

    if (validate->parsed()) {
      const Density w = dens.build();
      require(samples > 0, "samples must be positive");
      config["density"] = dens.to_json(w);
      config["samples"] = samples;
      const ValidationReport r = validate_class(w, samples, g.seed);
      for (const auto& c : r.conditions) std::cout << c.name << (c.pass ? " pass" : " FAIL") << "\n";
      return write_report(validation_report(r), config, g, r.all_pass());
    }

    if (homogenize->parsed()) {
      const Density w = dens.build();
      const Mat f = parse_matrix(join(f_text), w.dim());
      const std::vector<int> ks = parse_int_list(join(k_text));
      require_ascending(ks, "k");
      const int r = with_default(res, 8);
      require_res(r);
      config["density"] = dens.to_json(w);
      config.update({{"F", matrix_json(f)}, {"k", ks}, {"res", r}});
      const auto curve = khom_curve(w, f, ks, r, g.seed, opt);
      std::printf("W_hom(F) = %.12g\n", curve.back().running_min);
      return write_report(homogenize_report(f, curve), config, g, true);
    }

    if (quad->parsed()) {
      const Density w = dens.build();
      const int r = with_default(res, 16);
      require_res(r);
      config["density"] = dens.to_json(w);
      config["res"] = r;
      const HomTensor t = homogenized_tensor(quadratic_term(w), Grid::periodic_cell(w.dim(), 1, r), g.tol);
      Mat gm;
      if (!g_text.empty()) {
        gm = parse_matrix(join(g_text), w.dim());
        config["G"] = matrix_json(gm);
        std::printf("Q_hom(G) = %.12g\n", quad_value(t.l_hom, gm));
      }
      return write_report(quad_homogenize_report(t.l_hom, g_text.empty() ? nullptr : &gm), config, g, true);
    }

    if (expand->parsed()) {
      const Density w = dens.build();
      const Mat gm = parse_matrix(join(g_text), w.dim());
      const std::vector<double> hs = parse_list(join(h_text));
      require_decreasing(hs, "h");
      require(k >= 1, "k must be positive");
      const int r = with_default(res, 16);
      require_res(r);
      config["density"] = dens.to_json(w);
      config.update({{"G", matrix_json(gm)}, {"k", k}, {"h", hs}, {"res", r}});
      const ExpansionReport rep = expansion_residuals(w, gm, k, hs, r, opt, g.seed);
      for (std::size_t i = 0; i < hs.size(); ++i) std::printf("h = %-8g R = %.6e\n", hs[i], rep.residuals[i]);
      return write_report(expansion_report(rep), config, g, true);
    }

    if (diagram->parsed()) {
      const Density w = dens.build();
      const int r = with_default(res, 16);
      require_res(r);
      const std::vector<double> eps = parse_list(join(eps_text)), hs = parse_list(join(diag_h_text));
      require_decreasing(eps, "eps");
      require_decreasing(hs, "h");
      Load load;
      if (load_kind == "lift") {
        load = Load::lift(amplitude * (g_text.empty() ? Mat::unit(w.dim(), 0, 0) : parse_matrix(join(g_text), w.dim())));
      } else if (load_kind == "body") {
        const std::vector<double> fv = parse_list(join(force_text));
        require(static_cast<int>(fv.size()) == w.dim(), "force needs one component per dimension");
        std::array<double, kMaxDim> f{0, 0, 0};
        std::copy(fv.begin(), fv.end(), f.begin());
        load = Load::body(f);
      } else {
        throw InvalidArgument("load must be lift or body");
      }
      DomainMesh mesh;
      mesh.dim = w.dim();
      mesh.res = r;
      DiagramOptions dopt;
      dopt.solver = opt;
      dopt.cell_res = cell_res;
      dopt.seed = g.seed;
      config["density"] = dens.to_json(w);
      config.update({{"load", load.describe()}, {"eps", eps}, {"h", hs}, {"res", r}, {"cell_res", cell_res}});
      const DiagramReport rep = diagram_probe(w, load, eps, hs, mesh, dopt);
      std::printf("L13 = %.9g  L24 = %.9g  I0 = %.9g  relative defect = %.3e\n", rep.limit_13, rep.limit_24, rep.i0,
                  rep.relative_defect);
      return write_report(diagram_report(rep), config, g, true);
    }

    if (ce1->parsed()) {
      const std::vector<double> deltas = parse_list(join(delta_text));
      const std::vector<int> ks = parse_int_list(join(ce1_k_text));
      require_ascending(ks, "k");
      const int r = with_default(res, 16);
      require_res(r);
      config.update({{"alpha", alpha1}, {"delta", deltas}, {"k", ks}, {"res", r}});
      const Counterexample1Report rep = counterexample1_pipeline(alpha1, deltas, ks, r, opt, g.seed);
      std::printf("q = %.9g (alpha x10: %.9g)\n", rep.q_stiff, rep.q_stiff_alpha10);
      for (std::size_t i = 0; i < deltas.size(); ++i) std::printf("delta = %-6g f = %.6e\n", deltas[i], rep.f_delta[i]);
      return write_report(counterexample1_report(rep), config, g, true);
    }

    if (ce2->parsed()) {
      const Density w = dens2.build();
      const Mat gm = g_text.empty() ? -1.0 * Mat::unit(w.dim(), 1, 1) : parse_matrix(join(g_text), w.dim());
      const std::vector<int> ks = parse_int_list(join(ce2_k_text));
      require_ascending(ks, "k");
      const std::vector<double> hs = parse_list(join(h_text));
      require_decreasing(hs, "h");
      const int r = with_default(res, 4);
      require_res(r);
      config["density"] = dens2.to_json(w);
      config.update({{"G", matrix_json(gm)}, {"k", ks}, {"h", hs}, {"res", r}});
      const CommutativityVerdict v = commutativity_probe(w, gm, ks, hs, r, opt, g.seed);
      std::printf("verdict: %s (%s)\n", to_string(v.verdict).c_str(), v.reason.c_str());
      return write_report(commutativity_report(v), config, g, true);
    }

    if (split->parsed()) {
      std::vector<Mat> fs;
      if (f_list.empty()) {
        Mat f2 = Mat::identity(3);
        f2(0, 0) = 1.03;
        f2(1, 2) = 0.02;
        fs = {Mat::identity(3), f2, Mat::from_rows(3, {0.98, 0.01, 0, -0.02, 1.01, 0.015, 0.0, 0.01, 0.99})};
      } else {
        for (const auto& t : group_matrices(f_list, 3)) fs.push_back(parse_matrix(t, 3));
      }
      const int r = with_default(res, 10);
      require_res(r);
      json fj = json::array();
      for (const auto& f : fs) fj.push_back(matrix_json(f));
      config.update({{"base", base}, {"s", s}, {"rho", rho}, {"k", split_k}, {"res", r}, {"F", fj}});
      const SplittingReport rep = splitting_check(parse_base_kind(base), s, rho, split_k, r, fs, opt, g.seed);
      for (const auto& row : rep.rows) std::printf("defect = %.3e (bound %.1e)\n", row.defect, rep.bound);
      return write_report(splitting_report(rep), config, g, rep.all_pass());
    }
  } catch (const NotConverged& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const AllStartsFailed& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const Error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
