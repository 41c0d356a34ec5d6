#include "elhom/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace elhom {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// nlohmann writes non-finite numbers as null; keep the information.
json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json reals(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(real(x));
  return a;
}

std::string row(std::initializer_list<std::string> cells) {
  std::string out;
  for (const auto& c : cells) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out + '\n';
}

const char* flag(bool b) { return b ? "1" : "0"; }

json expansion_json(const KExpansion& e) {
  return {{"k", e.k}, {"base", real(e.base)}, {"energies", reals(e.energies)}, {"converged", e.converged},
          {"fit", to_json(e.fit)}};
}

}  // namespace

json to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.dim(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.dim(); ++j) r.push_back(real(m(i, j)));
    rows.push_back(r);
  }
  return rows;
}

json to_json(const SymTensor4& t) {
  // n^2 x n^2 matrix indexed by (n i + j, n k + l).
  const int n = t.dim();
  json rows = json::array();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      json r = json::array();
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) r.push_back(real(t.at(i, j, k, l)));
      rows.push_back(r);
    }
  return rows;
}

json to_json(const CellResult& r) {
  return {{"energy", real(r.energy)},     {"converged", r.converged}, {"iterations", r.iterations},
          {"grad_norm", real(r.grad_norm)}, {"start", r.start_label},   {"status", r.status},
          {"min_det", real(r.min_det)}};
}

json to_json(const QuadFit& f) {
  return {{"sigma", real(f.sigma)},
          {"q", real(f.q)},
          {"sigma_se", real(f.sigma_se)},
          {"q_se", real(f.q_se)},
          {"residual_norm", real(f.residual_norm)}};
}

Report validation_report(const ValidationReport& r) {
  Report out{"validate", json::object(), row({"condition", "pass", "fitted_constant", "detail"}), true};
  json conds = json::array();
  for (const auto& c : r.conditions) {
    conds.push_back({{"name", c.name}, {"pass", c.pass}, {"fitted_constant", real(c.fitted_constant)}, {"detail", c.detail}});
    out.csv += row({c.name, flag(c.pass), num(c.fitted_constant), "\"" + c.detail + "\""});
  }
  out.result = {{"conditions", conds},          {"all_pass", r.all_pass()},     {"lipschitz_fit", real(r.lipschitz_fit)},
                {"w4_steps", reals(r.w4_steps)}, {"w4_residuals", reals(r.w4_residuals)},
                {"sample_count", r.sample_count}, {"seed", r.seed}};
  return out;
}

Report homogenize_report(const Mat& f, const std::vector<KhomPoint>& curve) {
  Report out{"homogenize", json::object(), row({"k", "energy", "running_min", "converged", "start", "min_det"}), true};
  json pts = json::array();
  for (const auto& p : curve) {
    json j = to_json(p.result);
    j["k"] = p.k;
    j["running_min"] = real(p.running_min);
    pts.push_back(j);
    out.converged = out.converged && p.result.converged;
    out.csv += row({std::to_string(p.k), num(p.result.energy), num(p.running_min), flag(p.result.converged),
                    p.result.start_label, num(p.result.min_det)});
  }
  out.result = {{"F", to_json(f)}, {"curve", pts}, {"energy", curve.empty() ? json(nullptr) : real(curve.back().running_min)}};
  return out;
}

Report quad_homogenize_report(const SymTensor4& l_hom, const Mat* g) {
  Report out{"quad-homogenize", json::object(), row({"i", "j", "k", "l", "value"}), true};
  const int n = l_hom.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out.csv += row({std::to_string(i), std::to_string(j), std::to_string(k), std::to_string(l),
                          num(l_hom.at(i, j, k, l))});
  out.result = {{"l_hom", to_json(l_hom)}};
  if (g) {
    out.result["G"] = to_json(*g);
    out.result["q_hom"] = real(quad_value(l_hom, *g));
  }
  return out;
}

Report expansion_report(const ExpansionReport& r) {
  Report out{"expand", json::object(), row({"h", "k", "energy", "residual"}), true};
  for (std::size_t i = 0; i < r.h_list.size(); ++i) {
    out.csv += row({num(r.h_list[i]), std::to_string(r.k), num(r.khom_values[i]), num(r.residuals[i])});
    out.converged = out.converged && r.converged[i];
  }
  out.result = {{"G", to_json(r.g)},
                {"k", r.k},
                {"res", r.res},
                {"h", reals(r.h_list)},
                {"khom", reals(r.khom_values)},
                {"converged", r.converged},
                {"start", r.start_labels},
                {"q_hom", real(r.qhom_value)},
                {"residuals", reals(r.residuals)},
                {"decay_ratios", reals(r.decay_ratios)},
                {"upper_slack", reals(r.upper_slack)},
                {"residuals_decreasing", r.residuals_decreasing()},
                {"in_class", r.in_class}};
  return out;
}

Report diagram_report(const DiagramReport& r) {
  Report out{"diagram", json::object(), row({"path", "eps", "h", "energy", "converged"}), true};
  json rows = json::array();
  for (const auto& d : r.rows) {
    rows.push_back({{"path", d.path}, {"eps", real(d.eps)}, {"h", real(d.h)}, {"energy", real(d.energy)}, {"converged", d.converged}});
    out.csv += row({d.path, num(d.eps), num(d.h), num(d.energy), flag(d.converged)});
    out.converged = out.converged && d.converged;
  }
  out.result = {{"rows", rows},
                {"eps", reals(r.eps_list)},
                {"h", reals(r.h_list)},
                {"limit_13", real(r.limit_13)},
                {"limit_24", real(r.limit_24)},
                {"i0", real(r.i0)},
                {"defect", real(r.defect)},
                {"relative_defect", real(r.relative_defect)},
                {"monotone_13", r.monotone_13},
                {"monotone_24", r.monotone_24},
                {"surrogate_fit_error", real(r.surrogate_fit_error)}};
  return out;
}

Report counterexample1_report(const Counterexample1Report& r) {
  Report out{"counterexample1", json::object(),
             row({"delta", "k", "energy", "ratio", "start", "converged", "min_det"}), true};
  json rows = json::array();
  for (const auto& x : r.rows) {
    rows.push_back({{"delta", real(x.delta)},   {"k", x.k},           {"energy", real(x.energy)},
                    {"ratio", real(x.ratio)},   {"start", x.start_label}, {"converged", x.converged},
                    {"min_det", real(x.min_det)}});
    out.csv += row({num(x.delta), std::to_string(x.k), num(x.energy), num(x.ratio), x.start_label, flag(x.converged),
                    num(x.min_det)});
    out.converged = out.converged && x.converged;
  }
  out.result = {{"alpha", real(r.alpha)},
                {"res", r.res},
                {"q_stiff", real(r.q_stiff)},
                {"q_stiff_alpha10", real(r.q_stiff_alpha10)},
                {"stiff_variation", real(r.stiff_variation)},
                {"delta", reals(r.delta_list)},
                {"k", r.k_list},
                {"rows", rows},
                {"bound_c", real(r.bound_c)},
                {"f_delta", reals(r.f_delta)},
                {"f_monotone", r.f_monotone},
                {"f_convex", r.f_convex}};
  return out;
}

Report commutativity_report(const CommutativityVerdict& v) {
  Report out{"counterexample2", json::object(), row({"h", "k", "energy", "increment", "converged"}), true};
  auto emit = [&](const KExpansion& e, int k) {
    for (std::size_t i = 0; i < v.h_list.size() && i < e.energies.size(); ++i) {
      const bool c = i < e.converged.size() ? static_cast<bool>(e.converged[i]) : true;
      out.csv += row({num(v.h_list[i]), std::to_string(k), num(e.energies[i]), num(e.energies[i] - e.base), flag(c)});
    }
  };
  json per_k = json::array();
  for (const auto& e : v.per_k) {
    per_k.push_back(expansion_json(e));
    emit(e, e.k);
    for (bool c : e.converged) out.converged = out.converged && c;
  }
  emit(v.multicell, 0);
  out.result = {{"G", to_json(v.g)},        {"k", v.k_list},
                {"h", reals(v.h_list)},     {"per_k", per_k},
                {"multicell", expansion_json(v.multicell)}, {"margins", reals(v.margins)},
                {"verdict", to_string(v.verdict)},          {"reason", v.reason}};
  return out;
}

Report splitting_report(const SplittingReport& r) {
  Report out{"splitting", json::object(), row({"case", "full", "slab", "rod", "defect", "bound"}), true};
  json rows = json::array();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& x = r.rows[i];
    rows.push_back({{"F", to_json(x.f)},
                    {"full", to_json(x.full)},
                    {"slab", to_json(x.slab)},
                    {"rod", to_json(x.rod)},
                    {"defect", real(x.defect)}});
    out.csv += row({std::to_string(i), num(x.full.energy), num(x.slab.energy), num(x.rod.energy), num(x.defect), num(r.bound)});
    out.converged = out.converged && x.full.converged && x.slab.converged && x.rod.converged;
  }
  out.result = {{"s", real(r.s)}, {"rho", real(r.rho)}, {"k", r.k},          {"res", r.res},
                {"bound", real(r.bound)}, {"rows", rows}, {"all_pass", r.all_pass()}};
  return out;
}

std::string render_json(const Report& report, const nlohmann::json& config) {
  // ordered_json keeps the envelope keys in a fixed, readable order.
  nlohmann::ordered_json doc;
  doc["schema"] = kReportSchema;
  doc["command"] = report.command;
  doc["config"] = config;
  doc["converged"] = report.converged;
  doc["result"] = report.result;
  return doc.dump(2) + "\n";
}

}  // namespace elhom
