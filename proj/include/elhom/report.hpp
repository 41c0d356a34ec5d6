#pragma once

// JSON and CSV serialization of the pipeline results. Reports carry no
// timestamps or host data, so equal inputs give byte-identical files.

#include <string>
#include <vector>

#include "json.hpp"

#include "elhom/analysis.hpp"
#include "elhom/domain.hpp"

namespace elhom {

struct Report {
  std::string command;
  nlohmann::json result;
  /// Header line plus one row per record.
  std::string csv;
  /// False when any solve behind the report stopped before its tolerance.
  bool converged = true;
};

inline constexpr int kReportSchema = 1;

nlohmann::json to_json(const Mat& m);
nlohmann::json to_json(const SymTensor4& t);
nlohmann::json to_json(const CellResult& r);
nlohmann::json to_json(const QuadFit& f);

Report validation_report(const ValidationReport& r);
/// CSV columns: k, energy, running_min, converged, start, min_det.
Report homogenize_report(const Mat& f, const std::vector<KhomPoint>& curve);
/// CSV columns: i, j, k, l, value (all n^4 entries).
Report quad_homogenize_report(const SymTensor4& l_hom, const Mat* g);
/// CSV columns: h, k, energy, residual.
Report expansion_report(const ExpansionReport& r);
/// CSV columns: path, eps, h, energy, converged.
Report diagram_report(const DiagramReport& r);
/// CSV columns: delta, k, energy, ratio, start, converged, min_det.
Report counterexample1_report(const Counterexample1Report& r);
/// CSV columns: h, k, energy, increment, converged (k = 0 is the running minimum).
Report commutativity_report(const CommutativityVerdict& v);
/// CSV columns: case, full, slab, rod, defect, bound.
Report splitting_report(const SplittingReport& r);

/// {"schema": 1, "command": ..., "config": config, "converged": ..., "result": ...}
/// pretty printed with two-space indent and a trailing newline.
std::string render_json(const Report& report, const nlohmann::json& config);

}  // namespace elhom
