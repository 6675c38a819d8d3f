#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "greennas/ingest/schema.hpp"
#include "greennas/nas/evolve.hpp"
#include "greennas/report/csv.hpp"
#include "greennas/report/svg.hpp"
#include "greennas/robustness/robustness.hpp"
#include "greennas/transfer/transfer.hpp"

namespace greennas::report {

// One evaluated model or baseline. Baselines have no params, latency or size
// (params 0, latency NaN, size 0).
struct ComparisonRow {
  std::string model;
  std::int64_t params = 0;
  double rmse = 0.0;
  double latency_ms = std::numeric_limits<double>::quiet_NaN();
  std::uintmax_t size_bytes = 0;
};

inline CsvTable comparison_csv(const std::vector<ComparisonRow>& rows) {
  CsvTable t({"model", "params", "rmse", "latency_ms", "size_bytes"});
  for (const auto& r : rows)
    t.add({r.model, std::to_string(r.params), fmt(r.rmse), std::isnan(r.latency_ms) ? "" : fmt(r.latency_ms),
           r.size_bytes ? std::to_string(r.size_bytes) : ""});
  return t;
}

// Three panels: RMSE, parameter count (log scale) and latency.
inline Svg comparison_svg(const std::vector<ComparisonRow>& rows) {
  require(!rows.empty(), "comparison report needs at least one model");
  std::vector<BarRow> err, params, lat;
  for (const auto& r : rows) {
    err.push_back({r.model, r.rmse});
    if (r.params > 0) params.push_back({r.model, static_cast<double>(r.params)});
    if (!std::isnan(r.latency_ms)) lat.push_back({r.model, r.latency_ms});
  }
  Svg svg(1200, 420);
  bar_panel(svg, err, 70, 40, 300, 280, "Test RMSE", "RMSE (scaled)", false);
  if (!params.empty()) bar_panel(svg, params, 470, 40, 300, 280, "Parameters", "parameters", true);
  if (!lat.empty()) bar_panel(svg, lat, 870, 40, 300, 280, "Inference latency", "ms per window", false);
  return svg;
}

struct Representative {
  std::size_t index = 0;
  std::string label;
};

// Lowest RMSE, fewest parameters, and the member closest to the ideal point
// after normalizing RMSE and log-parameters to [0, 1]. Input sorted or not.
inline std::vector<Representative> representatives(const std::vector<nas::Individual>& front) {
  require(!front.empty(), "representatives: empty front");
  std::size_t best = 0, small = 0, knee = 0;
  double rlo = front[0].objectives.val_rmse, rhi = rlo;
  double plo = std::log10(static_cast<double>(std::max<std::int64_t>(1, front[0].objectives.param_count))), phi = plo;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const auto& o = front[i].objectives;
    if (o.val_rmse < front[best].objectives.val_rmse) best = i;
    if (o.param_count < front[small].objectives.param_count) small = i;
    const double lp = std::log10(static_cast<double>(std::max<std::int64_t>(1, o.param_count)));
    rlo = std::min(rlo, o.val_rmse);
    rhi = std::max(rhi, o.val_rmse);
    plo = std::min(plo, lp);
    phi = std::max(phi, lp);
  }
  double knee_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < front.size(); ++i) {
    const auto& o = front[i].objectives;
    const double r = rhi > rlo ? (o.val_rmse - rlo) / (rhi - rlo) : 0.0;
    const double lp = std::log10(static_cast<double>(std::max<std::int64_t>(1, o.param_count)));
    const double p = phi > plo ? (lp - plo) / (phi - plo) : 0.0;
    if (r * r + p * p < knee_d) {
      knee_d = r * r + p * p;
      knee = i;
    }
  }
  std::vector<Representative> out{{best, "accuracy"}};
  if (knee != best && knee != small) out.push_back({knee, "balanced"});
  if (small != best) out.push_back({small, "efficiency"});
  return out;
}

inline CsvTable front_csv(const std::vector<nas::Individual>& front) {
  CsvTable t({"genome", "arch", "val_rmse", "params", "depth", "rank", "crowding", "highlight"});
  std::vector<std::string> tag(front.size());
  if (!front.empty())
    for (const auto& r : representatives(front)) tag[r.index] = r.label;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const auto& ind = front[i];
    t.add({nas::genome_string(ind.genome), nas::canonical_key(ind.genome), fmt(ind.objectives.val_rmse),
           std::to_string(ind.objectives.param_count), std::to_string(ind.objectives.depth), std::to_string(ind.rank),
           fmt(ind.crowding), tag[i]});
  }
  return t;
}

// RMSE against parameters (log x). Highlighted members are drawn larger and labelled.
inline Svg pareto_svg(const std::vector<nas::Individual>& front) {
  require(!front.empty(), "pareto plot needs a nonempty front");
  double plo = std::numeric_limits<double>::infinity(), phi = 0, rlo = plo, rhi = -plo;
  for (const auto& ind : front) {
    const auto p = static_cast<double>(std::max<std::int64_t>(1, ind.objectives.param_count));
    plo = std::min(plo, p);
    phi = std::max(phi, p);
    rlo = std::min(rlo, ind.objectives.val_rmse);
    rhi = std::max(rhi, ind.objectives.val_rmse);
  }
  Svg svg(720, 480);
  const Axis x = log_axis(plo, phi, 80, 680);
  const Axis y = linear_axis(rlo, rhi, 420, 40, false);
  draw_axes(svg, x, y, "parameters", "validation RMSE");
  svg.text(380, 24, "Pareto front", "middle", 14, " font-weight=\"bold\"");
  std::vector<std::string> tag(front.size());
  for (const auto& r : representatives(front)) tag[r.index] = r.label;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const auto& o = front[i].objectives;
    const double px = x(static_cast<double>(std::max<std::int64_t>(1, o.param_count))), py = y(o.val_rmse);
    const std::string data = " class=\"point\" data-arch=\"" + xml_escape(nas::canonical_key(front[i].genome)) +
                             "\" data-params=\"" + std::to_string(o.param_count) + "\" data-rmse=\"" +
                             fmt(o.val_rmse) + "\"";
    if (tag[i].empty()) {
      svg.circle(px, py, 4, "#1f77b4", data);
    } else {
      svg.circle(px, py, 7, "#d62728", data + " stroke=\"black\"");
      svg.text(px + 9, py - 6, tag[i] + ": " + nas::genome_string(front[i].genome), "start", 10);
    }
  }
  return svg;
}

inline CsvTable transfer_csv(const transfer::TransferReport& rep) {
  CsvTable t({"fraction", "samples", "train_windows", "scratch_rmse_mean", "scratch_rmse_std", "transfer_rmse_mean",
              "transfer_rmse_std", "improvement_pct", "t_statistic", "p_value", "wilcoxon_p_value", "trials"});
  for (const auto& r : rep.rows)
    t.add({fmt(r.fraction), std::to_string(r.samples), std::to_string(r.train_windows), fmt(r.scratch_mean),
           fmt(r.scratch_std), fmt(r.transfer_mean), fmt(r.transfer_std), fmt(r.improvement_pct),
           fmt(r.ttest.statistic), fmt(r.ttest.p_value), fmt(r.wilcoxon.p_value), std::to_string(rep.trials)});
  return t;
}

// Mean RMSE per fraction for both arms, with one-std error bars.
inline Svg transfer_svg(const transfer::TransferReport& rep) {
  require(!rep.rows.empty(), "transfer plot needs at least one fraction");
  double flo = 1, fhi = 0, lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const auto& r : rep.rows) {
    flo = std::min(flo, r.fraction);
    fhi = std::max(fhi, r.fraction);
    lo = std::min({lo, r.scratch_mean - r.scratch_std, r.transfer_mean - r.transfer_std});
    hi = std::max({hi, r.scratch_mean + r.scratch_std, r.transfer_mean + r.transfer_std});
  }
  Svg svg(640, 440);
  const Axis x = log_axis(flo, fhi, 80, 600);
  const Axis y = linear_axis(lo, hi, 380, 40, false);
  draw_axes(svg, x, y, "fraction of target data", "test RMSE");
  svg.text(340, 24, "Transfer vs scratch (" + rep.arch + ", N=" + std::to_string(rep.trials) + ")", "middle", 13);
  auto series = [&](bool tr, const char* color, const std::string& name, double legend_y) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rep.rows) {
      const double m = tr ? r.transfer_mean : r.scratch_mean, s = tr ? r.transfer_std : r.scratch_std;
      const double px = x(r.fraction);
      pts.emplace_back(px, y(m));
      svg.line(px, y(m - s), px, y(m + s), color, 1.5);
      svg.line(px - 4, y(m - s), px + 4, y(m - s), color, 1.5);
      svg.line(px - 4, y(m + s), px + 4, y(m + s), color, 1.5);
      svg.circle(px, y(m), 3.5, color);
    }
    svg.polyline(pts, color);
    svg.rect(470, legend_y - 9, 12, 12, color);
    svg.text(488, legend_y + 1, name);
  };
  series(false, "#7f7f7f", "scratch", 56);
  series(true, "#1f77b4", "transfer", 74);
  return svg;
}

struct CoverageRow {
  std::string model;
  robustness::ConformalCalibration calibration;
  robustness::Coverage coverage;
};

inline CsvTable coverage_csv(const std::vector<CoverageRow>& rows) {
  std::vector<std::string> header{"model", "alpha", "n_cal"};
  for (const auto& f : kFeatureSchema) header.push_back("coverage_" + std::string(f.name));
  for (const auto& f : kFeatureSchema) header.push_back("q_" + std::string(f.name));
  header.insert(header.end(), {"macro_coverage", "mean_width"});
  CsvTable t(header);
  for (const auto& r : rows) {
    require(r.coverage.per_feature.size() == kNumFeatures && r.calibration.q.size() == kNumFeatures,
            "coverage report expects 8 features");
    std::vector<std::string> row{r.model, fmt(r.calibration.alpha), std::to_string(r.calibration.n_cal)};
    for (double c : r.coverage.per_feature) row.push_back(fmt(c));
    for (double q : r.calibration.q) row.push_back(fmt(q));
    row.push_back(fmt(r.coverage.macro));
    row.push_back(fmt(r.coverage.mean_width));
    t.add(std::move(row));
  }
  return t;
}

inline CsvTable importance_csv(const robustness::ImportanceReport& rep) {
  CsvTable t({"feature", "baseline_rmse", "permuted_rmse_mean", "permuted_rmse_std", "delta", "repeats"});
  for (const auto& f : rep.features)
    t.add({f.feature, fmt(rep.baseline_rmse), fmt(f.permuted_mean), fmt(f.permuted_std), fmt(f.delta),
           std::to_string(rep.repeats)});
  return t;
}

// Horizontal bars of the RMSE increase per feature, largest first.
inline Svg importance_svg(const robustness::ImportanceReport& rep) {
  require(!rep.features.empty(), "importance plot needs features");
  auto feats = rep.features;
  std::stable_sort(feats.begin(), feats.end(), [](const auto& a, const auto& b) { return a.delta > b.delta; });
  double hi = 0, lo = 0;
  for (const auto& f : feats) {
    hi = std::max(hi, f.delta + f.permuted_std);
    lo = std::min(lo, f.delta);
  }
  const double top = 50, row_h = 30;
  const double bottom = top + row_h * static_cast<double>(feats.size());
  Svg svg(680, bottom + 60);
  const Axis x = linear_axis(lo, hi > lo ? hi * 1.05 : lo + 1e-3, 200, 640);
  const Axis y{0, 1, bottom, top};
  draw_axes(svg, x, y, "RMSE increase when permuted", "", true);
  svg.text(400, 28, "Permutation importance", "middle", 14, " font-weight=\"bold\"");
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const double yy = top + row_h * static_cast<double>(i);
    const double x0 = x(0.0), x1 = x(feats[i].delta);
    svg.rect(std::min(x0, x1), yy + 6, std::abs(x1 - x0), row_h - 12, palette(i));
    svg.line(x(feats[i].delta - feats[i].permuted_std), yy + row_h / 2, x(feats[i].delta + feats[i].permuted_std),
             yy + row_h / 2);
    svg.text(192, yy + row_h / 2 + 4, feats[i].feature, "end", 11);
  }
  return svg;
}

inline CsvTable horizon_csv(const robustness::HorizonReport& rep) {
  CsvTable t({"horizon", "rmse", "windows"});
  for (std::size_t h = 0; h < rep.rmse.size(); ++h)
    t.add({std::to_string(h + 1), fmt(rep.rmse[h]), std::to_string(rep.windows)});
  return t;
}

inline Svg horizon_svg(const robustness::HorizonReport& rep) {
  require(!rep.rmse.empty(), "horizon plot needs at least one step");
  Svg svg(640, 420);
  const Axis x = linear_axis(1, static_cast<double>(rep.rmse.size()), 80, 600, false);
  const Axis y = linear_axis(0, *std::max_element(rep.rmse.begin(), rep.rmse.end()) * 1.1, 360, 40);
  draw_axes(svg, x, y, "forecast horizon (hours)", "RMSE (scaled)");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t h = 0; h < rep.rmse.size(); ++h) pts.emplace_back(x(static_cast<double>(h + 1)), y(rep.rmse[h]));
  svg.polyline(pts, "#1f77b4");
  for (const auto& [px, py] : pts) svg.circle(px, py, 3, "#1f77b4");
  return svg;
}

}  // namespace greennas::report
