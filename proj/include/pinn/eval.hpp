// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Accuracy metrics and result emission: L2 relative error against the
// reference solution, per-run record streams, cross-method summaries, and
// the CSV/SVG artifacts the report command renders.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pinn/pde.hpp"
#include "pinn/sampling.hpp"

namespace pinn {

// One evaluation snapshot per cycle (cycle 0 is the pre-resampling state).
struct RunRecord {
  std::size_t cycle = 0;
  std::size_t n_train = 0;
  f64 test_loss = 0.0;
  f64 l2_rel_error = 0.0;
  f64 seconds = 0.0;
  bool failed = false;
};

// sqrt( sum (p - u)^2 / sum u^2 ), exactly as written.
inline f64 l2_relative_error(std::span<const f64> predictions,
                             std::span<const f64> truths) {
  if (predictions.size() != truths.size() || predictions.empty())
    throw std::invalid_argument("l2_relative_error: need equal, nonzero sizes");
  f64 num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const f64 d = predictions[i] - truths[i];
    num += d * d;
    den += truths[i] * truths[i];
  }
  if (den <= 0.0)
    throw std::domain_error("l2_relative_error: reference is identically zero");
  return std::sqrt(num / den);
}

// Fixed evaluation apparatus shared by every method on a problem: the
// ground-truth comparison set and a held-out uniform set for the reported
// test loss. Both are independent of all training seeds so no method can
// optimize its own yardstick.
class Evaluator {
 public:
  Evaluator(const PdeProblem& pb, MlpSpec spec, const GroundTruthGrid* grid,
            std::size_t n_eval, std::size_t n_test, std::uint64_t seed)
      : pb_(pb), spec_(std::move(spec)) {
    if (pb_.gridded()) {
      if (grid == nullptr)
        throw ConfigError("problem '" + pb_.name +
                          "' needs a ground-truth grid for evaluation");
      // All grid nodes interior to the domain; the final time stays in
      // (no constraint lives there), the initial slice and the spatial
      // boundary are exact by the ansatz and carry no information.
      for (std::size_t i = 0; i < grid->xs.size(); ++i) {
        const f64 x = grid->xs[i];
        if (!(x > pb_.domain.x0 && x < pb_.domain.x1)) continue;
        for (std::size_t j = 0; j < grid->ts.size(); ++j) {
          const f64 t = grid->ts[j];
          if (!(t > pb_.domain.t0)) continue;
          eval_pts_.push_back({x, t});
          truth_.push_back(grid->at(i, j));
        }
      }
    } else {
      eval_pts_ = uniform_sample(pb_.domain, n_eval, seed);
      truth_.resize(eval_pts_.size());
      for (std::size_t i = 0; i < eval_pts_.size(); ++i)
        truth_[i] = exact_solution(pb_, eval_pts_[i]);
    }
    test_pts_ = uniform_sample(pb_.domain, n_test, seed + 1);
  }

  const std::vector<Point2>& eval_points() const { return eval_pts_; }
  const std::vector<f64>& truth() const { return truth_; }
  const std::vector<Point2>& test_points() const { return test_pts_; }

  // (L2 relative error, held-out mean residual loss).
  std::pair<f64, f64> operator()(std::span<const f64> theta) const {
    std::vector<f64> pred(eval_pts_.size());
    for (std::size_t i = 0; i < eval_pts_.size(); ++i)
      pred[i] = surrogate(pb_, spec_, theta, eval_pts_[i]).v;
    LossEngine eng(pb_, spec_, theta);
    return {l2_relative_error(pred, truth_), eng.mean_loss(test_pts_)};
  }

 private:
  PdeProblem pb_;
  MlpSpec spec_;
  std::vector<Point2> eval_pts_, test_pts_;
  std::vector<f64> truth_;
};

inline std::pair<f64, f64> evaluate(const PdeProblem& pb, const MlpSpec& spec,
                                    std::span<const f64> theta,
                                    const GroundTruthGrid* grid,
                                    std::size_t n_eval, std::uint64_t seed) {
  return Evaluator(pb, spec, grid, n_eval, /*n_test=*/5000, seed)(theta);
}

// ---------------------------------------------------------------------------
// Record streams.

inline void save_records(const std::string& path,
                         std::span<const RunRecord> records) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write records file: " + path);
  std::fprintf(f, "cycle,n_train,test_loss,l2_rel_error,seconds,failed\n");
  for (const auto& r : records)
    std::fprintf(f, "%zu,%zu,%.17g,%.17g,%.17g,%d\n", r.cycle, r.n_train,
                 r.test_loss, r.l2_rel_error, r.seconds, r.failed ? 1 : 0);
  if (std::fclose(f) != 0) throw IoError("short write: " + path);
}

inline std::vector<RunRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("records file not found: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "cycle,n_train,test_loss,l2_rel_error,seconds,failed")
    throw IoError("bad records header in " + path);
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RunRecord r;
    int failed = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lg,%lg,%lg,%d", &r.cycle,
                    &r.n_train, &r.test_loss, &r.l2_rel_error, &r.seconds,
                    &failed) != 6)
      throw IoError("bad records row in " + path + ": " + line);
    r.failed = failed != 0;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation.

// One run's worth of context for the summary tables.
struct RunSeries {
  std::string problem, method, mode;
  std::uint64_t seed = 0;
  std::vector<RunRecord> records;

  bool completed() const {
    return !records.empty() &&
           std::none_of(records.begin(), records.end(),
                        [](const RunRecord& r) { return r.failed; });
  }
};

struct MethodSummary {
  std::string problem, method, mode;
  std::size_t seed_count = 0;   // completed runs entering the statistics
  std::size_t failed_count = 0;
  f64 mean_l2 = 0.0, std_l2 = 0.0;
  f64 mean_test_loss = 0.0, std_test_loss = 0.0;
  std::vector<f64> mean_l2_series;  // per cycle over completed runs
  std::vector<f64> std_l2_series;
  std::vector<f64> ratio_series;    // vs the random baseline, if present
};

struct ComparisonSummary {
  std::vector<MethodSummary> methods;
};

namespace detail {

inline std::pair<f64, f64> mean_std(std::span<const f64> v) {
  if (v.empty()) return {0.0, 0.0};
  f64 m = 0.0;
  for (f64 x : v) m += x;
  m /= static_cast<f64>(v.size());
  if (v.size() < 2) return {m, 0.0};
  f64 s = 0.0;
  for (f64 x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<f64>(v.size() - 1))};
}

}  // namespace detail

// Elementwise ratio of the mean-over-seeds series; non-positive or
// non-finite baseline entries flag the cycle with a NaN.
inline std::vector<f64> ratio_to_baseline(
    const std::vector<std::vector<f64>>& method_series,
    const std::vector<std::vector<f64>>& random_series) {
  const auto mean_series = [](const std::vector<std::vector<f64>>& s) {
    std::vector<f64> m;
    if (s.empty()) return m;
    const std::size_t n = s.front().size();
    for (const auto& run : s)
      if (run.size() != n)
        throw std::invalid_argument("ratio_to_baseline: ragged cycle counts");
    m.assign(n, 0.0);
    for (const auto& run : s)
      for (std::size_t i = 0; i < n; ++i) m[i] += run[i];
    for (auto& x : m) x /= static_cast<f64>(s.size());
    return m;
  };
  const auto ms = mean_series(method_series);
  const auto rs = mean_series(random_series);
  if (ms.size() != rs.size())
    throw std::invalid_argument("ratio_to_baseline: cycle counts differ");
  std::vector<f64> out(ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i)
    out[i] = (std::isfinite(rs[i]) && rs[i] > 0.0)
                 ? ms[i] / rs[i]
                 : std::numeric_limits<f64>::quiet_NaN();
  return out;
}

inline ComparisonSummary summarize(std::span<const RunSeries> runs) {
  std::map<std::tuple<std::string, std::string, std::string>,
           std::vector<const RunSeries*>>
      cells;
  for (const auto& r : runs)
    cells[{r.problem, r.method, r.mode}].push_back(&r);

  const auto l2_series = [](const RunSeries& r) {
    std::vector<f64> s;
    s.reserve(r.records.size());
    for (const auto& rec : r.records) s.push_back(rec.l2_rel_error);
    return s;
  };

  ComparisonSummary out;
  for (const auto& [key, group] : cells) {
    MethodSummary ms;
    std::tie(ms.problem, ms.method, ms.mode) = key;
    std::vector<f64> finals, final_losses;
    std::vector<std::vector<f64>> series;
    for (const RunSeries* r : group) {
      if (!r->completed()) {
        ++ms.failed_count;
        continue;
      }
      finals.push_back(r->records.back().l2_rel_error);
      final_losses.push_back(r->records.back().test_loss);
      series.push_back(l2_series(*r));
    }
    ms.seed_count = finals.size();
    std::tie(ms.mean_l2, ms.std_l2) = detail::mean_std(finals);
    std::tie(ms.mean_test_loss, ms.std_test_loss) =
        detail::mean_std(final_losses);
    if (!series.empty()) {
      const std::size_t n = series.front().size();
      bool ragged = false;
      for (const auto& s : series) ragged = ragged || s.size() != n;
      if (!ragged) {
        ms.mean_l2_series.resize(n);
        ms.std_l2_series.resize(n);
        std::vector<f64> col(series.size());
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t k = 0; k < series.size(); ++k) col[k] = series[k][i];
          std::tie(ms.mean_l2_series[i], ms.std_l2_series[i]) =
              detail::mean_std(col);
        }
      }
    }
    out.methods.push_back(std::move(ms));
  }

  // Ratio-to-random per (problem, mode) cell.
  for (auto& ms : out.methods) {
    const auto it = cells.find({ms.problem, "random", ms.mode});
    if (it == cells.end() || ms.mean_l2_series.empty()) continue;
    std::vector<std::vector<f64>> mine, rnd;
    for (const RunSeries* r : cells[{ms.problem, ms.method, ms.mode}])
      if (r->completed()) mine.push_back(l2_series(*r));
    for (const RunSeries* r : it->second)
      if (r->completed()) rnd.push_back(l2_series(*r));
    if (!mine.empty() && !rnd.empty() &&
        mine.front().size() == rnd.front().size())
      ms.ratio_series = ratio_to_baseline(mine, rnd);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Emission.

namespace detail {

// Minimal self-contained line plot: log-scale y, one polyline per series,
// optional shaded band per series (drawn first so lines stay visible).
struct SvgSeries {
  std::string label;
  std::vector<f64> y;      // per cycle
  std::vector<f64> band;   // half-width around y (same units), may be empty
};

inline const char* svg_color(std::size_t i) {
  static const char* palette[] = {"#4063d8", "#c93a2f", "#389826",
                                  "#9558b2", "#b8860b", "#17becf",
                                  "#777777"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series,
                           bool log_scale) {
  const f64 W = 760, H = 480, ml = 70, mr = 170, mt = 40, mb = 50;
  const f64 pw = W - ml - mr, ph = H - mt - mb;

  std::size_t n_max = 0;
  f64 ymin = std::numeric_limits<f64>::infinity(), ymax = -ymin;
  for (const auto& s : series) {
    n_max = std::max(n_max, s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const f64 b = i < s.band.size() ? s.band[i] : 0.0;
      const f64 lo = log_scale ? std::max(s.y[i] - b, 1e-300) : s.y[i] - b;
      const f64 hi = s.y[i] + b;
      if (std::isfinite(lo) && lo > 0.0) ymin = std::min(ymin, lo);
      if (std::isfinite(hi)) {
        ymax = std::max(ymax, hi);
        if (!log_scale) ymin = std::min(ymin, lo);
      }
    }
  }
  if (!(ymin < ymax)) {
    ymin = log_scale ? 1e-1 : 0.0;
    ymax = 1.0;
  }
  const f64 lo_m = log_scale ? std::log10(ymin) : ymin;
  const f64 hi_m = log_scale ? std::log10(ymax) : ymax;
  const f64 pad = 0.05 * std::max(hi_m - lo_m, 1e-12);
  const f64 y0 = lo_m - pad, y1 = hi_m + pad;

  const auto xpix = [&](std::size_t i) {
    const f64 frac = n_max > 1 ? static_cast<f64>(i) / (n_max - 1.0) : 0.5;
    return ml + frac * pw;
  };
  const auto ypix = [&](f64 v) {
    const f64 m = log_scale ? std::log10(std::max(v, 1e-300)) : v;
    return mt + (y1 - m) / (y1 - y0) * ph;
  };

  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write plot: " + path);
  std::fprintf(f,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" "
               "height=\"%g\" viewBox=\"0 0 %g %g\">\n",
               W, H, W, H);
  std::fprintf(f, "<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n", W, H);
  std::fprintf(f,
               "<text x=\"%g\" y=\"24\" font-family=\"sans-serif\" "
               "font-size=\"15\" text-anchor=\"middle\">%s</text>\n",
               ml + pw / 2, title.c_str());

  // Axes and y ticks (decades when log-scaled).
  std::fprintf(f,
               "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" "
               "fill=\"none\" stroke=\"#333\"/>\n",
               ml, mt, pw, ph);
  if (log_scale) {
    for (int d = static_cast<int>(std::floor(y0));
         d <= static_cast<int>(std::ceil(y1)); ++d) {
      const f64 yy = mt + (y1 - d) / (y1 - y0) * ph;
      if (yy < mt || yy > mt + ph) continue;
      std::fprintf(f,
                   "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                   "stroke=\"#ddd\"/>\n",
                   ml, yy, ml + pw, yy);
      std::fprintf(f,
                   "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
                   "font-size=\"11\" text-anchor=\"end\">1e%d</text>\n",
                   ml - 6, yy + 4, d);
    }
  } else {
    for (int k = 0; k <= 4; ++k) {
      const f64 v = y0 + (y1 - y0) * k / 4.0;
      const f64 yy = mt + (y1 - v) / (y1 - y0) * ph;
      std::fprintf(f,
                   "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                   "stroke=\"#ddd\"/>\n",
                   ml, yy, ml + pw, yy);
      std::fprintf(f,
                   "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
                   "font-size=\"11\" text-anchor=\"end\">%.3g</text>\n",
                   ml - 6, yy + 4, v);
    }
  }
  std::fprintf(f,
               "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
               "font-size=\"12\" text-anchor=\"middle\">cycle</text>\n",
               ml + pw / 2, H - 14);
  std::fprintf(f,
               "<text x=\"18\" y=\"%g\" font-family=\"sans-serif\" "
               "font-size=\"12\" text-anchor=\"middle\" "
               "transform=\"rotate(-90 18 %g)\">%s</text>\n",
               mt + ph / 2, mt + ph / 2, y_label.c_str());

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (!s.band.empty() && s.band.size() == s.y.size()) {
      std::string pts;
      char buf[64];
      for (std::size_t i = 0; i < s.y.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", xpix(i),
                      ypix(s.y[i] + s.band[i]));
        pts += buf;
      }
      for (std::size_t i = s.y.size(); i-- > 0;) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", xpix(i),
                      ypix(std::max(s.y[i] - s.band[i],
                                    log_scale ? s.y[i] * 1e-3 : s.y[i] - s.band[i])));
        pts += buf;
      }
      std::fprintf(f,
                   "<polygon points=\"%s\" fill=\"%s\" fill-opacity=\"0.15\" "
                   "stroke=\"none\"/>\n",
                   pts.c_str(), svg_color(si));
    }
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    std::string pts;
    char buf[64];
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", xpix(i), ypix(s.y[i]));
      pts += buf;
    }
    std::fprintf(f,
                 "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" "
                 "stroke-width=\"1.8\"/>\n",
                 pts.c_str(), svg_color(si));
    const f64 ly = mt + 18.0 * (static_cast<f64>(si) + 1.0);
    std::fprintf(f,
                 "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                 "stroke=\"%s\" stroke-width=\"2\"/>\n",
                 W - mr + 12, ly - 4, W - mr + 34, ly - 4, svg_color(si));
    std::fprintf(f,
                 "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
                 "font-size=\"12\">%s</text>\n",
                 W - mr + 40, ly, s.label.c_str());
  }
  std::fprintf(f, "</svg>\n");
  if (std::fclose(f) != 0) throw IoError("short write: " + path);
}

}  // namespace detail

// Writes summary.csv plus convergence and ratio plots into outdir.
// formats: any subset of {"csv", "svg"}; empty means both.
inline void emit(const ComparisonSummary& summary, const std::string& outdir,
                 const std::vector<std::string>& formats = {}) {
  const auto wants = [&](const std::string& fmt) {
    return formats.empty() ||
           std::find(formats.begin(), formats.end(), fmt) != formats.end();
  };
  std::filesystem::create_directories(outdir);

  if (wants("csv")) {
    const auto path = (std::filesystem::path(outdir) / "summary.csv").string();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot write summary: " + path);
    std::fprintf(f,
                 "problem,method,mode,seed_count,failed_count,mean_l2,std_l2,"
                 "mean_test_loss,std_test_loss\n");
    for (const auto& m : summary.methods)
      std::fprintf(f, "%s,%s,%s,%zu,%zu,%.17g,%.17g,%.17g,%.17g\n",
                   m.problem.c_str(), m.method.c_str(), m.mode.c_str(),
                   m.seed_count, m.failed_count, m.mean_l2, m.std_l2,
                   m.mean_test_loss, m.std_test_loss);
    if (std::fclose(f) != 0) throw IoError("short write: " + path);
  }

  if (wants("svg")) {
    // One pair of plots per (problem, mode) cell present in the summary.
    std::map<std::pair<std::string, std::string>,
             std::vector<const MethodSummary*>>
        cells;
    for (const auto& m : summary.methods)
      if (!m.mean_l2_series.empty()) cells[{m.problem, m.mode}].push_back(&m);
    for (const auto& [key, group] : cells) {
      const auto& [problem, mode] = key;
      std::vector<detail::SvgSeries> conv, ratio;
      for (const MethodSummary* m : group) {
        detail::SvgSeries s;
        s.label = m->method;
        s.y = m->mean_l2_series;
        s.band = m->std_l2_series;
        conv.push_back(std::move(s));
        if (!m->ratio_series.empty() && m->method != "random") {
          detail::SvgSeries r;
          r.label = m->method;
          r.y = m->ratio_series;
          ratio.push_back(std::move(r));
        }
      }
      // Single-cell summaries get the plain names; sweeps over several
      // problems or modes disambiguate with a suffix.
      const std::string suffix =
          cells.size() == 1 ? "" : "_" + problem + "_" + mode;
      detail::write_svg_plot(
          (std::filesystem::path(outdir) / ("convergence" + suffix + ".svg"))
              .string(),
          problem + " (" + mode + "): L2 relative error",
          "L2 relative error", conv, /*log_scale=*/true);
      if (!ratio.empty())
        detail::write_svg_plot(
            (std::filesystem::path(outdir) / ("ratio" + suffix + ".svg"))
                .string(),
            problem + " (" + mode + "): error ratio to random",
            "ratio to random", ratio, /*log_scale=*/true);
    }
  }
}

}  // namespace pinn
