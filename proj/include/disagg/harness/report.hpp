#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "json.hpp"

#include "disagg/core/error.hpp"
#include "disagg/harness/config.hpp"
#include "disagg/harness/experiment.hpp"
#include "disagg/io/csv.hpp"

namespace disagg::harness {

inline constexpr const char* report_schema = "disagg.report/1";

/// v rounded to 12 significant digits so reports compare byte for byte; null if not finite.
inline json fixed(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

inline json fixed(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(fixed(x));
  return a;
}

struct ReportOptions {
  bool include_timing = false;  // wall-clock time breaks byte-identical reruns
  bool include_curves = false;
};

inline json report_to_json(const ReplicationReport& r, const ReportOptions& opt = {}) {
  json j;
  j["schema"] = report_schema;
  j["spec"] = spec_to_json(r.spec);
  j["estimator"] = {{"kn", r.kn}, {"alpha", fixed(r.alpha)}, {"gamma", fixed(r.spec.estimator.gamma)}};
  j["method"] = r.method;
  j["replications"] = {{"requested", r.spec.M}, {"succeeded", r.succeeded}, {"failed", r.failed},
                       {"threshold_exceeded", r.threshold_exceeded()}};
  json reasons = json::object();
  for (const auto& [msg, count] : r.failure_reasons) reasons[msg] = count;
  j["replications"]["failure_reasons"] = reasons;
  j["warnings"] = r.warnings;
  j["mise"] = r.curves.empty() ? json(nullptr) : fixed(r.mise);
  j["ise"] = fixed(r.ise);

  json grid = json::object();
  grid["x"] = fixed(r.grid);
  grid["true_phi"] = fixed(r.true_phi);
  const char* names[] = {"q05", "q25", "q50", "q75", "q95"};
  for (int q = 0; q < 5; ++q) {
    std::vector<double> col;
    for (const auto& b : r.boxplot) col.push_back(b[q]);
    grid[names[q]] = fixed(col);
  }
  j["boxplot"] = grid;

  json points = json::array();
  for (const auto& p : r.points) {
    json pj;
    pj["x"] = fixed(p.x);
    pj["true_phi"] = fixed(p.true_phi);
    pj["mean"] = fixed(p.mean);
    pj["variance"] = fixed(p.variance);
    pj["samples"] = fixed(p.samples);
    if (p.normality) {
      pj["shapiro_wilk"] = {{"W", fixed(p.normality->w)}, {"p", fixed(p.normality->p)}};
    } else {
      pj["shapiro_wilk"] = {{"W", nullptr}, {"p", nullptr}, {"note", p.normality_note}};
    }
    json hist = json::array();
    for (const auto& b : p.histogram) hist.push_back({{"lo", fixed(b.lo)}, {"hi", fixed(b.hi)}, {"count", b.count}});
    pj["histogram"] = hist;
    points.push_back(pj);
  }
  j["points"] = points;

  if (r.slope) {
    const auto& s = *r.slope;
    j["variance_slope"] = {{"x", fixed(s.x)},
                           {"n", s.n},
                           {"variance", fixed(s.variance)},
                           {"failed", s.failed},
                           {"gamma_hat", fixed(s.gamma_hat)},
                           {"intercept", fixed(s.intercept)},
                           {"r_squared", fixed(s.r_squared)}};
  } else {
    j["variance_slope"] = nullptr;
  }
  if (opt.include_curves) {
    json curves = json::array();
    for (const auto& c : r.curves) curves.push_back(fixed(c));
    j["curves"] = curves;
  }
  if (opt.include_timing) j["timing"] = {{"seconds", r.seconds}};
  return j;
}

inline void write_fig1_boxplot(std::ostream& out, const ReplicationReport& r) {
  out << "x,true_phi,q05,q25,q50,q75,q95\n";
  for (std::size_t i = 0; i < r.boxplot.size(); ++i) {
    out << io::format_double(r.grid[i]) << ',' << io::format_double(r.true_phi[i]);
    for (double q : r.boxplot[i]) out << ',' << io::format_double(q);
    out << '\n';
  }
}

inline void write_fig2_qq(std::ostream& out, const ReplicationReport& r) {
  out << "x,theoretical,sample\n";
  for (const auto& p : r.points) {
    for (const auto& [t, s] : p.qq) out << io::format_double(p.x) << ',' << io::format_double(t) << ',' << io::format_double(s) << '\n';
  }
}

inline void write_fig2_histogram(std::ostream& out, const ReplicationReport& r) {
  out << "x,lo,hi,count\n";
  for (const auto& p : r.points) {
    for (const auto& b : p.histogram) {
      out << io::format_double(p.x) << ',' << io::format_double(b.lo) << ',' << io::format_double(b.hi) << ','
          << b.count << '\n';
    }
  }
}

/// Regression points and fitted line; empty apart from the header without a slope run.
inline void write_fig3_loglog(std::ostream& out, const ReplicationReport& r) {
  out << "n,log_n,variance,log_variance,fitted_log_variance\n";
  if (!r.slope) return;
  const auto& s = *r.slope;
  for (std::size_t i = 0; i < s.n.size(); ++i) {
    const double ln = std::log(static_cast<double>(s.n[i]));
    out << s.n[i] << ',' << io::format_double(ln) << ',' << io::format_double(s.variance[i]) << ','
        << io::format_double(std::log(s.variance[i])) << ',' << io::format_double(s.intercept - s.gamma_hat * ln)
        << '\n';
  }
}

/// report.json plus the figure CSVs in `dir`.
inline void write_report_files(const std::filesystem::path& dir, const ReplicationReport& r,
                               const ReportOptions& opt = {}) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCode::io, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("report.json");
    f << report_to_json(r, opt).dump(2) << '\n';
  }
  {
    auto f = open("fig1_boxplot.csv");
    write_fig1_boxplot(f, r);
  }
  {
    auto f = open("fig2_qq.csv");
    write_fig2_qq(f, r);
  }
  {
    auto f = open("fig2_histogram.csv");
    write_fig2_histogram(f, r);
  }
  {
    auto f = open("fig3_loglog.csv");
    write_fig3_loglog(f, r);
  }
}

}  // namespace disagg::harness
