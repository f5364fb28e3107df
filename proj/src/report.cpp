#include "wvp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "wvp/csv.hpp"

namespace wvp::report {

namespace {

json number(double v) { return is_missing(v) || !std::isfinite(v) ? json(nullptr) : json(v); }

json estimate_json(const ParameterEstimate& p) { return {{"estimate", number(p.estimate)}, {"se", number(p.se)}}; }

std::string fx(double v, int digits = 2) { return csv::format_fixed(v, digits); }

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Maps data coordinates onto a fixed canvas.
struct Canvas {
  double width = 640, height = 420;
  double left = 70, right = 20, top = 40, bottom = 55;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
    return;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void open_svg(std::ostringstream& s, const Canvas& c, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fx(c.width, 0) << "\" height=\"" << fx(c.height, 0)
    << "\" viewBox=\"0 0 " << fx(c.width, 0) << ' ' << fx(c.height, 0) << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << fx(c.width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"14\">" << escape_xml(title) << "</text>\n";
}

void axes(std::ostringstream& s, const Canvas& c, const std::vector<double>& xt, const std::vector<double>& yt,
          const std::string& x_label, const std::string& y_label) {
  const double xb = c.height - c.bottom;
  s << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  s << "<line x1=\"" << fx(c.left) << "\" y1=\"" << fx(xb) << "\" x2=\"" << fx(c.width - c.right) << "\" y2=\""
    << fx(xb) << "\"/>\n";
  s << "<line x1=\"" << fx(c.left) << "\" y1=\"" << fx(c.top) << "\" x2=\"" << fx(c.left) << "\" y2=\"" << fx(xb)
    << "\"/>\n";
  for (double t : xt) {
    s << "<line x1=\"" << fx(c.px(t)) << "\" y1=\"" << fx(xb) << "\" x2=\"" << fx(c.px(t)) << "\" y2=\""
      << fx(xb + 5) << "\"/>\n";
  }
  for (double t : yt) {
    s << "<line x1=\"" << fx(c.left - 5) << "\" y1=\"" << fx(c.py(t)) << "\" x2=\"" << fx(c.left) << "\" y2=\""
      << fx(c.py(t)) << "\"/>\n";
  }
  s << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double t : xt) {
    s << "<text x=\"" << fx(c.px(t)) << "\" y=\"" << fx(xb + 18) << "\" text-anchor=\"middle\">" << tick_label(t)
      << "</text>\n";
  }
  for (double t : yt) {
    s << "<text x=\"" << fx(c.left - 8) << "\" y=\"" << fx(c.py(t) + 4) << "\" text-anchor=\"end\">"
      << tick_label(t) << "</text>\n";
  }
  s << "<text x=\"" << fx((c.left + c.width - c.right) / 2) << "\" y=\"" << fx(c.height - 12)
    << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
  s << "<text x=\"16\" y=\"" << fx((c.top + c.height - c.bottom) / 2) << "\" text-anchor=\"middle\" "
    << "transform=\"rotate(-90 16 " << fx((c.top + c.height - c.bottom) / 2) << ")\">" << escape_xml(y_label)
    << "</text>\n</g>\n";
}

}  // namespace

json to_json(const FitResult& fit, bool with_covariance) {
  json coefs = json::array();
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double se = fit.aliased[k] ? kMissing : std::sqrt(fit.covariance(i, i));
    coefs.push_back({{"name", fit.names[k]},
                     {"estimate", number(fit.coefficients(i))},
                     {"se", number(se)},
                     {"aliased", static_cast<bool>(fit.aliased[k])}});
  }
  json j = {{"coefficients", coefs},
            {"n_obs", fit.n_obs},
            {"n_params", fit.n_params},
            {"absorbed_df", fit.absorbed_df},
            {"ssr", number(fit.ssr)},
            {"covariance_type", fit.covariance_kind == CovarianceKind::Cluster ? "CR1" : "classical"},
            {"cluster_count", fit.cluster_count},
            {"warnings", fit.warnings}};
  if (with_covariance) {
    json cov = json::array();
    for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(number(fit.covariance(r, c)));
      cov.push_back(row);
    }
    j["covariance"] = cov;
  }
  return j;
}

json to_json(const WaldResult& w) {
  return {{"f", number(w.f)},          {"df1", w.df1},
          {"df2", number(w.df2)},      {"p_value", number(w.p_value)},
          {"zero_variance", w.zero_variance}, {"vacuous", w.vacuous}};
}

json to_json(const ThresholdInterval& ci) {
  return {{"lower", ci.lower}, {"upper", ci.upper}, {"critical_value", ci.critical_value}, {"accepted", ci.accepted}};
}

json to_json(const LinearityTest& t) {
  return {{"sup_f", number(t.sup_f)},
          {"gamma_at_sup", t.gamma_at_sup},
          {"p_value", number(t.p_value)},
          {"replications", t.replications},
          {"resampling", "wild cluster bootstrap, Rademacher weights"}};
}

json to_json(const MonteCarloReport& r) {
  json params = json::object();
  for (const auto& [name, s] : r.parameters) {
    params[name] = {{"truth", number(s.truth)}, {"mean", number(s.mean)},         {"bias", number(s.bias)},
                    {"sd", number(s.sd)},       {"mean_se", number(s.mean_se)},   {"coverage", number(s.coverage)},
                    {"n", s.n}};
  }
  json rates = json::object();
  for (const auto& [name, v] : r.rejection_rate) rates[name] = number(v);
  return {{"estimator", r.estimator},     {"reps", r.reps},
          {"failures", r.failures},       {"alpha", r.alpha},
          {"parameters", params},         {"rejection_rate", rates},
          {"failure_messages", r.failure_messages}};
}

json threshold_table(const ThresholdFit& tf) {
  json cols = json::array();
  cols.push_back({{"label", "Slope coefficient of landowners"}, {"symbol", "beta_L"}, {"value", estimate_json(tf.beta_L)}});
  cols.push_back({{"label", "Slope coefficient of nonagrarian interests"},
                  {"symbol", "beta_N"},
                  {"value", estimate_json(tf.beta_N)}});
  if (tf.include_jump) {
    cols.push_back({{"label", "Difference in means at the threshold point"},
                    {"symbol", "delta"},
                    {"value", estimate_json(tf.delta)}});
  }
  return {{"columns", cols},
          {"threshold_point", tf.gamma},
          {"n_obs", tf.fit.n_obs},
          {"clusters", tf.fit.cluster_count},
          {"ssr", tf.ssr},
          {"standard_errors", "clustered by local government (CR1)"}};
}

json binscatter_lines(const BinnedScatter& b) {
  auto line = [](const BinLine& l) {
    return json{{"intercept", number(l.intercept)}, {"slope", number(l.slope)}, {"n_bins", l.n_bins},
                {"defined", l.defined}};
  };
  return {{"n_bins", b.n_bins},
          {"n_obs", b.n_obs},
          {"split_point", b.split_point},
          {"below", line(b.below)},
          {"above", line(b.above)},
          {"empty_side", b.empty_side},
          {"line_fit", "unweighted OLS on bin means"}};
}

void write_profile_csv(std::ostream& out, const std::vector<ProfilePoint>& profile) {
  csv::write_row(out, {"gamma", "ssr"});
  for (const auto& p : profile) csv::write_row(out, {csv::format_number(p.gamma), csv::format_number(p.ssr)});
}

void write_path_csv(std::ostream& out, const EventStudyPath& path) {
  csv::write_row(out, {"horizon", "estimate", "se", "lo95", "hi95"});
  for (std::size_t i = 0; i < path.horizons.size(); ++i) {
    csv::write_row(out, {std::to_string(path.horizons[i]), csv::format_number(path.estimate[i]),
                         csv::format_number(path.se(i)), csv::format_number(path.lower95(i)),
                         csv::format_number(path.upper95(i))});
  }
}

void write_bins_csv(std::ostream& out, const BinnedScatter& b) {
  csv::write_row(out, {"bin", "x_mean", "y_mean", "count"});
  for (std::size_t i = 0; i < b.bins.size(); ++i) {
    const auto& bin = b.bins[i];
    csv::write_row(out, {std::to_string(i + 1), csv::format_number(bin.x_mean), csv::format_number(bin.y_mean),
                         std::to_string(bin.count)});
  }
}

std::string path_svg(const EventStudyPath& path, const std::string& title) {
  Canvas c;
  if (path.horizons.empty()) return {};
  c.x0 = path.horizons.front() - 0.5;
  c.x1 = path.horizons.back() + 0.5;
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < path.horizons.size(); ++i) {
    if (!std::isfinite(path.estimate[i])) continue;
    lo = std::min(lo, path.lower95(i));
    hi = std::max(hi, path.upper95(i));
  }
  pad_range(lo, hi);
  c.y0 = lo;
  c.y1 = hi;

  std::ostringstream s;
  open_svg(s, c, title);
  std::vector<double> xt;
  for (int h : path.horizons) xt.push_back(h);
  axes(s, c, xt, ticks(lo, hi), "Years relative to treatment",
       path.kind == PathKind::Cumulative ? "Cumulative effect" : "Effect");

  s << "<line x1=\"" << fx(c.left) << "\" y1=\"" << fx(c.py(0)) << "\" x2=\"" << fx(c.width - c.right)
    << "\" y2=\"" << fx(c.py(0)) << "\" stroke=\"gray\" stroke-width=\"0.8\"/>\n";
  s << "<line x1=\"" << fx(c.px(0)) << "\" y1=\"" << fx(c.top) << "\" x2=\"" << fx(c.px(0)) << "\" y2=\""
    << fx(c.height - c.bottom) << "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";

  std::string upper, lower, mid;
  for (std::size_t i = 0; i < path.horizons.size(); ++i) {
    if (!std::isfinite(path.estimate[i])) continue;
    const std::string x = fx(c.px(path.horizons[i]));
    upper += x + "," + fx(c.py(path.upper95(i))) + " ";
    mid += x + "," + fx(c.py(path.estimate[i])) + " ";
  }
  for (std::size_t k = path.horizons.size(); k-- > 0;) {
    if (!std::isfinite(path.estimate[k])) continue;
    lower += fx(c.px(path.horizons[k])) + "," + fx(c.py(path.lower95(k))) + " ";
  }
  s << "<polygon points=\"" << upper << lower << "\" fill=\"#b0c4de\" fill-opacity=\"0.6\" stroke=\"none\"/>\n";
  s << "<polyline points=\"" << mid << "\" fill=\"none\" stroke=\"#1f3b73\" stroke-width=\"2\"/>\n";
  for (std::size_t i = 0; i < path.horizons.size(); ++i) {
    if (!std::isfinite(path.estimate[i])) continue;
    s << "<circle cx=\"" << fx(c.px(path.horizons[i])) << "\" cy=\"" << fx(c.py(path.estimate[i]))
      << "\" r=\"3\" fill=\"#1f3b73\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string binscatter_svg(const BinnedScatter& b, const std::string& title, const std::string& x_label,
                           const std::string& y_label) {
  Canvas c;
  if (b.bins.empty()) return {};
  double xlo = b.bins.front().x_mean, xhi = xlo, ylo = b.bins.front().y_mean, yhi = ylo;
  for (const auto& bin : b.bins) {
    xlo = std::min(xlo, bin.x_mean);
    xhi = std::max(xhi, bin.x_mean);
    ylo = std::min(ylo, bin.y_mean);
    yhi = std::max(yhi, bin.y_mean);
  }
  xlo = std::min(xlo, b.split_point);
  xhi = std::max(xhi, b.split_point);
  pad_range(xlo, xhi);
  pad_range(ylo, yhi);
  c.x0 = xlo;
  c.x1 = xhi;
  c.y0 = ylo;
  c.y1 = yhi;

  std::ostringstream s;
  open_svg(s, c, title);
  axes(s, c, ticks(xlo, xhi), ticks(ylo, yhi), x_label, y_label);
  for (const auto& bin : b.bins) {
    s << "<circle cx=\"" << fx(c.px(bin.x_mean)) << "\" cy=\"" << fx(c.py(bin.y_mean))
      << "\" r=\"2.5\" fill=\"#1f3b73\"/>\n";
  }
  auto segment = [&](const BinLine& l, bool below_side) {
    if (!l.defined) return;
    const double a = below_side ? b.bins.front().x_mean : b.split_point;
    const double z = below_side ? b.split_point : b.bins.back().x_mean;
    s << "<line x1=\"" << fx(c.px(a)) << "\" y1=\"" << fx(c.py(l.intercept + l.slope * a)) << "\" x2=\""
      << fx(c.px(z)) << "\" y2=\"" << fx(c.py(l.intercept + l.slope * z)) << "\" stroke=\"#b22222\" "
      << "stroke-width=\"2\"/>\n";
  };
  segment(b.below, true);
  segment(b.above, false);
  s << "<line x1=\"" << fx(c.px(b.split_point)) << "\" y1=\"" << fx(c.top) << "\" x2=\"" << fx(c.px(b.split_point))
    << "\" y2=\"" << fx(c.height - c.bottom) << "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";
  s << "</svg>\n";
  return s.str();
}

std::vector<SummaryRow> summarize(const PanelDataset& d,
                                  const std::vector<std::pair<std::string, std::string>>& vars) {
  std::vector<SummaryRow> out;
  for (const auto& [label, name] : vars) {
    SummaryRow row{label, name};
    const auto c = d.column(name);
    double sum = 0.0;
    for (double v : c) {
      if (is_missing(v)) continue;
      ++row.n;
      sum += v;
      row.min = row.n == 1 ? v : std::min(row.min, v);
      row.max = row.n == 1 ? v : std::max(row.max, v);
    }
    if (row.n > 0) {
      row.mean = sum / static_cast<double>(row.n);
      double ss = 0.0;
      for (double v : c) {
        if (!is_missing(v)) ss += (v - row.mean) * (v - row.mean);
      }
      row.sd = row.n > 1 ? std::sqrt(ss / static_cast<double>(row.n - 1)) : kMissing;
    }
    out.push_back(row);
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  csv::write_row(out, {"variable", "label", "n", "mean", "sd", "min", "max"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.variable, r.label, std::to_string(r.n), csv::format_number(r.mean),
                         csv::format_number(r.sd), csv::format_number(r.min), csv::format_number(r.max)});
  }
}

std::string summary_text(const std::vector<SummaryRow>& rows, int first_year, int last_year) {
  std::ostringstream s;
  s << "Summary statistics for the period " << first_year << "-" << last_year << "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-46s %12s %12s %12s %12s\n", "", "Mean", "SD", "Min", "Max");
  s << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-46s %12.2f %12.2f %12.2f %12.2f\n", r.label.c_str(), r.mean, r.sd, r.min,
                  r.max);
    s << buf;
  }
  return s.str();
}

}  // namespace wvp::report
