#ifndef LQHIER_REPORT_HPP
#define LQHIER_REPORT_HPP

#include <json.hpp>

#include <cstdio>

#include "lqhier/csvio.hpp"

namespace lqhier {

inline nlohmann::json model_stats_json(const ModelStats& stats) {
  return {{"solves", stats.solves},
          {"estimates", stats.estimates},
          {"total_time_s", stats.total_time_s},
          {"mean_time_s", stats.mean_time_s()}};
}

inline void write_summary_json(const std::string& path, const SummaryStats& stats,
                               double tolerance) {
  nlohmann::json doc = {
      {"total_queries", stats.total_queries},
      {"final_basis_size", stats.final_basis_size},
      {"tolerance", tolerance},
      {"train_total_s", stats.train_total_s},
      {"total_gramian_applications", stats.total_gramian_applications},
      {"models",
       {{"ML", model_stats_json(stats.ml)},
        {"RB", model_stats_json(stats.rb)},
        {"FOM", model_stats_json(stats.fom)}}},
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

struct SummaryFile {
  SummaryStats stats;
  double tolerance = 0.0;
};

inline SummaryFile read_summary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed summary " + path + ": " + e.what());
  }
  SummaryFile summary;
  const auto read_model = [&](const char* key, ModelStats& stats) {
    const auto& entry = doc.at("models").at(key);
    stats.solves = entry.at("solves").get<long>();
    stats.estimates = entry.at("estimates").get<long>();
    stats.total_time_s = entry.at("total_time_s").get<double>();
  };
  try {
    summary.stats.total_queries = doc.at("total_queries").get<long>();
    summary.stats.final_basis_size = doc.at("final_basis_size").get<int>();
    summary.tolerance = doc.at("tolerance").get<double>();
    summary.stats.train_total_s = doc.at("train_total_s").get<double>();
    summary.stats.total_gramian_applications = doc.at("total_gramian_applications").get<long>();
    read_model("ML", summary.stats.ml);
    read_model("RB", summary.stats.rb);
    read_model("FOM", summary.stats.fom);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed summary " + path + ": " + e.what());
  }
  return summary;
}

// Four significant digits is plenty for wall-clock readouts; the exact
// values stay available in summary.json.
inline std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", s);
  return buf;
}

// Per-model usage and timing table, as printed by the report command.
inline std::string summary_table(const SummaryStats& stats) {
  std::ostringstream out;
  out << "model  solves  estimates  total time [s]  mean time [s]\n";
  const auto pad = [](const std::string& s, size_t width) {
    return s + std::string(width > s.size() ? width - s.size() : 1, ' ');
  };
  const auto row = [&](const char* name, const ModelStats& m) {
    out << pad(name, 7) << pad(std::to_string(m.solves), 8)
        << pad(std::to_string(m.estimates), 11) << pad(format_seconds(m.total_time_s), 16)
        << format_seconds(m.mean_time_s()) << '\n';
  };
  row("ML", stats.ml);
  row("RB", stats.rb);
  row("FOM", stats.fom);
  out << "training total [s]: " << format_seconds(stats.train_total_s) << '\n';
  out << "final basis size: " << stats.final_basis_size << '\n';
  out << "total queries: " << stats.total_queries << '\n';
  out << "total Gramian applications: " << stats.total_gramian_applications << '\n';
  return out.str();
}

namespace detail {

// Maps query index / log10(value) into the plot area and emits primitives.
class SvgPlot {
 public:
  SvgPlot(double x_min, double x_max, double log_y_min, double log_y_max, std::string y_label)
      : x_min_(x_min),
        x_max_(x_max > x_min ? x_max : x_min + 1.0),
        ly_min_(log_y_min),
        ly_max_(log_y_max > log_y_min ? log_y_max : log_y_min + 1.0),
        y_label_(std::move(y_label)) {
    body_ << "<rect x='0' y='0' width='" << kWidth << "' height='" << kHeight
          << "' fill='white'/>\n";
  }

  double map_x(double x) const {
    return kLeft + (x - x_min_) / (x_max_ - x_min_) * (kWidth - kLeft - kRight);
  }
  double map_y(double log_y) const {
    return kHeight - kBottom -
           (log_y - ly_min_) / (ly_max_ - ly_min_) * (kHeight - kTop - kBottom);
  }

  void circle(double x, double log_y, double radius, const std::string& color) {
    body_ << "<circle cx='" << fmt(map_x(x)) << "' cy='" << fmt(map_y(log_y)) << "' r='" << radius
          << "' fill='" << color << "'/>\n";
  }

  void cross(double x, double log_y, double arm, const std::string& color) {
    const double cx = map_x(x), cy = map_y(log_y);
    body_ << "<path d='M" << fmt(cx - arm) << ' ' << fmt(cy - arm) << " L" << fmt(cx + arm) << ' '
          << fmt(cy + arm) << " M" << fmt(cx - arm) << ' ' << fmt(cy + arm) << " L" << fmt(cx + arm)
          << ' ' << fmt(cy - arm) << "' stroke='" << color << "' stroke-width='1'/>\n";
  }

  void hline(double log_y, const std::string& color, const std::string& dash,
             const std::string& label) {
    const double y = map_y(log_y);
    body_ << "<line x1='" << fmt(kLeft) << "' y1='" << fmt(y) << "' x2='" << fmt(kWidth - kRight)
          << "' y2='" << fmt(y) << "' stroke='" << color << "' stroke-dasharray='" << dash
          << "'/>\n";
    if (!label.empty())
      body_ << "<text x='" << fmt(kWidth - kRight - 4) << "' y='" << fmt(y - 4)
            << "' text-anchor='end' font-size='12' fill='" << color << "'>" << label
            << "</text>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double x = kLeft + 10.0;
    for (const auto& [label, color] : entries) {
      body_ << "<circle cx='" << fmt(x) << "' cy='" << fmt(kTop - 12.0) << "' r='4' fill='"
            << color << "'/>\n";
      body_ << "<text x='" << fmt(x + 8.0) << "' y='" << fmt(kTop - 8.0)
            << "' font-size='12'>" << label << "</text>\n";
      x += 14.0 * label.size() * 0.6 + 40.0;
    }
  }

  std::string render(const std::string& x_label) {
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
        << "' viewBox='0 0 " << kWidth << ' ' << kHeight << "'>\n";
    out << body_.str();
    // axes
    out << "<line x1='" << fmt(kLeft) << "' y1='" << fmt(kTop) << "' x2='" << fmt(kLeft)
        << "' y2='" << fmt(kHeight - kBottom) << "' stroke='black'/>\n";
    out << "<line x1='" << fmt(kLeft) << "' y1='" << fmt(kHeight - kBottom) << "' x2='"
        << fmt(kWidth - kRight) << "' y2='" << fmt(kHeight - kBottom) << "' stroke='black'/>\n";
    // y ticks at integer decades
    for (int d = static_cast<int>(std::ceil(ly_min_)); d <= static_cast<int>(std::floor(ly_max_));
         ++d) {
      const double y = map_y(d);
      out << "<line x1='" << fmt(kLeft - 4) << "' y1='" << fmt(y) << "' x2='" << fmt(kLeft)
          << "' y2='" << fmt(y) << "' stroke='black'/>\n";
      out << "<text x='" << fmt(kLeft - 8) << "' y='" << fmt(y + 4)
          << "' text-anchor='end' font-size='12'>1e" << d << "</text>\n";
    }
    // x ticks: five evenly spaced
    for (int t = 0; t <= 4; ++t) {
      const double x_value = x_min_ + (x_max_ - x_min_) * t / 4.0;
      const double x = map_x(x_value);
      out << "<line x1='" << fmt(x) << "' y1='" << fmt(kHeight - kBottom) << "' x2='" << fmt(x)
          << "' y2='" << fmt(kHeight - kBottom + 4) << "' stroke='black'/>\n";
      out << "<text x='" << fmt(x) << "' y='" << fmt(kHeight - kBottom + 18)
          << "' text-anchor='middle' font-size='12'>" << static_cast<long>(x_value)
          << "</text>\n";
    }
    out << "<text x='" << fmt((kLeft + kWidth - kRight) / 2.0) << "' y='" << fmt(kHeight - 12)
        << "' text-anchor='middle' font-size='13'>" << x_label << "</text>\n";
    out << "<text x='18' y='" << fmt((kTop + kHeight - kBottom) / 2.0)
        << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
        << fmt((kTop + kHeight - kBottom) / 2.0) << ")'>" << y_label_ << "</text>\n";
    out << "</svg>\n";
    return out.str();
  }

 private:
  static constexpr double kWidth = 880.0, kHeight = 480.0;
  static constexpr double kLeft = 70.0, kRight = 30.0, kTop = 34.0, kBottom = 50.0;

  static std::string fmt(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << v;
    return out.str();
  }

  double x_min_, x_max_, ly_min_, ly_max_;
  std::string y_label_;
  std::ostringstream body_;
};

inline const char* model_color(ModelKind kind) {
  switch (kind) {
    case ModelKind::ml: return "#2a9d4e";
    case ModelKind::rb: return "#e2a010";
    case ModelKind::fom: return "#d03030";
  }
  return "black";
}

inline double clamp_log(double value, double floor_log) {
  return value > 0.0 ? std::max(std::log10(value), floor_log) : floor_log;
}

}  // namespace detail

// Per-query wall time, colored by the serving model (training time shown as
// its own series where nonzero).
inline std::string render_timings_svg(const std::vector<QueryRecord>& records) {
  double min_log = 0.0, max_log = -300.0;
  const auto query_time = [](const QueryRecord& r) { return r.t_ml_s + r.t_rb_s + r.t_fom_s; };
  for (const auto& rec : records) {
    const double t = std::max(query_time(rec), 1e-9);
    min_log = std::min(min_log, std::log10(t));
    max_log = std::max(max_log, std::log10(t));
    if (rec.t_train_s > 0.0) max_log = std::max(max_log, std::log10(rec.t_train_s));
  }
  if (records.empty()) min_log = -6.0, max_log = 0.0;
  min_log = std::floor(min_log == 0.0 ? -6.0 : min_log);
  max_log = std::ceil(max_log + 0.1);

  detail::SvgPlot plot(0.0, records.empty() ? 1.0 : records.size() - 1.0, min_log, max_log,
                       "wall time per query [s]");
  plot.legend({{"ML", detail::model_color(ModelKind::ml)},
               {"RB", detail::model_color(ModelKind::rb)},
               {"FOM", detail::model_color(ModelKind::fom)},
               {"training", "#6060c0"}});
  for (const auto& rec : records) {
    if (rec.t_train_s > 0.0)
      plot.cross(rec.index, detail::clamp_log(rec.t_train_s, min_log), 3.0, "#6060c0");
    plot.circle(rec.index, detail::clamp_log(std::max(query_time(rec), 1e-9), min_log), 2.5,
                detail::model_color(rec.model_used));
  }
  return plot.render("query index");
}

// Per-query error estimates on a log scale with the certification tolerance.
inline std::string render_errors_svg(const std::vector<QueryRecord>& records, double tolerance) {
  double min_log = std::log10(std::max(tolerance, 1e-300)) - 1.0, max_log = min_log + 2.0;
  for (const auto& rec : records) {
    if (rec.eta_ml > 0.0) {
      min_log = std::min(min_log, std::log10(rec.eta_ml));
      max_log = std::max(max_log, std::log10(rec.eta_ml));
    }
    if (rec.eta_rb && *rec.eta_rb > 0.0) {
      min_log = std::min(min_log, std::log10(*rec.eta_rb));
      max_log = std::max(max_log, std::log10(*rec.eta_rb));
    }
  }
  min_log = std::floor(min_log);
  max_log = std::ceil(max_log + 0.1);

  detail::SvgPlot plot(0.0, records.empty() ? 1.0 : records.size() - 1.0, min_log, max_log,
                       "error estimate");
  plot.legend({{"eta_ML", "#2a6fd0"}, {"eta_RB", "#e2a010"}});
  plot.hline(std::log10(std::max(tolerance, 1e-300)), "#d03030", "6 3", "tolerance");
  for (const auto& rec : records) {
    plot.circle(rec.index, detail::clamp_log(rec.eta_ml, min_log), 2.0, "#2a6fd0");
    if (rec.eta_rb) plot.cross(rec.index, detail::clamp_log(*rec.eta_rb, min_log), 3.0, "#e2a010");
  }
  return plot.render("query index");
}

// Consistency check between a run's summary.json and its queries.csv: all
// counts must be reconstructible from the per-query rows.
inline std::vector<std::string> cross_check_summary(const SummaryStats& from_csv,
                                                    const SummaryStats& from_json) {
  std::vector<std::string> mismatches;
  const auto check = [&](const char* what, long csv, long json) {
    if (csv != json)
      mismatches.push_back(std::string(what) + ": csv " + std::to_string(csv) + " vs summary " +
                           std::to_string(json));
  };
  check("total queries", from_csv.total_queries, from_json.total_queries);
  check("final basis size", from_csv.final_basis_size, from_json.final_basis_size);
  check("ML solves", from_csv.ml.solves, from_json.ml.solves);
  check("ML estimates", from_csv.ml.estimates, from_json.ml.estimates);
  check("RB solves", from_csv.rb.solves, from_json.rb.solves);
  check("RB estimates", from_csv.rb.estimates, from_json.rb.estimates);
  check("FOM solves", from_csv.fom.solves, from_json.fom.solves);
  check("Gramian applications", from_csv.total_gramian_applications,
        from_json.total_gramian_applications);
  return mismatches;
}

}  // namespace lqhier

#endif
