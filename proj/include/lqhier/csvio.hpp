#ifndef LQHIER_CSVIO_HPP
#define LQHIER_CSVIO_HPP

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "lqhier/hierarchy.hpp"

namespace lqhier {

// Shortest decimal representation that round-trips the exact double; used by
// every text artifact so byte comparison of outputs is meaningful.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string queries_csv_header(Eigen::Index parameter_dim) {
  std::string header = "index";
  for (Eigen::Index i = 1; i <= parameter_dim; ++i) header += ",mu_" + std::to_string(i);
  header +=
      ",model_used,eta_ml,eta_rb,basis_size_after,gramian_applications,"
      "t_ml_s,t_rb_s,t_fom_s,t_train_s";
  return header;
}

inline std::string queries_csv_row(const QueryRecord& rec) {
  std::string row = std::to_string(rec.index);
  for (Eigen::Index i = 0; i < rec.parameter.size(); ++i)
    row += ',' + format_double(rec.parameter[i]);
  row += ',';
  row += to_string(rec.model_used);
  row += ',' + format_double(rec.eta_ml);
  row += ',';
  if (rec.eta_rb) row += format_double(*rec.eta_rb);
  row += ',' + std::to_string(rec.basis_size_after);
  row += ',' + std::to_string(rec.gramian_applications);
  row += ',' + format_double(rec.t_ml_s);
  row += ',' + format_double(rec.t_rb_s);
  row += ',' + format_double(rec.t_fom_s);
  row += ',' + format_double(rec.t_train_s);
  return row;
}

inline void write_queries_csv(const std::string& path, const std::vector<QueryRecord>& records,
                              Eigen::Index parameter_dim) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << queries_csv_header(parameter_dim) << '\n';
  for (const auto& rec : records) out << queries_csv_row(rec) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("malformed number in " + what + ": '" + s + "'");
  return v;
}

inline ModelKind parse_model(const std::string& s, const std::string& what) {
  if (s == "ML") return ModelKind::ml;
  if (s == "RB") return ModelKind::rb;
  if (s == "FOM") return ModelKind::fom;
  throw std::runtime_error("unknown model name in " + what + ": '" + s + "'");
}

}  // namespace detail

// Reads a queries.csv back into records (the report path).  The parameter
// dimension is inferred from the header.
inline std::vector<QueryRecord> read_queries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv file: " + path);
  const auto header = detail::split_csv_line(line);
  constexpr int kFixedColumns = 10;  // index + the nine columns after the mu block
  if (static_cast<int>(header.size()) < kFixedColumns || header.front() != "index")
    throw std::runtime_error("malformed csv header in " + path);
  const int pdim = static_cast<int>(header.size()) - kFixedColumns;

  std::vector<QueryRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (static_cast<int>(f.size()) != kFixedColumns + pdim)
      throw std::runtime_error("malformed csv row in " + path + ": '" + line + "'");
    QueryRecord rec;
    int c = 0;
    rec.index = static_cast<int>(detail::parse_double(f[c++], path));
    rec.parameter.resize(pdim);
    for (int i = 0; i < pdim; ++i) rec.parameter[i] = detail::parse_double(f[c++], path);
    rec.model_used = detail::parse_model(f[c++], path);
    rec.eta_ml = detail::parse_double(f[c++], path);
    if (f[c].empty())
      ++c;
    else
      rec.eta_rb = detail::parse_double(f[c++], path);
    rec.basis_size_after = static_cast<int>(detail::parse_double(f[c++], path));
    rec.gramian_applications = static_cast<long>(detail::parse_double(f[c++], path));
    rec.t_ml_s = detail::parse_double(f[c++], path);
    rec.t_rb_s = detail::parse_double(f[c++], path);
    rec.t_fom_s = detail::parse_double(f[c++], path);
    rec.t_train_s = detail::parse_double(f[c++], path);
    records.push_back(std::move(rec));
  }
  return records;
}

// Control trajectory export: node times against control components.
inline void write_control_csv(const std::string& path, const ControlTrajectory& control,
                              const TimeGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const Eigen::Index m = control.samples.empty() ? 0 : control.samples.front().size();
  out << 't';
  for (Eigen::Index j = 1; j <= m; ++j) out << ",u" << j;
  out << '\n';
  for (int k = 0; k < control.nodes(); ++k) {
    out << format_double(k * grid.dt());
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << format_double(control.samples[k][j]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace lqhier

#endif
