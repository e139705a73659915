#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "smile/errors.hpp"

#include <json.hpp>

namespace smile {

//! Regression data for one fit: response y, binary/discrete block z (n x p1)
//! and continuous block x (n x p2). Immutable after construction; centering
//! produces a new value with the offsets stored for prediction.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd z;
  Eigen::MatrixXd x;
  double y_mean = 0.0;
  Eigen::VectorXd x_means;  // length p2, zero until centered
  bool centered = false;
  std::string y_name = "y";
  std::vector<std::string> z_names;
  std::vector<std::string> x_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p1() const { return z.cols(); }
  Eigen::Index p2() const { return x.cols(); }
};

//! Column-role assignment for CSV ingestion. Columns not mentioned are ignored.
struct RoleMap {
  std::string response;
  std::vector<std::string> z;
  std::vector<std::string> x;

  static RoleMap from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingColumn("roles file " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    RoleMap rm;
    rm.response = j.at("response").get<std::string>();
    for (const auto& s : j.at("z")) rm.z.push_back(s.get<std::string>());
    for (const auto& s : j.at("x")) rm.x.push_back(s.get<std::string>());
    return rm;
  }

  //! Infer roles from header names: "y" is the response, "z_*" and "x_*"
  //! prefixes assign the blocks, anything else is ignored.
  static RoleMap from_prefixes(const std::vector<std::string>& header) {
    RoleMap rm;
    for (const auto& name : header) {
      if (name == "y") {
        rm.response = name;
      } else if (name.rfind("z_", 0) == 0) {
        rm.z.push_back(name);
      } else if (name.rfind("x_", 0) == 0) {
        rm.x.push_back(name);
      }
    }
    if (rm.response.empty()) throw MissingColumn("y");
    return rm;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

inline double parse_cell(const std::string& s, std::size_t row, std::size_t col) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b != e && (*b == ' ' || *b == '\t')) ++b;
  while (e != b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, value);
  if (ec != std::errc() || ptr != e || b == e) throw NonNumericCell(row, col);
  if (!std::isfinite(value)) throw NonNumericCell(row, col);
  return value;
}

}  // namespace detail

//! Parse an RFC-4180 CSV with a header row into a Dataset. Columns are taken
//! in role order (response, then z in map order, then x in map order).
inline Dataset load_csv(const std::string& path, const RoleMap& roles) {
  std::ifstream in(path);
  if (!in) throw EmptyFile(path);
  std::string line;
  if (!std::getline(in, line)) throw EmptyFile(path);
  const std::vector<std::string> header = detail::split_csv_line(line);

  auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw MissingColumn(name);
  };

  const std::size_t y_col = column_index(roles.response);
  std::vector<std::size_t> z_cols, x_cols;
  for (const auto& name : roles.z) z_cols.push_back(column_index(name));
  for (const auto& name : roles.x) x_cols.push_back(column_index(name));

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw NonNumericCell(row_number, cells.size() < header.size() ? cells.size() + 1 : header.size() + 1);
    }
    std::vector<double> parsed(header.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      parsed[j] = detail::parse_cell(cells[j], row_number, j + 1);
    }
    rows.push_back(std::move(parsed));
  }
  if (rows.empty()) throw EmptyFile(path);

  Dataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  ds.y.resize(n);
  ds.z.resize(n, static_cast<Eigen::Index>(z_cols.size()));
  ds.x.resize(n, static_cast<Eigen::Index>(x_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.y[i] = rows[i][y_col];
    for (std::size_t k = 0; k < z_cols.size(); ++k) ds.z(i, static_cast<Eigen::Index>(k)) = rows[i][z_cols[k]];
    for (std::size_t l = 0; l < x_cols.size(); ++l) ds.x(i, static_cast<Eigen::Index>(l)) = rows[i][x_cols[l]];
  }
  ds.y_name = roles.response;
  ds.z_names = roles.z;
  ds.x_names = roles.x;
  ds.x_means = Eigen::VectorXd::Zero(ds.p2());
  return ds;
}

//! Write a Dataset back out (full precision), used for round-trip checks and
//! model artifacts. Centering offsets are not re-applied.
inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  out << ds.y_name;
  for (const auto& name : ds.z_names) out << ',' << name;
  for (const auto& name : ds.x_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out << ds.y[i];
    for (Eigen::Index k = 0; k < ds.p1(); ++k) out << ',' << ds.z(i, k);
    for (Eigen::Index l = 0; l < ds.p2(); ++l) out << ',' << ds.x(i, l);
    out << '\n';
  }
}

//! Center y and every x column at their empirical means, storing the offsets.
//! z is left untouched: the discrete block enters the model as given.
inline Dataset center(const Dataset& ds) {
  if (ds.centered) throw AlreadyCentered();
  Dataset out = ds;
  out.y_mean = ds.y.mean();
  out.y.array() -= out.y_mean;
  out.x_means.resize(ds.p2());
  for (Eigen::Index l = 0; l < ds.p2(); ++l) {
    out.x_means[l] = ds.x.col(l).mean();
    out.x.col(l).array() -= out.x_means[l];
  }
  out.centered = true;
  return out;
}

}  // namespace smile
