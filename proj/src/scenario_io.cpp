/*
 * Copyright 2026 The trase-node Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trase/errors.hpp"
#include "trase/systems.hpp"

namespace trase {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t\r");
    const auto e = c.find_last_not_of(" \t\r");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  if (cell.empty()) throw ParseError("empty cell in column '" + column + "'", line);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE) {
    throw ParseError("malformed number '" + cell + "' in column '" + column + "'", line);
  }
  if (!std::isfinite(v)) {
    throw DataError("non-finite value in column '" + column + "' (line " +
                    std::to_string(line) + ")");
  }
  return v;
}

std::vector<std::string> string_list(const json& j, const char* key, bool required) {
  if (!j.contains(key)) {
    if (required) throw DataError(std::string("sidecar: missing '") + key + "'");
    return {};
  }
  if (!j[key].is_array()) throw DataError(std::string("sidecar: '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& v : j[key]) {
    if (!v.is_string()) throw DataError(std::string("sidecar: '") + key + "' entries must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

ScenarioLayout read_sidecar(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sidecar " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("sidecar " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("sidecar " + path.string() + ": expected an object");
  if (!j.contains("u") || !j["u"].is_number()) {
    throw DataError("sidecar " + path.string() + ": 'u' must be a number");
  }
  ScenarioLayout layout;
  layout.u = j["u"].get<double>();
  layout.state_columns = string_list(j, "state_columns", true);
  layout.exo_columns = string_list(j, "exo_columns", false);
  layout.sensitivity_columns = string_list(j, "sensitivity_columns", false);
  if (layout.state_columns.empty()) throw DataError("sidecar: 'state_columns' is empty");
  if (!layout.sensitivity_columns.empty() &&
      layout.sensitivity_columns.size() != layout.state_columns.size()) {
    throw DataError("sidecar: sensitivity_columns must match state_columns in length");
  }
  return layout;
}

Scenario ingest_csv(const fs::path& csv, const ScenarioLayout& layout) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());

  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("missing header", lineno);
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t") throw ParseError("first header column must be 't'", lineno);

  auto column_of = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 1; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw DataError(csv.string() + ": header lacks column '" + name + "'");
  };
  std::vector<std::size_t> sc_idx, ex_idx, se_idx;
  for (const auto& c : layout.state_columns) sc_idx.push_back(column_of(c));
  for (const auto& c : layout.exo_columns) ex_idx.push_back(column_of(c));
  for (const auto& c : layout.sensitivity_columns) se_idx.push_back(column_of(c));

  std::vector<double> times;
  std::vector<std::vector<double>> states, exo, sens;
  std::vector<bool> present;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       lineno);
    }
    const double t = parse_number(cells[0], lineno, "t");
    if (!times.empty() && !(t > times.back())) {
      throw DataError(csv.string() + ": time not strictly increasing at t = " +
                      std::to_string(t) + " (line " + std::to_string(lineno) + ")");
    }
    times.push_back(t);
    auto pick = [&](const std::vector<std::size_t>& idx) {
      std::vector<double> v;
      for (std::size_t i : idx) v.push_back(parse_number(cells[i], lineno, header[i]));
      return v;
    };
    states.push_back(pick(sc_idx));
    exo.push_back(pick(ex_idx));
    if (!se_idx.empty()) {
      bool all_empty = true;
      for (std::size_t i : se_idx) all_empty = all_empty && cells[i].empty();
      present.push_back(!all_empty);
      sens.push_back(all_empty ? std::vector<double>(se_idx.size(), 0.0) : pick(se_idx));
    }
  }
  if (times.empty()) throw DataError(csv.string() + ": no data rows");

  auto to_matrix = [](const std::vector<std::vector<double>>& rows, std::size_t cols) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
    return m;
  };

  Scenario sc;
  sc.u = layout.u;
  sc.grid = TimeGrid(times);
  sc.states = to_matrix(states, sc_idx.size());
  if (!ex_idx.empty()) sc.exogenous = to_matrix(exo, ex_idx.size());
  if (!se_idx.empty()) {
    sc.sensitivities = to_matrix(sens, se_idx.size());
    bool all = true;
    for (bool b : present) all = all && b;
    if (!all) sc.sensitivity_present = present;
  }
  sc.state_labels = layout.state_columns;
  sc.exo_labels = layout.exo_columns;
  sc.validate();
  return sc;
}

Scenario load_scenario(const fs::path& csv) {
  return ingest_csv(csv, read_sidecar(sidecar_path(csv)));
}

void write_scenario(const fs::path& csv, const Scenario& sc) {
  sc.validate();
  const auto n = sc.state_dim();
  const auto m = sc.exo_dim();
  std::vector<std::string> st = sc.state_labels, ex = sc.exo_labels, se;
  if (st.empty()) {
    for (Eigen::Index c = 0; c < n; ++c) st.push_back("x" + std::to_string(c));
  }
  if (ex.empty()) {
    for (Eigen::Index c = 0; c < m; ++c) ex.push_back("y" + std::to_string(c));
  }
  if (sc.has_sensitivities()) {
    for (const auto& s : st) se.push_back("s_" + s);
  }

  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  out << std::setprecision(17);
  out << "t";
  for (const auto& s : st) out << ',' << s;
  for (const auto& s : ex) out << ',' << s;
  for (const auto& s : se) out << ',' << s;
  out << '\n';
  for (std::size_t i = 0; i < sc.grid.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << sc.grid[i];
    for (Eigen::Index c = 0; c < n; ++c) out << ',' << sc.states(r, c);
    for (Eigen::Index c = 0; c < m; ++c) out << ',' << (*sc.exogenous)(r, c);
    if (sc.has_sensitivities()) {
      const bool here = sc.sensitivity_row_present(i);
      for (Eigen::Index c = 0; c < n; ++c) {
        out << ',';
        if (here) out << (*sc.sensitivities)(r, c);
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + csv.string());

  json side = {{"u", sc.u}, {"state_columns", st}, {"exo_columns", ex}};
  if (!se.empty()) side["sensitivity_columns"] = se;
  std::ofstream sout(sidecar_path(csv));
  if (!sout) throw IoError("cannot write " + sidecar_path(csv).string());
  sout << side.dump(2) << '\n';
}

}  // namespace trase
