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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trase/errors.hpp"
#include "trase/eval.hpp"

namespace trase {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

json real_or_inf(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

std::vector<const MetricsReport*> reports_of(const SweepResult& res) {
  std::vector<const MetricsReport*> r{&res.a};
  if (res.b) r.push_back(&*res.b);
  return r;
}

}  // namespace

void write_report_json(const fs::path& path, const SweepResult& res) {
  json models = json::array();
  for (const auto* r : reports_of(res)) {
    json nm = json::object(), worst = json::object();
    for (std::size_t c = 0; c < r->channels.size(); ++c) {
      json col = json::array();
      for (Eigen::Index i = 0; i < r->nmse.rows(); ++i) {
        col.push_back(real_or_inf(r->nmse(i, static_cast<Eigen::Index>(c))));
      }
      nm[r->channels[c]] = col;
      worst[r->channels[c]] = real_or_inf(r->worst_case[static_cast<Eigen::Index>(c)]);
    }
    json failures = json::array();
    for (std::size_t i = 0; i < r->failures.size(); ++i) {
      if (!r->failures[i].empty()) failures.push_back({{"u", r->u[i]}, {"error", r->failures[i]}});
    }
    models.push_back({{"model_id", r->model_id},
                      {"u", r->u},
                      {"channels", r->channels},
                      {"nmse", nm},
                      {"worst_case", worst},
                      {"failures", failures}});
  }
  json doc = {{"nmse_definition", kNmseDefinition}, {"models", models}};
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

void write_nmse_csv(const fs::path& path, const SweepResult& res) {
  auto out = open_out(path);
  const auto reps = reports_of(res);
  out << "u";
  for (const auto* r : reps) {
    for (const auto& c : r->channels) out << ',' << r->model_id << ':' << c;
  }
  out << '\n';
  for (std::size_t i = 0; i < res.a.u.size(); ++i) {
    out << res.a.u[i];
    for (const auto* r : reps) {
      for (Eigen::Index c = 0; c < r->nmse.cols(); ++c) {
        const double v = r->nmse(static_cast<Eigen::Index>(i), c);
        out << ',';
        if (std::isfinite(v)) {
          out << v;
        } else {
          out << "inf";
        }
      }
    }
    out << '\n';
  }
}

void write_traces_csv(const fs::path& path, const SweepResult& res, bool sensitivity_channels) {
  auto out = open_out(path);
  out << "model,u,t,channel,truth,pred\n";
  for (const auto* r : reports_of(res)) {
    for (const auto& tr : r->traces) {
      if (tr.pred.size() == 0) continue;
      const auto n = static_cast<Eigen::Index>(r->state_channels);
      const Eigen::Index c0 = sensitivity_channels ? n : 0;
      const Eigen::Index c1 = sensitivity_channels ? tr.truth.cols() : n;
      for (std::size_t i = 0; i < tr.times.size(); ++i) {
        for (Eigen::Index c = c0; c < c1; ++c) {
          const auto ri = static_cast<Eigen::Index>(i);
          out << r->model_id << ',' << tr.u << ',' << tr.times[i] << ','
              << r->channels[static_cast<std::size_t>(c)] << ',' << tr.truth(ri, c) << ','
              << tr.pred(ri, c) << '\n';
        }
      }
    }
  }
}

void write_normalized_error_csv(const fs::path& path, const SweepResult& res) {
  auto out = open_out(path);
  out << "model,u,t,channel,normalized_error\n";
  for (const auto* r : reports_of(res)) {
    for (const auto& tr : r->traces) {
      if (tr.pred.size() == 0) continue;
      Matrix ne;
      try {
        ne = normalized_error(tr.pred, tr.truth);
      } catch (const DegenerateNormalization&) {
        continue;
      }
      for (std::size_t i = 0; i < tr.times.size(); ++i) {
        for (Eigen::Index c = 0; c < ne.cols(); ++c) {
          out << r->model_id << ',' << tr.u << ',' << tr.times[i] << ','
              << r->channels[static_cast<std::size_t>(c)] << ','
              << ne(static_cast<Eigen::Index>(i), c) << '\n';
        }
      }
    }
  }
}

void write_nmse_svg(const fs::path& path, const SweepResult& res, std::size_t channel) {
  const auto reps = reports_of(res);
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 30, B = 50;
  double umin = 0, umax = 1, lmin = 0, lmax = 1;
  bool any = false;
  for (const auto* r : reps) {
    if (channel >= r->channels.size()) continue;
    for (std::size_t i = 0; i < r->u.size(); ++i) {
      const double v = r->nmse(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(channel));
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      const double lv = std::log10(v);
      if (!any) {
        umin = umax = r->u[i];
        lmin = lmax = lv;
        any = true;
      }
      umin = std::min(umin, r->u[i]);
      umax = std::max(umax, r->u[i]);
      lmin = std::min(lmin, lv);
      lmax = std::max(lmax, lv);
    }
  }
  lmin = std::floor(lmin);
  lmax = std::ceil(lmax);
  if (lmax <= lmin) lmax = lmin + 1;
  if (umax <= umin) umax = umin + 1;
  auto px = [&](double u) { return L + (u - umin) / (umax - umin) * (W - L - R); };
  auto py = [&](double lv) { return H - B - (lv - lmin) / (lmax - lmin) * (H - T - B); };

  std::ostringstream svg;
  svg << std::setprecision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (double d = lmin; d <= lmax + 1e-9; d += 1.0) {
    svg << "<text x=\"" << L - 8 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">1e"
        << static_cast<int>(d) << "</text>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << py(d) << "\" x2=\"" << W - R << "\" y2=\""
        << py(d) << "\" stroke=\"#ddd\"/>\n";
  }
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">u</text>\n";
  svg << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << umin
      << "</text>\n";
  svg << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << umax
      << "</text>\n";
  const char* colors[] = {"#1f5fbf", "#c0392b"};
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto* r = reps[k];
    if (channel >= r->channels.size()) continue;
    svg << "<text x=\"" << L + 10 << "\" y=\"" << T - 10 + 14 * static_cast<double>(k)
        << "\" fill=\"" << colors[k] << "\">" << r->model_id << " NMSE(" << r->channels[channel]
        << ")</text>\n";
    svg << "<polyline fill=\"none\" stroke=\"" << colors[k] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < r->u.size(); ++i) {
      const double v = r->nmse(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(channel));
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      svg << px(r->u[i]) << ',' << py(std::log10(v)) << ' ';
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  auto out = open_out(path);
  out << svg.str();
}

}  // namespace trase
