/* Copyright 2026 The Cisspin Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "ciss/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ciss {

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string num6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void open_or_throw(std::ofstream& out, const std::string& path) {
  out.open(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
}

// Blue (negative) - white (zero) - red (positive).
std::string diverging_color(double v, double vmax) {
  double x = (vmax > 0) ? std::clamp(v / vmax, -1.0, 1.0) : 0.0;
  int r, g, b;
  if (x >= 0) {
    r = 255;
    g = int(255 * (1 - x));
    b = int(255 * (1 - x));
  } else {
    r = int(255 * (1 + x));
    g = int(255 * (1 + x));
    b = 255;
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void write_spectrum_csv(const std::string& path, const SpectrumResult& spec) {
  spec.validate_shape();
  std::ofstream out;
  open_or_throw(out, path);

  out << "# cisspin-spectrum schema_version: 1\n";
  for (size_t a = 0; a < spec.axes.size(); ++a)
    out << "# axis" << a << ": " << spec.axes[a].name << " [" << spec.axes[a].unit
        << "] n=" << spec.axes[a].values.size() << "\n";
  for (const auto& [k, v] : spec.metadata) out << "# meta " << k << ": " << v << "\n";

  for (size_t a = 0; a < spec.axes.size(); ++a) out << spec.axes[a].name << ",";
  out << "signal\n";

  // Column-major: first axis varies fastest.
  const size_t n0 = spec.axes[0].values.size();
  const size_t n1 = spec.axes.size() > 1 ? spec.axes[1].values.size() : 1;
  for (size_t i1 = 0; i1 < n1; ++i1) {
    for (size_t i0 = 0; i0 < n0; ++i0) {
      out << num17(spec.axes[0].values[i0]) << ",";
      if (spec.axes.size() > 1) out << num17(spec.axes[1].values[i1]) << ",";
      out << num17(spec.data[i0 + n0 * i1]) << "\n";
    }
  }
}

SpectrumResult read_spectrum_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);

  SpectrumResult spec;
  std::vector<size_t> axis_sizes;
  std::string line;
  std::vector<std::vector<double>> columns;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# axis", 0) == 0) {
        // "# axisK: name [unit] n=N"
        size_t colon = line.find(':');
        size_t lb = line.find('[');
        size_t rb = line.find(']');
        size_t neq = line.find("n=");
        if (colon == std::string::npos || lb == std::string::npos ||
            rb == std::string::npos || neq == std::string::npos)
          throw std::runtime_error(path + ": malformed axis header: " + line);
        SpectrumAxis ax;
        ax.name = line.substr(colon + 2, lb - colon - 3);
        ax.unit = line.substr(lb + 1, rb - lb - 1);
        axis_sizes.push_back(std::stoul(line.substr(neq + 2)));
        spec.axes.push_back(ax);
      } else if (line.rfind("# meta ", 0) == 0) {
        std::string kv = line.substr(7);
        size_t colon = kv.find(": ");
        if (colon != std::string::npos)
          spec.metadata[kv.substr(0, colon)] = kv.substr(colon + 2);
      }
      continue;
    }
    // Header row or data row.
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.empty() || cells[0].empty()) continue;
    if (!std::isdigit(static_cast<unsigned char>(cells[0][0])) &&
        cells[0][0] != '-' && cells[0][0] != '+')
      continue;  // column header
    if (columns.empty()) columns.resize(cells.size());
    if (cells.size() != columns.size())
      throw std::runtime_error(path + ": ragged CSV row");
    for (size_t c = 0; c < cells.size(); ++c)
      columns[c].push_back(std::stod(cells[c]));
  }

  if (spec.axes.empty() || columns.size() != spec.axes.size() + 1)
    throw std::runtime_error(path + ": not a cisspin spectrum CSV");

  for (size_t a = 0; a < spec.axes.size(); ++a) {
    size_t n = axis_sizes[a];
    spec.axes[a].values.resize(n);
    size_t stride = (a == 0) ? 1 : axis_sizes[0];
    for (size_t k = 0; k < n; ++k) spec.axes[a].values[k] = columns[a][k * stride];
  }
  spec.data = columns.back();
  spec.validate_shape();
  return spec;
}

void write_spectrum_json(const std::string& path, const SpectrumResult& spec) {
  spec.validate_shape();
  nlohmann::json j;
  j["schema_version"] = 1;
  j["metadata"] = spec.metadata;
  j["axes"] = nlohmann::json::array();
  for (const auto& ax : spec.axes)
    j["axes"].push_back({{"name", ax.name}, {"unit", ax.unit}, {"values", ax.values}});
  j["data"] = spec.data;
  std::ofstream out;
  open_or_throw(out, path);
  out << j.dump(1) << "\n";
}

namespace {

void svg_line_plot(std::ofstream& out, const SpectrumResult& spec) {
  const int W = 860, H = 520, ML = 80, MR = 20, MT = 30, MB = 60;
  const auto& x = spec.axes[0].values;
  const auto& y = spec.data;
  double xmin = x.front(), xmax = x.back();
  double ymin = *std::min_element(y.begin(), y.end());
  double ymax = *std::max_element(y.begin(), y.end());
  if (ymax == ymin) {
    ymax += 1;
    ymin -= 1;
  }
  double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double v) { return ML + (v - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double v) { return H - MB - (v - ymin) / (ymax - ymin) * (H - MT - MB); };

  out << "<rect x='" << ML << "' y='" << MT << "' width='" << W - ML - MR
      << "' height='" << H - MT - MB << "' fill='none' stroke='black'/>\n";
  if (ymin < 0 && ymax > 0)
    out << "<line x1='" << ML << "' y1='" << py(0) << "' x2='" << W - MR << "' y2='"
        << py(0) << "' stroke='#bbbbbb' stroke-dasharray='4 3'/>\n";

  out << "<polyline fill='none' stroke='#c22222' stroke-width='1.5' points='";
  for (size_t k = 0; k < x.size(); ++k)
    out << num6(px(x[k])) << "," << num6(py(y[k])) << " ";
  out << "'/>\n";

  for (int t = 0; t <= 4; ++t) {
    double xv = xmin + (xmax - xmin) * t / 4.0;
    double yv = ymin + (ymax - ymin) * t / 4.0;
    out << "<text x='" << num6(px(xv)) << "' y='" << H - MB + 20
        << "' font-size='12' text-anchor='middle'>" << num6(xv) << "</text>\n";
    out << "<text x='" << ML - 8 << "' y='" << num6(py(yv) + 4)
        << "' font-size='12' text-anchor='end'>" << num6(yv) << "</text>\n";
  }
  out << "<text x='" << (ML + W - MR) / 2 << "' y='" << H - 15
      << "' font-size='14' text-anchor='middle'>" << spec.axes[0].name << "</text>\n";
}

void svg_heatmap(std::ofstream& out, const SpectrumResult& spec) {
  const int W = 860, H = 520, ML = 80, MR = 20, MT = 30, MB = 60;
  const size_t n0 = spec.axes[0].values.size();
  const size_t n1 = spec.axes[1].values.size();
  // Decimate large maps deterministically.
  size_t s0 = std::max<size_t>(1, n0 / 200);
  size_t s1 = std::max<size_t>(1, n1 / 240);
  double vmax = 0;
  for (double v : spec.data) vmax = std::max(vmax, std::abs(v));

  const double cw = double(W - ML - MR) / double((n1 + s1 - 1) / s1);
  const double ch = double(H - MT - MB) / double((n0 + s0 - 1) / s0);
  size_t row = 0;
  for (size_t i0 = 0; i0 < n0; i0 += s0, ++row) {
    size_t col = 0;
    for (size_t i1 = 0; i1 < n1; i1 += s1, ++col) {
      double v = spec.data[i0 + n0 * i1];
      out << "<rect x='" << num6(ML + col * cw) << "' y='"
          << num6(H - MB - (row + 1) * ch) << "' width='" << num6(cw + 0.5)
          << "' height='" << num6(ch + 0.5) << "' fill='" << diverging_color(v, vmax)
          << "'/>\n";
    }
  }
  out << "<rect x='" << ML << "' y='" << MT << "' width='" << W - ML - MR
      << "' height='" << H - MT - MB << "' fill='none' stroke='black'/>\n";
  out << "<text x='" << (ML + W - MR) / 2 << "' y='" << H - 15
      << "' font-size='14' text-anchor='middle'>" << spec.axes[1].name << "</text>\n";
  out << "<text x='20' y='" << (MT + H - MB) / 2
      << "' font-size='14' transform='rotate(-90 20 " << (MT + H - MB) / 2 << ")'>"
      << spec.axes[0].name << "</text>\n";
}

}  // namespace

void write_spectrum_svg(const std::string& path, const SpectrumResult& spec) {
  spec.validate_shape();
  std::ofstream out;
  open_or_throw(out, path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='860' height='520' "
         "font-family='sans-serif'>\n";
  out << "<rect width='860' height='520' fill='white'/>\n";
  std::string title = "cisspin";
  auto it = spec.metadata.find("experiment");
  if (it != spec.metadata.end()) title += " " + it->second;
  it = spec.metadata.find("state");
  if (it != spec.metadata.end()) title += " | " + it->second;
  out << "<text x='430' y='20' font-size='14' text-anchor='middle'>" << title
      << "</text>\n";

  if (spec.axes.size() == 1)
    svg_line_plot(out, spec);
  else
    svg_heatmap(out, spec);
  out << "</svg>\n";
}

}  // namespace ciss
