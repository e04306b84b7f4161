/*
 * Copyright 2026 The unlink-eval Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "unlink/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "unlink/report.hpp"

namespace unlinkeval {

namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 500;
constexpr double kLeft = 80;
constexpr double kRight = 80;
constexpr double kTop = 50;
constexpr double kBottom = 60;

std::string escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

template <typename Values>
std::string data_values(const Values& values) {
  std::string out;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(values.size()); ++i) {
    if (i) out += ' ';
    out += format_score(values[i]);
  }
  return out;
}

struct Frame {
  double x_min, x_max, y_min, y_max;

  double px(double x) const {
    const double span = x_max > x_min ? x_max - x_min : 1.0;
    return kLeft + (x - x_min) / span * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    const double span = y_max > y_min ? y_max - y_min : 1.0;
    return kHeight - kBottom - (y - y_min) / span * (kHeight - kTop - kBottom);
  }
};

void header(std::ostringstream& svg, const std::string& title) {
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
      << "font-size=\"15\">" << escape(title) << "</text>\n";
}

void axes(std::ostringstream& svg, const Frame& f, const std::string& x_label,
          const std::string& y_label) {
  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom;
  const double y1 = kTop;
  svg << "<g stroke=\"black\" fill=\"none\">\n"
      << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0
      << "\" height=\"" << y0 - y1 << "\"/>\n</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x_min + (f.x_max - f.x_min) * i / 4.0;
    const double yv = f.y_min + (f.y_max - f.y_min) * i / 4.0;
    svg << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(y0 + 18)
        << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n"
        << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(f.py(yv) + 4)
        << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
  }
  svg << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n"
      << "<text transform=\"translate(18," << (y0 + y1) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label)
      << "</text>\n";
}

// Step function through the bins: one horizontal segment per bin.
std::string step_points(const Frame& f, const Eigen::ArrayXd& edges,
                        const Eigen::ArrayXd& values) {
  std::string pts;
  for (Eigen::Index b = 0; b < values.size(); ++b) {
    pts += num(f.px(edges[b])) + ',' + num(f.py(values[b])) + ' ';
    pts += num(f.px(edges[b + 1])) + ',' + num(f.py(values[b])) + ' ';
  }
  if (!pts.empty()) pts.pop_back();
  return pts;
}

void legend(std::ostringstream& svg, int row, const std::string& color,
            bool dashed, const std::string& label) {
  const double x = kLeft + 12;
  const double y = kTop + 16 + 16 * row;
  svg << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 24
      << "\" y2=\"" << y << "\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n"
      << "<text x=\"" << x + 30 << "\" y=\"" << y + 4 << "\">" << escape(label)
      << "</text>\n";
}

}  // namespace

std::string render_linkability_svg(const PlotSpec& spec) {
  const auto& dp = spec.densities;
  const auto& prof = spec.profile;
  std::ostringstream svg;
  header(svg, spec.title);

  const double y_max = std::max({dp.p_mated.maxCoeff(), dp.p_non_mated.maxCoeff(), 1e-300});
  const Frame dens{dp.edges[0], dp.edges[dp.bins()], 0.0, y_max * 1.05};
  const Frame link{dens.x_min, dens.x_max, 0.0, 1.05};
  axes(svg, dens, spec.x_label, "probability density");

  // Secondary axis for D(s).
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    svg << "<text x=\"" << num(kWidth - kRight + 6) << "\" y=\""
        << num(link.py(v) + 4) << "\" fill=\"#1f4fd1\">" << tick(v) << "</text>\n";
  }
  svg << "<text transform=\"translate(" << kWidth - 18 << ','
      << (kHeight - kBottom + kTop) / 2
      << ") rotate(90)\" text-anchor=\"middle\" fill=\"#1f4fd1\">local linkability"
      << "</text>\n";

  for (double s : prof.boundary_scores) {
    svg << "<line class=\"boundary\" data-value=\"" << format_score(s)
        << "\" x1=\"" << num(dens.px(s)) << "\" y1=\"" << kTop << "\" x2=\""
        << num(dens.px(s)) << "\" y2=\"" << kHeight - kBottom
        << "\" stroke=\"black\" stroke-dasharray=\"4,4\"/>\n";
  }

  svg << "<polyline class=\"p_mated\" data-values=\"" << data_values(dp.p_mated)
      << "\" points=\"" << step_points(dens, dp.edges, dp.p_mated)
      << "\" fill=\"none\" stroke=\"#1a9641\" stroke-width=\"2\"/>\n";
  svg << "<polyline class=\"p_non_mated\" data-values=\""
      << data_values(dp.p_non_mated) << "\" points=\""
      << step_points(dens, dp.edges, dp.p_non_mated)
      << "\" fill=\"none\" stroke=\"#d7191c\" stroke-width=\"2\" "
         "stroke-dasharray=\"6,4\"/>\n";

  static const char* sweep_colors[] = {"#9ecae1", "#6baed6", "#3182bd", "#08519c"};
  int row = 3;
  for (std::size_t i = 0; i < spec.sweep.size(); ++i) {
    const auto& p = spec.sweep[i];
    const char* color = sweep_colors[i % 4];
    svg << "<polyline class=\"d_local_sweep\" data-omega=\"" << format_score(p.omega)
        << "\" data-values=\"" << data_values(p.d_local) << "\" points=\""
        << step_points(link, p.edges, p.d_local) << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"1.5\"/>\n";
    legend(svg, row++, color, false,
           "D(s), omega = " + tick(p.omega) + ", D_sys = " + format_d_sys(p.d_sys));
  }
  svg << "<polyline class=\"d_local\" data-values=\"" << data_values(prof.d_local)
      << "\" points=\"" << step_points(link, prof.edges, prof.d_local)
      << "\" fill=\"none\" stroke=\"#1f4fd1\" stroke-width=\"2\"/>\n";

  legend(svg, 0, "#1a9641", false, "mated p(s|H_m)");
  legend(svg, 1, "#d7191c", true, "non-mated p(s|H_nm)");
  legend(svg, 2, "#1f4fd1", false, "D(s)");
  svg << "</svg>\n";
  return svg.str();
}

std::string render_det_svg(const std::vector<CurveSeries>& series,
                           const std::string& title, const std::string& x_label,
                           const std::string& y_label) {
  std::ostringstream svg;
  header(svg, title);
  const Frame f{0.0, 1.0, 0.0, 1.0};
  axes(svg, f, x_label, y_label);
  int row = 0;
  for (const auto& s : series) {
    std::string pts;
    for (std::size_t i = 0; i < s.curve->fmr.size(); ++i) {
      pts += num(f.px(s.curve->fmr[i])) + ',' + num(f.py(s.curve->fnmr[i])) + ' ';
    }
    if (!pts.empty()) pts.pop_back();
    svg << "<polyline class=\"" << to_string(s.curve->mode) << "\" data-x=\""
        << data_values(s.curve->fmr) << "\" data-y=\"" << data_values(s.curve->fnmr)
        << "\" points=\"" << pts << "\" fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
        << "/>\n";
    legend(svg, row++, s.color, s.dashed,
           s.label + " (EER " + tick(100.0 * s.curve->eer) + "%)");
  }
  svg << "<line x1=\"" << f.px(0) << "\" y1=\"" << f.py(0) << "\" x2=\"" << f.px(1)
      << "\" y2=\"" << f.py(1) << "\" stroke=\"#999\" stroke-dasharray=\"2,3\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace unlinkeval
