#include "pcinit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <vector>

#include "pcinit/errors.hpp"
#include "pcinit/format.hpp"

namespace pcinit {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 110.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double field_value(const std::string& text, std::size_t row) {
  double v;
  if (!parse_double(text, v)) throw InvalidArgument("plot CSV row " + std::to_string(row) + ": malformed number");
  return v;
}

std::vector<Series> read_series(std::istream& csv, std::string& x_label, std::string& y_label) {
  std::string line;
  if (!std::getline(csv, line)) throw InvalidArgument("plot CSV is empty");
  const auto header = split_csv_line(line);
  std::vector<Series> series;
  std::size_t row = 1;
  if (header == std::vector<std::string>{"layer", "variance", "n"}) {
    x_label = "layer";
    y_label = "variance";
    series.push_back({"variance", {}});
    while (std::getline(csv, line)) {
      ++row;
      if (line.empty() || line == "\r") continue;
      const auto f = split_csv_line(line);
      if (f.size() != 3) throw InvalidArgument("plot CSV row " + std::to_string(row) + ": expected 3 fields");
      series.front().points.emplace_back(field_value(f[0], row), field_value(f[1], row));
    }
    return series;
  }
  if (header == std::vector<std::string>{"layer", "bin_lo", "bin_hi", "pairs", "r"}) {
    x_label = "distance";
    y_label = "correlation";
    std::map<long, Series> by_layer;
    while (std::getline(csv, line)) {
      ++row;
      if (line.empty() || line == "\r") continue;
      const auto f = split_csv_line(line);
      if (f.size() != 5) throw InvalidArgument("plot CSV row " + std::to_string(row) + ": expected 5 fields");
      const auto layer = static_cast<long>(field_value(f[0], row));
      auto& s = by_layer[layer];
      s.label = "layer " + std::to_string(layer);
      if (f[4] == "null") continue;
      s.points.emplace_back(0.5 * (field_value(f[1], row) + field_value(f[2], row)), field_value(f[4], row));
    }
    for (auto& [layer, s] : by_layer) series.push_back(std::move(s));
    return series;
  }
  throw InvalidArgument("plot CSV header '" + line + "' matches no known schema");
}

}  // namespace

PlotKind parse_plot_kind(std::string_view name) {
  if (name == "line") return PlotKind::line;
  if (name == "line_log_y") return PlotKind::line_log_y;
  throw InvalidArgument("unknown plot kind '" + std::string(name) + "'");
}

std::string render_plot_svg(std::istream& csv, PlotKind kind, std::string_view title) {
  std::string x_label, y_label;
  auto series = read_series(csv, x_label, y_label);
  const bool log_y = kind == PlotKind::line_log_y;

  // Drop points a log axis cannot show, then transform.
  for (auto& s : series) {
    std::vector<std::pair<double, double>> kept;
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (log_y) {
        if (y <= 0.0) continue;
        y = std::log10(y);
      }
      kept.emplace_back(x, y);
    }
    s.points = std::move(kept);
  }

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool any = false;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  if (log_y) {
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax <= ymin) ymax = ymin + 1.0;
  }

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  const auto sy = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << fixed(kWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << title << "</text>\n";
  }
  // Axes.
  svg << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  svg << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop + plot_h) << "\" x2=\"" << fixed(kLeft + plot_w)
      << "\" y2=\"" << fixed(kTop + plot_h) << "\"/>\n";
  svg << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop) << "\" x2=\"" << fixed(kLeft) << "\" y2=\""
      << fixed(kTop + plot_h) << "\"/>\n";
  svg << "</g>\n";

  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  constexpr int kTicks = 5;
  for (int t = 0; t < kTicks; ++t) {
    const double fx = xmin + (xmax - xmin) * t / (kTicks - 1);
    svg << "<text x=\"" << fixed(sx(fx)) << "\" y=\"" << fixed(kTop + plot_h + 16)
        << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";
  }
  if (log_y) {
    for (double e = ymin; e <= ymax + 0.5; e += std::max(1.0, std::ceil((ymax - ymin) / 8.0))) {
      svg << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(sy(e) + 4) << "\" text-anchor=\"end\">1e"
          << static_cast<long>(e) << "</text>\n";
    }
  } else {
    for (int t = 0; t < kTicks; ++t) {
      const double fy = ymin + (ymax - ymin) * t / (kTicks - 1);
      svg << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(sy(fy) + 4) << "\" text-anchor=\"end\">"
          << tick_label(fy) << "</text>\n";
    }
  }
  svg << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(kHeight - 10)
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << fixed(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fixed(kTop + plot_h / 2) << ")\">" << y_label << (log_y ? " (log)" : "") << "</text>\n";
  svg << "</g>\n";

  std::size_t color = 0;
  for (const auto& s : series) {
    const char* stroke = kPalette[color++ % std::size(kPalette)];
    if (!s.points.empty()) {
      svg << "<path fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" d=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i)
        svg << (i ? " L " : "M ") << fixed(sx(s.points[i].first)) << ',' << fixed(sy(s.points[i].second));
      svg << "\"/>\n";
    }
    const double ly = kTop + 14.0 * static_cast<double>(color);
    svg << "<text x=\"" << fixed(kLeft + plot_w + 10) << "\" y=\"" << fixed(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << stroke << "\">" << s.label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::filesystem::path emit_plot(const std::filesystem::path& csv_path, PlotKind kind,
                                const std::filesystem::path& out) {
  std::ifstream in(csv_path);
  if (!in) throw InvalidArgument("cannot open " + csv_path.string());
  const std::string svg = render_plot_svg(in, kind, csv_path.stem().string());
  std::filesystem::path target = out.empty() ? csv_path : out;
  if (out.empty()) target.replace_extension(".svg");
  std::ofstream os(target, std::ios::binary);
  if (!os) throw Error("cannot write " + target.string());
  os << svg;
  return target;
}

}  // namespace pcinit
