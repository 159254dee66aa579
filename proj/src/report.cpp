#include "csprobe/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csprobe/error.hpp"

namespace csprobe {
namespace {

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string format_double(double value, int digits) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  std::string out = buf;
  if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') out.erase(0, 1);
  return out;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

std::string render_svg(const LineChart& chart) {
  constexpr double kWidth = 720, kHeight = 440;
  constexpr double kLeft = 70, kRight = 180, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_min = 0, x_max = 1;
  bool first = true;
  for (const ChartSeries& s : chart.series) {
    for (double x : s.x) {
      x_min = first ? x : std::min(x_min, x);
      x_max = first ? x : std::max(x_max, x);
      first = false;
    }
  }
  if (x_max <= x_min) x_max = x_min + 1;
  const double y_span = chart.y_max > chart.y_min ? chart.y_max - chart.y_min : 1.0;
  const auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto py = [&](double y) {
    const double t = std::clamp((y - chart.y_min) / y_span, 0.0, 1.0);
    return kTop + (1.0 - t) * plot_h;
  };
  const auto f = [](double v) { return format_double(v, 2); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << f(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(chart.title) << "</text>\n";

  // Axes, gridlines and ticks.
  for (int i = 0; i <= 5; ++i) {
    const double y = chart.y_min + y_span * i / 5.0;
    svg << "<line x1=\"" << f(kLeft) << "\" y1=\"" << f(py(y)) << "\" x2=\"" << f(kLeft + plot_w)
        << "\" y2=\"" << f(py(y)) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << f(kLeft - 8) << "\" y=\"" << f(py(y) + 4)
        << "\" text-anchor=\"end\">" << format_double(y, 2) << "</text>\n";
  }
  const int x_ticks = static_cast<int>(std::min(12.0, x_max - x_min));
  for (int i = 0; i <= x_ticks; ++i) {
    const double x = x_min + (x_max - x_min) * i / std::max(1, x_ticks);
    svg << "<text x=\"" << f(px(x)) << "\" y=\"" << f(kTop + plot_h + 18)
        << "\" text-anchor=\"middle\">" << format_double(x, 0) << "</text>\n";
  }
  svg << "<line x1=\"" << f(kLeft) << "\" y1=\"" << f(kTop + plot_h) << "\" x2=\"" << f(kLeft + plot_w)
      << "\" y2=\"" << f(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << f(kLeft) << "\" y1=\"" << f(kTop) << "\" x2=\"" << f(kLeft)
      << "\" y2=\"" << f(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << f(kLeft + plot_w / 2) << "\" y=\"" << f(kHeight - 18)
      << "\" text-anchor=\"middle\">" << xml_escape(chart.x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << f(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << f(kTop + plot_h / 2) << ")\">" << xml_escape(chart.y_label) << "</text>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const ChartSeries& series = chart.series[s];
    const char* color = kPalette[s % kPalette.size()];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      if (i) svg << ' ';
      svg << f(px(series.x[i])) << ',' << f(py(series.y[i]));
    }
    svg << "\"/>\n";
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      svg << "<circle cx=\"" << f(px(series.x[i])) << "\" cy=\"" << f(py(series.y[i]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << f(kLeft + plot_w + 12) << "\" y1=\"" << f(ly) << "\" x2=\""
        << f(kLeft + plot_w + 32) << "\" y2=\"" << f(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << f(kLeft + plot_w + 38) << "\" y=\"" << f(ly + 4) << "\">"
        << xml_escape(series.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace csprobe
