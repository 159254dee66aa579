#pragma once

// Output helpers shared by the analyses: CSV quoting, stable float
// formatting, file writing and a small self-contained SVG line chart.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace csprobe {

// Fixed-point with `digits` decimals; identical bytes for identical doubles.
std::string format_double(double value, int digits = 6);

// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

void write_text_file(const std::filesystem::path& path, std::string_view contents);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  double y_min = 0.0;
  double y_max = 1.0;
  std::vector<ChartSeries> series;
};

std::string render_svg(const LineChart& chart);

}  // namespace csprobe
