#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "csprobe/report.hpp"

using namespace csprobe;

TEST_CASE("format_double") {
  CHECK(format_double(0.5) == "0.500000");
  CHECK(format_double(-0.0) == "0.000000");
  CHECK(format_double(-1e-9) == "0.000000");
  CHECK(format_double(2.0 / 3.0, 3) == "0.667");
}

TEST_CASE("csv_field") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("svg chart is deterministic and well formed") {
  LineChart chart;
  chart.title = "Mean F1 <by> layer";
  chart.x_label = "layer";
  chart.y_label = "F1";
  chart.series = {{"cls", {0, 1, 2}, {0.5, 0.7, 0.9}}, {"mean", {0, 1, 2}, {0.6, 0.65, 0.95}}};
  const std::string a = render_svg(chart), b = render_svg(chart);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK(a.find("&lt;by&gt;") != std::string::npos);
  CHECK(a.find("cls") != std::string::npos);
  LineChart empty;
  CHECK(render_svg(empty).find("</svg>") != std::string::npos);
}

TEST_CASE("write_text_file creates directories") {
  const auto dir = std::filesystem::temp_directory_path() / "csprobe_report_test";
  std::filesystem::remove_all(dir);
  write_text_file(dir / "a" / "b.txt", "hello");
  std::ifstream in(dir / "a" / "b.txt");
  std::string s;
  std::getline(in, s);
  CHECK(s == "hello");
  std::filesystem::remove_all(dir);
}
