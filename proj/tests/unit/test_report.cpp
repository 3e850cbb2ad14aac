#include <doctest.h>

#include <map>
#include <regex>
#include <sstream>

#include "contro/error.hpp"
#include "contro/report.hpp"

using namespace contro;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("results csv parses rows with and without a window") {
  std::istringstream in("config,t,fold,accuracy\nTEXT,,0,0.5\nC-RATE,30,1,0.75\n");
  auto rows = read_results_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].t.has_value());
  CHECK(rows[1].t == std::optional<double>(30));
  CHECK(rows[1].fold == 1);
  std::istringstream bad("config,t,fold,accuracy\nTEXT,,x,0.5\n");
  CHECK_THROWS_AS(read_results_csv(bad), DataError);
}

TEST_CASE("an empty plot still has axes") {
  auto svg = render_sweep_svg(SweepSeries{}, "empty");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(count(svg, "<line") >= 2);
  CHECK(count(svg, "<polyline") == 0);
}

TEST_CASE("one vertex per window and means equal a re-aggregation") {
  std::ostringstream csv;
  csv << "config,t,fold,accuracy\n";
  std::map<int, double> sums;
  for (int t = 15; t <= 180; t += 15)
    for (int f = 0; f < 3; ++f) {
      const double a = 0.5 + 0.001 * t + 0.01 * f;
      csv << "ALL," << t << ',' << f << ',' << a << '\n';
      sums[t] += a;
    }
  csv << "TEXT+TIME,,0,0.6\nTEXT+TIME,,1,0.62\n";
  std::istringstream in(csv.str());
  auto series = aggregate(read_results_csv(in));
  REQUIRE(series.by_config.at("ALL").size() == 12);
  CHECK(series.post_only.at("TEXT+TIME") == doctest::Approx(0.61));

  auto svg = render_sweep_svg(series, "sweep");
  CHECK(count(svg, "<polyline") == 1);
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, std::regex("points=\"([^\"]*)\"")));
  std::istringstream pts(m[1].str());
  std::string pair;
  std::size_t vertices = 0;
  while (pts >> pair) ++vertices;
  CHECK(vertices == 12);
  CHECK(count(svg, "stroke-dasharray") == 1);

  const std::regex circle("data-t=\"([^\"]*)\" data-mean=\"([^\"]*)\"");
  std::size_t circles = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), circle); it != std::sregex_iterator(); ++it) {
    const int t = std::stoi((*it)[1].str());
    CHECK(std::stod((*it)[2].str()) == doctest::Approx(sums[t] / 3.0).epsilon(1e-12));
    ++circles;
  }
  CHECK(circles == 12);
}

TEST_CASE("transfer heat table has one cell per pair") {
  std::istringstream in(
      "source,target,accuracy,degradation\n"
      "a,a,0.8,0\na,b,0.6,-0.6666666666666667\nb,a,0.55,\nb,b,0.5,\n");
  auto m = read_transfer_csv(in);
  CHECK(m.communities == std::vector<std::string>{"a", "b"});
  CHECK(m.accuracy[0][1] == 0.6);
  CHECK_FALSE(m.degradation[1][0].has_value());
  auto svg = render_transfer_svg(m, "transfer");
  CHECK(count(svg, "class=\"cell\"") == 4);
  CHECK(svg.find("data-degradation") != std::string::npos);
}
