#include "fixtures.hpp"

#include "lmtraj/tidy_io.hpp"

#include <doctest.h>

#include <cmath>

using namespace lmtraj;
using namespace lmtraj::test;

TEST_CASE("series CSV round trip") {
  std::vector<TrajectorySeries> in = {
      {"run,1", "class_fraction/a-b", {{0, 0.0, {}}, {10, 0.1, 0.02}, {20, 1.0 / 3.0, {}}}},
      {"run2", "item/\"quoted\"", {{5, 1e-17, 0.0}}},
  };
  const auto text = series_csv(in);
  CHECK(text.rfind(std::string(kSeriesHeader) + "\n", 0) == 0);
  const auto out = parse_series_csv(text);
  REQUIRE(out.size() == 2);
  for (std::size_t i = 0; i < in.size(); ++i) {
    CHECK(out[i].run_id == in[i].run_id);
    CHECK(out[i].metric_name == in[i].metric_name);
    REQUIRE(out[i].points.size() == in[i].points.size());
    for (std::size_t k = 0; k < in[i].points.size(); ++k) {
      CHECK(out[i].points[k].step == in[i].points[k].step);
      CHECK(out[i].points[k].value == in[i].points[k].value);
      CHECK(out[i].points[k].dispersion == in[i].points[k].dispersion);
    }
  }
  CHECK_THROWS_AS(parse_series_csv("a,b\n"), InputError);
  CHECK_THROWS_AS(parse_series_csv(std::string(kSeriesHeader) + "\nr,m,x,1,\n"), InputError);
}

TEST_CASE("CSV field escaping") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(split_csv_line("\"a,b\",\"c\"\"d\",,e") == std::vector<std::string>{"a,b", "c\"d", "", "e"});
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("series invariants") {
  TrajectorySeries s{"r", "m", {{10, 0.0, {}}, {5, 0.0, {}}}};
  CHECK_THROWS(s.check());
  s.points[1].step = 20;
  CHECK_NOTHROW(s.check());
  CHECK(s.steps() == std::vector<Step>{10, 20});
}

TEST_CASE("output directory schema check") {
  TempDir dir("schema");
  write_text_atomic(dir.path / "series.csv", series_csv({{"r", "m", {{0, 0.5, {}}}}}));
  write_json_atomic(dir.path / "x.json", {{"a", 1}});
  write_text_atomic(dir.path / "grid/step_0.csv", "label,a,b\na,0,0.5\nb,0.5,0\n");
  CHECK(validate_output_dir(dir.path).empty());

  SUBCASE("asymmetric grid") {
    write_text_atomic(dir.path / "grid/step_0.csv", "label,a,b\na,0,0.5\nb,0.4,0\n");
    const auto p = validate_output_dir(dir.path);
    REQUIRE(p.size() == 1);
    CHECK(p[0].detail.find("asymmetric") != std::string::npos);
  }
  SUBCASE("broken JSON") {
    write_text_atomic(dir.path / "x.json", "{");
    CHECK(validate_output_dir(dir.path).size() == 1);
  }
  SUBCASE("steps out of order") {
    write_text_atomic(dir.path / "series.csv", std::string(kSeriesHeader) + "\nr,m,10,0,\nr,m,0,0,\n");
    CHECK(validate_output_dir(dir.path).size() == 1);
  }
  CHECK_FALSE(validate_output_dir(dir.path / "nowhere").empty());
}
