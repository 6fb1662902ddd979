#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "doctest.h"
#include "mavg/error.hpp"
#include "mavg/io.hpp"

using namespace mavg;

TEST_CASE("doubles print shortest and read back exactly") {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30.0, 30.0));
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-3.0) == "-3");
  CHECK(format_double(std::nan("")) == "NA");
  CHECK(std::strtod(format_double(std::numeric_limits<double>::denorm_min()).c_str(), nullptr) ==
        std::numeric_limits<double>::denorm_min());
}

TEST_CASE("CSV splitting honors quotes") {
  CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_csv_line("\"x, y\",2") == std::vector<std::string>{"x, y", "2"});
  CHECK(split_csv_line("\"say \"\"hi\"\"\",1") == std::vector<std::string>{"say \"hi\"", "1"});
  CHECK(csv_escape("plain") == "plain");
  CHECK(split_csv_line(csv_escape("a,\"b\"")) == std::vector<std::string>{"a,\"b\""});
}

TEST_CASE("dataset CSV round trip") {
  Rng rng(2);
  const Dataset d = gen_linear_study(25, rng).data;
  const std::string path = "io_dataset.csv";
  write_dataset_csv(d, path, "resp");
  const Dataset back = read_dataset_csv(path, "resp");
  CHECK(back.names == d.names);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  CHECK_THROWS_AS(read_dataset_csv(path, "missing"), Error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_dataset_csv("/nonexistent/x.csv", "y"), Error);
}

TEST_CASE("panel CSV round trip keeps censoring") {
  const auto panel = simulate_longitudinal(300, 4, Rng(3));
  const std::string path = "io_panel.csv";
  write_panel_csv(panel, path);
  const auto back = read_panel_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.n() == panel.n());
  REQUIRE(back.horizon == panel.horizon);
  const auto same = [](const Matrix& a, const Matrix& b) {
    return ((a.array() == b.array()) || (a.array().isNaN() && b.array().isNaN())).all();
  };
  CHECK(same(back.l1, panel.l1));
  CHECK(same(back.l3, panel.l3));
  CHECK(same(back.a, panel.a));
  CHECK(same(back.c, panel.c));
  CHECK(same(back.y, panel.y));
  CHECK(back.v3 == panel.v3);
  CHECK(back.ids == panel.ids);
}
