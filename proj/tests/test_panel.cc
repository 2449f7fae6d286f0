// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "synthetic.hh"
#include "trcrp/errors.hh"
#include "trcrp/panel.hh"

using trcrp::DataError;
using trcrp::Panel;

namespace {

std::string twelve_rows() {
  std::ostringstream csv;
  csv << "time,a,b\n";
  for (int r = 0; r < 12; ++r) csv << "w" << r << ',' << r << ',' << 10 * r << '\n';
  return csv.str();
}

}  // namespace

TEST_CASE("read_csv counts series, steps and prefix rows") {
  std::istringstream in(twelve_rows());
  const Panel panel = trcrp::read_csv(in, 2);
  CHECK(panel.num_series() == 2);
  CHECK(panel.num_steps() == 10);
  CHECK(panel.window() == 2);
  CHECK(panel.value(0, -1) == 0.0);
  CHECK(panel.value(1, 0) == 10.0);
  CHECK(panel.value(0, 1) == 2.0);
  CHECK(panel.label(1) == "w2");
}

TEST_CASE("window zero uses every row as a step") {
  std::istringstream in(twelve_rows());
  const Panel panel = trcrp::read_csv(in, 0);
  CHECK(panel.num_steps() == 12);
  CHECK(panel.value(0, 1) == 0.0);
}

TEST_CASE("blank cells become unobserved after the prefix offset") {
  std::istringstream in("time,a,b\n0,1,2\n1,3,4\n2,5,6\n3,7,8\n4,9,\n5,1,2\n");
  const Panel panel = trcrp::read_csv(in, 1);
  // Row 5 is step 4 once one prefix row is consumed.
  CHECK_FALSE(panel.observed(1, 4));
  CHECK(std::isnan(panel.value(1, 4)));
  CHECK(panel.observed(0, 4));
  const auto missing = panel.missing_cells();
  REQUIRE(missing.size() == 1);
  CHECK(missing[0] == std::make_pair(std::size_t{1}, 4));
  CHECK_FALSE(panel.fully_observed());
}

TEST_CASE("ingestion errors") {
  {
    std::istringstream in("time,a\n0,1\n1,abc\n");
    CHECK_THROWS_AS(trcrp::read_csv(in, 0), DataError);
  }
  {
    std::istringstream in("time,a\n0,\n1,2\n2,3\n");
    CHECK_THROWS_AS(trcrp::read_csv(in, 1), DataError);
  }
  {
    std::istringstream in("time,a\n0,1\n0,2\n");
    CHECK_THROWS_AS(trcrp::read_csv(in, 0), DataError);
  }
  {
    std::istringstream in("time,a\n0,1,2\n");
    CHECK_THROWS_AS(trcrp::read_csv(in, 0), DataError);
  }
  {
    std::istringstream in("time,a\n0,1\n");
    CHECK_THROWS_AS(trcrp::read_csv(in, 1), DataError);
  }
  CHECK_THROWS_AS(trcrp::load_csv("/nonexistent/panel.csv", 0), DataError);
}

TEST_CASE("comment lines are skipped") {
  std::istringstream in("# config_hash=abc\ntime,a\n0,1\n1,2\n");
  const Panel panel = trcrp::read_csv(in, 0);
  CHECK(panel.num_steps() == 2);
}

TEST_CASE("lag vectors cross into the prefix") {
  const Panel panel = synth::make_panel({{-2, -1, 0, 1, 2, 3}}, 3);
  {
    const auto lag = trcrp::lag_vector(panel, 0, 2);
    CHECK(lag.lags == std::vector<double>{-1, 0, 1});
    CHECK(lag.lag(1) == 1.0);
    CHECK(lag.lag(3) == -1.0);
  }
  const Panel p1 = synth::make_panel({{5, 6, 7}}, 1);
  CHECK(trcrp::lag_vector(p1, 0, 1).lags == std::vector<double>{5});
  const Panel p0 = synth::make_panel({{5, 6, 7}}, 0);
  CHECK(trcrp::lag_vector(p0, 0, 2).lags.empty());
  CHECK_THROWS_AS(trcrp::lag_vector(p1, 0, 0), std::out_of_range);
  CHECK_THROWS_AS(trcrp::lag_vector(p1, 0, 3), std::out_of_range);
}

TEST_CASE("consecutive lag vectors shift by one") {
  trcrp::Rng rng = trcrp::make_rng(7, 0);
  const Panel panel = synth::random_panel(rng, 3, 20, 4, 0.2);
  for (std::size_t n = 0; n < 3; ++n) {
    for (int t = 1; t < 20; ++t) {
      const auto a = trcrp::lag_vector(panel, n, t);
      const auto b = trcrp::lag_vector(panel, n, t + 1);
      for (std::size_t i = 0; i + 1 < 4; ++i) {
        CHECK(b.lag_observed[i] == a.lag_observed[i + 1]);
        if (a.lag_observed[i + 1]) CHECK(b.lags[i] == a.lags[i + 1]);
      }
      CHECK(b.lag_observed[3] == panel.observed(n, t));
      if (panel.observed(n, t)) CHECK(b.lags[3] == panel.value(n, t));
    }
  }
}

TEST_CASE("csv round trip keeps every value and mask") {
  trcrp::Rng rng = trcrp::make_rng(11, 0);
  const Panel panel = synth::random_panel(rng, 3, 15, 2, 0.25);
  std::stringstream buf;
  trcrp::write_csv(buf, panel, "note");
  const Panel back = trcrp::read_csv(buf, 2);
  REQUIRE(back.num_steps() == panel.num_steps());
  for (std::size_t n = 0; n < 3; ++n) {
    for (int t = -1; t <= 15; ++t) {
      REQUIRE(back.observed(n, t) == panel.observed(n, t));
      if (panel.observed(n, t)) CHECK(back.value(n, t) == panel.value(n, t));
    }
  }
  CHECK(back.series_names() == panel.series_names());
  CHECK(back.time_labels() == panel.time_labels());
}

TEST_CASE("with_missing hides in-sample cells only") {
  const Panel panel = synth::make_panel({{1, 2, 3, 4}}, 1);
  const Panel hidden = panel.with_missing({{0, 2}});
  CHECK_FALSE(hidden.observed(0, 2));
  CHECK(hidden.observed(0, 3));
  CHECK_THROWS_AS(panel.with_missing({{0, 0}}), DataError);
  CHECK(hidden.observed_values(0) == std::vector<double>{2, 4});
}
