#include <cmath>
#include <limits>

#include "doctest.h"
#include "jfsce/config.hpp"
#include "jfsce/csv.hpp"
#include "jfsce/harness.hpp"

using namespace jfsce;

namespace {

ResultRow sample_row(int i) {
  ResultRow r;
  r.experiment = "mse-vs-snr";
  r.method = i % 2 ? "omp" : "needs,\"quoting\"";
  r.sweep_name = "snr_db";
  r.sweep_value = 2.0 * i;
  r.trials = 200;
  r.mse_linear = 0.1 / (i + 1) + 1e-17;
  r.mse_db = 10.0 * std::log10(r.mse_linear);
  r.nmse_db = i == 3 ? std::numeric_limits<double>::quiet_NaN() : -12.345678901234567;
  r.time_s = std::numeric_limits<double>::quiet_NaN();
  r.iters = 10.5;
  r.boundary_hit_rate = 0.995;
  r.failures = i;
  return r;
}

ExperimentConfig tiny(ExperimentId id) {
  ExperimentConfig c = preset(id, Scale::small);
  c.trials = 3;
  c.methods = {Method::conventional, Method::omp, Method::ideal};
  return c;
}

}  // namespace

TEST_CASE("CSV round trip is exact") {
  std::vector<ResultRow> rows;
  for (int i = 0; i < 6; ++i) rows.push_back(sample_row(i));
  const std::string text = format_csv(rows);
  const auto back = parse_csv(text);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]);
  CHECK(format_csv(back) == text);
}

TEST_CASE("CSV with no rows is the header line") {
  CHECK(format_csv({}) == std::string(kCsvHeader) + "\n");
  CHECK(parse_csv(format_csv({})).empty());
  CHECK_THROWS_AS(parse_csv(""), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n"), Error);
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\nx,y\n"), Error);
}

TEST_CASE("numbers use the shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-20.0) == "-20");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()).empty());
  const double v = 1.0 / 3.0;
  CHECK(std::stod(format_number(v)) == v);
}

TEST_CASE("config text") {
  const ConfigFile f = parse_config_text(
      "# comment\nseed = 5\n\n[experiment.mse-vs-snr]\ntrials = 10 \n; other\nsnr_grid = 0:10:30\n"
      "[loopback]\ndelay=340\n");
  CHECK(f.global.at("seed") == "5");
  REQUIRE(f.sections.size() == 2);
  CHECK(f.sections[0].name == "experiment.mse-vs-snr");
  CHECK(f.sections[0].values.at("trials") == "10");
  CHECK(f.find("loopback")->values.at("delay") == "340");
  CHECK(f.find("nope") == nullptr);
  CHECK_THROWS_AS(parse_config_text("novalue\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[open\n"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/x.cfg"), ConfigError);
}

TEST_CASE("value parsers") {
  CHECK(parse_grid("g", "0:2:30").size() == 16);
  CHECK(parse_grid("g", "0:2:30").back() == 30.0);
  CHECK(parse_grid("g", "1, 2.5,4") == std::vector<double>{1.0, 2.5, 4.0});
  CHECK(parse_grid("g", "0.05:0.05:0.2").size() == 4);
  CHECK_THROWS_AS(parse_grid("g", "1,,2"), ConfigError);
  CHECK_THROWS_AS(parse_grid("g", "0:0:3"), ConfigError);
  CHECK(parse_bool("b", "true"));
  CHECK_FALSE(parse_bool("b", "0"));
  CHECK_THROWS_AS(parse_bool("b", "maybe"), ConfigError);
  CHECK_THROWS_AS(parse_long("n", "12x"), ConfigError);
  CHECK_THROWS_AS(parse_double("x", ""), ConfigError);
}

TEST_CASE("presets") {
  const ExperimentConfig snr = preset(ExperimentId::mse_vs_snr, Scale::full);
  REQUIRE(!snr.snr_grid.empty());
  CHECK(snr.snr_grid.front() == 0.0);
  CHECK(snr.snr_grid.back() == 30.0);
  CHECK(snr.frame.combined_len() == 1100);
  CHECK(snr.frame.num_equations == 148);
  CHECK(snr.boundary == 500);
  const ExperimentConfig ne = preset(ExperimentId::mse_vs_ne, Scale::full);
  CHECK(std::find(ne.ne_grid.begin(), ne.ne_grid.end(), 55.0) != ne.ne_grid.end());
  CHECK(std::find(ne.ne_grid.begin(), ne.ne_grid.end(), 1320.0) != ne.ne_grid.end());
  const ExperimentConfig lb = preset(ExperimentId::eq_taps, Scale::full);
  CHECK(lb.loopback.frame.block_len() == 1047);
  CHECK(lb.eq_taps == 200);
  CHECK(lb.budget_grid.back() == 200.0);
  for (ExperimentId id : all_experiments()) {
    CHECK_NOTHROW(preset(id, Scale::small).validate());
    CHECK_NOTHROW(preset(id, Scale::full).validate());
    CHECK(parse_experiment(experiment_name(id)) == id);
  }
}

TEST_CASE("overrides") {
  ExperimentConfig c = preset(ExperimentId::mse_vs_snr, Scale::small);
  apply_overrides(c, {{"methods", "omp,ideal"}, {"trials", "7"}, {"snr_grid", "0:5:10"}});
  CHECK(c.methods == std::vector<Method>{Method::omp, Method::ideal});
  CHECK(c.trials == 7);
  CHECK(c.snr_grid.size() == 3);
  CHECK_THROWS_AS(apply_overrides(c, {{"methods", "omp,lasso"}}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(c, {{"bogus", "1"}}), ConfigError);
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("describe shows the sparsity study geometry") {
  const std::string d = describe(preset(ExperimentId::mse_vs_sparsity, Scale::full));
  CHECK(d.find("NE = 148") != std::string::npos);
  CHECK(d.find("M+L = 1100") != std::string::npos);
  CHECK(d.find("snr_db = 20") != std::string::npos);
}

TEST_CASE("results do not depend on the thread count") {
  ExperimentConfig c = tiny(ExperimentId::mse_vs_snr);
  c.snr_grid = {10.0, 20.0};
  c.threads = 1;
  const std::string one = format_csv(run_experiment(c).rows);
  c.threads = 3;
  const std::string three = format_csv(run_experiment(c).rows);
  CHECK(one == three);
  CHECK(format_csv(run_experiment(c).rows) == three);
  c.seed = 2;
  CHECK(format_csv(run_experiment(c).rows) != three);
}

TEST_CASE("rows carry NaN time unless timing is on") {
  ExperimentConfig c = tiny(ExperimentId::mse_vs_snr);
  c.snr_grid = {20.0};
  const auto rows = run_experiment(c).rows;
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(std::isnan(r.time_s));
    CHECK(r.trials == 3);
    CHECK(r.failures == 0);
  }
  CHECK(rows[2].method == "ideal");
  CHECK(rows[2].mse_db <= rows[1].mse_db + 1e-9);
  const std::string csv = format_csv(rows);
  CHECK(csv.find(",,") != std::string::npos);
}

TEST_CASE("failing trials are counted, not fatal") {
  ExperimentConfig c = tiny(ExperimentId::mse_vs_snr);
  c.snr_grid = {20.0};
  c.methods = {Method::omp};
  c.channel_sparsity = 4;
  apply_overrides(c, {{"NE", "3"}});
  const auto rows = run_experiment(c).rows;
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].failures == 3);
  CHECK(std::isnan(rows[0].mse_db));
}

TEST_CASE("time study fits a slope per method") {
  std::vector<ResultRow> rows;
  for (double ne : {50.0, 100.0, 200.0}) {
    ResultRow r;
    r.method = "omp";
    r.sweep_value = ne;
    r.time_s = 1e-3 * ne;
    rows.push_back(r);
    r.method = "classical";
    r.time_s = 1e-6 * ne * ne;
    rows.push_back(r);
  }
  const auto s = fit_time_slopes(rows);
  REQUIRE(s.size() == 2);
  CHECK(s[0].method == "omp");
  CHECK(s[0].slope == doctest::Approx(1.0));
  CHECK(s[1].slope == doctest::Approx(2.0));
  CHECK(s[0].points == 3);
  CHECK(format_slopes_csv(s).rfind("method,slope,points\nomp,", 0) == 0);
}

TEST_CASE("loopback experiment rows") {
  ExperimentConfig c = preset(ExperimentId::eq_taps, Scale::small);
  c.trials = 2;
  c.budget_grid = {1, 15, 200};
  c.methods = {Method::omp};
  const auto rows = run_experiment(c).rows;
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].sweep_value == 1.0);
  CHECK(rows[2].sweep_value == 200.0);
  CHECK(rows[2].mse_db < rows[0].mse_db);
}
