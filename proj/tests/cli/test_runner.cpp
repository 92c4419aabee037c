#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "runner/config.hpp"
#include "runner/experiments.hpp"
#include "runner/table.hpp"

using namespace nanoguide::runner;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

std::string error_key(const std::string& text) {
  try {
    static_cast<void>(parse_experiment(parse(text)));
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

const char* kLinear = R"(
[experiment]
kind = linear_spectrum
output = x.csv
[emitter]
beta = 0.074
alpha = 0.5
[grid]
start_mhz = -30
stop_mhz = 30
points = 7
)";

}  // namespace

TEST_CASE("typed getters") {
  Config c = parse("[a]\nx = 1.5\nn = 12\nl = 1, 2,3\nb = true\ns = word\n");
  CHECK(c.get_double("a.x") == 1.5);
  CHECK(c.get_count("a.n") == 12);
  CHECK(c.get_list("a.l") == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(c.get_bool("a.b", false));
  CHECK(c.get_string("a.s") == "word");
  CHECK(c.get_double("a.missing", 4.0) == 4.0);
  CHECK_THROWS_AS(static_cast<void>(c.get_double("a.s")), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(c.get_count("a.x")), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(c.get_double("a.none")), ConfigError);
  CHECK_NOTHROW(c.reject_unread());
}

TEST_CASE("unknown keys are rejected by name") {
  Config c = parse("[a]\nx = 1\ny = 2\n");
  static_cast<void>(c.get_double("a.x"));
  try {
    c.reject_unread();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "a.y");
  }
}

TEST_CASE("syntax errors and duplicates are config errors") {
  CHECK_THROWS_AS(parse("[a\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[a]\nx = 1\nx = 2\n"), ConfigError);
}

TEST_CASE("a valid config parses without computing") {
  const ExperimentConfig exp = parse_experiment(parse(kLinear));
  CHECK(exp.kind == Kind::linear_spectrum);
  CHECK(exp.seed == 0);
  const auto& p = std::get<LinearSpectrumParams>(exp.params);
  CHECK(p.emitter.beta == 0.074);
  CHECK(p.grid.size() == 7);
}

TEST_CASE("validation failures name the offending key") {
  std::string bad = kLinear;
  CHECK(error_key(bad + "colour = red\n") == "grid.colour");
  CHECK(error_key(std::string(kLinear).replace(std::string(kLinear).find("beta = 0.074"), 12, "beta = 2")) ==
        "emitter.beta");
  CHECK(error_key(std::string(kLinear).replace(std::string(kLinear).find("points = 7"), 10, "points = 1")) ==
        "grid.points");
  CHECK(error_key(std::string(kLinear) + "[drive]\nrabi_gamma0 = 1\n") == "drive.rabi_gamma0");
  CHECK(error_key("[experiment]\nkind = g2\noutput = o.csv\n[emitter]\nlifetime_ns = 5\ngamma0_mhz = 30\n"
                  "[drive]\nrabi_gamma0 = 1\n[tau]\nvalues = 0, 1\n") == "emitter.lifetime_ns");
  CHECK(error_key("[experiment]\nkind = g2\noutput = o.csv\n[drive]\nrabi_gamma0 = 1\n"
                  "[tau]\nvalues = 2, 1\n") == "tau.values");
  CHECK(error_key("[experiment]\nkind = montecarlo\noutput = o.csv\n[drive]\nrabi_gamma0 = 1\n"
                  "[montecarlo]\nduration_ns = 1000\nchannel = blue\n") == "montecarlo.channel");
  CHECK(error_key("[experiment]\nkind = montecarlo\noutput = o.csv\n[drive]\nrabi_mhz = 1\nrabi_gamma0 = 1\n"
                  "[montecarlo]\nduration_ns = 1000\n") == "drive.rabi_mhz");
  CHECK(error_key("[experiment]\nkind = fit\noutput = o.csv\n[fit]\nmodel = voigt\ninput = d.csv\n") ==
        "fit.model");
  CHECK(error_key("[experiment]\nkind = fit\noutput = o.csv\n[fit]\nmodel = g2\ninput = d.csv\npeaks = 2\n") ==
        "fit.peaks");
  CHECK(error_key("[experiment]\noutput = o.csv\n") == "experiment.kind");
}

TEST_CASE("config hash ignores the output path and tracks everything else") {
  const auto h1 = parse_experiment(parse(kLinear)).config_hash;
  std::string moved = kLinear;
  moved.replace(moved.find("x.csv"), 5, "elsewhere/y.csv");
  CHECK(parse_experiment(parse(moved)).config_hash == h1);
  std::string changed = kLinear;
  changed.replace(changed.find("alpha = 0.5"), 11, "alpha = 0.6");
  CHECK(parse_experiment(parse(changed)).config_hash != h1);
  Config seeded = parse(kLinear);
  seeded.set("experiment.seed", "5");
  CHECK(parse_experiment(seeded).config_hash != h1);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hash_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("CSV writer layout") {
  Table t;
  t.columns = {{"x", "MHz"}, {"name", "-"}};
  t.add_row({1.25, std::string("a")});
  t.add_row({-0.0, std::string("b")});
  t.add_meta("note", 0.5);
  CHECK_THROWS_AS(t.add_row({1.0}), std::logic_error);
  std::ostringstream os;
  write_csv(os, t, {"demo", "00000000000000ff", 9});
  const std::string s = os.str();
  CHECK(s.find("# kind: demo\n# config_hash: 00000000000000ff\n# seed: 9\n# note: 0.5\n") != std::string::npos);
  CHECK(s.find("# columns: x,name\n# units: MHz,-\nx,name\n1.25,a\n0,b\n") != std::string::npos);
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(1e-20) == "1e-20");
}

TEST_CASE("experiments run from parsed configs") {
  const Table lin = run_experiment(parse_experiment(parse(kLinear)), 1);
  CHECK(lin.rows.size() == 7);
  const Table empty = run_experiment(
      parse_experiment(parse("[experiment]\nkind = stark_map\noutput = o.csv\n[ensemble]\ncount = 0\n"
                             "[voltage]\nvalues = 0\n[grid]\nstart_mhz = -10\nstop_mhz = 10\npoints = 3\n")),
      1);
  CHECK(empty.rows.size() == 3);
  for (const auto& r : empty.rows) CHECK(std::get<double>(r[2]) == 0.0);
}

TEST_CASE("results do not depend on the thread count") {
  const Config c = parse(
      "[experiment]\nkind = montecarlo\nseed = 3\noutput = o.csv\n[emitter]\nbeta = 1\nalpha = 0.5\n"
      "[drive]\nrabi_gamma0 = 1\n[montecarlo]\nduration_ns = 20000\ntrajectories = 4\nmax_tau_ns = 20\n");
  const auto exp = parse_experiment(c);
  std::ostringstream a, b;
  write_csv(a, run_experiment(exp, 1), {"montecarlo", exp.config_hash, exp.seed});
  write_csv(b, run_experiment(exp, 4), {"montecarlo", exp.config_hash, exp.seed});
  CHECK(a.str() == b.str());
}

TEST_CASE("shipped configs all parse") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(NANOGUIDE_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(static_cast<void>(parse_experiment(Config::load(entry.path()))));
    ++count;
  }
  CHECK(count >= 8);
}
