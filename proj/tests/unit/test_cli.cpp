#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcsindy/config.hpp"
#include "pcsindy/errors.hpp"
#include "pcsindy/pipeline.hpp"
#include "pcsindy/svg.hpp"

using namespace pcsindy;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pcsindy_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_json(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PCSINDY_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("fnv-1a 64 reference vectors") {
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("seed derivation") {
  const auto a = derive_seeds(1), b = derive_seeds(1), c = derive_seeds(2);
  CHECK(a.excitation == b.excitation);
  CHECK(a.noise == b.noise);
  CHECK(a.excitation != a.load);
  CHECK(a.load != a.noise);
  CHECK(a.excitation != c.excitation);
}

TEST_CASE("defaults describe the four-DER study system") {
  const auto cfg = parse_config(ordered_json::object());
  CHECK(cfg.seed == 1);
  CHECK(cfg.microgrid.ders.size() == 4);
  CHECK(cfg.microgrid.network.buses.size() == 5);
  CHECK(cfg.identification.duration == 10.0);
  CHECK(cfg.validation.duration == 13.0);
  REQUIRE(cfg.validation.events.size() == 5);
  CHECK(cfg.validation.events[0].time == 10.5);
  CHECK(cfg.validation.events[0].magnitude == 0.7);
  CHECK(cfg.validation.events[1].kind == EventKind::PvStep);
  CHECK(cfg.pmu.reporting_rate == 120.0);
  CHECK(cfg.stlsq.threshold == 0.05);
  CHECK(cfg.prediction.divergence_cap_hz == 1.0);
  REQUIRE(cfg.identification.excitation);
  CHECK(cfg.identification.excitation->amplitude == 0.01);
  CHECK(cfg.analytical_spec().roster.size() == 4);
  CHECK(cfg.resolved.is_object());
}

TEST_CASE("user values merge over the defaults") {
  const auto cfg = parse_config(ordered_json::parse(R"({"seed": 9, "stlsq": {"threshold": 0.1}, "pmu": {"noise": false}})"));
  CHECK(cfg.seed == 9);
  CHECK(cfg.stlsq.threshold == 0.1);
  CHECK(cfg.stlsq.max_iters == 10);
  CHECK_FALSE(cfg.pmu.noise);
  CHECK(cfg.pmu.seed == derive_seeds(9).noise);
  CHECK(cfg.identification.excitation_seed == derive_seeds(9).excitation);
  CHECK(cfg.resolved["stlsq"]["threshold"] == 0.1);
}

TEST_CASE("set_seed and disable_noise") {
  auto cfg = parse_config(ordered_json::object());
  cfg.set_seed(42);
  CHECK(cfg.seed == 42);
  CHECK(cfg.pmu.seed == derive_seeds(42).noise);
  CHECK(cfg.identification.load_seed == derive_seeds(42).load);
  cfg.disable_noise();
  CHECK_FALSE(cfg.pmu.noise);
}

TEST_CASE("config errors name the field") {
  CHECK_THROWS_WITH_AS(parse_config(ordered_json::parse(R"({"stlsq": {"treshold": 0.1}})")),
                       "unknown config field 'stlsq.treshold'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(ordered_json::parse(R"({"stlsq": {"threshold": "big"}})")),
                       doctest::Contains("stlsq.threshold"), ConfigError);
  CHECK_THROWS_AS(parse_config(ordered_json::parse(R"({"pmu": {"reporting_rate": 70}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(ordered_json::parse(R"({"derivatives": {"method": "spline"}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(ordered_json::parse(R"({"excitation": {"f_max": 80}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(ordered_json::parse("[1, 2]")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  const auto dir = scratch("badjson");
  CHECK_THROWS_AS(load_config(write_json(dir, "{ not json")), ConfigError);
}

TEST_CASE("svg output is well formed and breaks lines at gaps") {
  PlotSpec spec;
  spec.title = "f1 <test> & more";
  spec.y_label = "f (Hz)";
  spec.y_range = std::make_pair(59.0, 61.0);
  PlotSeries a{"measured", {0, 1, 2, 3}, {60, 60.2, std::numeric_limits<double>::quiet_NaN(), 60.1}};
  PlotSeries b{"model", {0, 1, 2, 3}, {60, 70, 60, 60}, "#d62728", true};
  const auto svg = render_svg(spec, {a, b});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("f1 &lt;test&gt; &amp; more") != std::string::npos);
  CHECK(svg.find("clipPath") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(render_svg(spec, {a, b}) == svg);
}

TEST_CASE("pipeline artifacts and report") {
  auto cfg = parse_config(ordered_json::object());
  const auto res = run_pipeline(cfg, {LibraryKind::Analytical});
  const auto dir = scratch("pipeline");
  ArtifactWriter w(dir);
  write_pipeline(res, cfg, w, {false, true});
  for (const char* f : {"config.resolved.json", "pmu_identification.csv", "pmu_validation.csv", "model_analytical.json",
                        "prediction.csv", "metrics.json", "fit_report.txt", "fit_report.csv", "f1.svg", "f2.svg"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  for (const auto& r : w.records()) CHECK(r.fnv1a64 == fnv1a64_hex(slurp(dir / r.file)));
  const auto manifest = ordered_json::parse(manifest_json("pipeline", cfg, w, res.timings));
  CHECK(manifest["command"] == "pipeline");
  CHECK(manifest["seed"] == 1);
  const auto pmu = slurp(dir / "pmu_identification.csv");
  CHECK(pmu.rfind("t,gfm1.theta,gfm1.f,", 0) == 0);
  const auto report = render_report(slurp(dir / "metrics.json"));
  CHECK(report.find("[analytical]") != std::string::npos);
  CHECK(report.find("gfl4.omega_ddot") != std::string::npos);
  CHECK_THROWS_AS(render_report("{}"), ConfigError);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("exit");
  const auto log = dir / "log.txt";
  CHECK(run_cli("--help", log) == 0);
  CHECK(run_cli("", log) == 1);
  CHECK(run_cli("frobnicate", log) == 1);
  CHECK(run_cli("pipeline --library cubic --out " + (dir / "a").string(), log) == 1);

  const auto bad_field = write_json(dir, R"({"stlsq": {"treshold": 0.1}})");
  CHECK(run_cli("identify --config " + bad_field.string() + " --out " + (dir / "b").string(), log) == 1);
  CHECK(slurp(log).find("unknown config field 'stlsq.treshold'") != std::string::npos);

  const auto harsh = write_json(dir, R"({"stlsq": {"threshold": 1e6}})");
  CHECK(run_cli("identify --library analytical --config " + harsh.string() + " --out " + (dir / "c").string(), log) == 2);
  CHECK(slurp(log).find("threshold too aggressive") != std::string::npos);

  const auto collapse = write_json(
      dir, R"({"validation": {"events": [{"time": 10.5, "kind": "load-step", "bus": 3, "magnitude": 40.0}]}})");
  CHECK(run_cli("simulate --scenario validation --config " + collapse.string() + " --out " + (dir / "d").string(), log) ==
        2);
  CHECK(fs::exists(dir / "d" / "trajectory.partial.csv"));

  CHECK(run_cli("simulate --no-noise --seed 4 --out " + (dir / "e").string(), log) == 0);
  CHECK(fs::exists(dir / "e" / "trajectory.csv"));
  CHECK(fs::exists(dir / "e" / "pmu.csv"));
  CHECK(run_cli("identify --library analytical --pmu " + (dir / "e" / "pmu.csv").string() + " --out " +
                    (dir / "f").string(),
                log) == 0);
  CHECK(run_cli("predict --no-plots --model " + (dir / "f" / "model_analytical.json").string() + " --out " +
                    (dir / "g").string(),
                log) == 0);
  CHECK(fs::exists(dir / "g" / "prediction.csv"));
  CHECK(run_cli("report --out " + (dir / "f").string(), log) == 0);
  CHECK(run_cli("report --out " + (dir / "missing").string(), log) == 1);
  CHECK(run_cli("predict --model " + (dir / "nope.json").string() + " --out " + (dir / "h").string(), log) == 1);
}
