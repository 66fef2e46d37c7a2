#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "run.hpp"
#include "pesin/common.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace pesin;
using cli::Json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json config(const std::string& name) { return cli::load_config(std::string(CONFIG_DIR) + "/" + name); }

int run(const std::string& args) {
  const int st = std::system((std::string(PESIN_EXE) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::current_path() / "cli_out" / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("schema errors name the field") {
  Json c = config("perturbed.json");
  c["orbit"]["bogus"] = 1;
  try {
    cli::validate_config(c);
    FAIL("accepted an unknown field");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("/orbit/bogus") != std::string::npos);
  }
  Json d = config("perturbed.json");
  d["regularity"]["eps"] = 1.5;
  CHECK_THROWS_AS(cli::validate_config(d), InputError);
  d = config("perturbed.json");
  d["tasks"] = Json::array({"certify", "nonsense"});
  CHECK_THROWS_WITH_AS(cli::validate_config(d), doctest::Contains("/tasks/1"), InputError);
  d = config("perturbed.json");
  d["map"]["kind"] = "henon";
  CHECK_THROWS_AS(cli::validate_config(d), InputError);
  CHECK_THROWS_WITH_AS(cli::parse_config("{\n  \"map\": {,\n}"), doctest::Contains("line 2"), InputError);
}

TEST_CASE("reports are deterministic") {
  const Json c = config("henon_stable.json");
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const cli::RunResult ra = cli::analyze(c, a.string(), 1);
  const cli::RunResult rb = cli::analyze(c, b.string(), 4);
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  for (const auto& f : ra.report.at("files")) CHECK(slurp(a / f.get<std::string>()) == slurp(b / f.get<std::string>()));
  // timings only in meta
  CHECK(slurp(a / "report.json").find("seconds") == std::string::npos);
  CHECK(ra.meta.contains("wall_seconds"));
  const Json& par = ra.report.at("results").at("parameters");
  CHECK(par.at("lambda").at("provenance") == "given");
  CHECK(par.at("L").at("provenance") == "fitted");
  CHECK(ra.report.at("results").at("stable").at("pass") == true);
}

TEST_CASE("independent groups run in parallel, same bytes") {
  const Json c = config("homogeneity.json");
  const fs::path a = scratch("hom_a"), b = scratch("hom_b");
  const cli::RunResult ra = cli::analyze(c, a.string(), 1);
  const cli::RunResult rb = cli::analyze(c, b.string(), 3);
  CHECK(ra.exit_code == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  CHECK(slurp(a / "cocycle_study.csv") == slurp(b / "cocycle_study.csv"));
  const Json& h = ra.report.at("results").at("homogeneity");
  CHECK(h.at("found") == true);
  CHECK(h.at("sample_period") == 2);
  CHECK(h.at("simplified").at("implication") == true);
}

TEST_CASE("premise failures exit 2") {
  const fs::path reg = scratch("reg");
  const cli::RunResult r = cli::analyze(config("reg_cond_violation.json"), reg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.report.at("status") == "failed");
  CHECK(r.report.at("results").at("atlas").at("status") == "premise failure");
  CHECK(slurp(reg / "report.json").find("reg cond") != std::string::npos);

  // eps = 0.1 keeps the reg cond but breaks the stable one
  Json c = config("henon_stable.json");
  c["regularity"]["eps"] = 0.1;
  const cli::RunResult s = cli::analyze(c, scratch("stab").string());
  CHECK(s.exit_code == 2);
  CHECK(s.report.at("results").at("stable").at("error").get<std::string>().find("stable cond") != std::string::npos);

  // simplified conditions need eta < eps
  Json h = config("homogeneity.json");
  h["homogeneity"]["simplified"]["eps"] = 0.3;
  const cli::RunResult t = cli::analyze(h, scratch("hom").string());
  CHECK(t.exit_code == 2);
  CHECK(t.report.at("results").at("homogeneity").at("error").get<std::string>().find("homogeneity premise") != std::string::npos);
}

TEST_CASE("fit") {
  const Json f = cli::fit(config("perturbed.json"));
  CHECK(f.at("schema") == 1);
  CHECK(f.at("lambda").get<double>() == doctest::Approx(0.1).epsilon(1e-2));
  CHECK(f.at("rho").get<double>() == doctest::Approx(0.125).epsilon(1e-2));
  CHECK(f.at("N") == 30);
}

TEST_CASE("executable exit codes and output precedence") {
  const std::string cfg = std::string(CONFIG_DIR) + "/";
  const fs::path o = scratch("exe");
  CHECK(run("analyze --config " + cfg + "perturbed.json --out " + o.string()) == 0);
  CHECK(fs::exists(o / "report.json"));
  CHECK(fs::exists(o / "meta.json"));
  CHECK(run("analyze --config " + cfg + "reg_cond_violation.json --out " + scratch("exe2").string()) == 2);
  CHECK(run("analyze --config /nonexistent.json") == 1);
  CHECK(run("analyze") == 1);
  CHECK(run("fit --config " + cfg + "perturbed.json") == 0);
  // PESIN_OUT beats the config, --out beats PESIN_OUT
  const fs::path env = scratch("env"), flag = scratch("flag");
  CHECK(std::system(("PESIN_OUT=" + env.string() + " " + PESIN_EXE + " analyze --config " + cfg +
                     "reg_cond_violation.json >/dev/null 2>&1").c_str()) != 0);
  CHECK(fs::exists(env / "report.json"));
  std::system(("PESIN_OUT=" + env.string() + "_x " + PESIN_EXE + " analyze --config " + cfg + "reg_cond_violation.json --out " +
               flag.string() + " >/dev/null 2>&1").c_str());
  CHECK(fs::exists(flag / "report.json"));
  CHECK_FALSE(fs::exists(env.string() + "_x"));
}

TEST_CASE("linear model atlas: zero residuals, item i only reported") {
  Json c = config("linear_atlas.json");
  const cli::RunResult r = cli::analyze(c, scratch("lin").string());
  CHECK(r.exit_code == 0);
  const Json& th = r.report.at("results").at("atlas").at("theorem");
  CHECK(th.at("max_residual").get<double>() <= 1e-12);
  CHECK(th.at("margin_i").get<double>() < 0);
  // asserting everything turns the eps slack of item i into a failure
  c["atlas"].erase("assert");
  const cli::RunResult s = cli::analyze(c, scratch("lin_all").string());
  CHECK(s.exit_code == 2);
  CHECK(s.report.at("failures").at(0).get<std::string>().find("margin i ") != std::string::npos);
}
