#include "vmfunc/cli/experiments.hpp"

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

using namespace vmf;
using namespace vmf::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = VMFUNC_CONFIG_DIR;

fs::path scratch(const std::string &tag) {
  const auto dir = fs::temp_directory_path() /
                   ("vmfunc_cli_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int run_tool(const std::string &args, const std::string &env = "") {
  const std::string command =
      env + " " + std::string(VMFUNC_TOOL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const char *name) { return (kConfigs / name).string(); }

std::string error_of(const std::string &text) {
  try {
    const auto c = parse_config(text, "inline");
    run_experiment(c, RunSettings{});
  } catch (const ConfigError &e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("doubles round-trip through their text form") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 123456789.0,
                   std::numeric_limits<double>::denorm_min()}) {
    const auto text = format_double(x);
    double back = 1.0;
    std::from_chars(text.data(), text.data() + text.size(), back);
    CHECK(back == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("config errors name the key and line") {
  const auto unknown = error_of("schema: v1\nexperiment: enumerate\ncell_probs: [[0.5, 0.5]]\n"
                                "function: {kind: linear, values: [1, 0]}\nn: [2]\nbogus: 1\n");
  CHECK(unknown.find("bogus") != std::string::npos);
  CHECK(unknown.find("line 6") != std::string::npos);
  const auto schema = error_of("schema: v2\nexperiment: enumerate\n");
  CHECK(schema.find("schema") != std::string::npos);
  CHECK(error_of("schema: v1\nexperiment: nothing\n").find("nothing") != std::string::npos);
  const auto nested = error_of("schema: v1\nexperiment: enumerate\ncell_probs: [[0.5, 0.5]]\n"
                               "function: {kind: linear, value: [1, 0]}\nn: [2]\n");
  CHECK(nested.find("value") != std::string::npos);
  CHECK(error_of("schema: v1\nexperiment: [unclosed\n").find("line") != std::string::npos);
}

TEST_CASE("config names default to the file stem") {
  const auto c = load_config(config("enumerate_coin.yaml"));
  CHECK(c.name == "enumerate_coin");
  CHECK(c.experiment == "enumerate");
  CHECK(c.digest.size() == 64);
  CHECK(c.digest == sha256_hex(slurp(config("enumerate_coin.yaml"))));
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("an empty schedule writes a header-only table") {
  const auto c = parse_config("schema: v1\nexperiment: enumerate\ncell_probs: [[0.5, 0.5]]\n"
                              "function: {kind: linear, values: [1, 0]}\nn: []\n",
                              "empty");
  const auto record = run_experiment(c, RunSettings{});
  CHECK(record.rows.empty());
  CHECK(to_csv(record) == "n,mean,variance,f_p_n,linear_variance,h_n,bounds_passed\n");
}

TEST_CASE("reports are byte-stable and the CSV is a projection of the JSON") {
  const auto c = load_config(config("clt_arithmetic_coin.yaml"));
  const auto record = run_experiment(c, RunSettings{c.seed, 2});
  const auto dir = scratch("emit");
  const auto [csv, json] = emit_report(record, dir);
  const auto first_csv = slurp(csv);
  const auto first_json = slurp(json);
  emit_report(record, dir);
  CHECK(slurp(csv) == first_csv);
  CHECK(slurp(json) == first_json);

  const auto parsed = nlohmann::json::parse(first_json);
  CHECK(parsed["status"] == "ok");
  CHECK(parsed["config_digest"] == c.digest);
  std::string rebuilt;
  const auto &columns = parsed["columns"];
  for (std::size_t i = 0; i < columns.size(); ++i) {
    rebuilt += (i ? "," : "") + columns[i].get<std::string>();
  }
  rebuilt += "\n";
  for (const auto &row : parsed["rows"]) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const auto &cell = row[columns[i].get<std::string>()];
      rebuilt += i ? "," : "";
      if (cell.is_number_float()) {
        rebuilt += format_double(cell.get<double>());
      } else if (cell.is_number()) {
        rebuilt += std::to_string(cell.get<std::int64_t>());
      } else if (cell.is_boolean()) {
        rebuilt += cell.get<bool>() ? "true" : "false";
      } else if (cell.is_null()) {
        rebuilt += "nan";
      } else {
        rebuilt += cell.get<std::string>();
      }
    }
    rebuilt += "\n";
  }
  CHECK(rebuilt == first_csv);
  // Every n carries its own margins.
  REQUIRE(parsed["details"].size() == 1);
  CHECK(parsed["details"][0]["n"] == 8);
  CHECK_FALSE(parsed["details"][0]["bound_margins"].empty());
  fs::remove_all(dir);
}

TEST_CASE("tool exit codes") {
  const auto dir = scratch("exit");
  const std::string out = " --out " + dir.string();
  CHECK(run_tool("enumerate --config " + config("enumerate_guard.yaml") + out) == 1);
  CHECK(run_tool("clt-run --config " + config("enumerate_coin.yaml") + out) == 1);
  CHECK(run_tool("enumerate --config " + (dir / "missing.yaml").string() + out) == 1);
  CHECK(run_tool("enumerate") == 1);
  CHECK(run_tool("deriv-check --config " + config("deriv_check.yaml") + " --threads 2" + out) == 0);
  CHECK(fs::exists(dir / "deriv_check.csv"));
  CHECK(fs::exists(dir / "deriv_check.json"));
  fs::remove_all(dir);
}

TEST_CASE("output directory comes from the environment when no flag is given") {
  const auto dir = scratch("env");
  CHECK(run_tool("enumerate --config " + config("enumerate_coin.yaml"),
                 "VMFUNC_OUT=" + dir.string()) == 0);
  CHECK(fs::exists(dir / "enumerate_coin.csv"));
  const auto flagged = scratch("flag");
  CHECK(run_tool("enumerate --config " + config("enumerate_coin.yaml") + " --out " +
                     flagged.string(),
                 "VMFUNC_OUT=" + dir.string()) == 0);
  CHECK(fs::exists(flagged / "enumerate_coin.csv"));
  fs::remove_all(dir);
  fs::remove_all(flagged);
}

TEST_CASE("tables do not depend on the thread count") {
  const auto one = scratch("t1");
  const auto four = scratch("t4");
  for (const char *name : {"clt_correlation_fgm.yaml", "bounds_suite.yaml"}) {
    const std::string sub = std::string(name).starts_with("clt") ? "clt-run" : "bounds";
    CHECK(run_tool(sub + " --config " + config(name) + " --threads 1 --out " + one.string()) == 0);
    CHECK(run_tool(sub + " --config " + config(name) + " --threads 4 --out " + four.string()) == 0);
    const auto stem = fs::path(name).stem().string() + ".csv";
    CHECK(slurp(one / stem) == slurp(four / stem));
    CHECK_FALSE(slurp(one / stem).empty());
  }
  fs::remove_all(one);
  fs::remove_all(four);
}
