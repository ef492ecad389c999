#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include "szego/cli/app.hpp"

namespace fs = std::filesystem;
using szego::cli::Json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "szego");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = szego::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("szego_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path write_config(const std::string& name, const Json& j) {
  const fs::path p = fs::temp_directory_path() / ("szego_cli_test_" + name + ".json");
  std::ofstream(p) << j.dump(2);
  return p;
}

Json small_clt_config() {
  return Json::parse(R"({
    "experiment": "clt", "seed": 11,
    "dist": {"kind": "uniform", "half_width": 1.0},
    "a": {"kind": "fermi", "beta": 3.0, "fermi_energy": 0.0},
    "phi": {"kind": "renyi", "alpha": 2.0},
    "box": {"M": 6, "B": 16},
    "clt": {"n": 40}
  })");
}

void expect_csv_shape(const std::string& text, std::size_t columns) {
  ASSERT_FALSE(text.empty());
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
  std::istringstream in(text);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')), columns - 1) << line;
    ++rows;
  }
  EXPECT_GE(rows, 2u);
}

}  // namespace

TEST(Cli, SelftestPasses) {
  const fs::path dir = fresh_dir("selftest");
  const auto r = run({"selftest", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const Json rep = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(rep["experiment"], "selftest");
  EXPECT_EQ(rep["verdict"], "pass");
  expect_csv_shape(slurp(dir / "selftest.csv"), Json::parse(slurp(dir / "report.json"))["checks"][0].size());
}

TEST(Cli, NegativeBetaIsRejected) {
  const auto r = run({"clt", "--set", "a.beta=-1", "--out", fresh_dir("beta").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("a.beta"), std::string::npos) << r.err;
}

TEST(Cli, NegativeBetaInConfigFile) {
  Json cfg = small_clt_config();
  cfg["a"]["beta"] = -1.0;
  const auto r = run({"clt", "--config", write_config("beta", cfg).string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("a.beta"), std::string::npos) << r.err;
}

TEST(Cli, UnknownFieldIsRejected) {
  Json cfg = small_clt_config();
  cfg["clt"]["n_realisations"] = 10;
  const auto r = run({"clt", "--config", write_config("unknown", cfg).string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("clt.n_realisations"), std::string::npos) << r.err;
}

TEST(Cli, MalformedInputsExitTwo) {
  EXPECT_EQ(run({"clt", "--config", "/nonexistent/cfg.json"}).code, 2);
  EXPECT_EQ(run({"nosuchcommand"}).code, 2);
  EXPECT_EQ(run({"clt", "--seed", "abc"}).code, 2);
  EXPECT_EQ(run({"clt", "--set", "clt.n=5"}).code, 2);
  EXPECT_EQ(run({"validate", "--set", "dist.kind=gaussian", "--experiment", "clt"}).code, 2);
  // The composite must be defined on K: von Neumann of the identity is not.
  EXPECT_EQ(run({"validate", "--experiment", "clt", "--set", "a={\"kind\":\"identity\"}", "--set",
                 "phi={\"kind\":\"von_neumann\"}"})
                .code,
            2);
}

TEST(Cli, ValidateReportsWarnings) {
  const auto r = run({"validate", "--experiment", "entropy", "--seed", "3", "--set",
                      "dist={\"kind\":\"bernoulli\",\"magnitude\":1.0,\"prob\":0.5}"});
  EXPECT_EQ(r.code, 0) << r.err;
  const Json rep = Json::parse(r.out);
  EXPECT_EQ(rep["status"], "ok");
  bool found = false;
  for (const auto& w : rep["warnings"]) found = found || w.get<std::string>().find("0 ∉ supp F") != std::string::npos;
  EXPECT_TRUE(found) << rep.dump();
}

TEST(Cli, ValidateCleanConfig) {
  const auto r = run({"validate", "--config", write_config("clean", small_clt_config()).string()});
  EXPECT_EQ(r.code, 0) << r.err;
  const Json rep = Json::parse(r.out);
  EXPECT_EQ(rep["status"], "ok");
  EXPECT_TRUE(rep["warnings"].empty()) << rep.dump();
  EXPECT_EQ(rep["schema_version"], szego::cli::kSchemaVersion);
}

TEST(Cli, MissingSeedDefaultsWithWarning) {
  Json cfg = small_clt_config();
  cfg.erase("seed");
  const auto r = run({"validate", "--config", write_config("noseed", cfg).string()});
  EXPECT_EQ(r.code, 0) << r.err;
  const Json rep = Json::parse(r.out);
  EXPECT_EQ(rep["seed"], 0);
  bool found = false;
  for (const auto& w : rep["warnings"]) found = found || w.get<std::string>().find("seed missing") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(Cli, CltWritesArtifactsWithSchemaKeys) {
  const fs::path dir = fresh_dir("clt");
  const auto r = run({"clt", "--config", write_config("clt", small_clt_config()).string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = Json::parse(slurp(dir / "report.json"));
  for (const char* key : {"schema_version", "experiment", "seed", "config_echo"}) EXPECT_TRUE(rep.contains(key)) << key;
  EXPECT_EQ(rep["experiment"], "clt");
  EXPECT_EQ(rep["seed"], 11);
  EXPECT_EQ(rep["config_echo"]["clt"]["n"], 40);
  EXPECT_FALSE(rep["config_echo"].contains("out"));
  EXPECT_FALSE(rep["config_echo"].contains("threads"));
  const std::string samples = slurp(dir / "clt_samples.csv");
  expect_csv_shape(samples, 3);
  EXPECT_EQ(samples.substr(0, samples.find('\n')), "realization_index,trace,sigma_sample");
  EXPECT_EQ(std::count(samples.begin(), samples.end(), '\n'), 41);
  expect_csv_shape(slurp(dir / "clt_histogram.csv"), 3);
}

TEST(Cli, OutputsIndependentOfThreadCount) {
  const fs::path cfg = write_config("threads", small_clt_config());
  const fs::path d1 = fresh_dir("threads1"), d4 = fresh_dir("threads4");
  ASSERT_EQ(run({"clt", "--config", cfg.string(), "--threads", "1", "--out", d1.string()}).code, 0);
  ASSERT_EQ(run({"clt", "--config", cfg.string(), "--threads", "4", "--out", d4.string()}).code, 0);
  for (const char* f : {"report.json", "clt_samples.csv", "clt_histogram.csv"}) EXPECT_EQ(slurp(d1 / f), slurp(d4 / f)) << f;
}

TEST(Cli, DecimalPointIgnoresGlobalLocale) {
  struct CommaDecimal : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
    char do_thousands_sep() const override { return '.'; }
    std::string do_grouping() const override { return "\3"; }
  };
  const std::locale previous = std::locale::global(std::locale(std::locale::classic(), new CommaDecimal));
  const fs::path dir = fresh_dir("locale");
  const auto r = run({"clt", "--config", write_config("locale", small_clt_config()).string(), "--out", dir.string()});
  std::locale::global(previous);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string samples = slurp(dir / "clt_samples.csv");
  EXPECT_NE(samples.find('.'), std::string::npos);
  expect_csv_shape(samples, 3);
  const fs::path ref = fresh_dir("locale_ref");
  ASSERT_EQ(run({"clt", "--config", write_config("locale", small_clt_config()).string(), "--out", ref.string()}).code, 0);
  EXPECT_EQ(samples, slurp(ref / "clt_samples.csv"));
  EXPECT_EQ(slurp(dir / "report.json"), slurp(ref / "report.json"));
}

TEST(Cli, AssertTurnsFailedVerdictIntoExitThree) {
  Json cfg = small_clt_config();
  cfg["clt"]["ks_threshold"] = 1e-6;
  const fs::path path = write_config("assert", cfg);
  EXPECT_EQ(run({"clt", "--config", path.string(), "--out", fresh_dir("assert0").string()}).code, 0);
  const fs::path dir = fresh_dir("assert1");
  EXPECT_EQ(run({"clt", "--config", path.string(), "--assert", "--out", dir.string()}).code, 3);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_EQ(Json::parse(slurp(dir / "report.json"))["verdict"], "fail");
}

TEST(Cli, OverridesAndSeedFlag) {
  const fs::path dir = fresh_dir("override");
  const auto r = run({"clt", "--config", write_config("override", small_clt_config()).string(), "--seed", "99", "--set",
                      "clt.n=32", "--set", "box.M=4", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(rep["seed"], 99);
  EXPECT_EQ(rep["config_echo"]["clt"]["n"], 32);
  EXPECT_EQ(rep["config_echo"]["box"]["M"], 4);
  EXPECT_EQ(rep["config_echo"]["seed"], 99);
}

TEST(Cli, IdsExperimentOnFreeChain) {
  const fs::path dir = fresh_dir("ids");
  const auto r = run({"ids", "--seed", "1", "--set", "dist={\"kind\":\"constant\",\"value\":0.0}", "--set", "ids.M=64",
                      "--set", "ids.n=2", "--set", "ids.tolerance=0.05", "--assert", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err << r.out;
  const std::string csv = slurp(dir / "ids.csv");
  EXPECT_NE(csv.substr(0, csv.find('\n')).find("N_free"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("selftest"), std::string::npos);
}

TEST(Cli, StandaloneBinary) {
  const fs::path dir = fresh_dir("binary");
  const std::string ok = std::string(SZEGO_CLI_PATH) + " selftest --out " + dir.string() + " > /dev/null";
  int status = std::system(ok.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  const std::string bad = std::string(SZEGO_CLI_PATH) + " clt --set a.beta=-1 2> /dev/null";
  status = std::system(bad.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}
