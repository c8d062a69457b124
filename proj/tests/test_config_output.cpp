#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "wglab/config.hpp"
#include "wglab/errors.hpp"
#include "wglab/experiments.hpp"
#include "wglab/output.hpp"

using namespace wglab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wglab_test_" + name);
  fs::remove_all(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(WGLAB_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST(Config, DefaultsExistForEveryCatalogEntry) {
  ASSERT_EQ(list_experiments().size(), 10u);
  for (const auto& e : list_experiments()) {
    const auto c = default_config(e.id);
    EXPECT_EQ(c.experiment, e.id);
    EXPECT_NO_THROW(c.validate()) << e.id;
  }
  EXPECT_THROW(default_config("nope"), ConfigurationError);
}

TEST(Config, SerializeParseRoundTrip) {
  for (const auto& e : list_experiments()) {
    auto c = default_config(e.id);
    c.seed = 42;
    c.amplitude = 0.123456789012345;
    const std::string text = serialize_config(c);
    const auto back = parse_config(text);
    EXPECT_EQ(serialize_config(back), text) << e.id;
  }
}

TEST(Config, ParsingAndOverrides) {
  const auto c = parse_config("# comment\nexperiment = decay\nmus = 1, 2\n  h = 0.02  # trailing\n");
  EXPECT_EQ(c.experiment, "decay");
  EXPECT_EQ(c.mus, (std::vector<double>{1.0, 2.0}));
  EXPECT_DOUBLE_EQ(c.h, 0.02);
  EXPECT_THROW(parse_config("experiment = decay\nfrobnicate = 1\n"), ConfigurationError);
  EXPECT_THROW(parse_config("experiment = decay\nh = abc\n"), ConfigurationError);
  EXPECT_THROW(parse_config("h = 0.1\n"), ConfigurationError);
  auto d = default_config("decay");
  EXPECT_THROW(set_config_value(d, "bc", "robin"), ConfigurationError);
  set_config_value(d, "bc", "dirichlet");
  EXPECT_EQ(d.bc, BoundaryCondition::Dirichlet);
  const auto& keys = config_keys();
  EXPECT_NE(std::find(keys.begin(), keys.end(), "epsilons"), keys.end());
}

TEST(Config, ValidationRejectsBadValues) {
  auto c = default_config("decay");
  c.dt = c.h;  // CFL
  EXPECT_THROW(c.validate(), ValidationError);
  c = default_config("lifespan");
  c.epsilons = {0.5, 0.4, 0.3};
  EXPECT_THROW(c.validate(), ValidationError);
  c = default_config("lifespan");
  c.n = 4;
  EXPECT_THROW(c.validate(), ValidationError);
  c = default_config("decouple");
  c.y_points = c.resolution + 1;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Output, CsvEscapingAndDeterministicNumbers) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
  CsvTable t({"name", "x", "k", "ok"});
  t.add_row({std::string("a,b"), 0.1, 3LL, true});
  t.add_row({std::string("c"), std::nan(""), -2LL, false});
  EXPECT_EQ(t.str(), "schema_version,name,x,k,ok\n1,\"a,b\",0.1,3,true\n1,c,nan,-2,false\n");
  EXPECT_THROW(t.add_row({1.0}), Error);
}

TEST(Output, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Output, SummaryJsonSchema) {
  EstimateReport r;
  r.name = "x";
  r.set_sides(1.0, 2.0);
  r.pass = true;
  r.slope = -1.5;
  r.add_param("mu", 2.0);
  const auto j = nlohmann::json::parse(summary_json("decay", "pass", {r}));
  EXPECT_EQ(j["experiment"], "decay");
  EXPECT_EQ(j["status"], "pass");
  EXPECT_EQ(j["schema_version"], kCsvSchemaVersion);
  EXPECT_EQ(j["software_version"], software_version());
  ASSERT_EQ(j["reports"].size(), 1u);
  const auto& e = j["reports"][0];
  EXPECT_EQ(e["ratio"], 0.5);
  EXPECT_EQ(e["slope"], -1.5);
  EXPECT_TRUE(e["r_squared"].is_null());
  EXPECT_EQ(e["params"]["mu"], 2.0);
  EXPECT_EQ(e["pass"], true);
  for (const char* k : {"lhs", "rhs", "tolerance", "degenerate", "note"}) EXPECT_TRUE(e.contains(k)) << k;
}

TEST(Run, WritesFilesAndManifestIsReproducible) {
  auto c = default_config("eigen");
  c.output_dir = scratch("eigen").string();
  const auto first = run(c);
  ASSERT_EQ(first.exit_code, kExitPass) << first.message;
  for (const char* f : {"eigen.csv", "summary.json", "config.txt", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "manifest.json"));
  EXPECT_EQ(manifest["config_sha256"], sha256_hex(slurp(fs::path(c.output_dir) / "config.txt")));
  for (const auto& f : manifest["files"]) {
    const std::string bytes = slurp(fs::path(c.output_dir) / f["file"].get<std::string>());
    EXPECT_EQ(f["sha256"], sha256_hex(bytes));
    EXPECT_EQ(f["bytes"], bytes.size());
  }
  const std::string csv = slurp(fs::path(c.output_dir) / "eigen.csv");
  const std::string man = slurp(fs::path(c.output_dir) / "manifest.json");
  ASSERT_EQ(run(c).exit_code, kExitPass);
  EXPECT_EQ(slurp(fs::path(c.output_dir) / "eigen.csv"), csv);
  EXPECT_EQ(slurp(fs::path(c.output_dir) / "manifest.json"), man);
}

TEST(Run, ValidationFailureWritesNothing) {
  auto c = default_config("decay");
  c.dt = 1.0;
  c.output_dir = scratch("invalid").string();
  const auto res = run(c);
  EXPECT_EQ(res.exit_code, kExitValidation);
  EXPECT_FALSE(res.message.empty());
  EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST(Run, ToleranceFailureIsReported) {
  auto c = default_config("check-q");
  c.output_dir = scratch("checkq").string();
  ASSERT_EQ(run(c).exit_code, kExitPass);
  // a fit window in the pre-asymptotic regime misses the decay exponent
  auto d = default_config("decay");
  d.mus = {1.0};
  d.horizon = 4.0;
  d.fit_begin = 1.0;
  d.fit_end = 4.0;
  d.output_dir = scratch("early").string();
  const auto res = run(d);
  EXPECT_EQ(res.exit_code, kExitTolerance);
  const auto j = nlohmann::json::parse(slurp(fs::path(d.output_dir) / "summary.json"));
  EXPECT_EQ(j["status"], "tolerance-failure");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("list"), 0);
  EXPECT_EQ(cli("check-q --output-dir " + scratch("cli_ok").string()), kExitPass);
  EXPECT_EQ(cli("decay --dt 1 --output-dir " + scratch("cli_cfl").string()), kExitValidation);
  EXPECT_EQ(cli("decay --frobnicate 1"), kExitValidation);
  EXPECT_EQ(cli("decay --bc robin"), kExitValidation);
  const fs::path blowup = scratch("cli_blowup");
  EXPECT_EQ(cli("iterate --amplitude 100 --output-dir " + blowup.string()), kExitInstability);
  const auto j = nlohmann::json::parse(slurp(blowup / "summary.json"));
  EXPECT_EQ(j["status"], "instability");
}

TEST(Cli, ConfigFileMustMatchSubcommand) {
  const fs::path dir = scratch("cfgfile");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "a.txt") << "experiment = eigen\n";
    std::ofstream(dir / "b.txt") << "j_max = 6\n";
  }
  EXPECT_EQ(cli("decay -c " + (dir / "a.txt").string()), kExitValidation);
  EXPECT_EQ(cli("eigen -c " + (dir / "b.txt").string() + " --output-dir " + (dir / "out").string()), kExitPass);
  EXPECT_NE(slurp(dir / "out" / "config.txt").find("j_max = 6"), std::string::npos);
}
