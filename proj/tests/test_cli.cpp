#include "rduniband/cli.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "rduniband/dgp_sim.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  return fs::path(::testing::TempDir()) / name;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  ASSERT_TRUE(out) << p;
  out << body;
}

void write_dataset(const fs::path& p, const rdu::ObservationSet& s) {
  std::ofstream out(p);
  ASSERT_TRUE(out) << p;
  out.precision(17);
  out << "x,y";
  if (s.has_d()) out << ",d";
  if (s.has_g()) out << ",g";
  out << "\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << s.x[i] << "," << s.y[i];
    if (s.has_d()) out << "," << s.d[i];
    if (s.has_g()) out << "," << s.g[i];
    out << "\n";
  }
}

int call_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rduniband");
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (auto& a : args) argv.push_back(a.data());
  return rdu::run_cli(static_cast<int>(argv.size()), argv.data());
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  EXPECT_TRUE(in) << p;
  return json::parse(in);
}

TEST(Ingest, ReordersColumnsAndIgnoresExtras) {
  auto p = temp_file("reorder.csv");
  write_file(p,
             "y,d,junk,x\n"
             "1.5,1,99,0.2\n"
             "0.5,0,98,-0.3\n"
             "2.0,1,97,0.7\n");
  auto s = rdu::ingest_csv(p.string());
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s.x[1], -0.3);
  EXPECT_DOUBLE_EQ(s.y[2], 2.0);
  ASSERT_TRUE(s.has_d());
  EXPECT_DOUBLE_EQ(s.d[0], 1.0);
  EXPECT_FALSE(s.has_g());
}

TEST(Ingest, SkipsBlankLinesAndReadsGroups) {
  auto p = temp_file("groups.csv");
  write_file(p,
             "x,y,g\n"
             "0.1,1.0,1\n"
             "\n"
             "-0.1,2.0,2\n");
  auto s = rdu::ingest_csv(p.string());
  ASSERT_EQ(s.size(), 2u);
  ASSERT_TRUE(s.has_g());
  EXPECT_EQ(s.g[1], 2);
}

TEST(Ingest, MissingRequiredColumn) {
  auto p = temp_file("nox.csv");
  write_file(p, "y,d\n1.0,1\n");
  try {
    rdu::ingest_csv(p.string());
    FAIL() << "expected MissingColumn";
  } catch (const rdu::MissingColumn& e) {
    EXPECT_EQ(e.column, "x");
  }
}

TEST(Ingest, ParseErrorCarriesLineNumber) {
  auto p = temp_file("badcell.csv");
  write_file(p, "x,y\n1.0,abc\n2.0,3.0\n");
  try {
    rdu::ingest_csv(p.string());
    FAIL() << "expected ParseError";
  } catch (const rdu::ParseError& e) {
    EXPECT_EQ(e.line, 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Ingest, ShortRowIsParseError) {
  auto p = temp_file("short.csv");
  write_file(p, "x,y\n1.0,2.0\n1.0\n");
  try {
    rdu::ingest_csv(p.string());
    FAIL() << "expected ParseError";
  } catch (const rdu::ParseError& e) {
    EXPECT_EQ(e.line, 3u);
  }
}

TEST(Ingest, NonIntegralGroupIsParseError) {
  auto p = temp_file("badg.csv");
  write_file(p, "x,y,g\n1.0,2.0,1.5\n");
  EXPECT_THROW(rdu::ingest_csv(p.string()), rdu::ParseError);
}

TEST(Ingest, EmptyAndHeaderOnlyFiles) {
  auto p0 = temp_file("empty.csv");
  write_file(p0, "");
  EXPECT_THROW(rdu::ingest_csv(p0.string()), rdu::EmptyFile);
  auto p1 = temp_file("header_only.csv");
  write_file(p1, "x,y\n");
  EXPECT_THROW(rdu::ingest_csv(p1.string()), rdu::EmptyFile);
}

TEST(Cli, EstimateIsByteStableModuloTiming) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::smrd_simple;
  dgp.n = 400;
  dgp.beta1 = 0.5;
  auto data = rdu::generate(dgp, 11);
  auto csv = temp_file("smrd.csv");
  write_dataset(csv, data);

  auto out1 = temp_file("est1.json");
  auto out2 = temp_file("est2.json");
  std::vector<std::string> args{
      "estimate",          "--design", "smrd",       "--input", csv.string(),
      "--bandwidth-rule",  "fixed:0.8", "--boot-B",  "100",     "--seed",
      "7",                 "--output"};
  auto a1 = args;
  a1.push_back(out1.string());
  auto a2 = args;
  a2.push_back(out2.string());
  ASSERT_EQ(call_cli(a1), 0);
  ASSERT_EQ(call_cli(a2), 0);

  json j1 = load_json(out1);
  json j2 = load_json(out2);
  EXPECT_EQ(j1.at("schema_version").get<std::string>(), "1.0");
  EXPECT_EQ(j1.at("command").get<std::string>(), "estimate");
  j1.erase("timing");
  j2.erase("timing");
  EXPECT_EQ(j1.dump(), j2.dump());

  // Mean design: a single evaluation point and a degenerate band interval.
  ASSERT_EQ(j1.at("estimate").at("tau").size(), 1u);
  EXPECT_EQ(j1.at("band").at("lower").size(), 1u);
  double lo = j1["band"]["lower"][0].get<double>();
  double hi = j1["band"]["upper"][0].get<double>();
  double tau = j1["estimate"]["tau"][0].get<double>();
  EXPECT_LT(lo, tau);
  EXPECT_GT(hi, tau);
  EXPECT_TRUE(j1.at("tests").contains("nullity"));
  EXPECT_TRUE(j1.at("tests").contains("homogeneity"));
  EXPECT_TRUE(j1.at("tests").contains("dominance"));
  EXPECT_EQ(j1["tests"]["nullity"]["B"].get<int>(), 100);
}

TEST(Cli, BandCsvHasHeaderAndGridRows) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::sqrd_simple;
  dgp.n = 500;
  dgp.beta1 = 0.3;
  auto data = rdu::generate(dgp, 5);
  auto csv = temp_file("sqrd.csv");
  write_dataset(csv, data);
  auto band = temp_file("band.csv");
  auto out = temp_file("sqrd.json");
  ASSERT_EQ(call_cli({"estimate", "--design", "sqrd", "--input", csv.string(),
                      "--bandwidth-rule", "fixed:0.7", "--n-theta", "9",
                      "--boot-B", "80", "--seed", "2", "--band-csv",
                      band.string(), "--output", out.string()}),
            0);
  std::ifstream in(band);
  ASSERT_TRUE(in);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "theta,tau_hat,lower,upper");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 9);
}

TEST(Cli, ConfigFileAppliesAndFlagsWin) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::sqrd_simple;
  dgp.n = 500;
  auto data = rdu::generate(dgp, 9);
  auto csv = temp_file("cfgdata.csv");
  write_dataset(csv, data);
  auto cfg = temp_file("run.cfg");
  write_file(cfg,
             "# comment line\n"
             "boot.B = 77\n"
             "grid.n_theta = 9\n"
             "bandwidth.rule = fixed\n"
             "bandwidth.h1 = 0.7\n");
  auto out = temp_file("cfg.json");
  ASSERT_EQ(call_cli({"estimate", "--design", "sqrd", "--input", csv.string(),
                      "--config", cfg.string(), "--n-theta", "5", "--seed",
                      "3", "--output", out.string()}),
            0);
  json j = load_json(out);
  // Flag beats the config file; config supplies what flags do not.
  EXPECT_EQ(j["config"]["grid"]["n_theta"].get<int>(), 5);
  EXPECT_EQ(j["config"]["boot_B"].get<int>(), 77);
  EXPECT_EQ(j["tests"]["nullity"]["B"].get<int>(), 77);
  EXPECT_EQ(j["config"]["bandwidth"]["rule"].get<std::string>(), "fixed");
  EXPECT_EQ(j["estimate"]["tau"].size(), 5u);
  EXPECT_DOUBLE_EQ(j["estimate"]["h1"].get<double>(), 0.7);
}

TEST(Cli, UnknownConfigKeyFails) {
  auto cfg = temp_file("bad.cfg");
  write_file(cfg, "boot.C = 3\n");
  auto csv = temp_file("unused.csv");
  write_file(csv, "x,y\n0.1,1.0\n-0.1,0.5\n");
  EXPECT_EQ(call_cli({"estimate", "--design", "smrd", "--input", csv.string(),
                      "--config", cfg.string()}),
            1);
}

TEST(Cli, TestSubcommandEmitsOneTest) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::sqrd_simple;
  dgp.n = 500;
  dgp.gamma1 = 0.0;
  auto data = rdu::generate(dgp, 21);
  auto csv = temp_file("testcmd.csv");
  write_dataset(csv, data);
  auto out = temp_file("test.json");
  ASSERT_EQ(call_cli({"test", "--kind", "homogeneity", "--design", "sqrd",
                      "--input", csv.string(), "--bandwidth-rule", "fixed:0.7",
                      "--n-theta", "7", "--boot-B", "60", "--seed", "8",
                      "--output", out.string()}),
            0);
  json j = load_json(out);
  EXPECT_EQ(j["command"].get<std::string>(), "test");
  EXPECT_EQ(j["kind"].get<std::string>(), "homogeneity");
  EXPECT_TRUE(j["test"]["reject"].is_boolean());
  EXPECT_GE(j["test"]["p_value"].get<double>(), 0.0);
  EXPECT_FALSE(j.contains("tests"));
}

TEST(Cli, BandwidthSubcommandReportsPlans) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::smrd_simple;
  dgp.n = 600;
  auto data = rdu::generate(dgp, 13);
  auto csv = temp_file("bw.csv");
  write_dataset(csv, data);
  auto out = temp_file("bw.json");
  ASSERT_EQ(call_cli({"bandwidth", "--design", "smrd", "--input", csv.string(),
                      "--seed", "1", "--output", out.string()}),
            0);
  json j = load_json(out);
  EXPECT_EQ(j["command"].get<std::string>(), "bandwidth");
  EXPECT_GT(j["bandwidth"]["h1"].get<double>(), 0.0);
  ASSERT_FALSE(j["bandwidth"]["plans"].empty());
  EXPECT_GT(j["bandwidth"]["plans"][0]["step1"]["h0"].get<double>(), 0.0);
}

TEST(Cli, SimulateSmokeEchoesBudget) {
  auto out = temp_file("sim.json");
  auto table = temp_file("sim.csv");
  ASSERT_EQ(call_cli({"simulate", "--dgp", "smrd_simple", "--n", "200", "--R",
                      "3", "--B", "25", "--check", "nullity", "--seed", "5",
                      "--table-csv", table.string(), "--output",
                      out.string()}),
            0);
  json j = load_json(out);
  EXPECT_EQ(j["report"]["R"].get<int>(), 3);
  EXPECT_EQ(j["report"]["B"].get<int>(), 25);
  EXPECT_EQ(j["config"]["design"].get<std::string>(), "smrd");
  std::ifstream in(table);
  std::string header;
  ASSERT_TRUE(std::getline(in, header));
  EXPECT_EQ(header.rfind("dgp,design,check,n,R,B", 0), 0u);
}

TEST(Cli, BadDesignNameExitsNonzero) {
  auto csv = temp_file("bad_design.csv");
  write_file(csv, "x,y\n0.1,1.0\n-0.2,0.3\n");
  EXPECT_EQ(call_cli({"estimate", "--design", "nope", "--input",
                      csv.string()}),
            1);
}

TEST(Cli, MissingDColumnForFuzzyDesignExitsNonzero) {
  auto csv = temp_file("sharp_only.csv");
  write_file(csv, "x,y\n0.1,1.0\n-0.2,0.3\n0.4,0.9\n-0.5,0.1\n");
  EXPECT_EQ(call_cli({"estimate", "--design", "fmrd", "--input",
                      csv.string()}),
            1);
}

}  // namespace
