#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "weakgordon/cli.hpp"

using namespace wg;
namespace fs = std::filesystem;

namespace {

const std::string kData = WG_DATA_DIR;
const std::string kCli = WG_CLI_PATH;

struct RunResult {
  int code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("wg_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  RunResult run(const std::string& args, const std::string& meta = "meta.json") const {
    const std::string cmd = kCli + " --meta " + path(meta).string() + " " + args + " 2>" + path("stderr.txt").string();
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  nlohmann::json meta(const std::string& name = "meta.json") const {
    return nlohmann::json::parse(slurp(path(name)));
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

/// Every blank-line separated block must start with a header row of names.
void expect_csv_headers(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool at_block_start = true;
  int blocks = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      at_block_start = true;
      continue;
    }
    if (at_block_start) {
      ++blocks;
      EXPECT_TRUE(std::isalpha(static_cast<unsigned char>(line[0]))) << "block without header: " << line;
      at_block_start = false;
    }
  }
  EXPECT_GT(blocks, 0);
}

}  // namespace

// ---- measure files ----

TEST(MeasureFile, OverlapReportsLine) {
  try {
    load_measure(kData + "/overlap_bad.json");
    FAIL() << "overlap accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}

TEST(MeasureFile, MalformedJsonReportsLine) {
  try {
    parse_measure("{\n \"window\": [0, 1],\n \"atoms\": [\n  {\"x\": 0.5,\n ]\n}");
    FAIL() << "malformed document accepted";
  } catch (const ValidationError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 5", 0), 0u) << e.what();
  }
}

TEST(MeasureFile, AtomOutsideWindowReportsLine) {
  try {
    parse_measure("{\n \"window\": [0, 1],\n \"atoms\": [\n  {\"x\": 0.5, \"re\": 1},\n  {\"x\": 2, \"re\": 1}\n ]\n}");
    FAIL() << "atom outside the window accepted";
  } catch (const ValidationError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 5", 0), 0u) << e.what();
  }
}

TEST(MeasureFile, RejectsNonFiniteAndBadWindow) {
  EXPECT_THROW(parse_measure(R"({"window": [1, 0]})"), ValidationError);
  EXPECT_THROW(parse_measure(R"({"atoms": []})"), ValidationError);
  EXPECT_THROW(parse_measure(R"({"window": [0, 1], "atoms": [{"x": "a"}]})"), ValidationError);
  EXPECT_THROW(parse_measure(R"({"periodic": {"period": 1}, "window": [0, 2]})"), ValidationError);
}

TEST(MeasureFile, RoundTrip) {
  const auto mu = make_measure({{0.1, cplx(1.0, -0.5)}, {0.7, 2.0}}, {{-1.0, 0.5, Poly({0.3, cplx(0.0, 1.0), -2.0})}},
                               {-2.0, 2.0});
  const auto back = parse_measure(measure_to_json(mu).dump()).mu;
  ASSERT_EQ(back.atoms().size(), 2u);
  ASSERT_EQ(back.segments().size(), 1u);
  EXPECT_EQ(back.atoms()[0].w, cplx(1.0, -0.5));
  EXPECT_EQ(back.segments()[0].rho, mu.segments()[0].rho);
  EXPECT_EQ(back.window().lo, -2.0);
}

TEST(MeasureFile, PeriodicCorpusEntry) {
  const auto spec = load_measure(kData + "/comb.json");
  ASSERT_TRUE(spec.period.has_value());
  EXPECT_EQ(*spec.period, 1.0);
  EXPECT_EQ(materialize(spec.periodic(), {-2.0, 2.0}).atoms().size(), 5u);
}

// ---- command line ----

TEST_F(CliTest, SeminormOfDirac) {
  const auto r = run("seminorm --measure " + kData + "/dirac.json --interval -1,1");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1 1 0 0 0\n");
  const auto m = meta();
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["subcommand"], "seminorm");
  EXPECT_EQ(m["certificates"]["upper"], 1.0);
}

TEST_F(CliTest, MissingFileIsInputError) {
  const auto r = run("seminorm --measure " + kData + "/does_not_exist.json --interval -1,1");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(meta()["exit_code"], 2);
  EXPECT_TRUE(meta().contains("error"));
}

TEST_F(CliTest, ParseErrorsExitTwoAndWriteMeta) {
  EXPECT_EQ(run("seminorm --measure " + kData + "/dirac.json --interval 1,x").code, 2);
  EXPECT_EQ(run("seminorm --measure " + kData + "/overlap_bad.json --interval 0,4").code, 2);
  EXPECT_NE(slurp(path("stderr.txt")).find("line 5"), std::string::npos);
  EXPECT_EQ(run("no-such-subcommand", "unknown.json").code, 2);
  EXPECT_EQ(meta("unknown.json")["exit_code"], 2);
  EXPECT_EQ(run("propagate --measure " + kData + "/dirac.json --grid 0:1").code, 2);
}

TEST_F(CliTest, ExhaustedBudgetIsToleranceFailure) {
  write("poly.json", R"({"window": [-3, 3], "atoms": [{"x": 0.3, "re": 0.7}],
                         "segments": [{"a": -2, "b": 2.5, "coeffs": [0.5, -0.3, 0.2]}]})");
  const auto r = run("seminorm --measure " + path("poly.json").string() + " --interval -3,3 --tol 1e-300 --max-nodes 1");
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(meta()["exit_code"], 3);
}

TEST_F(CliTest, OversizedConstructionIsResourceFailure) {
  EXPECT_EQ(run("sharpness --m-max 6").code, 4);
  EXPECT_EQ(meta()["exit_code"], 4);
  EXPECT_EQ(run("quasiperiodic --alpha-levels 9 --base1 " + kData + "/comb.json --base2 " + kData + "/comb.json").code,
            4);
}

TEST_F(CliTest, SharpnessSecondLevel) {
  const auto r = run("sharpness --m-max 2 --C 0.5 --out " + path("s.csv").string());
  EXPECT_EQ(r.code, 0);
  const std::string csv = slurp(path("s.csv"));
  expect_csv_headers(csv);
  std::istringstream in(csv);
  std::string header, row1, row2, rest;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  std::getline(in, rest);
  EXPECT_EQ(header.substr(0, 8), "m,l_m,p_");
  EXPECT_EQ(row1.substr(0, 2), "1,");
  EXPECT_EQ(row2.substr(0, 2), "2,");
  EXPECT_TRUE(rest.empty());
  EXPECT_EQ(meta()["parameters"]["C"], 0.5);
}

TEST_F(CliTest, OutputsAreIdempotent) {
  const std::vector<std::pair<std::string, std::string>> cmds{
      {"p.csv", "propagate --measure " + kData + "/lebesgue_plus_dirac.json --z -1,0.5 --grid -2:2:0.25 --out "},
      {"g.csv", "gordon-scan --measure " + kData + "/lebesgue_plus_dirac.json --periods 1,2,4 --r-grid 1,2 --out "},
      {"q.csv", "quasiperiodic --base1 " + kData + "/comb.json --base2 " + kData + "/comb.json --out "},
      {"s.csv", "sharpness --m-max 2 --out "},
      {"mo.json", "mollify --measure " + kData + "/dirac.json --n 8 --interval -1,1 --out "},
  };
  for (const auto& [file, args] : cmds) {
    ASSERT_EQ(run(args + path(file).string()).code, 0) << args;
    const std::string first = slurp(path(file));
    const auto meta_first = meta();
    ASSERT_EQ(run(args + path(file).string() + " --tol 0").code, 0) << args;
    EXPECT_EQ(slurp(path(file)), first) << args;
    EXPECT_EQ(meta()["certificates"], meta_first["certificates"]) << args;
    if (file.ends_with(".csv")) expect_csv_headers(first);
    EXPECT_EQ(meta()["outputs"][0], path(file).string());
  }
}

TEST_F(CliTest, ThreadCountDoesNotChangeResults) {
  const std::string args = "gordon-scan --measure " + kData + "/dipole_pair.json --periods 0.5,1,1.5 --out ";
  ASSERT_EQ(run("--threads 1 " + args + path("a.csv").string()).code, 0);
  ASSERT_EQ(run("--threads 3 " + args + path("b.csv").string()).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(meta()["threads"], 3);
}

TEST_F(CliTest, InProcessEntryPoint) {
  const std::string meta_path = path("inproc.json").string();
  const std::string measure = kData + "/dirac.json";
  const char* argv[] = {"wgordon", "--meta", meta_path.c_str(), "--seed", "7", "seminorm",
                        "--measure", measure.c_str(), "--window-at", "0"};
  std::ostringstream out, err;
  EXPECT_EQ(cli::run(10, argv, out, err), 0);
  EXPECT_EQ(out.str(), "1 1 0 0 0\n");
  EXPECT_EQ(meta("inproc.json")["seed"], 7);
}
