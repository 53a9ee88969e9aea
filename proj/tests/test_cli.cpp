#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("coinft_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of the CLI; stdout and stderr go to files in the work dir.
  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" COINFT_CLI "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& p) const {
    std::ifstream in(dir_ / p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void write(const fs::path& p, const std::string& text) const {
    std::ofstream(dir_ / p, std::ios::binary) << text;
  }

  fs::path dir_;
};

std::size_t lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("generate -n 0 -o gen"), 2);
  EXPECT_EQ(run("generate --preset nowhere -o gen"), 2);
  EXPECT_EQ(run("fly orbit --bypass-sensor"), 2);
  EXPECT_EQ(run("calibrate a.csv --mode sideways"), 2);
}

TEST_F(Cli, GenerateIsDeterministic) {
  ASSERT_EQ(run("generate -n 3 --duration 2 --seed 5 -j 2 -o a"), 0);
  ASSERT_EQ(run("generate -n 3 --duration 2 --seed 5 -o b"), 0);
  for (const char* f : {"trial_000.csv", "trial_001.csv", "trial_002.csv", "manifest.json"}) {
    EXPECT_FALSE(read(fs::path("a") / f).empty()) << f;
    EXPECT_EQ(read(fs::path("a") / f), read(fs::path("b") / f)) << f;
  }
  // 4 lines of preamble plus 720 rows
  EXPECT_EQ(lines(read("a/trial_000.csv")), 724u);
}

TEST_F(Cli, GenerateHonoursEnvironmentOutputDir) {
  ASSERT_EQ(run("generate -n 2 --duration 1", "COINFT_OUT_DIR=envdir"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "envdir" / "manifest.json"));
}

TEST_F(Cli, GenerateFullProtocolShape) {
  ASSERT_EQ(run("generate -n 11 -j 4 -o full"), 0);
  for (int i = 0; i < 11; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "full/trial_%03d.csv", i);
    EXPECT_EQ(lines(read(name)), 12600u + 4u) << name;
  }
}

TEST_F(Cli, MissingFileIsDataErrorWithoutOutput) {
  EXPECT_EQ(run("calibrate nope.csv -o cal"), 3);
  EXPECT_FALSE(fs::exists(dir_ / "cal" / "model_full.json"));
  EXPECT_EQ(run("evaluate --model nope.json x.csv -o ev"), 3);
}

TEST_F(Cli, MalformedLogIsDataError) {
  write("bad.csv", "t,T,Z1\n0,1,2\n");
  EXPECT_EQ(run("calibrate bad.csv -o cal"), 3);
  EXPECT_NE(read("stderr.txt").find("line 1"), std::string::npos);
}

TEST_F(Cli, TooFewSamplesIsModelError) {
  ASSERT_EQ(run("generate -n 1 --duration 0.02 -o tiny"), 0);
  EXPECT_EQ(run("calibrate tiny/trial_000.csv -o cal"), 4);
  EXPECT_NE(read("stderr.txt").find("at least 24"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "cal" / "model_full.json"));
}

TEST_F(Cli, CalibrateAndEvaluate) {
  ASSERT_EQ(run("generate -n 3 --duration 10 --preset small_range -o g"), 0);
  ASSERT_EQ(run("calibrate g/trial_000.csv g/trial_001.csv --test g/trial_002.csv --mode both -o cal"), 0);
  const std::string table = read("stdout.txt");
  EXPECT_NE(table.find("Normal + Shear"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "cal" / "model_full.json"));
  EXPECT_TRUE(fs::exists(dir_ / "cal" / "model_shear_only.json"));
  EXPECT_TRUE(fs::exists(dir_ / "cal" / "calibration_report.csv"));
  ASSERT_EQ(run("evaluate --model cal/model_full.json g/trial_002.csv -o ev"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "ev" / "metrics.csv"));
  EXPECT_EQ(lines(read("ev/predictions.csv")), 3600u + 1u);
  // shear-only model against the same log
  ASSERT_EQ(run("evaluate --model cal/model_shear_only.json g/trial_002.csv -o ev2"), 0);
}

TEST_F(Cli, CorruptModelIsDataError) {
  write("model.json", R"({"schema": "coinft.calibration/1", "mode": "full", "ridge": 0, "baseline": [], "matrix": []})");
  ASSERT_EQ(run("generate -n 1 --duration 1 -o g"), 0);
  EXPECT_EQ(run("evaluate --model model.json g/trial_000.csv -o ev"), 3);
}

TEST_F(Cli, FlyZeroDurationWritesHeaderOnly) {
  ASSERT_EQ(run("fly track_sine --bypass-sensor --duration 0 -o f"), 0);
  EXPECT_EQ(read("f/flight_track_sine.csv"),
            "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,f_oc,f_dc,f_cmd,machine_state,payload_attached,f_contact\n");
}

TEST_F(Cli, FlySurfaceNotFound) {
  write("sim.json", R"({"environment": {"surface_height_m": 5.0}})");
  EXPECT_EQ(run("fly track_sine --bypass-sensor --config sim.json -o f"), 5);
  EXPECT_FALSE(fs::exists(dir_ / "f" / "flight_track_sine.csv"));
}

TEST_F(Cli, FlyIsDeterministic) {
  ASSERT_EQ(run("fly deploy_package --bypass-sensor -o a"), 0);
  ASSERT_EQ(run("fly deploy_package --bypass-sensor -o b"), 0);
  EXPECT_EQ(read("a/flight_deploy_package.csv"), read("b/flight_deploy_package.csv"));
  EXPECT_EQ(read("a/flight_deploy_package_summary.json"), read("b/flight_deploy_package_summary.json"));
}

TEST_F(Cli, ParamsPrintsJson) {
  ASSERT_EQ(run("params sensor"), 0);
  EXPECT_NE(read("stdout.txt").find("coinft.sensor/1"), std::string::npos);
  ASSERT_EQ(run("params sim"), 0);
  EXPECT_NE(read("stdout.txt").find("not from hardware"), std::string::npos);
  EXPECT_EQ(run("params everything"), 2);
}
