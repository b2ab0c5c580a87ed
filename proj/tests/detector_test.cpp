#include "superpoint/detector.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "superpoint/error.hpp"

using namespace superpoint;
namespace fs = std::filesystem;

namespace {

class VectorStream : public EventStream {
 public:
  explicit VectorStream(std::vector<PairEvent> events)
      : events_(std::move(events)) {}
  std::optional<PairEvent> next() override {
    if (pos_ == events_.size()) {
      return std::nullopt;
    }
    return events_[pos_++];
  }

 private:
  std::vector<PairEvent> events_;
  std::size_t pos_ = 0;
};

RunConfig small_run() {
  RunConfig c;
  c.k = 20;
  c.k_prime = 20;
  c.g = 1024;
  c.c = 10;
  c.r = 4;
  c.u = 2;
  c.s = 7;
  c.theta = 400;
  c.oracle = true;
  return c;
}

SyntheticSpec small_trace() {
  SyntheticSpec s;
  s.slices = 80;
  s.window = 20;
  s.background_hosts = 200;
  s.max_degree = 60;
  s.planted = {{0x0A000001, 900, 0, 80}, {0x0A000002, 600, 30, 60}};
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SUPERPOINT_CLI) + " " + args +
                          " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Detector, Validation) {
  RunConfig c = small_run();
  c.k_prime = 21;
  EXPECT_THROW(validate(c), ParameterError);
  c = small_run();
  c.g = 39;
  EXPECT_THROW(validate(c), ParameterError);
  c = small_run();
  c.s = 6;
  EXPECT_THROW(validate(c), ParameterError);
  c = small_run();
  c.cadence = 0;
  EXPECT_THROW(validate(c), ParameterError);
  EXPECT_NO_THROW(validate(small_run()));
}

TEST(Detector, EmptyTraceGivesHeaders) {
  VectorStream events({});
  std::ostringstream report, metrics;
  const RunSummary s = run_detect(small_run(), events, {&report, &metrics});
  EXPECT_EQ(report.str(), "window_end_slice,ip,estimate\n");
  EXPECT_EQ(metrics.str(), "window_end_slice,fpr,fnr,tfr\n");
  EXPECT_EQ(s.windows, 0u);
}

TEST(Detector, ReportsPlantedHostAtEveryWindow) {
  SyntheticTrace trace(small_trace());
  std::ostringstream report, metrics, bench;
  const RunSummary s =
      run_detect(small_run(), trace, {&report, &metrics, &bench});
  EXPECT_EQ(s.slices, 80u);
  EXPECT_EQ(s.windows, 61u);
  EXPECT_EQ(s.scored_windows, 61u);
  EXPECT_EQ(s.preserve_mismatches, 0u);
  EXPECT_LE(s.mean_fnr, 0.02);
  EXPECT_LE(s.mean_relative_error, 0.1);

  std::istringstream rows(report.str());
  std::string line;
  std::getline(rows, line);
  std::set<uint64_t> ends;
  while (std::getline(rows, line)) {
    if (line.find(",10.0.0.1,") != std::string::npos) {
      ends.insert(std::stoull(line));
    }
  }
  EXPECT_EQ(ends.size(), 61u);
  EXPECT_EQ(*ends.begin(), 19u);
  EXPECT_EQ(*ends.rbegin(), 79u);
}

TEST(Detector, Cadence) {
  RunConfig c = small_run();
  c.cadence = 10;
  SyntheticTrace trace(small_trace());
  std::ostringstream metrics;
  const RunSummary s = run_detect(c, trace, {nullptr, &metrics});
  EXPECT_EQ(s.windows, 7u);
  EXPECT_NE(metrics.str().find("\n29,"), std::string::npos);
  EXPECT_EQ(metrics.str().find("\n20,"), std::string::npos);
}

TEST(Detector, MetricsUndefinedWithoutSuperPoints) {
  SyntheticSpec spec = small_trace();
  spec.planted.clear();
  SyntheticTrace trace(spec);
  std::ostringstream metrics;
  const RunSummary s = run_detect(small_run(), trace, {nullptr, &metrics});
  EXPECT_EQ(s.scored_windows, 0u);
  EXPECT_NE(metrics.str().find("19,nan,nan,nan\n"), std::string::npos);
}

TEST(Detector, SkipsEmptySlices) {
  VectorStream events({{0, 1, 2}, {50, 1, 3}});
  RunConfig c = small_run();
  const RunSummary s = run_detect(c, events, {});
  EXPECT_EQ(s.slices, 51u);
  EXPECT_EQ(s.windows, 32u);
}

TEST(Detector, DiscreteReportsWholeWindows) {
  RunConfig c = small_run();
  c.discrete = true;
  SyntheticTrace trace(small_trace());
  std::ostringstream report;
  const RunSummary s = run_detect(c, trace, {&report});
  EXPECT_EQ(s.slices, 4u);
  EXPECT_EQ(s.windows, 4u);
  EXPECT_NE(report.str().find("\n19,10.0.0.1,"), std::string::npos);
  EXPECT_NE(report.str().find("\n79,10.0.0.1,"), std::string::npos);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("superpoint_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    std::ofstream spec(dir_ / "spec.txt");
    spec << "slices=60\nwindow=20\nbackground=100\nmax_degree=50\n"
            "plant=10.0.0.9,800,0,60\n";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, GenerateDetectOracle) {
  ASSERT_EQ(run_cli("generate --spec " + path("spec.txt") + " --out " +
                    path("trace.csv")),
            0);
  const std::string flags = " --k 20 --kprime 20 --g 1024 --c 10 --r 4 --u 2"
                            " --s 7 --theta 400 --oracle";
  ASSERT_EQ(run_cli("detect --trace " + path("trace.csv") + flags +
                    " --report " + path("r.csv") + " --metrics " +
                    path("m.csv") + " --bench " + path("b.csv")),
            0);
  const std::string report = slurp(path("r.csv"));
  EXPECT_NE(report.find("19,10.0.0.9,"), std::string::npos);
  EXPECT_NE(report.find("59,10.0.0.9,"), std::string::npos);
  EXPECT_EQ(slurp(path("m.csv")).rfind("window_end_slice,fpr,fnr,tfr\n", 0),
            0u);
  EXPECT_NE(slurp(path("b.csv")).find("expected_examined"), std::string::npos);

  ASSERT_EQ(run_cli("oracle --trace " + path("trace.csv") +
                    " --kprime 20 --min-count 500 --out " + path("t.csv")),
            0);
  const std::string truth = slurp(path("t.csv"));
  EXPECT_NE(truth.find("19,10.0.0.9,800\n"), std::string::npos);
  EXPECT_NE(truth.find("59,10.0.0.9,800\n"), std::string::npos);
}

TEST_F(Cli, ConfigFileWithOverride) {
  ASSERT_EQ(run_cli("generate --spec " + path("spec.txt") + " --out " +
                    path("trace.csv")),
            0);
  {
    std::ofstream cfg(path("run.ini"));
    cfg << "k=20\nkprime=20\ng=1024\nc=10\nr=4\nu=2\ns=7\ntheta=400000\n";
  }
  ASSERT_EQ(run_cli("detect --config " + path("run.ini") + " --trace " +
                    path("trace.csv") + " --report " + path("none.csv")),
            0);
  EXPECT_EQ(slurp(path("none.csv")), "window_end_slice,ip,estimate\n");
  ASSERT_EQ(run_cli("detect --config " + path("run.ini") + " --theta 400" +
                    " --trace " + path("trace.csv") + " --report " +
                    path("some.csv")),
            0);
  EXPECT_NE(slurp(path("some.csv")).find("10.0.0.9"), std::string::npos);
}

TEST_F(Cli, ErrorsExitNonzero) {
  {
    std::ofstream bad(path("bad.csv"));
    bad << "0,10.0.0.1,10.0.0.2\nzz\n";
  }
  {
    std::ofstream empty(path("empty.csv"));
  }
  EXPECT_NE(run_cli("detect --trace " + path("bad.csv") +
                    " --k 20 --kprime 20 --g 1024 --c 10 --r 4 --u 2 --s 7"),
            0);
  EXPECT_NE(run_cli("detect --trace " + path("empty.csv") +
                    " --k 20 --kprime 20 --g 1024 --c 10 --r 4 --u 2 --s 6"),
            0);
  EXPECT_NE(run_cli("detect --trace " + path("missing.csv")), 0);
  EXPECT_EQ(run_cli("detect --trace " + path("empty.csv") +
                    " --k 20 --kprime 20 --g 1024 --c 10 --r 4 --u 2 --s 7" +
                    " --report " + path("e.csv")),
            0);
  EXPECT_EQ(slurp(path("e.csv")), "window_end_slice,ip,estimate\n");
  EXPECT_NE(run_cli("bogus"), 0);
}
