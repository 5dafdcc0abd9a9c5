#include "xpca/model_io.hpp"
#include "xpca/sim.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace xpca {
namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("xpca_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    const SimulatedData s = generate(40, 8, 2, 0.25, MarginalSpec::mixed(8), 17);
    std::vector<Entry> hide{{0, 0}, {3, 5}, {10, 7}};
    write_csv(path("data.csv"), s.data.without(hide));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd =
        std::string(XPCA_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(CliTest, FitThenImputeMissingCells) {
  ASSERT_EQ(run("fit -i " + path("data.csv") + " -o " + path("m.json") + " --rank 2"), 0)
      << read("stderr.txt");
  EXPECT_NE(read("stdout.txt").find("nll "), std::string::npos);
  const ModelFile mf = load_model(path("m.json"));
  EXPECT_EQ(mf.missing.size(), 3u);
  EXPECT_EQ(mf.column_names.size(), 8u);

  ASSERT_EQ(run("impute -m " + path("m.json") + " -o " + path("est.csv")), 0);
  const std::string est = read("est.csv");
  EXPECT_EQ(est.substr(0, est.find('\n')), "row,column,estimate");
  EXPECT_EQ(std::count(est.begin(), est.end(), '\n'), 4);
}

TEST_F(CliTest, ImputeWritesDistributionsAndCompletedMatrix) {
  ASSERT_EQ(run("fit -i " + path("data.csv") + " -o " + path("m.json")), 0);
  {
    std::ofstream cells(path("cells.csv"));
    cells << "row,column\n1,V1\n2,4\n";
  }
  ASSERT_EQ(run("impute -m " + path("m.json") + " --estimator mean --cells " + path("cells.csv") +
                " --distributions " + path("dist.csv")),
            0)
      << read("stderr.txt");
  EXPECT_NE(read("stdout.txt").find("1,V1,"), std::string::npos);
  EXPECT_EQ(read("dist.csv").substr(0, 28), "row,column,value,probability");

  ASSERT_EQ(run("impute -m " + path("m.json") + " --input " + path("data.csv") + " --completed " +
                path("full.csv")),
            0);
  const ObservedMatrix full = load_csv(path("full.csv"));
  EXPECT_TRUE(full.complete());
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("fit -i " + path("data.csv") + " -o " + path("m.json") + " --rank 0"), 2);
  EXPECT_EQ(run("fit -i " + path("data.csv")), 2);
  EXPECT_EQ(run("fit -i " + path("data.csv") + " -o " + path("m.json") + " --method ica"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  ASSERT_EQ(run("fit -i " + path("data.csv") + " -o " + path("p.json") + " --method pca"), 0);
  EXPECT_EQ(run("impute -m " + path("p.json") + " --estimator mean"), 2);
  EXPECT_NE(read("stderr.txt").find("not defined for pca"), std::string::npos);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  EXPECT_EQ(run("fit -i " + path("missing.csv") + " -o " + path("m.json")), 1);
  EXPECT_EQ(run("impute -m " + path("missing.json")), 1);
  {
    std::ofstream bad(path("bad.csv"));
    bad << "a,b\n1,2\n3,x\n";
  }
  EXPECT_EQ(run("fit -i " + path("bad.csv") + " -o " + path("m.json")), 1);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

TEST_F(CliTest, CvTableSchema) {
  ASSERT_EQ(run("cv -i " + path("data.csv") + " --folds 4 --ranks 1..2 --methods coca,xpca -o " +
                path("cv.csv")),
            0)
      << read("stderr.txt");
  const std::string cv = read("cv.csv");
  EXPECT_EQ(cv.substr(0, cv.find('\n')), "rank,method,mse");
  EXPECT_NE(cv.find("0,column_mean,"), std::string::npos);
  EXPECT_NE(cv.find("2,xpca,"), std::string::npos);
  EXPECT_EQ(std::count(cv.begin(), cv.end(), '\n'), 6);
  EXPECT_EQ(run("cv -i " + path("data.csv") + " --folds 1"), 2);
}

TEST_F(CliTest, SimulateTableSchema) {
  ASSERT_EQ(run("simulate --spec gaussian --sizes 15 --reps 1 --rank 2 -o " + path("sim.csv")), 0)
      << read("stderr.txt");
  const std::string sim = read("sim.csv");
  EXPECT_EQ(sim.substr(0, sim.find('\n')), "size,rep,method,metric,split,mse");
  EXPECT_EQ(std::count(sim.begin(), sim.end(), '\n'), 13);
  EXPECT_EQ(run("simulate --sigma2 1.5"), 2);
}

}  // namespace
}  // namespace xpca
