#include "dle/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("dlesim_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int dlesim(const std::string& args) const {
        const std::string cmd = std::string(DLESIM_PATH) + " " + args + " > " + path("stdout.txt") +
                                " 2> " + path("stderr.txt");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string out() const { return dle::read_file(path("stdout.txt")); }

    fs::path dir_;
};

std::size_t count_prefix(const std::string& text, const std::string& prefix) {
    std::istringstream in(text);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) {
        n += line.rfind(prefix, 0) == 0 ? 1 : 0;
    }
    return n;
}

} // namespace

TEST_F(Cli, GenerateLowerBoundHasOneRecordPerRound) {
    ASSERT_EQ(dlesim("generate --generator lower-bound --n 16 --d 4 --epochs 32 --seed 7 --out " + path("a.txt")), 0);
    EXPECT_EQ(count_prefix(dle::read_file(path("a.txt")), "round="), 128U);
}

TEST_F(Cli, RegenerationIsByteIdentical) {
    const std::string args = "generate --generator churn-random --n 12 --d 4 --horizon 40 --seed 3 --out ";
    ASSERT_EQ(dlesim(args + path("a.txt")), 0);
    ASSERT_EQ(dlesim(args + path("b.txt")), 0);
    EXPECT_EQ(dle::read_file(path("a.txt")), dle::read_file(path("b.txt")));
}

TEST_F(Cli, StaticTopologyWiderThanDIsAConstructionError) {
    EXPECT_EQ(dlesim("generate --generator static --topology path --n 6 --d 3 --horizon 10"), 3);
}

TEST_F(Cli, RunWithChecksOnStaticScheduleSucceeds) {
    ASSERT_EQ(dlesim("generate --generator static --topology torus --n 16 --d 4 --horizon 64 --out " + path("s.txt")), 0);
    EXPECT_EQ(dlesim("run --schedule " + path("s.txt") + " --seeds 100 --checks on --out " + path("r")), 0);
    const auto csv = dle::read_file(path("r.csv"));
    EXPECT_EQ(csv.rfind("# dlesim run config_hash=", 0), 0U);
    EXPECT_EQ(count_prefix(csv, "seed,"), 1U);
    EXPECT_TRUE(fs::exists(path("r.json")));
}

TEST_F(Cli, RepeatedRunsWriteIdenticalStats) {
    ASSERT_EQ(dlesim("generate --generator churn-complete --n 16 --d 4 --horizon 120 --seed 2 --out " + path("s.txt")), 0);
    ASSERT_EQ(dlesim("run --schedule " + path("s.txt") + " --seeds 20 --seed-start 5 --out " + path("x")), 0);
    ASSERT_EQ(dlesim("run --schedule " + path("s.txt") + " --seeds 20 --seed-start 5 --out " + path("y")), 0);
    EXPECT_EQ(dle::read_file(path("x.csv")), dle::read_file(path("y.csv")));
    EXPECT_EQ(dle::read_file(path("x.json")), dle::read_file(path("y.json")));
}

TEST_F(Cli, CorruptScheduleIsAParseError) {
    ASSERT_EQ(dlesim("generate --generator static --n 4 --d 2 --horizon 8 --out " + path("s.txt")), 0);
    auto text = dle::read_file(path("s.txt"));
    text.replace(text.find("round=3"), 7, "round=9");
    dle::write_file(path("bad.txt"), text);
    EXPECT_EQ(dlesim("run --schedule " + path("bad.txt") + " --seeds 1"), 2);
    EXPECT_EQ(dlesim("verify --schedule " + path("bad.txt")), 2);
}

TEST_F(Cli, MissingFileIsAnIoError) {
    EXPECT_EQ(dlesim("run --schedule " + path("nope.txt")), 5);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(dlesim("frobnicate"), 1);
    EXPECT_EQ(dlesim("run"), 1);
    EXPECT_EQ(dlesim("run --schedule x --checks maybe"), 1);
}

TEST_F(Cli, ScalingRefusesFewSeeds) {
    EXPECT_EQ(dlesim("scaling --seeds 10"), 3);
}

TEST_F(Cli, VerifyScheduleAndTrace) {
    ASSERT_EQ(dlesim("generate --generator lower-bound --n 8 --d 3 --epochs 10 --seed 1 --out " + path("s.txt")), 0);
    EXPECT_EQ(dlesim("verify --schedule " + path("s.txt")), 0);
    EXPECT_EQ(out(), "OK\n");
    ASSERT_EQ(dlesim("run --schedule " + path("s.txt") + " --seeds 1 --trace-out " + path("t.txt")), 0);
    EXPECT_EQ(dlesim("verify --trace " + path("t.txt")), 0);

    // A tampered trace no longer replays.
    auto text = dle::read_file(path("t.txt"));
    const auto pos = text.find("leader=-", text.find("records"));
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 8, "leader=1");
    dle::write_file(path("bad.txt"), text);
    EXPECT_EQ(dlesim("verify --trace " + path("bad.txt")), 4);
}

TEST_F(Cli, VerifyReportsDiameterViolation) {
    dle::write_file(path("s.txt"),
                    "dle-schedule v1\nn=2 D=1 horizon=3 generator=x seed=0 id_space=2\n"
                    "round=1 vertices=1,2 edges=\nround=2 vertices=1,2 edges=\nround=3 vertices=1,2 edges=\n");
    EXPECT_EQ(dlesim("verify --schedule " + path("s.txt")), 4);
    EXPECT_EQ(dlesim("run --schedule " + path("s.txt")), 3);
}

TEST_F(Cli, LowerBoundTableCarriesAnalyticBound) {
    ASSERT_EQ(dlesim("lowerbound --n 8 --d 2 --epochs 4 --seeds 20 --max-i 3"), 0);
    const auto text = out();
    EXPECT_NE(text.find("\n1,2,"), std::string::npos);
    EXPECT_NE(text.find(",0.125000,"), std::string::npos);
    EXPECT_NE(text.find(",0.031250,"), std::string::npos);
}
