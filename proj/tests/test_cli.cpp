#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

/// Runs the CLI with stdout captured and stderr discarded.
Result run_cli(const std::string& args)
{
    const std::string cmd = std::string(SPI_CLI_PATH) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    char buf[4096];
    while (const auto n = std::fread(buf, 1, sizeof buf, pipe)) {
        r.out.append(buf, n);
    }
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path()
              / ("spi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "tiny.ini") << "[dataset]\nn = 4\n[grid]\nresolutions = 8\n"
                                           "[experiment]\nsteps = 400\npaths = 2\nreference_multiplier = 2\n";
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string tiny() const { return "--config " + (dir / "tiny.ini").string(); }

    fs::path dir;
};

} // namespace

TEST_F(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(run_cli("").code, 2);
    EXPECT_EQ(run_cli("frobnicate").code, 2);
    EXPECT_EQ(run_cli("run --method adam").code, 2);
    EXPECT_EQ(run_cli("verify --suite everything").code, 2);
    EXPECT_EQ(run_cli("run --config /nonexistent.ini").code, 2);
    EXPECT_EQ(run_cli("run --dry-run --set dataset.n=3").code, 2);
    EXPECT_EQ(run_cli("generate --set dataset.colour=red").code, 2);
    EXPECT_EQ(run_cli("rate " + (dir / "missing.csv").string()).code, 2);
}

TEST_F(Cli, HelpExitsZero)
{
    EXPECT_EQ(run_cli("--help").code, 0);
}

TEST_F(Cli, GenerateWritesDataset)
{
    const auto r = run_cli("generate " + tiny() + " --out " + dir.string());
    ASSERT_EQ(r.code, 0);
    std::ifstream in(dir / "dataset_N8.csv");
    std::string header, line;
    std::getline(in, header);
    EXPECT_EQ(header, "y,v1,v2,v3,v4,v5,v6,v7,v8");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 4);
}

TEST_F(Cli, DryRunWritesNothing)
{
    const auto out = dir / "dry";
    const auto r = run_cli("run --dry-run " + tiny() + " --out " + out.string());
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("plan"), std::string::npos);
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, RunIsByteReproducibleAndRateReadsIt)
{
    const auto a = dir / "a", b = dir / "b";
    ASSERT_EQ(run_cli("run --method sgd " + tiny() + " --out " + a.string()).code, 0);
    ASSERT_EQ(run_cli("run --method sgd " + tiny() + " --out " + b.string()).code, 0);
    const auto ca = slurp(a / "errors_sgd.csv");
    EXPECT_FALSE(ca.empty());
    EXPECT_EQ(ca, slurp(b / "errors_sgd.csv"));
    EXPECT_EQ(slurp(a / "errors_sgd.svg"), slurp(b / "errors_sgd.svg"));
    EXPECT_NE(ca.find("method,N,k,mean_sq_error\nsgd,8,100,"), std::string::npos);

    const auto rate = run_cli("rate --k-min 100 " + (a / "errors_sgd.csv").string());
    EXPECT_EQ(rate.code, 0);
    EXPECT_EQ(rate.out.rfind("method,N,slope,intercept,points\nsgd,8,", 0), 0u);
}

TEST_F(Cli, MalformedTableExitsOne)
{
    std::ofstream(dir / "bad.csv") << "method,N,k,mean_sq_error\nspi,8,100,oops\n";
    EXPECT_EQ(run_cli("rate " + (dir / "bad.csv").string()).code, 1);
}

TEST_F(Cli, VerifyWritesReport)
{
    const auto r = run_cli("verify --suite operators --set verify.operator_trials=20 --out " + dir.string());
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("check,trials,failures,worst_margin\n", 0), 0u);
    EXPECT_EQ(slurp(dir / "verify_operators.csv"), r.out);
}
