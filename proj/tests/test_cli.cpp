// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SPDELAB_CLI) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const char* name) {
    fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("verify unknown-name"), 2);
    EXPECT_EQ(run("run"), 2);
    EXPECT_EQ(run("run --config /nonexistent.yaml"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("catalog"), 0);
    EXPECT_EQ(run("run --config resolvent --set params.lambda=-1"), 2);
    EXPECT_EQ(run("resolvent --lambda 0"), 2);
}

TEST(Cli, RunIsByteIdenticalAndFailureExitsOne) {
    const fs::path d = scratch("spdelab_cli_test");
    const fs::path cfg = d / "small.yaml";
    std::ofstream(cfg) << "# SPDX-License-Identifier: Apache-2.0\n"
                          "experiment:\n  kind: martingale\nnonlinearity:\n  name: radial\n"
                          "run:\n  seed: 3\n  n_paths: 300\n  dt: 0.05\nparams:\n  t: 0.5\n";
    const std::string base = "run --config " + cfg.string();
    ASSERT_EQ(run(base + " --out " + (d / "a").string() + " --threads 1"), 0);
    ASSERT_EQ(run(base + " --out " + (d / "b").string() + " --threads 2"), 0);
    EXPECT_EQ(slurp(d / "a" / "results.csv"), slurp(d / "b" / "results.csv"));
    EXPECT_TRUE(fs::exists(d / "a" / "results.json"));

    // an impossible target: envelope brute force on far too coarse a grid
    EXPECT_EQ(run("run --config envelope --set params.brute_step=0.5 --set params.n_eps=4 --out " +
                  (d / "c").string()),
              1);
    fs::remove_all(d);
}
