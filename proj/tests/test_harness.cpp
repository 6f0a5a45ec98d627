// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spdelab/errors.hpp"
#include "spdelab/harness.hpp"
#include "spdelab/parallel.hpp"

using namespace spdelab;

namespace {

const char* kSmall = R"(experiment:
  kind: martingale
nonlinearity:
  name: radial
  M: 0.1
run:
  seed: 4
  n_paths: 300
  dt: 0.02
params:
  t: 0.5
)";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, DefaultsFilledAndDumpRoundTrips) {
    const ExperimentConfig c = ExperimentConfig::parse(kSmall);
    EXPECT_EQ(c.kind(), "martingale");
    EXPECT_EQ(c.name(), "martingale");
    EXPECT_EQ(c.seed(), 4u);
    const ExperimentConfig again = ExperimentConfig::parse(c.dump());
    EXPECT_EQ(again.dump(), c.dump());
    EXPECT_EQ(again.hash(), c.hash());
    EXPECT_NE(c.dump().find("n_inner"), std::string::npos);
}

TEST(Config, UnknownKeysAndSectionsRejected) {
    EXPECT_THROW(ExperimentConfig::parse(std::string(kSmall) + "  bogus: 1\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse(std::string(kSmall) + "extra:\n  a: 1\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("experiment:\n  kind: nope\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse(kSmall).set("run.n_paths", "many"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("experiment: [1, 2\n"), ConfigError);
}

TEST(Config, NonPositiveLambdaRejected) {
    ExperimentConfig c = ExperimentConfig::parse(bundled_config("resolvent"));
    for (const char* v : {"0", "-1"}) {
        try {
            c.set("params.lambda", v);
            FAIL() << "accepted lambda " << v;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
        }
    }
}

TEST(Config, HashTracksOnlySemanticFields) {
    const ExperimentConfig base = ExperimentConfig::parse(kSmall);
    auto with = [&](const char* k, const char* v) {
        ExperimentConfig c = base;
        c.set(k, v);
        return c.hash();
    };
    EXPECT_EQ(with("output.dir", "elsewhere"), base.hash());
    EXPECT_EQ(with("run.threads", "3"), base.hash());
    EXPECT_EQ(with("output.formats", "[csv]"), base.hash());
    EXPECT_EQ(with("params.t", "0.50"), base.hash());
    EXPECT_NE(with("params.t", "0.6"), base.hash());
    EXPECT_NE(with("run.seed", "5"), base.hash());
    EXPECT_NE(with("nonlinearity.M", "0.2"), base.hash());
    EXPECT_NE(with("model.n", "4"), base.hash());
    // set() must not touch the original
    EXPECT_EQ(base.seed(), 4u);
}

TEST(Config, BundledConfigsAllParse) {
    for (const Criterion& c : criteria())
        for (const auto& name : c.configs) EXPECT_NO_THROW(ExperimentConfig::parse(bundled_config(name))) << name;
    EXPECT_THROW(bundled_config("missing"), ConfigError);
}

TEST(Suites, Wiring) {
    const auto b = suite("bounds");
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b[0].id, 1);
    EXPECT_EQ(b[1].id, 8);
    EXPECT_EQ(suite("all").size(), 10u);
    EXPECT_THROW(suite("unknown-name"), ConfigError);
}

TEST(Hashes, KnownDigests) {
    EXPECT_EQ(sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
    EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    EXPECT_EQ(ExperimentConfig::parse(kSmall).input_hash(), git_blob_hash(kSmall));
}

TEST(Threads, Precedence) {
    unsetenv("SPDELAB_THREADS");
    EXPECT_EQ(resolve_threads(0, 0), 0);
    EXPECT_EQ(resolve_threads(0, 2), 2);
    setenv("SPDELAB_THREADS", "5", 1);
    EXPECT_EQ(resolve_threads(0, 2), 5);
    EXPECT_EQ(resolve_threads(3, 2), 3);
    setenv("SPDELAB_THREADS", "zero", 1);
    EXPECT_THROW(resolve_threads(0, 2), ConfigError);
    unsetenv("SPDELAB_THREADS");
}

TEST(Report, CsvQuotingAndColumns) {
    ResultRecord r;
    r.experiment = "a,b";
    r.abs("say \"hi\"", 1.0, 0.5, 1.25, 0.5);
    r.at_most("m", 2.0, 0, 1.0, 0);
    r.info("i", 3.0);
    EXPECT_EQ(results_csv({r}),
              "experiment,metric,value,std_error,target,tolerance,check,pass\n"
              "\"a,b\",\"say \"\"hi\"\"\",1.0000000000e+00,5.0000000000e-01,1.2500000000e+00,5.0000000000e-01,abs,true\n"
              "\"a,b\",m,2.0000000000e+00,0.0000000000e+00,1.0000000000e+00,0.0000000000e+00,at_most,false\n"
              "\"a,b\",i,3.0000000000e+00,0.0000000000e+00,0.0000000000e+00,0.0000000000e+00,info,true\n");
    EXPECT_FALSE(r.passed());
    ASSERT_EQ(r.failing().size(), 1u);
    EXPECT_EQ(r.failing()[0], "a,b/m");
}

TEST(Report, RunIsByteDeterministicAcrossThreadCounts) {
    const ExperimentConfig c = ExperimentConfig::parse(kSmall);
    const int saved = threads();
    set_threads(1);
    const std::string a = results_csv({run_experiment(c)});
    set_threads(3);
    const ResultRecord rec = run_experiment(c);
    set_threads(saved);
    EXPECT_EQ(results_csv({rec}), a);
    EXPECT_EQ(rec.config_hash, c.hash());
    EXPECT_EQ(rec.resolved_config, c.dump());
}

TEST(Report, WritesAllFormats) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "spdelab_report_test";
    fs::remove_all(dir);
    ResultRecord r;
    r.experiment = "demo";
    r.resolved_config = "x: 1\n";
    r.info("v", 1.0);
    r.plots.push_back({"series one", "t", "y", {1, 2}, {3, 4}});
    write_results({r}, dir.string(), {"csv", "json", "plotdata"});
    EXPECT_EQ(slurp(dir / "results.csv"), results_csv({r}));
    const std::string json = slurp(dir / "results.json");
    EXPECT_NE(json.find("\"config\": \"x: 1\\n\""), std::string::npos);
    EXPECT_EQ(slurp(dir / "plotdata" / "demo_series_one.csv"),
              "t,y\n1.0000000000e+00,3.0000000000e+00\n2.0000000000e+00,4.0000000000e+00\n");
    fs::remove_all(dir);
}
