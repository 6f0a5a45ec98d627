// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "spdelab.h"

namespace {

const char* kCfg = R"(experiment:
  kind: martingale
nonlinearity:
  name: radial
run:
  seed: 8
  n_paths: 200
  dt: 0.05
params:
  t: 0.5
)";

}  // namespace

TEST(CApi, StatusCodesAndLastError) {
    spdelab_config* c = nullptr;
    EXPECT_EQ(spdelab_config_parse("experiment:\n  kind: nope\n", &c), SPDELAB_E_CONFIG);
    EXPECT_EQ(c, nullptr);
    EXPECT_NE(std::strlen(spdelab_last_error()), 0u);
    EXPECT_EQ(spdelab_config_parse(nullptr, &c), SPDELAB_E_ARGUMENT);
    EXPECT_EQ(spdelab_config_load("/nonexistent/cfg.yaml", &c), SPDELAB_E_CONFIG);
    EXPECT_EQ(spdelab_verify("unknown-name", -1, 0, nullptr), SPDELAB_E_ARGUMENT);
    spdelab_result* r = nullptr;
    EXPECT_EQ(spdelab_verify("unknown-name", -1, 0, &r), SPDELAB_E_CONFIG);
    EXPECT_STREQ(spdelab_status_name(SPDELAB_E_DIVERGENCE), "divergence");
    ASSERT_EQ(spdelab_config_parse(kCfg, &c), SPDELAB_OK);
    EXPECT_STREQ(spdelab_last_error(), "");
    spdelab_config_free(c);
}

TEST(CApi, ConfigAccessors) {
    spdelab_config* c = nullptr;
    ASSERT_EQ(spdelab_config_parse(kCfg, &c), SPDELAB_OK);
    const char* s = nullptr;
    ASSERT_EQ(spdelab_config_get(c, "kind", &s), SPDELAB_OK);
    EXPECT_STREQ(s, "martingale");
    ASSERT_EQ(spdelab_config_get(c, "run.n_paths", &s), SPDELAB_OK);
    EXPECT_STREQ(s, "200");
    ASSERT_EQ(spdelab_config_get(c, "hash", &s), SPDELAB_OK);
    const std::string h = s;
    EXPECT_EQ(h.size(), 40u);
    ASSERT_EQ(spdelab_config_set(c, "run.seed", "9"), SPDELAB_OK);
    ASSERT_EQ(spdelab_config_get(c, "hash", &s), SPDELAB_OK);
    EXPECT_NE(h, s);
    EXPECT_EQ(spdelab_config_set(c, "run.nonsense", "1"), SPDELAB_E_CONFIG);
    EXPECT_EQ(spdelab_config_get(c, "run.nonsense", &s), SPDELAB_E_ARGUMENT);
    spdelab_config_free(c);
}

TEST(CApi, RunAndInspectResult) {
    spdelab_config* c = nullptr;
    ASSERT_EQ(spdelab_config_parse(kCfg, &c), SPDELAB_OK);
    spdelab_result* r = nullptr;
    ASSERT_EQ(spdelab_run(c, &r), SPDELAB_OK);
    size_t n = 0;
    ASSERT_EQ(spdelab_result_metric_count(r, &n), SPDELAB_OK);
    ASSERT_GE(n, 2u);
    spdelab_metric m;
    ASSERT_EQ(spdelab_result_metric(r, 0, &m), SPDELAB_OK);
    EXPECT_STREQ(m.experiment, "martingale");
    EXPECT_EQ(spdelab_result_metric(r, n, &m), SPDELAB_E_ARGUMENT);
    const char* csv = nullptr;
    ASSERT_EQ(spdelab_result_text(r, "csv", &csv), SPDELAB_OK);
    EXPECT_EQ(std::string(csv).rfind("experiment,metric,value", 0), 0u);
    spdelab_result_free(r);
    spdelab_config_free(c);
}

TEST(CApi, DirectNumerics) {
    spdelab_config* c = nullptr;
    ASSERT_EQ(spdelab_config_parse("experiment:\n  kind: evolve\nrun:\n  dt: 0.01\n", &c), SPDELAB_OK);
    spdelab_model* m = nullptr;
    ASSERT_EQ(spdelab_model_create(c, &m), SPDELAB_OK);
    int n = 0;
    ASSERT_EQ(spdelab_model_dim(m, &n), SPDELAB_OK);
    EXPECT_EQ(n, 8);
    double zeta = 0, M = 1;
    ASSERT_EQ(spdelab_model_constants(m, &zeta, &M), SPDELAB_OK);
    EXPECT_DOUBLE_EQ(zeta, -0.5);
    EXPECT_EQ(M, 0.0);

    spdelab_field* f = nullptr;
    EXPECT_EQ(spdelab_field_create(m, "nosuch:a=1", &f), SPDELAB_E_CONFIG);
    ASSERT_EQ(spdelab_field_create(m, "sin:omega=2", &f), SPDELAB_OK);
    double x[8] = {0.25, 0, 0, 0, 0, 0, 0, 0}, v = 0;
    ASSERT_EQ(spdelab_field_eval(f, x, 8, &v), SPDELAB_OK);
    EXPECT_DOUBLE_EQ(v, std::sin(0.5));
    EXPECT_EQ(spdelab_field_eval(f, x, 3, &v), SPDELAB_E_ARGUMENT);

    spdelab_estimate a, b;
    ASSERT_EQ(spdelab_estimate_pt(m, f, 0.4, x, 8, 500, 3, &a), SPDELAB_OK);
    ASSERT_EQ(spdelab_evolve(m, f, 0.0, 0.4, x, 8, 500, 8, 3, &b), SPDELAB_OK);
    EXPECT_EQ(a.value, b.value);
    double tail = -1;
    EXPECT_EQ(spdelab_resolvent(m, f, -1.0, x, 8, 100, 8, 1, &a, &tail), SPDELAB_E_CONFIG);
    ASSERT_EQ(spdelab_resolvent(m, f, 2.0, x, 8, 100, 8, 1, &a, &tail), SPDELAB_OK);
    EXPECT_LE(std::abs(a.value), 0.5 + tail + 4 * a.std_error);

    double ll = 0;
    int warn = -1;
    ASSERT_EQ(spdelab_ll_regularize(m, f, 0.05, x, 8, &ll, &warn), SPDELAB_OK);
    EXPECT_LE(ll, v + 1e-10);

    spdelab_field_free(f);
    spdelab_model_free(m);
    spdelab_config_free(c);
}

TEST(CApi, ThreadResolution) {
    int out = -1;
    ASSERT_EQ(spdelab_resolve_threads(4, 1, &out), SPDELAB_OK);
    EXPECT_EQ(out, 4);
    EXPECT_EQ(spdelab_set_threads(-2), SPDELAB_E_ARGUMENT);
}
