// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spdelab/nonlinearity.hpp"
#include "spdelab/spectral_model.hpp"

namespace spdelab {

struct SimConfig {
    double dt = 1e-3;       // requested step; the grid uses t_end / ceil(t_end / dt)
    double t_end = 1.0;
    std::uint64_t master_seed = 0;
    int orders = 0;         // highest variational order carried (0..3)
    std::vector<Vec> directions;   // delta_1 directions; order 2 needs 2, order 3 needs 3
    int min_steps = 1;
    bool record = false;    // keep the whole trajectory in the bundle
};

// delta_2 pair slots: (0,1), (0,2), (1,2)
constexpr std::array<std::array<int, 2>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};

struct PathState {
    double t = 0;
    Vec x;
    std::array<Vec, 3> delta1;
    std::array<Vec, 3> delta2;
    Vec delta3;
    std::array<double, 3> weight1{};
    std::array<double, 3> weight2{};
    double weight3 = 0;
    double qv1 = 0;   // sum_i ||delta_1^h(t_i)||_R^2 dt, direction 0
};

struct PathBundle {
    std::vector<double> grid;
    std::vector<PathState> states;   // one per grid point when recorded, else {final}
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    int orders = 0;
    int n_dirs = 0;
    const PathState& final_state() const { return states.back(); }
};

int grid_steps(double t_end, double dt, int min_steps);

class Engine {
public:
    Engine(const SpectralModel& model, const Nonlinearity& g);

    const SpectralModel& model() const { return model_; }
    const Nonlinearity& nonlinearity() const { return g_; }

    PathBundle simulate_path(const Vec& x, const SimConfig& cfg, std::uint64_t path_index) const;

    // Hot-path form: final state only, written into a reused PathState.
    void run(const Vec& x, const SimConfig& cfg, std::uint64_t path_index, PathState& out) const;

private:
    void run_impl(const Vec& x, const SimConfig& cfg, std::uint64_t path_index, PathState& st,
                  std::vector<PathState>* record, std::vector<double>* grid) const;

    const SpectralModel& model_;
    const Nonlinearity& g_;
};

struct BoundViolation {
    double time;
    int order;
    double ratio;
};

struct HregReport {
    std::array<double, 3> max_ratio{};   // per order, over the whole path
    std::vector<BoundViolation> violations;
};

HregReport check_hreg_bounds(const PathBundle& bundle, const SpectralModel& model,
                             const ModelConstants& consts, double tol_dt);

// max_t ||X(t,x) - X(t,y)|| / ||x - y|| under common random numbers
double lipschitz_probe(const Engine& engine, const Vec& x, const Vec& y, const SimConfig& cfg,
                       std::uint64_t path_index);

// columnar CSV: time, x_1..x_n, then delta / weight columns present in the bundle
void dump_path_csv(const PathBundle& bundle, std::ostream& os);

}  // namespace spdelab
