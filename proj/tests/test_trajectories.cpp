// Copyright 2026 The rainbow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rainbow/trajectories.hpp"

#include <random>

#include "gtest/gtest.h"

using namespace rainbow;

namespace {

TrajectoryConfig small_config(int lx, int ly, double T) {
    TrajectoryConfig cfg;
    cfg.geometry = LatticeGeometry(lx, ly);
    cfg.T = T;
    return cfg;
}

// Upper tail of the chi-square distribution, closed forms for 1 to 3 dof.
double chi2_survival(double x, int dof) {
    switch (dof) {
        case 1: return std::erfc(std::sqrt(x / 2));
        case 2: return std::exp(-x / 2);
        case 3: return std::erfc(std::sqrt(x / 2)) + std::sqrt(2 * x / M_PI) * std::exp(-x / 2);
        default: throw std::invalid_argument("dof");
    }
}

}  // namespace

TEST(trajectories, config_validation) {
    auto cfg = small_config(4, 1, 0.4);
    cfg.fidelity_target = 1.0;
    EXPECT_THROW(TrajectorySimulator{cfg}, std::invalid_argument);
    cfg.fidelity_target = 0.99;
    cfg.T = -1;
    EXPECT_THROW(TrajectorySimulator{cfg}, std::invalid_argument);
    EXPECT_THROW(run_ensemble(small_config(4, 1, 0.4), 0), std::invalid_argument);
}

TEST(trajectories, steady_state_never_resets) {
    for (auto [lx, ly] : std::vector<std::pair<int, int>>{{4, 2}, {6, 2}}) {
        auto cfg = small_config(lx, ly, 0.4);
        TrajectorySimulator sim(cfg);
        const StateVector eig = eig_rest_state(cfg.geometry, sim.target());
        std::mt19937_64 rng(4);
        sim.set_rest(eig);
        for (int n = 0; n < 60; ++n) {
            const int s = sim.step(rng);
            EXPECT_TRUE(s == 0 || s == 3) << s;
            EXPECT_NEAR(sim.fidelity(), 1.0, 1e-9);
        }
    }
}

TEST(trajectories, zero_period_never_converges) {
    auto cfg = small_config(4, 2, 0.0);
    cfg.max_steps = 50;
    std::mt19937_64 rng(2);
    const auto st = sample_trajectory(cfg, rng);
    EXPECT_FALSE(st.converged);
    EXPECT_EQ(st.n_tot, 50);
    EXPECT_EQ(st.n_c, 50);
    for (auto s : st.outcome_log) EXPECT_FALSE(is_reset_outcome(s));
    TrajectorySimulator sim(cfg);
    EXPECT_NEAR(st.final_fidelity, sim.fidelity(), 1e-12);
}

TEST(trajectories, first_step_probabilities_match_kraus_slices) {
    for (auto [lx, ly] : std::vector<std::pair<int, int>>{{4, 1}, {2, 3}, {4, 2}}) {
        auto cfg = small_config(lx, ly, 0.7);
        const auto ch = build_kraus(cfg.geometry, cfg.T);
        TrajectorySimulator sim(cfg);
        sim.advance();
        const auto p = sim.outcome_probabilities();
        const Eigen::VectorXcd e0 = StateVector(ch.rest_qubits()).amplitudes();
        for (int s = 0; s < 4; ++s) EXPECT_NEAR(p[static_cast<std::size_t>(s)], (ch.K[static_cast<std::size_t>(s)] * e0).squaredNorm(), 1e-12);
    }
}

TEST(trajectories, outcome_frequencies_follow_born_rule) {
    auto cfg = small_config(2, 3, 0.6);
    TrajectorySimulator sim(cfg);
    std::mt19937_64 rng(17);
    for (int n = 0; n < 3; ++n) sim.step(rng);
    sim.advance();
    const auto p = sim.outcome_probabilities();
    const int trials = 20000;
    std::array<int, 4> counts{};
    for (int k = 0; k < trials; ++k) {
        TrajectorySimulator copy = sim;
        ++counts[static_cast<std::size_t>(copy.measure(rng))];
    }
    double chi2 = 0.0;
    int cells = 0;
    for (int s = 0; s < 4; ++s) {
        const double expect = trials * p[static_cast<std::size_t>(s)];
        if (expect < 1e-9) {
            EXPECT_EQ(counts[static_cast<std::size_t>(s)], 0);
            continue;
        }
        chi2 += std::pow(counts[static_cast<std::size_t>(s)] - expect, 2) / expect;
        ++cells;
    }
    ASSERT_GE(cells, 2);
    EXPECT_GT(chi2_survival(chi2, cells - 1), 1e-3) << "chi2 = " << chi2;
}

TEST(trajectories, measurement_collapses_and_resets) {
    auto cfg = small_config(2, 3, 0.4);
    TrajectorySimulator sim(cfg);
    std::mt19937_64 rng(9);
    int resets = 0;
    for (int n = 0; n < 200; ++n) {
        // Restart now and then; a converged trajectory stops resetting.
        if (n % 5 == 0) sim.reset();
        const int s = sim.step(rng);
        EXPECT_NEAR(sim.state().norm(), 1.0, 1e-10);
        const auto p = z_pair_probabilities(sim.state(), site_index(sim.target().pair.left, cfg.geometry),
                                            site_index(sim.target().pair.right, cfg.geometry));
        const int kept = is_reset_outcome(s) ? 0 : s;
        EXPECT_NEAR(p[static_cast<std::size_t>(kept)], 1.0, 1e-12);
        if (is_reset_outcome(s)) {
            ++resets;
            EXPECT_NEAR(std::abs(sim.state()[0]), 1.0, 1e-15);
        }
        EXPECT_NEAR(sim.rest_state().norm(), 1.0, 1e-10);
    }
    EXPECT_GT(resets, 0);
}

TEST(trajectories, counts_are_consistent_with_the_log) {
    auto cfg = small_config(4, 2, 0.4);
    const auto res = run_ensemble(cfg, 40);
    for (const auto &st : res.runs) {
        ASSERT_EQ(static_cast<int>(st.outcome_log.size()), st.n_tot);
        EXPECT_LE(st.n_c, st.n_tot);
        int tail = 0;
        for (auto it = st.outcome_log.rbegin(); it != st.outcome_log.rend() && !is_reset_outcome(*it); ++it) ++tail;
        EXPECT_EQ(st.n_c, tail);
        EXPECT_TRUE(st.converged);
        EXPECT_GE(st.final_fidelity, cfg.fidelity_target);
    }
    EXPECT_EQ(res.n_converged, 40);
    int total = 0;
    for (int c : res.n_tot.counts) total += c;
    EXPECT_EQ(total, 40);
}

TEST(trajectories, ensembles_are_reproducible) {
    auto cfg = small_config(4, 2, 0.4);
    cfg.seed = 99;
    const auto a = run_ensemble(cfg, 16);
    const auto b = run_ensemble(cfg, 16);
    for (std::size_t k = 0; k < a.runs.size(); ++k) {
        EXPECT_EQ(a.runs[k].outcome_log, b.runs[k].outcome_log);
        auto rng = trajectory_rng(cfg.seed, k);
        EXPECT_EQ(sample_trajectory(cfg, rng).outcome_log, a.runs[k].outcome_log);
    }
    EXPECT_EQ(a.n_tot.counts, b.n_tot.counts);
    cfg.seed = 100;
    const auto c = run_ensemble(cfg, 16);
    bool differs = false;
    for (std::size_t k = 0; k < a.runs.size(); ++k) differs = differs || a.runs[k].outcome_log != c.runs[k].outcome_log;
    EXPECT_TRUE(differs);
}

TEST(trajectories, histogram_summary) {
    const auto h = make_histogram({3, 1, 3, 2, 5, 3, 1, 2});
    EXPECT_EQ(h.counts, (std::vector<int>{0, 2, 2, 3, 0, 1}));
    EXPECT_DOUBLE_EQ(h.mean, 20.0 / 8);
    EXPECT_DOUBLE_EQ(h.median, 2.5);
    EXPECT_EQ(h.mode, 3);
    EXPECT_EQ(make_histogram({4, 4, 2, 2}).mode, 2);
    EXPECT_EQ(make_histogram({}).mode, -1);
}

TEST(trajectories, chebyshev_steps_agree_with_dense_steps) {
    auto cfg = small_config(4, 2, 0.4);
    TrajectorySimulator dense(cfg);
    StateVector psi(8);
    apply_two_qubit(psi, site_index(dense.target().pair.left, cfg.geometry), site_index(dense.target().pair.right, cfg.geometry),
                    rotation_to_bell(0));
    dense.advance();
    evolve_chebyshev(XYHamiltonian(cfg.geometry), psi, cfg.T);
    EXPECT_LT((psi.amplitudes() - dense.state().amplitudes()).norm(), 1e-9);
}

// Averaging pure trajectories reproduces the exact channel iterates.
TEST(trajectories, ensemble_average_matches_channel) {
    auto cfg = small_config(2, 3, 0.4);
    const int n_traj = 500, n_steps = 12;
    const auto avg = ensemble_rest_densities(cfg, n_traj, n_steps);
    const auto ch = build_kraus(cfg.geometry, cfg.T);
    Eigen::MatrixXcd rho = ch.rho0.matrix();
    EXPECT_LT(trace_distance(avg[0], rho), 1e-12);
    for (int n = 1; n <= n_steps; ++n) {
        rho = apply_channel(ch, rho);
        EXPECT_NEAR(avg[static_cast<std::size_t>(n)].trace().real(), 1.0, 1e-10);
        EXPECT_LT(trace_distance(avg[static_cast<std::size_t>(n)], rho), 3.0 / std::sqrt(n_traj)) << "n=" << n;
    }
}
