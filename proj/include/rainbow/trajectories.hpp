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

#pragma once

// Monte Carlo unraveling of the measure-and-reset protocol on pure states.
//
// One step: rotate the measured pair back to |I>, evolve for T, measure the
// pair in the Z basis. Outcomes 01 and 10 discard everything and restart from
// |0...0>. A trajectory stops once the rest of the register is within the
// fidelity target of |EIG_rest>.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "rainbow/engineer.hpp"
#include "rainbow/parallel.hpp"

namespace rainbow {

struct TrajectoryConfig {
    LatticeGeometry geometry{6, 2};
    double jx = 1.0;
    double jy = 1.2;
    double T = 0.4;
    double fidelity_target = 0.99;
    int max_steps = 2000;
    std::uint64_t seed = 1;
    /// Row of the measured central pair; the lattice default when empty.
    std::optional<int> row;
    EvolveOptions evolve;
};

/// Outcome codes in the log: 2 bit(c) + bit(c-bar). 1 and 2 trigger a reset.
inline bool is_reset_outcome(int s) { return s == 1 || s == 2; }

struct TrajectoryStats {
    /// All measurements, including those discarded by resets.
    int n_tot = 0;
    /// Measurements after the last reset.
    int n_c = 0;
    std::vector<std::uint8_t> outcome_log;
    bool converged = false;
    double final_fidelity = 0.0;
};

namespace detail {

inline void validate(const TrajectoryConfig &cfg) {
    if (cfg.geometry.num_sites() < 3) throw std::invalid_argument("trajectories need at least one qubit besides the pair");
    if (!(cfg.T >= 0.0)) throw std::invalid_argument("measurement period T must be non-negative");
    if (!(cfg.fidelity_target > 0.0 && cfg.fidelity_target < 1.0))
        throw std::invalid_argument("fidelity target must lie in (0, 1)");
    if (cfg.max_steps < 0) throw std::invalid_argument("max_steps must be non-negative");
}

}  // namespace detail

/// Registers up to this size step with a cached dense propagator.
inline constexpr int kDenseStepQubits = 10;

/// State of one trajectory. Copies share the Hamiltonian and propagator, so
/// a copy is as cheap as the register.
class TrajectorySimulator {
  public:
    explicit TrajectorySimulator(const TrajectoryConfig &cfg) : shared_(std::make_shared<Shared>(cfg)) {
        reset();
    }

    const TrajectoryConfig &config() const { return shared_->cfg; }
    const EngineeringTarget &target() const { return shared_->target; }
    const StateVector &state() const { return psi_; }
    /// Z outcome of the last measurement (0 after a reset).
    int last_outcome() const { return last_; }

    /// Step 1: the whole register back to |0...0>.
    void reset() {
        psi_ = StateVector(shared_->cfg.geometry.num_sites());
        last_ = 0;
    }

    /// Replaces the rest by `rest` (N-2 qubits, rest ordering of the channel)
    /// with the pair in |00>.
    void set_rest(const StateVector &rest) {
        const auto &s = *shared_;
        if (rest.num_qubits() != s.cfg.geometry.num_sites() - 2) throw std::invalid_argument("set_rest: wrong register size");
        psi_ = StateVector(s.cfg.geometry.num_sites());
        psi_.amplitudes().setZero();
        for (Index r = 0; r < rest.dim(); ++r) psi_[detail::deposit_rest(r, s.sites, s.c, s.cb, 0, 0)] = rest[r];
        psi_.normalize();
        last_ = 0;
    }

    /// Steps 2 and 3: re-entangle the pair as |I> and evolve for T.
    void advance() {
        const auto &s = *shared_;
        apply_two_qubit(psi_, s.c, s.cb, rotation_to_bell(last_));
        if (s.propagator) {
            psi_.amplitudes() = (*s.propagator * psi_.amplitudes()).eval();
        } else {
            evolve(s.h, psi_, s.cfg.T, s.cfg.evolve);
        }
    }

    std::array<double, 4> outcome_probabilities() const { return z_pair_probabilities(psi_, shared_->c, shared_->cb); }

    /// Step 4: Born-sampled Z measurement of the pair, with the reset on 01/10.
    template <class Rng>
    int measure(Rng &rng) {
        const auto &s = *shared_;
        const int outcome = sample_z_pair(psi_, s.c, s.cb, rng);
        if (is_reset_outcome(outcome)) {
            reset();
        } else {
            collapse_z_pair(psi_, s.c, s.cb, outcome);
            last_ = outcome;
        }
        return outcome;
    }

    template <class Rng>
    int step(Rng &rng) {
        advance();
        return measure(rng);
    }

    /// The rest after a measurement (the pair is then in |00> or |11>).
    StateVector rest_state() const {
        const auto &s = *shared_;
        StateVector out(s.cfg.geometry.num_sites() - 2);
        const int bc = last_ >> 1, bcb = last_ & 1;
        for (Index r = 0; r < out.dim(); ++r) out[r] = psi_[detail::deposit_rest(r, s.sites, s.c, s.cb, bc, bcb)];
        return out;
    }

    /// |<EIG_rest|rest>|^2, a monitor available to the classical simulation.
    double fidelity() const { return std::norm(shared_->eig.inner(rest_state())); }

  private:
    struct Shared {
        explicit Shared(const TrajectoryConfig &c)
            : cfg(c), target(engineering_target(c.geometry, c.row)), h(c.geometry, c.jx, c.jy) {
            detail::validate(cfg);
            sites = detail::rest_sites(cfg.geometry, target.pair);
            this->c = site_index(target.pair.left, cfg.geometry);
            cb = site_index(target.pair.right, cfg.geometry);
            eig = eig_rest_state(cfg.geometry, target);
            if (cfg.geometry.num_sites() <= kDenseStepQubits) {
                const DenseSpectrum spec(h);
                const Eigen::Index d = Eigen::Index{1} << cfg.geometry.num_sites();
                propagator = std::make_unique<Eigen::MatrixXcd>(Eigen::MatrixXcd::Zero(d, d));
                for (int p = 0; p < 2; ++p) {
                    const auto &st = spec.states(p);
                    const auto m = static_cast<Eigen::Index>(st.size());
                    const Eigen::MatrixXcd u = spec.propagate_block(p, Eigen::MatrixXcd::Identity(m, m), cfg.T);
                    for (Eigen::Index a = 0; a < m; ++a)
                        for (Eigen::Index b = 0; b < m; ++b)
                            (*propagator)(static_cast<Eigen::Index>(st[static_cast<std::size_t>(a)]),
                                          static_cast<Eigen::Index>(st[static_cast<std::size_t>(b)])) = u(a, b);
                }
            }
        }
        TrajectoryConfig cfg;
        EngineeringTarget target;
        XYHamiltonian h;
        std::vector<int> sites;
        int c = 0, cb = 0;
        StateVector eig;
        std::unique_ptr<Eigen::MatrixXcd> propagator;
    };

    std::shared_ptr<const Shared> shared_;
    StateVector psi_;
    int last_ = 0;
};

/// Runs one trajectory from |0...0> until the fidelity target or max_steps.
template <class Rng>
TrajectoryStats sample_trajectory(const TrajectorySimulator &proto, Rng &rng) {
    TrajectorySimulator sim = proto;
    sim.reset();
    const auto &cfg = sim.config();
    TrajectoryStats st;
    while (st.n_tot < cfg.max_steps) {
        const int s = sim.step(rng);
        st.outcome_log.push_back(static_cast<std::uint8_t>(s));
        ++st.n_tot;
        st.n_c = is_reset_outcome(s) ? 0 : st.n_c + 1;
        st.final_fidelity = sim.fidelity();
        if (st.final_fidelity >= cfg.fidelity_target) {
            st.converged = true;
            break;
        }
    }
    return st;
}

template <class Rng>
TrajectoryStats sample_trajectory(const TrajectoryConfig &cfg, Rng &rng) {
    return sample_trajectory(TrajectorySimulator(cfg), rng);
}

/// Generator of trajectory k.
inline std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint64_t k) { return std::mt19937_64(mix_seed(seed, k)); }

/// Unit-width histogram: counts[v] trajectories with value v.
struct Histogram {
    std::vector<int> counts;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    /// Smallest most frequent value, -1 when empty.
    int mode = -1;
};

inline Histogram make_histogram(std::vector<int> values) {
    Histogram h;
    if (values.empty()) return h;
    std::sort(values.begin(), values.end());
    h.counts.assign(static_cast<std::size_t>(values.back()) + 1, 0);
    double sum = 0.0;
    for (int v : values) {
        ++h.counts[static_cast<std::size_t>(v)];
        sum += v;
    }
    h.mean = sum / static_cast<double>(values.size());
    const std::size_t m = values.size() / 2;
    h.median = values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
    h.mode = static_cast<int>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    return h;
}

struct EnsembleResult {
    std::vector<TrajectoryStats> runs;
    /// Over converged trajectories only.
    Histogram n_tot;
    Histogram n_c;
    int n_converged = 0;
};

/// n_traj independent trajectories; trajectory k draws from trajectory_rng(seed, k).
inline EnsembleResult run_ensemble(const TrajectoryConfig &cfg, int n_traj) {
    if (n_traj < 1) throw std::invalid_argument("need at least one trajectory");
    const TrajectorySimulator proto(cfg);
    EnsembleResult res;
    res.runs.resize(static_cast<std::size_t>(n_traj));
    parallel_for(res.runs.size(), [&](std::size_t k) {
        auto rng = trajectory_rng(cfg.seed, k);
        res.runs[k] = sample_trajectory(proto, rng);
    });
    std::vector<int> tot, c;
    for (const auto &r : res.runs) {
        if (!r.converged) continue;
        tot.push_back(r.n_tot);
        c.push_back(r.n_c);
    }
    res.n_converged = static_cast<int>(tot.size());
    res.n_tot = make_histogram(std::move(tot));
    res.n_c = make_histogram(std::move(c));
    return res;
}

/// Ensemble average of |rest><rest| after each of the first n_steps steps
/// (index 0 is the initial state), with no stopping rule. This is the
/// quantity the exact channel iterates.
inline std::vector<Eigen::MatrixXcd> ensemble_rest_densities(const TrajectoryConfig &cfg, int n_traj, int n_steps) {
    if (n_traj < 1) throw std::invalid_argument("need at least one trajectory");
    if (n_steps < 0) throw std::invalid_argument("number of steps must be non-negative");
    if (cfg.geometry.num_sites() - 2 > kMaxKeptQubits) throw std::invalid_argument("rest too large for dense averaging");
    const TrajectorySimulator proto(cfg);
    const Eigen::Index d = Eigen::Index{1} << (cfg.geometry.num_sites() - 2);
    const auto steps = static_cast<std::size_t>(n_steps) + 1;
    std::vector<Eigen::MatrixXcd> avg(steps, Eigen::MatrixXcd::Zero(d, d));
    // Blocks of trajectories keep memory bounded; summation order is fixed.
    const std::size_t block = 64;
    for (std::size_t k0 = 0; k0 < static_cast<std::size_t>(n_traj); k0 += block) {
        const std::size_t nb = std::min(block, static_cast<std::size_t>(n_traj) - k0);
        std::vector<Eigen::MatrixXcd> rests(nb, Eigen::MatrixXcd(d, static_cast<Eigen::Index>(steps)));
        parallel_for(nb, [&](std::size_t b) {
            auto rng = trajectory_rng(cfg.seed, k0 + b);
            TrajectorySimulator sim = proto;
            rests[b].col(0) = sim.rest_state().amplitudes();
            for (std::size_t n = 1; n < steps; ++n) {
                sim.step(rng);
                rests[b].col(static_cast<Eigen::Index>(n)) = sim.rest_state().amplitudes();
            }
        });
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t n = 0; n < steps; ++n) {
                const auto v = rests[b].col(static_cast<Eigen::Index>(n));
                avg[n].noalias() += v * v.adjoint();
            }
    }
    for (auto &m : avg) m /= static_cast<double>(n_traj);
    return avg;
}

}  // namespace rainbow
