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

// Many-body teleportation through the XY model.
//
// Alice's qubit sits on the injection site; its mirror partner is entangled
// with an auxiliary qubit q_b (register qubit N) that the Hamiltonian never
// touches. After evolving for time t, a set of mirror pairs is projected onto
// the Bell labels of the rainbow eigenstate, and q_b is compared with |A>.
//
// The whole protocol is linear in |A>, so it is run once for |A> = |0> and
// once for |A> = |1>. The overlaps of the two projected states on q_b form a
// 4x4 matrix from which P, rho_b and F follow exactly for every |A>.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "rainbow/lattice.hpp"
#include "rainbow/parallel.hpp"
#include "rainbow/quantum_core.hpp"
#include "rainbow/xy_model.hpp"

namespace rainbow {

struct TeleportConfig {
    LatticeGeometry geometry{10, 2};
    double jx = 1.0;
    double jy = 1.2;
    EigVariant variant = EigVariant::IZ;
    BlochState a;
    std::vector<double> times{0.0};
    /// Pairs projected onto their eigenstate labels; must not contain the
    /// injection pair.
    std::vector<MirrorPair> measured_pairs;
    Site injection{1, 1};
    EvolveOptions evolve;
};

/// The `count` mirror pairs closest to the central column, nearest first and
/// row by row within a column, skipping the pair of `injection`.
inline std::vector<MirrorPair> default_measured_pairs(const LatticeGeometry &g, int count,
                                                      const Site &injection = Site{1, 1}) {
    if (count < 0) throw std::invalid_argument("number of measured pairs must be non-negative");
    const MirrorPair skip = mirror_pair_of(injection, g);
    std::vector<MirrorPair> candidates;
    for (const auto &p : mirror_pairs(g)) {
        if (!(p == skip)) candidates.push_back(p);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](const MirrorPair &x, const MirrorPair &y) {
        const int dx = g.lx() / 2 - x.left.i, dy = g.lx() / 2 - y.left.i;
        if (dx != dy) return dx < dy;
        return x.left.j < y.left.j;
    });
    if (static_cast<std::size_t>(count) > candidates.size()) {
        throw std::invalid_argument("requested " + std::to_string(count) + " measured pairs but only " +
                                    std::to_string(candidates.size()) + " are available");
    }
    candidates.resize(static_cast<std::size_t>(count));
    return candidates;
}

namespace detail {

inline void validate(const TeleportConfig &cfg) {
    const auto &g = cfg.geometry;
    detail::require_in_bounds(cfg.injection, g);
    const MirrorPair inj = mirror_pair_of(cfg.injection, g);
    std::vector<int> used;
    for (const auto &p : cfg.measured_pairs) {
        detail::require_in_bounds(p.left, g);
        if (!(mirror_pair_of(p.left, g) == p)) throw std::invalid_argument("measured pair " + to_string(p.left) + " is not a mirror pair");
        if (p == inj) throw std::invalid_argument("measured pairs must exclude the injection pair");
        const int k = site_index(p.left, g);
        if (std::find(used.begin(), used.end(), k) != used.end()) throw std::invalid_argument("duplicate measured pair");
        used.push_back(k);
    }
    for (double t : cfg.times) {
        if (!(t >= 0.0)) throw std::invalid_argument("teleport times must be non-negative");
    }
}

}  // namespace detail

/// |EIG> with the injection pair replaced by |A> on the injection qubit and a
/// Bell pair between its mirror partner and q_b. The q_b pair carries the
/// injection pair's label (|I> for the default variant), so that projecting
/// the injection pair onto its label leaves |A> on q_b.
inline StateVector prepare_teleport_state(const TeleportConfig &cfg, const Eigen::Vector2cd &a) {
    const auto &g = cfg.geometry;
    detail::require_in_bounds(cfg.injection, g);
    const int n = g.num_sites();
    const MirrorPair inj = mirror_pair_of(cfg.injection, g);
    const Site partner = mirror_partner(cfg.injection, g);
    std::vector<PairFactor> pairs;
    for (const auto &p : mirror_pairs(g)) {
        if (p == inj) continue;
        pairs.push_back({site_index(p.left, g), site_index(p.right, g), bell_amplitudes(variant_label(cfg.variant, p.left, g))});
    }
    pairs.push_back({site_index(partner, g), n, bell_amplitudes(variant_label(cfg.variant, inj.left, g))});
    return product_state(n + 1, pairs, {{site_index(cfg.injection, g), a}});
}

inline StateVector prepare_teleport_state(const TeleportConfig &cfg) {
    return prepare_teleport_state(cfg, cfg.a.amplitudes());
}

struct TeleportOutcome {
    double probability = 0.0;
    double fidelity = 0.0;
    DensityMatrix rho_b;
    /// False when post-selection has zero probability (fidelity undefined).
    bool valid = false;
};

/// Post-selected state of q_b as a bilinear function of Alice's amplitudes.
/// overlaps(2a+k, 2a'+l) = sum_r phi_a[r, b=k] conj(phi_a'[r, b=l]), where
/// phi_a is the unnormalized projected state for |A> = |a>.
class TeleportResponse {
  public:
    TeleportResponse() = default;
    explicit TeleportResponse(double t, Eigen::Matrix4cd overlaps) : t_(t), q_(std::move(overlaps)) {}

    double time() const { return t_; }
    const Eigen::Matrix4cd &overlaps() const { return q_; }

    TeleportOutcome evaluate(const Eigen::Vector2cd &a) const {
        Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
        for (int x = 0; x < 2; ++x) {
            for (int y = 0; y < 2; ++y) {
                rho += a(x) * std::conj(a(y)) * q_.block<2, 2>(2 * x, 2 * y);
            }
        }
        TeleportOutcome out;
        out.probability = rho.trace().real() / a.squaredNorm();
        if (out.probability <= 1e-300) {
            out.probability = 0.0;
            out.rho_b = DensityMatrix::maximally_mixed(1);
            return out;
        }
        rho /= rho.trace();
        out.rho_b = DensityMatrix(1, rho);
        out.fidelity = a.dot(rho * a).real() / a.squaredNorm();
        out.valid = true;
        return out;
    }

    TeleportOutcome evaluate(const BlochState &a) const { return evaluate(a.amplitudes()); }

  private:
    double t_ = 0.0;
    Eigen::Matrix4cd q_ = Eigen::Matrix4cd::Zero();
};

/// Applies every post-selection projector in place; returns nothing because
/// the norm is read off the overlap matrix.
inline void apply_post_selection(const TeleportConfig &cfg, StateVector &psi) {
    const auto &g = cfg.geometry;
    for (const auto &p : cfg.measured_pairs) {
        apply_bell_projector(psi, site_index(p.left, g), site_index(p.right, g), variant_label(cfg.variant, p.left, g));
    }
}

/// Responses for several post-selection sets sharing one time evolution:
/// result[s][k] belongs to pair_sets[s] and cfg.times[k]. cfg.measured_pairs
/// is ignored.
inline std::vector<std::vector<TeleportResponse>> teleport_responses(
    const TeleportConfig &cfg, const std::vector<std::vector<MirrorPair>> &pair_sets) {
    for (const auto &set : pair_sets) {
        TeleportConfig c = cfg;
        c.measured_pairs = set;
        detail::validate(c);
    }
    const XYHamiltonian h(cfg.geometry, cfg.jx, cfg.jy);
    const int n = cfg.geometry.num_sites();
    const Eigen::Index half = Eigen::Index{1} << n;

    std::vector<std::size_t> order(cfg.times.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return cfg.times[x] < cfg.times[y]; });

    std::array<StateVector, 2> psi{prepare_teleport_state(cfg, Eigen::Vector2cd(1.0, 0.0)),
                                   prepare_teleport_state(cfg, Eigen::Vector2cd(0.0, 1.0))};
    std::vector<std::vector<TeleportResponse>> out(pair_sets.size(), std::vector<TeleportResponse>(cfg.times.size()));
    double now = 0.0;
    for (std::size_t idx : order) {
        const double t = cfg.times[idx];
        parallel_for(2, [&](std::size_t a) { evolve(h, psi[a], t - now, cfg.evolve); });
        now = t;
        for (std::size_t s = 0; s < pair_sets.size(); ++s) {
            TeleportConfig c = cfg;
            c.measured_pairs = pair_sets[s];
            // Columns: (a, b) -> 2a + b, each a 2^N segment of the projected state.
            Eigen::MatrixXcd phi(half, 4);
            for (int a = 0; a < 2; ++a) {
                StateVector projected = psi[static_cast<std::size_t>(a)];
                apply_post_selection(c, projected);
                for (int b = 0; b < 2; ++b) phi.col(2 * a + b) = projected.amplitudes().segment(b * half, half);
            }
            out[s][idx] = TeleportResponse(t, phi.transpose() * phi.conjugate());
        }
    }
    return out;
}

/// One response per entry of cfg.times (same order).
inline std::vector<TeleportResponse> teleport_responses(const TeleportConfig &cfg) {
    return teleport_responses(cfg, {cfg.measured_pairs}).front();
}

struct TeleportRecord {
    double t = 0.0;
    double probability = 0.0;
    double fidelity = 0.0;
    DensityMatrix rho_b;
    bool valid = false;
};

inline std::vector<TeleportRecord> run_teleport(const TeleportConfig &cfg) {
    std::vector<TeleportRecord> records;
    for (const auto &r : teleport_responses(cfg)) {
        auto o = r.evaluate(cfg.a);
        records.push_back({r.time(), o.probability, o.fidelity, o.rho_b, o.valid});
    }
    return records;
}

/// Success probability of post-selecting E pairs when all but the eigenstate
/// branch have thermalized: 1/4 + 3 * 4^{-E-1}.
inline double hp_probability(int e) {
    if (e < 0) throw std::invalid_argument("hp_probability: E must be non-negative");
    return 0.25 + 3.0 * std::pow(4.0, -e - 1);
}

struct SingleBodyResult {
    double fidelity = 0.0;
    double probability = 0.0;
};

namespace detail {
// Qubit 0 holds |A>, qubits 1 and 2 share |I>. Bell pair (0, 1) is measured.
inline StateVector single_body_initial(const BlochState &a) {
    return product_state(3, {{1, 2, bell_amplitudes(BellLabel::I)}}, {{0, a.amplitudes()}});
}
}  // namespace detail

/// Textbook stochastic teleportation: post-select the Bell measurement of
/// Alice's two qubits onto |I>; |A> then appears on the third qubit.
inline SingleBodyResult single_body_teleport(const BlochState &a) {
    StateVector psi = detail::single_body_initial(a);
    const double p = apply_bell_projector(psi, 0, 1, BellLabel::I);
    psi.normalize();
    const DensityMatrix rho3 = reduced_density(psi, {2});
    return {fidelity_pure(rho3, a.ket()), p};
}

/// State of the third qubit averaged over all four Bell outcomes without any
/// correction.
inline DensityMatrix single_body_unconditioned(const BlochState &a) {
    const StateVector psi0 = detail::single_body_initial(a);
    Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
    for (auto l : {BellLabel::I, BellLabel::Z, BellLabel::X, BellLabel::Y}) {
        StateVector psi = psi0;
        const double p = apply_bell_projector(psi, 0, 1, l);
        if (p <= 0.0) continue;
        psi.normalize();
        rho += p * reduced_density(psi, {2}).matrix();
    }
    return DensityMatrix(1, rho);
}

struct HaarAverage {
    double mean = 0.0;
    double stderr_mean = 0.0;
    double mean_probability = 0.0;
    std::array<double, 6> pauli_fidelity{};
    int samples = 0;
};

/// Monte Carlo average of F over Haar-random |A>, plus F on the six Pauli
/// eigenstates. Zero-probability samples are skipped.
template <class Rng>
HaarAverage haar_average_fidelity(const TeleportResponse &r, int n_samples, Rng &rng) {
    if (n_samples < 1) throw std::invalid_argument("haar_average_fidelity needs at least one sample");
    HaarAverage h;
    double sum = 0.0, sum2 = 0.0, psum = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        auto o = r.evaluate(BlochState::haar(rng));
        psum += o.probability;
        if (!o.valid) continue;
        sum += o.fidelity;
        sum2 += o.fidelity * o.fidelity;
        ++h.samples;
    }
    if (h.samples > 0) {
        h.mean = sum / h.samples;
        const double var = h.samples > 1 ? std::max(0.0, (sum2 - h.samples * h.mean * h.mean) / (h.samples - 1)) : 0.0;
        h.stderr_mean = std::sqrt(var / h.samples);
    }
    h.mean_probability = psum / n_samples;
    const auto ps = BlochState::pauli_eigenstates();
    for (std::size_t k = 0; k < ps.size(); ++k) h.pauli_fidelity[k] = r.evaluate(ps[k]).fidelity;
    return h;
}

template <class Rng>
std::vector<HaarAverage> haar_average_fidelity(const TeleportConfig &cfg, int n_samples, Rng &rng) {
    std::vector<HaarAverage> out;
    for (const auto &r : teleport_responses(cfg)) out.push_back(haar_average_fidelity(r, n_samples, rng));
    return out;
}

}  // namespace rainbow
