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

#include "rainbow/xy_model.hpp"

#include <random>
#include <set>

#include "gtest/gtest.h"

using namespace rainbow;

namespace {

// Kronecker-product oracle for a product of one-qubit operators placed on the
// given qubits (qubit q <-> bit q, so qubit 0 is the rightmost factor).
Eigen::MatrixXcd kron_ops(int n, const std::vector<std::pair<int, Eigen::Matrix2cd>> &ops) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int q = n - 1; q >= 0; --q) {
        Eigen::Matrix2cd f = Eigen::Matrix2cd::Identity();
        for (const auto &[qq, m] : ops)
            if (qq == q) f = m;
        Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j) next.block(i * 2, j * 2, 2, 2) = out(i, j) * f;
        out = next;
    }
    return out;
}

Eigen::MatrixXcd dense_oracle(const LatticeGeometry &g, double jx, double jy) {
    const int n = g.num_sites();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(1 << n, 1 << n);
    const auto x = pauli_matrix(PauliAxis::X), y = pauli_matrix(PauliAxis::Y);
    for (const auto &b : bonds(g)) {
        int a = site_index(b.a, g), c = site_index(b.b, g);
        h += jx * kron_ops(n, {{a, x}, {c, x}}) + jy * kron_ops(n, {{a, y}, {c, y}});
    }
    return h;
}

const std::vector<std::pair<int, int>> kEigShapes{{4, 2}, {6, 2}, {10, 2}, {4, 3}, {6, 3}};

}  // namespace

TEST(xy_model, two_site_matvec) {
    LatticeGeometry g(2, 1);
    XYHamiltonian xx(g, 1.0, 0.0);
    auto out = xx.apply(StateVector(2));
    EXPECT_NEAR(std::abs(out[3] - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(out.amplitudes().norm(), 1.0, 1e-15);

    XYHamiltonian h(g, 1.0, 1.2);
    const Eigen::MatrixXcd oracle = dense_oracle(g, 1.0, 1.2);
    // |01> = site (1,1) in 0, site (2,1) in 1 -> register index 2.
    auto r = h.apply(StateVector::basis(2, 2));
    EXPECT_NEAR(std::abs(r[1] - 2.2), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(oracle(1, 2) - 2.2), 0.0, 1e-15);
    EXPECT_LT((r.amplitudes() - oracle.col(2)).norm(), 1e-15);
}

TEST(xy_model, matvec_matches_kronecker_oracle) {
    std::mt19937_64 rng(21);
    for (auto [lx, ly] : std::vector<std::pair<int, int>>{{2, 2}, {4, 1}, {4, 2}, {2, 3}}) {
        LatticeGeometry g(lx, ly);
        XYHamiltonian h(g, 1.0, 1.2);
        Eigen::MatrixXcd oracle = dense_oracle(g, 1.0, 1.2);
        EXPECT_LT((h.dense(g.num_sites()).cast<cplx>() - oracle).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((oracle - oracle.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT(oracle.imag().cwiseAbs().maxCoeff(), 1e-14);  // real symmetric
        StateVector psi = StateVector::random(g.num_sites(), rng);
        EXPECT_LT((h.apply(psi.amplitudes()) - oracle * psi.amplitudes()).norm(), 1e-12);
        StateVector phi = StateVector::random(g.num_sites(), rng);
        cplx a = phi.amplitudes().dot(h.apply(psi.amplitudes()));
        cplx b = psi.amplitudes().dot(h.apply(phi.amplitudes()));
        EXPECT_LT(std::abs(a - std::conj(b)), 1e-10);
        EXPECT_LT(std::abs(psi.amplitudes().dot(h.apply(psi.amplitudes())).imag()), 1e-12);
    }
}

TEST(xy_model, spectator_qubits_are_untouched) {
    LatticeGeometry g(2, 2);
    XYHamiltonian h(g);
    std::mt19937_64 rng(2);
    StateVector sys = StateVector::random(4, rng);
    StateVector aux = StateVector::random(1, rng);
    StateVector joint = sys.tensor(aux);
    StateVector expect = h.apply(sys).tensor(aux);
    EXPECT_LT((h.apply(joint).amplitudes() - expect.amplitudes()).norm(), 1e-13);
}

TEST(xy_model, eig_state_structure) {
    LatticeGeometry g21(2, 1);
    EXPECT_LT((eig_state(g21, EigVariant::IZ).amplitudes() - bell_amplitudes(BellLabel::I)).norm(), 1e-15);

    // 4x1: pair (1,1)-(4,1) has i+j=2 -> I; pair (2,1)-(3,1) has i+j=3 -> Z.
    LatticeGeometry g41(4, 1);
    StateVector expect = product_state(4, {{0, 3, bell_amplitudes(BellLabel::I)}, {1, 2, bell_amplitudes(BellLabel::Z)}});
    EXPECT_LT((eig_state(g41, EigVariant::IZ).amplitudes() - expect.amplitudes()).norm(), 1e-15);

    LatticeGeometry g42(4, 2);
    EXPECT_NEAR(std::abs(eig_state(g42, EigVariant::IZ).inner(eig_state(g42, EigVariant::ZI))), 0.0, 1e-15);
    for (auto v : kAllVariants) EXPECT_NEAR(eig_state(g42, v).norm(), 1.0, 1e-14);
}

TEST(xy_model, eig_energy_formula) {
    EXPECT_NEAR(eig_energy(LatticeGeometry(10, 2), EigVariant::IZ, 1.0, 1.2), 0.0, 1e-15);
    EXPECT_NEAR(eig_energy(LatticeGeometry(6, 3), EigVariant::IZ, 1.0, 1.2), -0.2, 1e-14);
    EXPECT_NEAR(eig_energy(LatticeGeometry(6, 3), EigVariant::XY, 1.0, 1.2), 2.2, 1e-14);
}

TEST(xy_model, all_variants_are_eigenstates) {
    for (auto [lx, ly] : kEigShapes) {
        LatticeGeometry g(lx, ly);
        XYHamiltonian h(g, 1.0, 1.2);
        for (auto v : kAllVariants) {
            EXPECT_LT(verify_eigenstate(h, v), 1e-10) << g.label() << " " << to_string(v);
            // Rayleigh quotient agrees with the closed form.
            EXPECT_NEAR(h.expectation(eig_state(g, v)), eig_energy(g, v, 1.0, 1.2), 1e-10);
        }
        if (ly % 2 == 0) {
            for (auto v : kAllVariants) EXPECT_NEAR(eig_energy(g, v, 1.0, 1.2), 0.0, 1e-15);
        }
    }
    // Odd L_y: the four energies are distinct.
    LatticeGeometry g(6, 3);
    std::set<double> energies;
    for (auto v : kAllVariants) energies.insert(eig_energy(g, v, 1.0, 1.2));
    EXPECT_EQ(energies.size(), 4u);
}

TEST(xy_model, mirror_bond_terms_cancel_on_eigenstate) {
    LatticeGeometry g(4, 2);
    const int n = g.num_sites();
    StateVector eig = eig_state(g, EigVariant::IZ);
    for (auto axis : {PauliAxis::X, PauliAxis::Y}) {
        const auto p = pauli_matrix(axis);
        for (int i = 1; i <= 2; ++i) {
            // vertical bond and its mirror image
            Site a{i, 1}, b{i, 2};
            Site ma = mirror_partner(a, g), mb = mirror_partner(b, g);
            Eigen::MatrixXcd op = kron_ops(n, {{site_index(a, g), p}, {site_index(b, g), p}}) +
                                  kron_ops(n, {{site_index(ma, g), p}, {site_index(mb, g), p}});
            EXPECT_LT((op * eig.amplitudes()).norm(), 1e-14);
        }
        // non-central horizontal bond (1,j)-(2,j) and its image (3,j)-(4,j)
        for (int j = 1; j <= 2; ++j) {
            Eigen::MatrixXcd op = kron_ops(n, {{site_index({1, j}, g), p}, {site_index({2, j}, g), p}}) +
                                  kron_ops(n, {{site_index({3, j}, g), p}, {site_index({4, j}, g), p}});
            EXPECT_LT((op * eig.amplitudes()).norm(), 1e-14);
        }
    }
}

TEST(xy_model, evolve_zero_time_is_identity) {
    LatticeGeometry g(4, 2);
    XYHamiltonian h(g);
    std::mt19937_64 rng(1);
    StateVector psi = StateVector::random(8, rng);
    StateVector out = psi;
    evolve(h, out, 0.0);
    EXPECT_EQ((out.amplitudes() - psi.amplitudes()).norm(), 0.0);
    EXPECT_THROW(evolve(h, out, -1.0), std::invalid_argument);
}

TEST(xy_model, krylov_matches_dense_diagonalization) {
    std::mt19937_64 rng(33);
    for (auto [lx, ly] : std::vector<std::pair<int, int>>{{4, 2}, {2, 5}}) {
        LatticeGeometry g(lx, ly);
        XYHamiltonian h(g, 1.0, 1.2);
        StateVector psi = StateVector::random(g.num_sites(), rng);
        for (double t : {0.3, 2.0, 7.5}) {
            StateVector dense = psi, krylov = psi;
            evolve_dense(h, dense, t);
            EvolveOptions opt;
            opt.tol = 1e-10;
            evolve_krylov(h, krylov, t, opt);
            EXPECT_LT((dense.amplitudes() - krylov.amplitudes()).norm(), 1e-9) << g.label() << " t=" << t;
            EXPECT_LT(std::abs(krylov.norm() - 1.0), 1e-9);
        }
    }
}

TEST(xy_model, dense_spectrum_propagation_matches_dense_evolution) {
    LatticeGeometry g(4, 2);
    XYHamiltonian h(g, 1.0, 1.2);
    DenseSpectrum spec(h);
    std::mt19937_64 rng(5);
    StateVector psi = StateVector::random(8, rng);
    StateVector a = psi, b = psi;
    spec.evolve(a, 1.7);
    evolve_dense(h, b, 1.7);
    EXPECT_LT((a.amplitudes() - b.amplitudes()).norm(), 1e-12);
}

TEST(xy_model, eigenstate_is_stationary) {
    LatticeGeometry g(6, 2);
    XYHamiltonian h(g, 1.0, 1.2);
    StateVector eig = eig_state(g, EigVariant::IZ);
    StateVector psi = eig;
    evolve(h, psi, 5.0);
    EXPECT_NEAR(std::norm(eig.inner(psi)), 1.0, 1e-9);
}

TEST(xy_model, evolution_conserves_norm_and_energy) {
    LatticeGeometry g(4, 3);
    XYHamiltonian h(g, 1.0, 1.2);
    std::mt19937_64 rng(12);
    StateVector psi = StateVector::random(12, rng);
    const double e0 = h.expectation(psi);
    double elapsed = 0.0;
    for (int k = 0; k < 4; ++k) {
        evolve(h, psi, 1.0);
        elapsed += 1.0;
        EXPECT_LT(std::abs(psi.norm() - 1.0), 1e-9);
        EXPECT_LT(std::abs(h.expectation(psi) - e0), 1e-8 * h.norm_bound() * elapsed);
    }
}

TEST(xy_model, bessel_sequence_matches_std) {
    for (double z : {0.5, 3.0, 40.0, 180.0}) {
        const auto j = bessel_j_sequence(z, 1e-14);
        EXPECT_GT(j.size(), static_cast<std::size_t>(z));
        for (std::size_t k = 0; k < j.size(); ++k)
            EXPECT_NEAR(j[k], std::cyl_bessel_j(static_cast<double>(k), z), 1e-12) << "z=" << z << " k=" << k;
    }
    EXPECT_EQ(bessel_j_sequence(0.0, 1e-12).size(), 1u);
    EXPECT_THROW(bessel_j_sequence(-1.0, 1e-12), std::invalid_argument);
}

TEST(xy_model, chebyshev_matches_dense_and_krylov) {
    std::mt19937_64 rng(8);
    for (auto [lx, ly] : std::vector<std::pair<int, int>>{{4, 2}, {2, 5}}) {
        LatticeGeometry g(lx, ly);
        XYHamiltonian h(g, 1.0, 1.2);
        EXPECT_LE(h.spectral_radius(), h.norm_bound());
        StateVector psi = StateVector::random(g.num_sites(), rng);
        for (double t : {0.3, 2.0, 7.5, 15.0}) {
            StateVector dense = psi, cheb = psi, krylov = psi;
            evolve_dense(h, dense, t);
            EvolveOptions opt;
            opt.tol = 1e-10;
            evolve_chebyshev(h, cheb, t, opt);
            evolve_krylov(h, krylov, t, opt);
            EXPECT_LT((dense.amplitudes() - cheb.amplitudes()).norm(), 1e-9) << g.label() << " t=" << t;
            EXPECT_LT((cheb.amplitudes() - krylov.amplitudes()).norm(), 1e-9) << g.label() << " t=" << t;
        }
    }
}

TEST(xy_model, spectral_radius_bounds_the_spectrum) {
    LatticeGeometry g(4, 2);
    XYHamiltonian h(g, 1.0, 1.2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense(g.num_sites()));
    const double top = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(es.eigenvalues().size() - 1)));
    EXPECT_GE(h.spectral_radius(), top);
    EXPECT_LT(h.spectral_radius(), 1.1 * top);
}
