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

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rainbow/lattice.hpp"

namespace rainbow {

using cplx = std::complex<double>;
using Index = std::uint64_t;

/// Raised when an iterative numerical routine fails to meet its tolerance.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Pure state of n qubits. Qubit q is bit q of the amplitude index.
class StateVector {
  public:
    StateVector() = default;

    /// |0...0> on n qubits.
    explicit StateVector(int n_qubits) : n_(check_size(n_qubits)), amps_(Eigen::VectorXcd::Zero(Index{1} << n_)) {
        amps_(0) = 1.0;
    }

    StateVector(int n_qubits, Eigen::VectorXcd amplitudes) : n_(check_size(n_qubits)), amps_(std::move(amplitudes)) {
        if (static_cast<Index>(amps_.size()) != (Index{1} << n_)) {
            throw std::invalid_argument("amplitude count " + std::to_string(amps_.size()) + " does not match " +
                                        std::to_string(n_) + " qubits");
        }
    }

    static StateVector basis(int n_qubits, Index index) {
        StateVector s(n_qubits);
        if (index >= s.dim()) throw std::out_of_range("basis index out of range");
        s.amps_(0) = 0.0;
        s.amps_(static_cast<Eigen::Index>(index)) = 1.0;
        return s;
    }

    /// Haar-random state drawn from complex Gaussian amplitudes.
    template <class Rng>
    static StateVector random(int n_qubits, Rng &rng) {
        std::normal_distribution<double> normal;
        Eigen::VectorXcd v(Eigen::Index{1} << n_qubits);
        for (auto &a : v) a = cplx(normal(rng), normal(rng));
        v.normalize();
        return StateVector(n_qubits, std::move(v));
    }

    int num_qubits() const { return n_; }
    Index dim() const { return static_cast<Index>(amps_.size()); }

    Eigen::VectorXcd &amplitudes() { return amps_; }
    const Eigen::VectorXcd &amplitudes() const { return amps_; }

    cplx operator[](Index k) const { return amps_(static_cast<Eigen::Index>(k)); }
    cplx &operator[](Index k) { return amps_(static_cast<Eigen::Index>(k)); }

    double norm() const { return amps_.norm(); }

    /// Rescales to unit norm and returns the previous squared norm.
    double normalize() {
        double n2 = amps_.squaredNorm();
        if (n2 > 0.0) amps_ /= std::sqrt(n2);
        return n2;
    }

    /// <this|other>
    cplx inner(const StateVector &other) const {
        if (other.n_ != n_) throw std::invalid_argument("inner product of states with different qubit counts");
        return amps_.dot(other.amps_);
    }

    /// this (x) high, with `high` occupying the qubits above this state's.
    StateVector tensor(const StateVector &high) const {
        Eigen::VectorXcd out(amps_.size() * high.amps_.size());
        for (Eigen::Index h = 0; h < high.amps_.size(); ++h) {
            out.segment(h * amps_.size(), amps_.size()) = high.amps_(h) * amps_;
        }
        return StateVector(n_ + high.n_, std::move(out));
    }

  private:
    static int check_size(int n) {
        if (n < 0 || n > 30) throw std::invalid_argument("unsupported qubit count " + std::to_string(n));
        return n;
    }

    int n_ = 0;
    Eigen::VectorXcd amps_;
};

/// Hermitian, unit-trace operator on n qubits.
class DensityMatrix {
  public:
    DensityMatrix() = default;

    DensityMatrix(int n_qubits, Eigen::MatrixXcd m) : n_(n_qubits), m_(std::move(m)) {
        const Eigen::Index d = Eigen::Index{1} << n_;
        if (m_.rows() != d || m_.cols() != d) {
            throw std::invalid_argument("density matrix shape does not match " + std::to_string(n_) + " qubits");
        }
    }

    static DensityMatrix pure(const StateVector &psi) {
        return DensityMatrix(psi.num_qubits(), psi.amplitudes() * psi.amplitudes().adjoint());
    }

    static DensityMatrix maximally_mixed(int n_qubits) {
        const Eigen::Index d = Eigen::Index{1} << n_qubits;
        return DensityMatrix(n_qubits, Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d));
    }

    int num_qubits() const { return n_; }
    Eigen::Index dim() const { return m_.rows(); }
    const Eigen::MatrixXcd &matrix() const { return m_; }
    Eigen::MatrixXcd &matrix() { return m_; }

    cplx trace() const { return m_.trace(); }

    double hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }

    double min_eigenvalue() const {
        Eigen::MatrixXcd h = 0.5 * (m_ + m_.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }

    double purity() const { return (m_ * m_).trace().real(); }

  private:
    int n_ = 0;
    Eigen::MatrixXcd m_;
};

enum class PauliAxis { I, X, Y, Z };

inline Eigen::Matrix2cd pauli_matrix(PauliAxis a) {
    Eigen::Matrix2cd m;
    const cplx i(0.0, 1.0);
    switch (a) {
        case PauliAxis::I:
            m << 1, 0, 0, 1;
            break;
        case PauliAxis::X:
            m << 0, 1, 1, 0;
            break;
        case PauliAxis::Y:
            m << 0, -i, i, 0;
            break;
        case PauliAxis::Z:
            m << 1, 0, 0, -1;
            break;
    }
    return m;
}

/// Single-qubit pure state cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.
struct BlochState {
    double theta = 0.0;
    double phi = 0.0;

    Eigen::Vector2cd amplitudes() const {
        return {cplx(std::cos(theta / 2.0), 0.0), std::polar(std::sin(theta / 2.0), phi)};
    }

    StateVector ket() const { return StateVector(1, amplitudes()); }

    /// Uniform on the sphere, i.e. Haar-random on a single qubit.
    template <class Rng>
    static BlochState haar(Rng &rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        return {std::acos(1.0 - 2.0 * u(rng)), 2.0 * std::numbers::pi * u(rng)};
    }

    /// +-Z, +-X, +-Y eigenstates.
    static std::array<BlochState, 6> pauli_eigenstates() {
        constexpr double pi = std::numbers::pi;
        return {{{0.0, 0.0}, {pi, 0.0}, {pi / 2, 0.0}, {pi / 2, pi}, {pi / 2, pi / 2}, {pi / 2, 3 * pi / 2}}};
    }
};

namespace detail {

inline void require_qubit(const StateVector &psi, int q) {
    if (q < 0 || q >= psi.num_qubits()) {
        throw std::out_of_range("qubit " + std::to_string(q) + " out of range for " +
                                std::to_string(psi.num_qubits()) + "-qubit state");
    }
}

inline void require_pair(const StateVector &psi, int q1, int q2) {
    require_qubit(psi, q1);
    require_qubit(psi, q2);
    if (q1 == q2) throw std::invalid_argument("two-qubit operation needs distinct qubits");
}

/// Calls fn(base) for every index with bits q1 and q2 cleared.
template <class Fn>
void for_each_pair_base(Index dim, int q1, int q2, Fn &&fn) {
    const int lo = std::min(q1, q2);
    const int hi = std::max(q1, q2);
    const Index quarter = dim >> 2;
    const Index lo_mask = (Index{1} << lo) - 1;
    const Index mid_mask = ((Index{1} << (hi - 1)) - 1) & ~lo_mask;
    for (Index k = 0; k < quarter; ++k) {
        Index base = (k & lo_mask) | ((k & mid_mask) << 1) | ((k & ~(lo_mask | mid_mask)) << 2);
        fn(base);
    }
}

/// Local two-qubit index convention: 2*bit(q1) + bit(q2), i.e. q1 is the left
/// factor of the ket |q1 q2>.
inline std::array<Index, 4> pair_offsets(int q1, int q2) {
    const Index b1 = Index{1} << q1;
    const Index b2 = Index{1} << q2;
    return {0, b2, b1, b1 | b2};
}

}  // namespace detail

inline void apply_single_qubit(StateVector &psi, int q, const Eigen::Matrix2cd &u) {
    detail::require_qubit(psi, q);
    const Index bit = Index{1} << q;
    auto &a = psi.amplitudes();
    for (Index base = 0; base < psi.dim(); ++base) {
        if (base & bit) continue;
        const auto i0 = static_cast<Eigen::Index>(base);
        const auto i1 = static_cast<Eigen::Index>(base | bit);
        const cplx x0 = a(i0), x1 = a(i1);
        a(i0) = u(0, 0) * x0 + u(0, 1) * x1;
        a(i1) = u(1, 0) * x0 + u(1, 1) * x1;
    }
}

inline void apply_pauli(StateVector &psi, int q, PauliAxis axis) {
    detail::require_qubit(psi, q);
    if (axis == PauliAxis::I) return;
    const Index bit = Index{1} << q;
    auto &a = psi.amplitudes();
    const cplx i(0.0, 1.0);
    for (Index base = 0; base < psi.dim(); ++base) {
        if (base & bit) continue;
        const auto i0 = static_cast<Eigen::Index>(base);
        const auto i1 = static_cast<Eigen::Index>(base | bit);
        switch (axis) {
            case PauliAxis::X:
                std::swap(a(i0), a(i1));
                break;
            case PauliAxis::Y: {
                const cplx x0 = a(i0);
                a(i0) = -i * a(i1);
                a(i1) = i * x0;
                break;
            }
            case PauliAxis::Z:
                a(i1) = -a(i1);
                break;
            case PauliAxis::I:
                break;
        }
    }
}

inline bool is_unitary(const Eigen::MatrixXcd &u, double tol = 1e-12) {
    if (u.rows() != u.cols()) return false;
    return ((u.adjoint() * u) - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

/// Applies a 4x4 unitary in the local basis |q1 q2> (see detail::pair_offsets).
inline void apply_two_qubit(StateVector &psi, int q1, int q2, const Eigen::Matrix4cd &u) {
    detail::require_pair(psi, q1, q2);
    if (!is_unitary(u)) throw std::invalid_argument("two-qubit gate is not unitary to 1e-12");
    const auto off = detail::pair_offsets(q1, q2);
    auto &a = psi.amplitudes();
    detail::for_each_pair_base(psi.dim(), q1, q2, [&](Index base) {
        Eigen::Vector4cd x;
        for (int k = 0; k < 4; ++k) x(k) = a(static_cast<Eigen::Index>(base + off[k]));
        Eigen::Vector4cd y = u * x;
        for (int k = 0; k < 4; ++k) a(static_cast<Eigen::Index>(base + off[k])) = y(k);
    });
}

/// Bell state amplitudes in the local basis (|00>, |01>, |10>, |11>).
/// |X> = (X (x) 1)|I>, |Y> = (Y (x) 1)|I>.
inline Eigen::Vector4cd bell_amplitudes(BellLabel label) {
    const double r = std::numbers::sqrt2 / 2.0;
    const cplx i(0.0, 1.0);
    switch (label) {
        case BellLabel::I:
            return {r, 0, 0, r};
        case BellLabel::Z:
            return {r, 0, 0, -r};
        case BellLabel::X:
            return {0, r, r, 0};
        case BellLabel::Y:
            return {0, -i * r, i * r, 0};
    }
    throw std::logic_error("unknown Bell label");
}

inline StateVector bell_state(BellLabel label) { return StateVector(2, bell_amplitudes(label)); }

/// Unitary sending |s> (local basis index s) to |I>, with |I> on (q1, q2).
/// Used to re-entangle a measured pair.
inline Eigen::Matrix4cd rotation_to_bell(int outcome) {
    // Column `outcome` is |I>; the remaining columns complete an orthonormal basis.
    std::array<BellLabel, 4> order{BellLabel::I, BellLabel::Z, BellLabel::X, BellLabel::Y};
    Eigen::Matrix4cd u;
    int col_label = 1;
    for (int c = 0; c < 4; ++c) {
        u.col(c) = bell_amplitudes(c == outcome ? BellLabel::I : order[static_cast<std::size_t>(col_label++)]);
    }
    return u;
}

/// Applies |L><L| on (q1, q2) without renormalizing; returns the squared norm
/// of the projected state.
inline double apply_bell_projector(StateVector &psi, int q1, int q2, BellLabel label) {
    detail::require_pair(psi, q1, q2);
    const Eigen::Vector4cd bell = bell_amplitudes(label);
    const auto off = detail::pair_offsets(q1, q2);
    auto &a = psi.amplitudes();
    double norm2 = 0.0;
    detail::for_each_pair_base(psi.dim(), q1, q2, [&](Index base) {
        cplx c = 0.0;
        for (int k = 0; k < 4; ++k) c += std::conj(bell(k)) * a(static_cast<Eigen::Index>(base + off[k]));
        for (int k = 0; k < 4; ++k) a(static_cast<Eigen::Index>(base + off[k])) = bell(k) * c;
        norm2 += std::norm(c);
    });
    return norm2;
}

struct ProjectionResult {
    StateVector state;
    double probability = 0.0;
    /// False when the branch has zero weight; `state` must not be used then.
    bool valid = false;
};

inline ProjectionResult bell_project(const StateVector &psi, int q1, int q2, BellLabel label) {
    ProjectionResult r{psi, 0.0, false};
    r.probability = apply_bell_projector(r.state, q1, q2, label) / psi.amplitudes().squaredNorm();
    if (r.probability > 1e-300) {
        r.state.normalize();
        r.valid = true;
    } else {
        r.probability = 0.0;
    }
    return r;
}

/// Born probabilities of the four computational outcomes of (q1, q2), indexed
/// by 2*bit(q1) + bit(q2).
inline std::array<double, 4> z_pair_probabilities(const StateVector &psi, int q1, int q2) {
    detail::require_pair(psi, q1, q2);
    const auto off = detail::pair_offsets(q1, q2);
    std::array<double, 4> p{};
    const auto &a = psi.amplitudes();
    detail::for_each_pair_base(psi.dim(), q1, q2, [&](Index base) {
        for (int k = 0; k < 4; ++k) p[static_cast<std::size_t>(k)] += std::norm(a(static_cast<Eigen::Index>(base + off[k])));
    });
    const double total = p[0] + p[1] + p[2] + p[3];
    for (auto &x : p) x /= total;
    return p;
}

/// Keeps only the amplitudes consistent with `outcome` on (q1, q2) and
/// renormalizes. Returns the Born probability of that outcome.
inline double collapse_z_pair(StateVector &psi, int q1, int q2, int outcome) {
    detail::require_pair(psi, q1, q2);
    const auto off = detail::pair_offsets(q1, q2);
    auto &a = psi.amplitudes();
    const double total = a.squaredNorm();
    double kept = 0.0;
    detail::for_each_pair_base(psi.dim(), q1, q2, [&](Index base) {
        for (int k = 0; k < 4; ++k) {
            auto idx = static_cast<Eigen::Index>(base + off[k]);
            if (k == outcome) {
                kept += std::norm(a(idx));
            } else {
                a(idx) = 0.0;
            }
        }
    });
    if (kept > 0.0) a /= std::sqrt(kept);
    return kept / total;
}

struct PairMeasurement {
    int outcome = 0;  // 2*bit(q1) + bit(q2)
    StateVector state;
    double probability = 0.0;
};

template <class Rng>
int sample_z_pair(const StateVector &psi, int q1, int q2, Rng &rng) {
    const auto p = z_pair_probabilities(psi, q1, q2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng);
    int outcome = 3;
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        acc += p[static_cast<std::size_t>(k)];
        if (r < acc) {
            outcome = k;
            break;
        }
    }
    while (p[static_cast<std::size_t>(outcome)] == 0.0) --outcome;  // guard against r rounding past the last bin
    return outcome;
}

/// Projective Z-basis measurement of (q1, q2) with Born sampling.
template <class Rng>
PairMeasurement measure_z_pair(const StateVector &psi, int q1, int q2, Rng &rng) {
    PairMeasurement m{sample_z_pair(psi, q1, q2, rng), psi, 0.0};
    m.probability = collapse_z_pair(m.state, q1, q2, m.outcome);
    return m;
}

/// Largest dense reduction supported by reduced_density.
inline constexpr int kMaxKeptQubits = 12;

/// Partial trace onto `keep`; keep[k] becomes bit k of the reduced index.
inline DensityMatrix reduced_density(const StateVector &psi, std::span<const int> keep) {
    const int n = psi.num_qubits();
    const int nk = static_cast<int>(keep.size());
    if (nk == 0) throw std::invalid_argument("reduced_density needs at least one kept qubit");
    if (nk > kMaxKeptQubits) throw std::invalid_argument("reduced_density supports at most 12 kept qubits");
    Index keep_mask = 0;
    for (int q : keep) {
        detail::require_qubit(psi, q);
        if (keep_mask & (Index{1} << q)) throw std::invalid_argument("duplicate qubit in keep set");
        keep_mask |= Index{1} << q;
    }
    std::vector<int> rest;
    for (int q = 0; q < n; ++q) {
        if (!(keep_mask & (Index{1} << q))) rest.push_back(q);
    }
    const Eigen::Index dk = Eigen::Index{1} << nk;
    const Eigen::Index dr = Eigen::Index{1} << (n - nk);
    // Scatter offsets for the kept and traced-out parts.
    std::vector<Index> kept_off(static_cast<std::size_t>(dk), 0), rest_off(static_cast<std::size_t>(dr), 0);
    for (Eigen::Index a = 0; a < dk; ++a) {
        for (int k = 0; k < nk; ++k) {
            if (a & (Eigen::Index{1} << k)) kept_off[static_cast<std::size_t>(a)] |= Index{1} << keep[static_cast<std::size_t>(k)];
        }
    }
    for (Eigen::Index r = 0; r < dr; ++r) {
        for (std::size_t k = 0; k < rest.size(); ++k) {
            if (r & (Eigen::Index{1} << k)) rest_off[static_cast<std::size_t>(r)] |= Index{1} << rest[k];
        }
    }
    Eigen::MatrixXcd m(dk, dr);
    const auto &amp = psi.amplitudes();
    for (Eigen::Index r = 0; r < dr; ++r) {
        for (Eigen::Index a = 0; a < dk; ++a) {
            m(a, r) = amp(static_cast<Eigen::Index>(kept_off[static_cast<std::size_t>(a)] | rest_off[static_cast<std::size_t>(r)]));
        }
    }
    Eigen::MatrixXcd rho = m * m.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix(nk, std::move(rho));
}

inline DensityMatrix reduced_density(const StateVector &psi, std::initializer_list<int> keep) {
    std::vector<int> k(keep);
    return reduced_density(psi, std::span<const int>(k));
}

/// Partial trace of a density matrix onto `keep` (same bit convention).
inline DensityMatrix partial_trace(const DensityMatrix &rho, std::span<const int> keep) {
    const int n = rho.num_qubits();
    const int nk = static_cast<int>(keep.size());
    if (nk == 0 || nk > kMaxKeptQubits) throw std::invalid_argument("invalid keep set for partial_trace");
    Index keep_mask = 0;
    for (int q : keep) {
        if (q < 0 || q >= n) throw std::out_of_range("qubit out of range in partial_trace");
        if (keep_mask & (Index{1} << q)) throw std::invalid_argument("duplicate qubit in keep set");
        keep_mask |= Index{1} << q;
    }
    const Eigen::Index dk = Eigen::Index{1} << nk;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
    auto kept_index = [&](Index x) {
        Eigen::Index a = 0;
        for (int k = 0; k < nk; ++k) {
            if (x & (Index{1} << keep[static_cast<std::size_t>(k)])) a |= Eigen::Index{1} << k;
        }
        return a;
    };
    const Index d = Index{1} << n;
    std::vector<Eigen::Index> kidx(d);
    for (Index x = 0; x < d; ++x) kidx[x] = kept_index(x);
    const auto &m = rho.matrix();
    for (Index x = 0; x < d; ++x) {
        const Index rx = x & ~keep_mask;
        for (Index y = 0; y < d; ++y) {
            if ((y & ~keep_mask) != rx) continue;
            out(kidx[x], kidx[y]) += m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
        }
    }
    return DensityMatrix(nk, std::move(out));
}

inline DensityMatrix partial_trace(const DensityMatrix &rho, std::initializer_list<int> keep) {
    std::vector<int> k(keep);
    return partial_trace(rho, std::span<const int>(k));
}

/// Second Renyi entropy -ln tr(rho^2), in nats.
inline double renyi2(const DensityMatrix &rho) {
    const auto &m = rho.matrix();
    // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
    double p = m.cwiseAbs2().sum();
    return std::max(0.0, -std::log(p));
}

/// Von Neumann entropy in the given log base (2 by default).
inline double von_neumann_entropy(const DensityMatrix &rho, double base = 2.0) {
    Eigen::MatrixXcd h = 0.5 * (rho.matrix() + rho.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (double lam : es.eigenvalues()) {
        if (lam > 1e-15) s -= lam * std::log(lam);
    }
    return std::max(0.0, s / std::log(base));
}

/// I(q1:q2) = S(q1) + S(q2) - S(q1 q2) in bits, from a two-qubit density
/// matrix (q1 = bit 0, q2 = bit 1).
inline double mutual_information(const DensityMatrix &rho12) {
    if (rho12.num_qubits() != 2) throw std::invalid_argument("mutual_information expects a two-qubit density matrix");
    const auto r1 = partial_trace(rho12, {0});
    const auto r2 = partial_trace(rho12, {1});
    return von_neumann_entropy(r1) + von_neumann_entropy(r2) - von_neumann_entropy(rho12);
}

inline double mutual_information(const StateVector &psi, int q1, int q2) {
    detail::require_pair(psi, q1, q2);
    return mutual_information(reduced_density(psi, {q1, q2}));
}

inline double mutual_information(const DensityMatrix &rho, int q1, int q2) {
    if (q1 == q2) throw std::invalid_argument("mutual_information needs distinct qubits");
    return mutual_information(partial_trace(rho, {q1, q2}));
}

/// <t|rho|t>
inline double fidelity_pure(const DensityMatrix &rho, const StateVector &target) {
    if (rho.dim() != static_cast<Eigen::Index>(target.dim())) {
        throw std::invalid_argument("fidelity_pure: dimension mismatch");
    }
    const auto &t = target.amplitudes();
    return t.dot(rho.matrix() * t).real();
}

/// Half the trace norm of the difference of two Hermitian matrices.
inline double trace_distance(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
    Eigen::MatrixXcd d = a - b;
    d = 0.5 * (d + d.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace rainbow
