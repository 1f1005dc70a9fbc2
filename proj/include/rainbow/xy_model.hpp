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

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rainbow/lattice.hpp"
#include "rainbow/quantum_core.hpp"

namespace rainbow {

/// Which Bell labels the rainbow eigenstate places on even / odd checkerboard
/// pairs (parity of i+j of the pair's left site).
enum class EigVariant { IZ, ZI, XY, YX };

inline constexpr std::array<EigVariant, 4> kAllVariants{EigVariant::IZ, EigVariant::ZI, EigVariant::XY,
                                                         EigVariant::YX};

inline std::string to_string(EigVariant v) {
    switch (v) {
        case EigVariant::IZ:
            return "IZ";
        case EigVariant::ZI:
            return "ZI";
        case EigVariant::XY:
            return "XY";
        case EigVariant::YX:
            return "YX";
    }
    return "?";
}

inline EigVariant parse_variant(const std::string &s) {
    for (auto v : kAllVariants) {
        if (to_string(v) == s) return v;
    }
    throw std::invalid_argument("unknown eigenstate variant '" + s + "' (expected IZ, ZI, XY or YX)");
}

/// Bell label of the mirror pair containing `s` in variant `v`.
inline BellLabel variant_label(EigVariant v, const Site &s, const LatticeGeometry &g) {
    const Site left = mirror_pair_of(s, g).left;
    const bool even = (left.i + left.j) % 2 == 0;
    switch (v) {
        case EigVariant::IZ:
            return even ? BellLabel::I : BellLabel::Z;
        case EigVariant::ZI:
            return even ? BellLabel::Z : BellLabel::I;
        case EigVariant::XY:
            return even ? BellLabel::X : BellLabel::Y;
        case EigVariant::YX:
            return even ? BellLabel::Y : BellLabel::X;
    }
    throw std::logic_error("unknown variant");
}

/// H = sum_<rr'> Jx X_r X_r' + Jy Y_r Y_r' with open boundaries. Acts on the
/// lowest N = L_x L_y qubits of a register; any higher qubits are spectators.
class XYHamiltonian {
  public:
    explicit XYHamiltonian(LatticeGeometry g, double jx = 1.0, double jy = 1.2) : geometry_(g), jx_(jx), jy_(jy) {
        for (const auto &b : bonds(g)) {
            const int lo = std::min(site_index(b.a, g), site_index(b.b, g));
            const int hi = std::max(site_index(b.a, g), site_index(b.b, g));
            masks_.push_back((Index{1} << lo) | (Index{1} << hi));
            bits_.push_back({lo, hi});
        }
    }

    const LatticeGeometry &geometry() const { return geometry_; }
    double jx() const { return jx_; }
    double jy() const { return jy_; }
    int num_sites() const { return geometry_.num_sites(); }
    std::size_t num_bonds() const { return masks_.size(); }

    /// Upper bound on the spectral radius.
    double norm_bound() const { return static_cast<double>(masks_.size()) * (std::abs(jx_) + std::abs(jy_)); }

    /// out = H in. Each bond flips both spins; the amplitude is Jx - Jy when
    /// the two spins are equal (00 <-> 11) and Jx + Jy otherwise (01 <-> 10).
    void apply(const Eigen::VectorXcd &in, Eigen::VectorXcd &out) const {
        out.resize(in.size());
        double *dst = reinterpret_cast<double *>(out.data());
        apply_chunks(in, [dst](Index x0, const double *acc, Index len) { std::copy_n(acc, 2 * len, dst + 2 * x0); });
    }

    /// Computes H in chunk by chunk and hands each finished chunk to
    /// sink(x0, values, len), values being len interleaved complex numbers for
    /// indices x0 .. x0 + len - 1. Lets callers fuse vector updates into the
    /// matvec.
    ///
    /// A bond whose lower bit is at least log2(kChunk) maps a chunk onto
    /// another whole chunk with one coefficient, which vectorizes; the few
    /// bonds touching the lowest bits are handled element by element.
    template <class Sink>
    void apply_chunks(const Eigen::VectorXcd &in, Sink &&sink) const {
        require_dim(in.size());
        const double coef[2] = {jx_ - jy_, jx_ + jy_};
        const Index dim = static_cast<Index>(in.size());
        const Index chunk = std::min<Index>(kChunk, dim);
        const int chunk_bits = std::countr_zero(chunk);
        const double *__restrict src = reinterpret_cast<const double *>(in.data());
        for (Index x0 = 0; x0 < dim; x0 += chunk) {
            double acc[2 * kChunk] = {};
            for (std::size_t b = 0; b < bits_.size(); ++b) {
                const auto [lo, hi] = bits_[b];
                const Index m = masks_[b];
                if (lo >= chunk_bits) {
                    const double c = coef[((x0 >> lo) ^ (x0 >> hi)) & 1];
                    const double *s = src + 2 * (x0 ^ m);
                    for (Index l = 0; l < 2 * kChunk; ++l) acc[l] += c * s[l];
                } else {
                    for (Index l = 0; l < chunk; ++l) {
                        const Index x = x0 + l;
                        const double c = coef[((x >> lo) ^ (x >> hi)) & 1];
                        const double *s = src + 2 * (x ^ m);
                        acc[2 * l] += c * s[0];
                        acc[2 * l + 1] += c * s[1];
                    }
                }
            }
            sink(x0, static_cast<const double *>(acc), chunk);
        }
    }

    Eigen::VectorXcd apply(const Eigen::VectorXcd &in) const {
        Eigen::VectorXcd out;
        apply(in, out);
        return out;
    }

    StateVector apply(const StateVector &psi) const {
        return StateVector(psi.num_qubits(), apply(psi.amplitudes()));
    }

    /// Estimate of max |E| over the spectrum on the N lattice qubits: extreme
    /// Lanczos Ritz values from a fixed random start, widened by 5%. Computed
    /// once and shared between copies.
    double spectral_radius() const {
        std::call_once(radius_->once, [this] { radius_->value = estimate_radius(); });
        return radius_->value;
    }

    double expectation(const StateVector &psi) const { return psi.amplitudes().dot(apply(psi.amplitudes())).real(); }

    /// Dense real-symmetric matrix on an n-qubit register (n >= N).
    Eigen::MatrixXd dense(int n_qubits) const {
        if (n_qubits < num_sites() || n_qubits > 14) throw std::invalid_argument("dense Hamiltonian size out of range");
        const Eigen::Index d = Eigen::Index{1} << n_qubits;
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index x = 0; x < d; ++x) {
            for (Index m : masks_) {
                const bool equal = std::popcount(static_cast<Index>(x) & m) != 1;
                h(static_cast<Eigen::Index>(static_cast<Index>(x) ^ m), x) += equal ? jx_ - jy_ : jx_ + jy_;
            }
        }
        return h;
    }

    /// Dense matrix restricted to basis states of fixed Z-parity; `states`
    /// receives the basis indices in order. H conserves total Z-parity.
    Eigen::MatrixXd dense_parity_block(int n_qubits, int parity, std::vector<Index> &states) const {
        if (n_qubits < num_sites() || n_qubits > 16) throw std::invalid_argument("dense Hamiltonian size out of range");
        const Index d = Index{1} << n_qubits;
        states.clear();
        std::vector<Eigen::Index> position(d, -1);
        for (Index x = 0; x < d; ++x) {
            if (std::popcount(x) % 2 == parity) {
                position[x] = static_cast<Eigen::Index>(states.size());
                states.push_back(x);
            }
        }
        const auto bd = static_cast<Eigen::Index>(states.size());
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(bd, bd);
        for (Eigen::Index c = 0; c < bd; ++c) {
            const Index x = states[static_cast<std::size_t>(c)];
            for (Index m : masks_) {
                const bool equal = std::popcount(x & m) != 1;
                h(position[x ^ m], c) += equal ? jx_ - jy_ : jx_ + jy_;
            }
        }
        return h;
    }

  private:
    void require_dim(Eigen::Index d) const {
        const Eigen::Index need = Eigen::Index{1} << num_sites();
        if (d < need || (d & (d - 1)) != 0) {
            throw std::invalid_argument("state dimension " + std::to_string(d) + " incompatible with " +
                                        std::to_string(num_sites()) + "-site Hamiltonian");
        }
    }

    double estimate_radius() const {
        const int n = num_sites();
        const Eigen::Index d = Eigen::Index{1} << n;
        const int steps = static_cast<int>(std::min<Eigen::Index>(100, d));
        std::mt19937_64 rng(0x5eed);
        Eigen::VectorXcd v = StateVector::random(n, rng).amplitudes(), prev = Eigen::VectorXcd::Zero(d), w;
        Eigen::VectorXd alpha(steps), beta(steps);
        int m = 0;
        for (; m < steps; ++m) {
            apply(v, w);
            alpha(m) = v.dot(w).real();
            w -= alpha(m) * v + (m > 0 ? beta(m - 1) : 0.0) * prev;
            beta(m) = w.norm();
            if (beta(m) < 1e-10) {
                ++m;
                break;
            }
            prev = std::move(v);
            v = w / beta(m);
        }
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (int k = 0; k < m; ++k) {
            tri(k, k) = alpha(k);
            if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta(k);
        }
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(tri, Eigen::EigenvaluesOnly).eigenvalues();
        const double theta = std::max(std::abs(ev(0)), std::abs(ev(m - 1)));
        return std::min(norm_bound(), 1.05 * theta + 0.05);
    }

    struct RadiusCache {
        std::once_flag once;
        double value = 0.0;
    };

    static constexpr Index kChunk = 8;

    LatticeGeometry geometry_;
    double jx_;
    double jy_;
    std::vector<Index> masks_;
    std::vector<std::pair<int, int>> bits_;
    std::shared_ptr<RadiusCache> radius_ = std::make_shared<RadiusCache>();
};

/// Product of Bell pairs over the given pairs (qubit indices) with the given
/// two-qubit states. Qubits not covered by any pair or single must not exist.
struct PairFactor {
    int q1;
    int q2;
    Eigen::Vector4cd amps;  // local basis |q1 q2>
};

struct SingleFactor {
    int q;
    Eigen::Vector2cd amps;
};

inline StateVector product_state(int n_qubits, const std::vector<PairFactor> &pairs,
                                 const std::vector<SingleFactor> &singles = {}) {
    Index covered = 0;
    auto cover = [&](int q) {
        if (q < 0 || q >= n_qubits) throw std::out_of_range("factor qubit out of range");
        if (covered & (Index{1} << q)) throw std::invalid_argument("qubit appears in two factors");
        covered |= Index{1} << q;
    };
    for (const auto &p : pairs) {
        cover(p.q1);
        cover(p.q2);
    }
    for (const auto &s : singles) cover(s.q);
    if (covered != (Index{1} << n_qubits) - 1) throw std::invalid_argument("product_state leaves qubits unspecified");
    const Index d = Index{1} << n_qubits;
    Eigen::VectorXcd v(static_cast<Eigen::Index>(d));
    for (Index x = 0; x < d; ++x) {
        cplx a = 1.0;
        for (const auto &p : pairs) {
            const int local = static_cast<int>(((x >> p.q1) & 1) << 1 | ((x >> p.q2) & 1));
            a *= p.amps(local);
            if (a == 0.0) break;
        }
        if (a != 0.0) {
            for (const auto &s : singles) a *= s.amps(static_cast<int>((x >> s.q) & 1));
        }
        v(static_cast<Eigen::Index>(x)) = a;
    }
    return StateVector(n_qubits, std::move(v));
}

/// Rainbow eigenstate: every mirror pair in its variant's Bell state, left
/// site as the first qubit of the pair.
inline StateVector eig_state(const LatticeGeometry &g, EigVariant v) {
    std::vector<PairFactor> pairs;
    for (const auto &mp : mirror_pairs(g)) {
        pairs.push_back({site_index(mp.left, g), site_index(mp.right, g), bell_amplitudes(variant_label(v, mp.left, g))});
    }
    return product_state(g.num_sites(), pairs);
}

/// Closed-form energy of the rainbow eigenstate. Only the central horizontal
/// bonds contribute; for even L_y their contributions cancel row by row.
inline double eig_energy(const LatticeGeometry &g, EigVariant v, double jx, double jy) {
    const double sign = ((g.lx() / 2) % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(g.ly() % 2);
    switch (v) {
        case EigVariant::IZ:
            return -(jx - jy) * sign;
        case EigVariant::ZI:
            return (jx - jy) * sign;
        case EigVariant::XY:
            return -(jx + jy) * sign;
        case EigVariant::YX:
            return (jx + jy) * sign;
    }
    throw std::logic_error("unknown variant");
}

/// ||H|EIG_v> - E_v|EIG_v>||.
inline double verify_eigenstate(const XYHamiltonian &h, EigVariant v) {
    const auto &g = h.geometry();
    const StateVector eig = eig_state(g, v);
    Eigen::VectorXcd r = h.apply(eig.amplitudes()) - eig_energy(g, v, h.jx(), h.jy()) * eig.amplitudes();
    return r.norm();
}

enum class Propagator { chebyshev, krylov };

struct EvolveOptions {
    /// Target 2-norm error of the whole propagation.
    double tol = 1e-9;
    int krylov_dim = 30;
    /// Registers up to this size are propagated by dense diagonalization.
    int dense_max_qubits = 8;
    /// Method for registers above dense_max_qubits.
    Propagator propagator = Propagator::chebyshev;
};

/// J_0(z) ... J_K(z) by Miller's backward recurrence, normalized with
/// J_0 + 2 sum J_2k = 1. K is the last order with |J_K| above `cutoff`.
inline std::vector<double> bessel_j_sequence(double z, double cutoff) {
    if (z < 0.0) throw std::invalid_argument("bessel_j_sequence: negative argument");
    if (z == 0.0) return {1.0};
    const int start = static_cast<int>(z + 20.0 * std::cbrt(z) + 40.0);
    std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
    j[static_cast<std::size_t>(start)] = 1e-300;
    for (int k = start; k >= 1; --k) {
        const auto u = static_cast<std::size_t>(k);
        j[u - 1] = 2.0 * k / z * j[u] - j[u + 1];
        if (std::abs(j[u - 1]) > 1e250) {
            for (std::size_t r = u - 1; r < j.size(); ++r) j[r] *= 1e-250;
        }
    }
    double norm = j[0];
    for (std::size_t k = 2; k < j.size(); k += 2) norm += 2.0 * j[k];
    for (double &x : j) x /= norm;
    std::size_t last = j.size() - 1;
    while (last > 0 && std::abs(j[last]) <= cutoff) --last;
    j.resize(last + 1);
    return j;
}

struct ChebyshevReport {
    int terms = 0;
    double radius = 0.0;
};

/// e^{-iHt} by Chebyshev expansion on [-R, R], R = h.spectral_radius():
/// sum_k (2 - delta_k0) (-i)^k J_k(Rt) T_k(H/R). Needs three register-sized
/// vectors regardless of t.
inline ChebyshevReport evolve_chebyshev(const XYHamiltonian &h, StateVector &psi, double t, const EvolveOptions &opt = {}) {
    ChebyshevReport report;
    if (t < 0.0) throw std::invalid_argument("evolve: negative time");
    if (t == 0.0) return report;
    const double r = h.spectral_radius();
    const double scale = psi.norm();
    const auto coeff = bessel_j_sequence(r * t, 1e-3 * opt.tol);
    report.radius = r;
    report.terms = static_cast<int>(coeff.size());

    static constexpr std::array<cplx, 4> kPhase{cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
    Eigen::VectorXcd prev = psi.amplitudes();
    Eigen::VectorXcd acc = coeff[0] * prev;
    if (coeff.size() > 1) {
        Eigen::VectorXcd cur;
        h.apply(prev, cur);
        cur /= r;
        acc += (2.0 * coeff[1]) * kPhase[1] * cur;
        double *pa = reinterpret_cast<double *>(acc.data());
        for (std::size_t k = 2; k < coeff.size(); ++k) {
            // T_k = 2 (H/R) T_{k-1} - T_{k-2}, written over T_{k-2}.
            const cplx c = 2.0 * coeff[k] * kPhase[k % 4];
            const double cr = c.real(), ci = c.imag(), two_over_r = 2.0 / r;
            double *pp = reinterpret_cast<double *>(prev.data());
            h.apply_chunks(cur, [=](Index x0, const double *hv, Index len) {
                double *p = pp + 2 * x0;
                double *a = pa + 2 * x0;
                for (Index l = 0; l < len; ++l) {
                    const double re = two_over_r * hv[2 * l] - p[2 * l];
                    const double im = two_over_r * hv[2 * l + 1] - p[2 * l + 1];
                    p[2 * l] = re;
                    p[2 * l + 1] = im;
                    a[2 * l] += cr * re - ci * im;
                    a[2 * l + 1] += cr * im + ci * re;
                }
            });
            prev.swap(cur);
        }
    }
    psi.amplitudes() = std::move(acc);
    const double drift = std::abs(psi.norm() - scale);
    if (!(drift <= std::max(1e-8, 10.0 * opt.tol) * std::max(1.0, scale))) {
        std::ostringstream msg;
        msg << "Chebyshev propagation lost unitarity: norm drift " << drift << " with radius " << r;
        throw NumericalError(msg.str());
    }
    return report;
}

/// e^{-iHt} through full diagonalization of the dense register Hamiltonian.
inline void evolve_dense(const XYHamiltonian &h, StateVector &psi, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense(psi.num_qubits()));
    const Eigen::MatrixXd &v = es.eigenvectors();
    Eigen::VectorXcd c = v.transpose() * psi.amplitudes();
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -es.eigenvalues()(k) * t);
    psi.amplitudes() = v * c;
}

struct KrylovReport {
    int substeps = 0;
    int matvecs = 0;
    double error_estimate = 0.0;
};

/// e^{-iHt} by Lanczos propagation with adaptive step splitting. The Krylov
/// basis is built once per substep; the step length is then the largest one
/// whose a-posteriori error estimate stays within tol * dt / t.
inline KrylovReport evolve_krylov(const XYHamiltonian &h, StateVector &psi, double t, const EvolveOptions &opt = {}) {
    KrylovReport report;
    if (t < 0.0) throw std::invalid_argument("evolve: negative time");
    if (t == 0.0) return report;
    const int m_max = std::max(2, opt.krylov_dim);
    const Eigen::Index d = static_cast<Eigen::Index>(psi.dim());
    std::vector<Eigen::VectorXcd> basis(static_cast<std::size_t>(m_max + 1));
    Eigen::VectorXcd w(d);
    double remaining = t;
    double dt_hint = t;
    while (remaining > 0.0) {
        const double beta0 = psi.norm();
        basis[0] = psi.amplitudes() / beta0;
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_max);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(m_max);
        int m = 0;
        bool breakdown = false;
        for (int j = 0; j < m_max; ++j) {
            h.apply(basis[static_cast<std::size_t>(j)], w);
            ++report.matvecs;
            // Full reorthogonalization (classical Gram-Schmidt, twice).
            for (int pass = 0; pass < 2; ++pass) {
                for (int k = 0; k <= j; ++k) {
                    const cplx c = basis[static_cast<std::size_t>(k)].dot(w);
                    if (pass == 0 && k == j) alpha(j) = c.real();
                    w -= c * basis[static_cast<std::size_t>(k)];
                }
            }
            m = j + 1;
            const double b = w.norm();
            beta(j) = b;
            if (b < 1e-12 * std::max(1.0, h.norm_bound())) {
                breakdown = true;
                break;
            }
            basis[static_cast<std::size_t>(j + 1)] = w / b;
        }
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (int k = 0; k < m; ++k) {
            tri(k, k) = alpha(k);
            if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta(k);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        const Eigen::MatrixXd &q = es.eigenvectors();
        const Eigen::VectorXd &ev = es.eigenvalues();
        auto coeffs = [&](double dt) {
            Eigen::VectorXcd c(m);
            for (int k = 0; k < m; ++k) c(k) = std::polar(q(0, k), -ev(k) * dt);
            return Eigen::VectorXcd(q * c);
        };
        // Estimate of the truncation error of the m-dimensional projection.
        auto error_of = [&](double dt) {
            if (breakdown) return 0.0;
            return beta0 * beta(m - 1) * std::abs(coeffs(dt)(m - 1));
        };
        double dt = std::min(remaining, dt_hint * 2.0);
        double err = error_of(dt);
        int halvings = 0;
        while (err > 0.5 * opt.tol * dt / t) {
            dt *= 0.5;
            err = error_of(dt);
            if (++halvings > 60 || dt < t * 1e-14) {
                std::ostringstream msg;
                msg << "Krylov propagation failed to converge: dt=" << dt << " error estimate=" << err
                    << " tol=" << opt.tol << " krylov_dim=" << m_max;
                throw NumericalError(msg.str());
            }
        }
        const Eigen::VectorXcd c = coeffs(dt);
        Eigen::VectorXcd next = Eigen::VectorXcd::Zero(d);
        for (int k = 0; k < m; ++k) next += (beta0 * c(k)) * basis[static_cast<std::size_t>(k)];
        psi.amplitudes() = std::move(next);
        remaining -= dt;
        if (remaining < t * 1e-15) remaining = 0.0;
        dt_hint = dt;
        report.error_estimate += err;
        ++report.substeps;
    }
    return report;
}

/// e^{-iHt}|psi>. Small registers go through dense diagonalization, larger
/// ones through a Chebyshev (default) or Krylov expansion. Qubits above the lattice are untouched.
inline void evolve(const XYHamiltonian &h, StateVector &psi, double t, const EvolveOptions &opt = {}) {
    if (t < 0.0) throw std::invalid_argument("evolve: negative time");
    if (t == 0.0) return;
    if (psi.num_qubits() <= opt.dense_max_qubits) {
        evolve_dense(h, psi, t);
    } else if (opt.propagator == Propagator::krylov) {
        evolve_krylov(h, psi, t, opt);
    } else {
        evolve_chebyshev(h, psi, t, opt);
    }
}

/// Cached parity-resolved eigendecomposition of H on its own N qubits, for
/// repeated exact propagation at many times.
class DenseSpectrum {
  public:
    explicit DenseSpectrum(const XYHamiltonian &h) : n_(h.num_sites()) {
        if (n_ > 14) throw std::invalid_argument("DenseSpectrum supports at most 14 sites");
        for (int p = 0; p < 2; ++p) {
            Eigen::MatrixXd block = h.dense_parity_block(n_, p, states_[static_cast<std::size_t>(p)]);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
            vectors_[static_cast<std::size_t>(p)] = es.eigenvectors();
            values_[static_cast<std::size_t>(p)] = es.eigenvalues();
        }
    }

    int num_qubits() const { return n_; }
    const std::vector<Index> &states(int parity) const { return states_[static_cast<std::size_t>(parity)]; }
    const Eigen::MatrixXd &vectors(int parity) const { return vectors_[static_cast<std::size_t>(parity)]; }
    const Eigen::VectorXd &values(int parity) const { return values_[static_cast<std::size_t>(parity)]; }

    /// e^{-iHt} applied to the columns of `in`, all of which live in the
    /// given parity block (coordinates in that block's basis order).
    Eigen::MatrixXcd propagate_block(int parity, const Eigen::MatrixXcd &in, double t) const {
        const auto &v = vectors(parity);
        const auto &e = values(parity);
        Eigen::MatrixXcd c = v.transpose() * in;
        for (Eigen::Index k = 0; k < c.rows(); ++k) c.row(k) *= std::polar(1.0, -e(k) * t);
        return v * c;
    }

    void evolve(StateVector &psi, double t) const {
        if (psi.num_qubits() != n_) throw std::invalid_argument("DenseSpectrum::evolve: register size mismatch");
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(psi.dim()));
        for (int p = 0; p < 2; ++p) {
            const auto &st = states(p);
            Eigen::MatrixXcd in(static_cast<Eigen::Index>(st.size()), 1);
            for (std::size_t k = 0; k < st.size(); ++k) in(static_cast<Eigen::Index>(k), 0) = psi[st[k]];
            Eigen::MatrixXcd r = propagate_block(p, in, t);
            for (std::size_t k = 0; k < st.size(); ++k) out(static_cast<Eigen::Index>(st[k])) = r(static_cast<Eigen::Index>(k), 0);
        }
        psi.amplitudes() = std::move(out);
    }

  private:
    int n_;
    std::array<std::vector<Index>, 2> states_;
    std::array<Eigen::MatrixXd, 2> vectors_;
    std::array<Eigen::VectorXd, 2> values_;
};

}  // namespace rainbow
