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

// Measurement-feedback channel that stabilizes the rainbow state: the central
// pair is rotated to |I>, the lattice evolves for a time T, the pair is
// measured in Z, and the outcomes 01 / 10 trigger a reset of everything else.
//
// Operators on the "rest" (every site but the central pair) use rest qubit k
// for the k-th remaining site in increasing site index.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rainbow/lattice.hpp"
#include "rainbow/parallel.hpp"
#include "rainbow/quantum_core.hpp"
#include "rainbow/xy_model.hpp"

namespace rainbow {

/// Which pair is measured and which rainbow variant is stabilized.
struct EngineeringTarget {
    MirrorPair pair;
    EigVariant variant = EigVariant::IZ;
};

/// The central pair of row j* (or the given row) and the variant that puts
/// |I> on it: IZ when L_x/2 + j* is even, ZI otherwise.
inline EngineeringTarget engineering_target(const LatticeGeometry &g, std::optional<int> row = std::nullopt) {
    EngineeringTarget t;
    t.pair = central_pair(g, row);
    t.variant = checkerboard_label(t.pair.left) == BellLabel::I ? EigVariant::IZ : EigVariant::ZI;
    return t;
}

namespace detail {

inline std::vector<int> rest_sites(const LatticeGeometry &g, const MirrorPair &pair) {
    const int c = site_index(pair.left, g), cb = site_index(pair.right, g);
    std::vector<int> out;
    for (int k = 0; k < g.num_sites(); ++k) {
        if (k != c && k != cb) out.push_back(k);
    }
    return out;
}

// Full register index of rest configuration r with the pair bits set.
inline Index deposit_rest(Index r, const std::vector<int> &sites, int c, int cb, int bit_c, int bit_cb) {
    Index x = (Index{static_cast<Index>(bit_c)} << c) | (Index{static_cast<Index>(bit_cb)} << cb);
    for (std::size_t k = 0; k < sites.size(); ++k) {
        if ((r >> k) & 1) x |= Index{1} << sites[k];
    }
    return x;
}

}  // namespace detail

/// |EIG> of the target variant with the central pair removed, on N-2 qubits.
inline StateVector eig_rest_state(const LatticeGeometry &g, const EngineeringTarget &target) {
    const auto sites = detail::rest_sites(g, target.pair);
    std::vector<int> pos(static_cast<std::size_t>(g.num_sites()), -1);
    for (std::size_t k = 0; k < sites.size(); ++k) pos[static_cast<std::size_t>(sites[k])] = static_cast<int>(k);
    std::vector<PairFactor> pairs;
    for (const auto &p : mirror_pairs(g)) {
        if (p == target.pair) continue;
        pairs.push_back({pos[static_cast<std::size_t>(site_index(p.left, g))],
                         pos[static_cast<std::size_t>(site_index(p.right, g))],
                         bell_amplitudes(variant_label(target.variant, p.left, g))});
    }
    return product_state(static_cast<int>(sites.size()), pairs);
}

/// Kraus operators K_s = <s| e^{-iHT} |I>_pair on the rest, s = 2 bit(c) +
/// bit(c-bar) with c the left site of the pair.
struct ChannelSpec {
    LatticeGeometry geometry{4, 1};
    double jx = 1.0;
    double jy = 1.2;
    double T = 0.0;
    EngineeringTarget target;
    std::array<Eigen::MatrixXcd, 4> K;
    DensityMatrix rho0;

    int rest_qubits() const { return geometry.num_sites() - 2; }
    Eigen::Index rest_dim() const { return Eigen::Index{1} << rest_qubits(); }
    /// K01^dag K01 + K10^dag K10: tr(R rho) is the reset probability.
    Eigen::MatrixXcd reset_operator() const { return K[1].adjoint() * K[1] + K[2].adjoint() * K[2]; }
};

inline constexpr int kMaxChannelSites = 14;

/// Builds Kraus sets for one geometry at many T from a single dense
/// diagonalization of H.
class KrausBuilder {
  public:
    KrausBuilder(const LatticeGeometry &g, double jx = 1.0, double jy = 1.2, std::optional<int> row = std::nullopt)
        : geometry_(g), jx_(jx), jy_(jy), target_(engineering_target(g, row)) {
        if (g.num_sites() > kMaxChannelSites) {
            throw std::invalid_argument("the exact channel needs N <= " + std::to_string(kMaxChannelSites) + " sites (got " +
                                        std::to_string(g.num_sites()) + "); use the trajectory simulation instead");
        }
        if (g.num_sites() < 3) throw std::invalid_argument("the channel needs at least one qubit besides the pair");
        spectrum_ = std::make_shared<DenseSpectrum>(XYHamiltonian(g, jx, jy));
    }

    const LatticeGeometry &geometry() const { return geometry_; }
    const EngineeringTarget &target() const { return target_; }

    ChannelSpec build(double T) const {
        if (!(T >= 0.0)) throw std::invalid_argument("measurement period T must be non-negative");
        const auto &g = geometry_;
        const auto sites = detail::rest_sites(g, target_.pair);
        const int c = site_index(target_.pair.left, g), cb = site_index(target_.pair.right, g);
        const int nr = g.num_sites() - 2;
        const Eigen::Index dr = Eigen::Index{1} << nr;

        ChannelSpec ch;
        ch.geometry = g;
        ch.jx = jx_;
        ch.jy = jy_;
        ch.T = T;
        ch.target = target_;
        for (auto &k : ch.K) k = Eigen::MatrixXcd::Zero(dr, dr);
        ch.rho0 = DensityMatrix::pure(StateVector(nr));

        const double r = std::sqrt(0.5);
        for (int p = 0; p < 2; ++p) {
            const auto &states = spectrum_->states(p);
            std::vector<Eigen::Index> pos(std::size_t{1} << g.num_sites(), -1);
            for (std::size_t k = 0; k < states.size(); ++k) pos[states[k]] = static_cast<Eigen::Index>(k);
            // Inputs |r>|I>: both pair components share the parity of r.
            std::vector<Index> cols;
            for (Index rr = 0; rr < static_cast<Index>(dr); ++rr) {
                if (std::popcount(rr) % 2 == p) cols.push_back(rr);
            }
            Eigen::MatrixXcd in = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(cols.size()));
            for (std::size_t k = 0; k < cols.size(); ++k) {
                in(pos[detail::deposit_rest(cols[k], sites, c, cb, 0, 0)], static_cast<Eigen::Index>(k)) = r;
                in(pos[detail::deposit_rest(cols[k], sites, c, cb, 1, 1)], static_cast<Eigen::Index>(k)) = r;
            }
            const Eigen::MatrixXcd out = spectrum_->propagate_block(p, in, T);
            for (int s = 0; s < 4; ++s) {
                const int bc = s >> 1, bcb = s & 1;
                for (Index rp = 0; rp < static_cast<Index>(dr); ++rp) {
                    const Index x = detail::deposit_rest(rp, sites, c, cb, bc, bcb);
                    if (std::popcount(x) % 2 != p) continue;
                    for (std::size_t k = 0; k < cols.size(); ++k) {
                        ch.K[static_cast<std::size_t>(s)](static_cast<Eigen::Index>(rp), static_cast<Eigen::Index>(cols[k])) =
                            out(pos[x], static_cast<Eigen::Index>(k));
                    }
                }
            }
        }
        return ch;
    }

  private:
    LatticeGeometry geometry_;
    double jx_, jy_;
    EngineeringTarget target_;
    std::shared_ptr<const DenseSpectrum> spectrum_;
};

inline ChannelSpec build_kraus(const LatticeGeometry &g, double T, double jx = 1.0, double jy = 1.2,
                               std::optional<int> row = std::nullopt) {
    return KrausBuilder(g, jx, jy, row).build(T);
}

/// ||sum_s K_s^dag K_s - 1||_max.
inline double completeness_error(const ChannelSpec &ch) {
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(ch.rest_dim(), ch.rest_dim());
    for (const auto &k : ch.K) sum += k.adjoint() * k;
    return (sum - Eigen::MatrixXcd::Identity(ch.rest_dim(), ch.rest_dim())).cwiseAbs().maxCoeff();
}

/// rho' = K00 rho K00^dag + K11 rho K11^dag + tr(R rho) rho0.
inline Eigen::MatrixXcd apply_channel(const ChannelSpec &ch, const Eigen::MatrixXcd &rho) {
    if (rho.rows() != ch.rest_dim() || rho.cols() != ch.rest_dim()) throw std::invalid_argument("apply_channel: dimension mismatch");
    Eigen::MatrixXcd out = ch.K[0] * rho * ch.K[0].adjoint() + ch.K[3] * rho * ch.K[3].adjoint();
    const cplx reset = (ch.K[1] * rho * ch.K[1].adjoint()).trace() + (ch.K[2] * rho * ch.K[2].adjoint()).trace();
    out += reset * ch.rho0.matrix();
    return out;
}

inline DensityMatrix apply_channel(const ChannelSpec &ch, const DensityMatrix &rho) {
    return DensityMatrix(ch.rest_qubits(), apply_channel(ch, rho.matrix()));
}

// ---------------------------------------------------------------------------
// Largest-modulus eigenvalues of a matrix-free linear map.

struct ArnoldiOptions {
    int nev = 2;
    int krylov_dim = 40;
    double tol = 1e-11;
    int max_restarts = 400;
    std::uint64_t seed = 7;
};

struct ArnoldiResult {
    /// Sorted by decreasing modulus; at least nev entries when dim >= nev.
    std::vector<cplx> values;
    std::vector<double> residuals;
    /// Unit-norm Ritz vectors, one column per value.
    Eigen::MatrixXcd vectors;
    int restarts = 0;
    int matvecs = 0;
};

/// Restarted Arnoldi in Krylov-Schur form. After each cycle the Ritz vectors
/// of the `keep` largest-modulus Ritz values are orthonormalized and kept;
/// since their span is invariant under the projected matrix, the relation
/// A V = V G + f e^T survives the restart with G no longer Hessenberg.
/// op(x, y) must write A x into y.
template <class Op>
ArnoldiResult arnoldi_largest(Op &&op, Eigen::Index dim, const ArnoldiOptions &opt = {},
                              const Eigen::VectorXcd *start = nullptr) {
    if (dim < 1) throw std::invalid_argument("arnoldi: empty operator");
    const int nev = static_cast<int>(std::min<Eigen::Index>(opt.nev, dim));
    const int m = static_cast<int>(std::min<Eigen::Index>(std::max(opt.krylov_dim, 2 * nev + 2), dim));
    const int keep_target = std::min(m - 1, std::max(nev + 2, m / 2));

    ArnoldiResult res;
    Eigen::MatrixXcd v(dim, m + 1);
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(m + 1, m);
    if (start != nullptr) {
        if (start->size() != dim) throw std::invalid_argument("arnoldi: start vector has wrong size");
        v.col(0) = *start;
    } else {
        std::mt19937_64 rng(opt.seed);
        std::normal_distribution<double> n;
        for (Eigen::Index i = 0; i < dim; ++i) v(i, 0) = cplx(n(rng), n(rng));
    }
    if (v.col(0).norm() == 0.0) throw std::invalid_argument("arnoldi: zero start vector");
    v.col(0).normalize();

    int k = 0;
    Eigen::VectorXcd w(dim);
    for (;;) {
        int j = k;
        double beta = 0.0;
        bool exhausted = false;
        for (; j < m; ++j) {
            op(v.col(j), w);
            ++res.matvecs;
            for (int pass = 0; pass < 2; ++pass) {
                const Eigen::VectorXcd h = v.leftCols(j + 1).adjoint() * w;
                w -= v.leftCols(j + 1) * h;
                g.col(j).head(j + 1) += h;
            }
            beta = w.norm();
            g(j + 1, j) = beta;
            if (beta < 1e-13 * std::max(1.0, g.col(j).head(j + 1).norm())) {
                exhausted = true;
                ++j;
                break;
            }
            v.col(j + 1) = w / beta;
        }
        const int size = j;  // active basis size
        const Eigen::MatrixXcd gm = g.topLeftCorner(size, size);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(gm);
        if (es.info() != Eigen::Success) throw NumericalError("arnoldi: projected eigenproblem failed");
        std::vector<int> order(static_cast<std::size_t>(size));
        for (int i = 0; i < size; ++i) order[static_cast<std::size_t>(i)] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
        });
        const double last = exhausted ? 0.0 : std::abs(g(size, size - 1));
        auto residual = [&](int i) { return last * std::abs(es.eigenvectors()(size - 1, i)); };

        bool converged = true;
        for (int i = 0; i < std::min(nev, size); ++i) converged = converged && residual(order[static_cast<std::size_t>(i)]) <= opt.tol;
        if (converged || exhausted || res.restarts >= opt.max_restarts) {
            if (!converged && !exhausted) {
                std::ostringstream msg;
                msg << "arnoldi did not converge after " << res.restarts << " restarts; residuals:";
                for (int i = 0; i < nev; ++i) msg << ' ' << residual(order[static_cast<std::size_t>(i)]);
                throw NumericalError(msg.str());
            }
            const int out = std::min(nev, size);
            res.vectors.resize(dim, out);
            for (int i = 0; i < out; ++i) {
                const int o = order[static_cast<std::size_t>(i)];
                res.values.push_back(es.eigenvalues()(o));
                res.residuals.push_back(residual(o));
                res.vectors.col(i) = (v.leftCols(size) * es.eigenvectors().col(o)).normalized();
            }
            return res;
        }

        // Thick restart on the leading Ritz vectors. Do not split a complex
        // conjugate pair across the cut when the map is real.
        int keep = std::min(keep_target, size - 1);
        Eigen::MatrixXcd y(size, keep);
        for (int i = 0; i < keep; ++i) y.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
        const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(size, keep);
        const Eigen::MatrixXcd basis = v.leftCols(size) * q;
        const Eigen::MatrixXcd gk = q.adjoint() * gm * q;
        const Eigen::RowVectorXcd tail = last * q.row(size - 1);
        v.leftCols(keep) = basis;
        v.col(keep) = v.col(size);
        g.setZero();
        g.topLeftCorner(keep, keep) = gk;
        g.row(keep).head(keep) = tail;
        k = keep;
        ++res.restarts;
    }
}

// ---------------------------------------------------------------------------
// Symmetry sectors.

/// Orthonormal bases of the (Z-parity, mirror) sectors of the rest. K00 and
/// K11 are block diagonal in these sectors, K01 and K10 are not, but R is.
/// Sector 0 is (even, mirror-symmetric), which holds |0...0> and |EIG_rest>.
struct ChannelSectors {
    std::vector<Eigen::MatrixXd> basis;
    std::vector<int> parity;
    std::vector<int> mirror;
};

inline ChannelSectors channel_sectors(const LatticeGeometry &g, const EngineeringTarget &target) {
    const auto sites = detail::rest_sites(g, target.pair);
    const int nr = static_cast<int>(sites.size());
    std::vector<int> pos(static_cast<std::size_t>(g.num_sites()), -1);
    for (int k = 0; k < nr; ++k) pos[static_cast<std::size_t>(sites[static_cast<std::size_t>(k)])] = k;
    std::vector<int> image(static_cast<std::size_t>(nr));
    for (int k = 0; k < nr; ++k) {
        image[static_cast<std::size_t>(k)] =
            pos[static_cast<std::size_t>(site_index(mirror_partner(site_at(sites[static_cast<std::size_t>(k)], g), g), g))];
    }
    const Index dr = Index{1} << nr;
    auto mirrored = [&](Index x) {
        Index y = 0;
        for (int k = 0; k < nr; ++k) {
            if ((x >> k) & 1) y |= Index{1} << image[static_cast<std::size_t>(k)];
        }
        return y;
    };
    ChannelSectors s;
    const double r = std::sqrt(0.5);
    for (int p = 0; p < 2; ++p) {
        std::vector<std::pair<Index, Index>> plus_orbits, minus_orbits;
        for (Index x = 0; x < dr; ++x) {
            if (std::popcount(x) % 2 != p) continue;
            const Index y = mirrored(x);
            if (y < x) continue;
            plus_orbits.emplace_back(x, y);
            if (y != x) minus_orbits.emplace_back(x, y);
        }
        for (int sign : {+1, -1}) {
            const auto &orbits = sign > 0 ? plus_orbits : minus_orbits;
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dr), static_cast<Eigen::Index>(orbits.size()));
            for (std::size_t k = 0; k < orbits.size(); ++k) {
                const auto [x, y] = orbits[k];
                const auto col = static_cast<Eigen::Index>(k);
                if (x == y) {
                    b(static_cast<Eigen::Index>(x), col) = 1.0;
                } else {
                    b(static_cast<Eigen::Index>(x), col) = r;
                    b(static_cast<Eigen::Index>(y), col) = sign * r;
                }
            }
            if (b.cols() == 0) continue;
            s.basis.push_back(std::move(b));
            s.parity.push_back(p);
            s.mirror.push_back(sign);
        }
    }
    return s;
}

/// The channel restricted to the sector blocks.
struct SectorChannel {
    ChannelSectors sectors;
    /// [sector][0] = K00 block, [sector][1] = K11 block.
    std::vector<std::array<Eigen::MatrixXcd, 2>> k;
    /// Reset operator and rho0 in the home sector.
    Eigen::MatrixXcd reset_home;
    Eigen::MatrixXcd rho0_home;
    /// Largest leak of K00 / K11 / R out of the block structure.
    double block_error = 0.0;
};

inline SectorChannel sector_channel(const ChannelSpec &ch) {
    SectorChannel sc;
    sc.sectors = channel_sectors(ch.geometry, ch.target);
    const auto &b = sc.sectors.basis;
    const Eigen::MatrixXcd reset = ch.reset_operator();
    for (std::size_t a = 0; a < b.size(); ++a) {
        const Eigen::MatrixXcd pa = b[a].cast<cplx>();
        std::array<Eigen::MatrixXcd, 2> blocks;
        int i = 0;
        for (const auto *m : {&ch.K[0], &ch.K[3], &reset}) {
            const Eigen::MatrixXcd mp = (*m) * pa;
            const Eigen::MatrixXcd inside = pa.adjoint() * mp;
            // Whatever part of M pa is not in sector a leaked out of it.
            sc.block_error = std::max(sc.block_error, (mp - pa * inside).cwiseAbs().maxCoeff());
            if (i < 2) blocks[static_cast<std::size_t>(i)] = inside;
            ++i;
        }
        sc.k.push_back(std::move(blocks));
    }
    const Eigen::MatrixXcd ph = b[0].cast<cplx>();
    sc.reset_home = ph.adjoint() * reset * ph;
    sc.rho0_home = ph.adjoint() * ch.rho0.matrix() * ph;
    return sc;
}

/// Block map X -> sum_s K_s^(a) X K_s^(b)dag (+ reset term in the home block).
inline void apply_sector_block(const SectorChannel &sc, std::size_t a, std::size_t b, const Eigen::MatrixXcd &x,
                               Eigen::MatrixXcd &y, bool with_reset) {
    y.noalias() = sc.k[a][0] * x * sc.k[b][0].adjoint();
    y.noalias() += sc.k[a][1] * x * sc.k[b][1].adjoint();
    if (with_reset) y += (sc.reset_home.cwiseProduct(x.transpose())).sum() * sc.rho0_home;
}

struct GapResult {
    cplx lambda1{1.0, 0.0};
    cplx lambda2{0.0, 0.0};
    double gap = 1.0;
    /// Second eigenvalue within the home sector, which alone governs
    /// convergence from rho0. Equal to lambda2 for the unsectored solver.
    cplx home_lambda2{0.0, 0.0};
    /// Largest Arnoldi residual among the reported eigenvalues.
    double residual = 0.0;
    /// Leading eigenvector (column-stacked, unit Frobenius norm) on the rest.
    Eigen::MatrixXcd fixed_point;
    /// Sector blocks handed to the eigensolver (1 for the unsectored solver).
    int blocks_solved = 1;
};

/// Gap of the channel from matrix-free Arnoldi on apply_channel over the full
/// operator space (dimension 4^(N-2)).
inline GapResult channel_gap(const ChannelSpec &ch, ArnoldiOptions opt = {}) {
    const Eigen::Index d = ch.rest_dim();
    opt.nev = std::max(opt.nev, 2);
    auto op = [&](const auto &in, Eigen::VectorXcd &out) {
        const Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(in.data(), d, d);
        const Eigen::MatrixXcd r = apply_channel(ch, rho);
        out = Eigen::Map<const Eigen::VectorXcd>(r.data(), d * d);
    };
    // Start from a valid state so the fixed point is reachable.
    Eigen::VectorXcd start = Eigen::VectorXcd::Constant(d * d, 0.0);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < d * d; ++i) start(i) = cplx(n(rng), n(rng));
    auto res = arnoldi_largest(op, d * d, opt, &start);
    GapResult g;
    g.lambda1 = res.values[0];
    g.lambda2 = res.values.size() > 1 ? res.values[1] : cplx(0.0);
    g.gap = 1.0 - std::abs(g.lambda2);
    g.home_lambda2 = g.lambda2;
    g.residual = *std::max_element(res.residuals.begin(), res.residuals.end());
    g.fixed_point = Eigen::Map<const Eigen::MatrixXcd>(res.vectors.col(0).data(), d, d);
    return g;
}

/// Upper bound on the spectral radius of Phi(X) = sum_s K_s X K_s^dag on the
/// diagonal block of sector a, without reset. For any positive definite Y,
/// Phi(Y) <= c Y gives Phi^n(Y) <= c^n Y and so rho(Phi) <= c; likewise
/// Phi(Y) >= l Y gives rho(Phi) >= l. Y runs through a power iteration from
/// the identity, slightly regularized so it stays invertible. Returns as soon
/// as the bound drops below `target`, or once the lower bound shows it never
/// will.
inline double sector_radius_bound(const SectorChannel &sc, std::size_t a, double target, int max_iter = 3000) {
    const Eigen::Index d = sc.sectors.basis[a].cols();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    Eigen::MatrixXcd phi_id;
    apply_sector_block(sc, a, a, id, phi_id, false);
    constexpr double eps = 1e-9;
    double best = std::numeric_limits<double>::infinity();
    Eigen::MatrixXcd y = id / static_cast<double>(d), z;
    for (int n = 1; n <= max_iter; ++n) {
        apply_sector_block(sc, a, a, y, z, false);
        if (n % 5 == 1) {
            const Eigen::MatrixXcd yr = 0.5 * (y + y.adjoint()) + eps * id;
            const Eigen::MatrixXcd zr = z + eps * phi_id;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ey(yr);
            if (ey.info() == Eigen::Success && ey.eigenvalues().minCoeff() > 0.0) {
                const Eigen::MatrixXcd w = ey.eigenvectors() * ey.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                           ey.eigenvectors().adjoint();
                const Eigen::MatrixXcd m = w * zr * w;
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> em(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
                if (em.info() == Eigen::Success) {
                    best = std::min(best, em.eigenvalues().maxCoeff());
                    if (best < target || em.eigenvalues().minCoeff() >= target) return best;
                }
            }
        }
        const double tr = z.trace().real();
        if (!(tr > 0.0)) return 0.0;  // nilpotent on this block
        y = z / tr;
    }
    return best;
}

/// Same gap from the sector decomposition. The channel is block triangular:
/// off-diagonal blocks (a, b) map to themselves, diagonal blocks map to
/// themselves plus a reset contribution to the home block. Its spectrum is
/// therefore the union of the spectra of the home block (with reset), the
/// other diagonal blocks and the off-diagonal blocks; (b, a) is the complex
/// conjugate of (a, b) and is skipped.
///
/// Only the home block is always solved. With rho_a the spectral radius of
/// diagonal block a without reset (rho_0 <= 1), Cauchy-Schwarz on rank-one
/// inputs bounds block (a, b) by sqrt(rho_a rho_b). A block is solved only
/// when the certified bound does not already put it below |home lambda2|;
/// prune = false solves every block.
inline GapResult channel_gap_sectored(const ChannelSpec &ch, ArnoldiOptions opt = {}, bool prune = true) {
    const SectorChannel sc = sector_channel(ch);
    if (sc.block_error > 1e-10) {
        std::ostringstream msg;
        msg << "channel does not respect the parity/mirror sectors (leak " << sc.block_error << ")";
        throw NumericalError(msg.str());
    }
    const std::size_t ns = sc.sectors.basis.size();
    auto solve = [&](std::size_t a, std::size_t b, int nev, std::uint64_t seed) {
        const Eigen::Index da = sc.sectors.basis[a].cols(), db = sc.sectors.basis[b].cols();
        const bool home = a == 0 && b == 0;
        auto op = [&](const auto &in, Eigen::VectorXcd &out) {
            const Eigen::MatrixXcd x = Eigen::Map<const Eigen::MatrixXcd>(in.data(), da, db);
            Eigen::MatrixXcd y;
            apply_sector_block(sc, a, b, x, y, home);
            out = Eigen::Map<const Eigen::VectorXcd>(y.data(), da * db);
        };
        ArnoldiOptions o = opt;
        o.nev = nev;
        o.seed = seed;
        return arnoldi_largest(op, da * db, o);
    };

    GapResult g;
    const ArnoldiResult home = solve(0, 0, 2, opt.seed);
    g.lambda1 = home.values[0];
    g.lambda2 = home.values.size() > 1 ? home.values[1] : cplx(0.0);
    g.residual = *std::max_element(home.residuals.begin(), home.residuals.end());
    const Eigen::MatrixXcd ph = sc.sectors.basis[0].cast<cplx>();
    const Eigen::Index dh = ph.cols();
    g.fixed_point = ph * Eigen::Map<const Eigen::MatrixXcd>(home.vectors.col(0).data(), dh, dh) * ph.adjoint();
    // At small T the top of the spectrum crowds along an arc near 1 and an
    // isolated eigenvalue further in can converge first. The channel is
    // trace preserving, so 1 is always an eigenvalue; missing it means the
    // solver stopped early.
    if (std::abs(g.lambda1 - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << "arnoldi missed the fixed point (leading eigenvalue " << g.lambda1 << "); enlarge the Krylov basis";
        throw NumericalError(msg.str());
    }
    g.home_lambda2 = g.lambda2;
    const double h2 = std::abs(g.home_lambda2);

    // Diagonal radius bounds; block (0, b) needs rho_b < h2^2.
    std::vector<double> bound(ns, 1.0);
    if (prune) {
        std::vector<std::size_t> idx;
        for (std::size_t a = 1; a < ns; ++a) idx.push_back(a);
        parallel_for(idx.size(), [&](std::size_t i) { bound[idx[i]] = sector_radius_bound(sc, idx[i], h2 * h2); });
    }
    struct Job {
        std::size_t a, b;
    };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < ns; ++a) {
        for (std::size_t b = a; b < ns; ++b) {
            if (a == 0 && b == 0) continue;
            const double cap = a == b ? bound[a] : std::sqrt(bound[a] * bound[b]);
            if (!prune || cap >= h2) jobs.push_back({a, b});
        }
    }
    std::vector<ArnoldiResult> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        results[j] = solve(jobs[j].a, jobs[j].b, 1, opt.seed + 1 + jobs[j].a * ns + jobs[j].b);
    });
    g.blocks_solved = static_cast<int>(jobs.size()) + 1;
    for (const auto &r : results) {
        g.residual = std::max(g.residual, r.residuals[0]);
        if (std::abs(r.values[0]) > std::abs(g.lambda2)) g.lambda2 = r.values[0];
    }
    g.gap = 1.0 - std::abs(g.lambda2);
    return g;
}

// ---------------------------------------------------------------------------
// Iteration from rho0.

struct ChannelStep {
    int n = 0;
    double fidelity = 0.0;
    /// Renyi-2 entropy of the rest, nats.
    double s2 = 0.0;
    /// Mutual information (bits) of the farthest and nearest mirror pairs.
    double mi_far = 0.0;
    double mi_near = 0.0;
    /// Reset probability of the step that produced this state (0 at n = 0).
    double p_reset = 0.0;
};

/// Farthest (column 1 in the measured row) and nearest (smallest column
/// separation, then closest row) mirror pairs besides the measured pair.
inline std::pair<MirrorPair, MirrorPair> diagnostic_pairs(const LatticeGeometry &g, const MirrorPair &measured) {
    std::vector<MirrorPair> rest;
    for (const auto &p : mirror_pairs(g)) {
        if (!(p == measured)) rest.push_back(p);
    }
    if (rest.empty()) throw std::invalid_argument("no mirror pair besides the measured one");
    const int row = measured.left.j;
    auto far = std::find_if(rest.begin(), rest.end(), [&](const MirrorPair &p) { return p.left == Site{1, row}; });
    if (far == rest.end()) far = rest.begin();
    auto near = std::min_element(rest.begin(), rest.end(), [&](const MirrorPair &x, const MirrorPair &y) {
        const int sx = x.right.i - x.left.i, sy = y.right.i - y.left.i;
        if (sx != sy) return sx < sy;
        return std::abs(x.left.j - row) < std::abs(y.left.j - row);
    });
    return {*far, *near};
}

/// Iterates the channel (or its post-selected version keeping only the 00 and
/// 11 branches, renormalized) from rho0. The iterate never leaves the home
/// sector, so the run happens there and is embedded back for the pair
/// diagnostics.
inline std::vector<ChannelStep> run_channel_iteration(const ChannelSpec &ch, int n_steps, bool post_select = false) {
    if (n_steps < 0) throw std::invalid_argument("number of steps must be non-negative");
    const SectorChannel sc = sector_channel(ch);
    if (sc.block_error > 1e-10) throw NumericalError("channel does not respect the parity/mirror sectors");
    const Eigen::MatrixXcd ph = sc.sectors.basis[0].cast<cplx>();
    const StateVector eig = eig_rest_state(ch.geometry, ch.target);
    const Eigen::VectorXcd eh = ph.adjoint() * eig.amplitudes();
    if (std::abs(eh.norm() - 1.0) > 1e-12) throw std::logic_error("target state outside the home sector");

    const auto &g = ch.geometry;
    const auto sites = detail::rest_sites(g, ch.target.pair);
    auto rest_qubit = [&](const Site &s) {
        return static_cast<int>(std::find(sites.begin(), sites.end(), site_index(s, g)) - sites.begin());
    };
    const auto [far, near] = diagnostic_pairs(g, ch.target.pair);
    const std::array<int, 4> diag_q{rest_qubit(far.left), rest_qubit(far.right), rest_qubit(near.left), rest_qubit(near.right)};

    std::vector<ChannelStep> out;
    Eigen::MatrixXcd rho = sc.rho0_home, next;
    double p_reset = 0.0;
    for (int n = 0; n <= n_steps; ++n) {
        ChannelStep st;
        st.n = n;
        st.fidelity = eh.dot(rho * eh).real();
        st.s2 = -std::log(rho.cwiseAbs2().sum());
        const DensityMatrix full(ch.rest_qubits(), ph * rho * ph.adjoint());
        st.mi_far = mutual_information(full, diag_q[0], diag_q[1]);
        st.mi_near = mutual_information(full, diag_q[2], diag_q[3]);
        st.p_reset = p_reset;
        out.push_back(st);
        if (n == n_steps) break;

        apply_sector_block(sc, 0, 0, rho, next, false);
        p_reset = std::max(0.0, (sc.reset_home.cwiseProduct(rho.transpose())).sum().real());
        if (post_select) {
            const double kept = next.trace().real();
            if (!(kept > 0.0)) throw NumericalError("post-selected branch has zero probability");
            next /= kept;
        } else {
            next += p_reset * sc.rho0_home;
        }
        rho = 0.5 * (next + next.adjoint());
    }
    return out;
}

}  // namespace rainbow
