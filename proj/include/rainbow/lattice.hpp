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

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rainbow {

/// A lattice site in 1-based (column, row) coordinates.
struct Site {
    int i = 1;
    int j = 1;

    friend auto operator<=>(const Site &, const Site &) = default;
};

inline std::string to_string(const Site &s) {
    return "(" + std::to_string(s.i) + "," + std::to_string(s.j) + ")";
}

/// The four Bell states. I and Z are (|00> +- |11>)/sqrt2; X and Y are obtained
/// from I by applying the corresponding Pauli to the first qubit.
enum class BellLabel { I, Z, X, Y };

inline char to_char(BellLabel l) {
    switch (l) {
        case BellLabel::I:
            return 'I';
        case BellLabel::Z:
            return 'Z';
        case BellLabel::X:
            return 'X';
        case BellLabel::Y:
            return 'Y';
    }
    return '?';
}

enum class Orientation { horizontal, vertical };

struct Bond {
    Site a;
    Site b;
    Orientation orientation = Orientation::horizontal;

    friend bool operator==(const Bond &, const Bond &) = default;
};

/// Open-boundary L_x x L_y square lattice. L_x must be even so that every site
/// has a distinct mirror partner.
class LatticeGeometry {
  public:
    LatticeGeometry(int lx, int ly) : lx_(lx), ly_(ly) {
        if (lx <= 0 || ly <= 0) {
            throw std::invalid_argument("lattice dimensions must be positive, got " + std::to_string(lx) + "x" +
                                        std::to_string(ly));
        }
        if (lx % 2 != 0) {
            throw std::invalid_argument("L_x must be even for mirror pairing, got L_x=" + std::to_string(lx));
        }
    }

    int lx() const { return lx_; }
    int ly() const { return ly_; }
    int num_sites() const { return lx_ * ly_; }

    bool contains(const Site &s) const { return s.i >= 1 && s.i <= lx_ && s.j >= 1 && s.j <= ly_; }

    std::string label() const { return std::to_string(lx_) + "x" + std::to_string(ly_); }

    friend bool operator==(const LatticeGeometry &, const LatticeGeometry &) = default;

  private:
    int lx_;
    int ly_;
};

namespace detail {
inline void require_in_bounds(const Site &s, const LatticeGeometry &g) {
    if (!g.contains(s)) {
        throw std::out_of_range("site " + to_string(s) + " outside " + g.label() + " lattice");
    }
}
}  // namespace detail

/// Row-major flattening: (i,j) -> (j-1)*L_x + (i-1). Bit k of a basis-state
/// integer is the qubit living on flattened site k.
inline int site_index(const Site &s, const LatticeGeometry &g) {
    detail::require_in_bounds(s, g);
    return (s.j - 1) * g.lx() + (s.i - 1);
}

inline Site site_at(int index, const LatticeGeometry &g) {
    if (index < 0 || index >= g.num_sites()) {
        throw std::out_of_range("flattened index " + std::to_string(index) + " outside " + g.label() + " lattice");
    }
    return Site{index % g.lx() + 1, index / g.lx() + 1};
}

inline Site mirror_partner(const Site &s, const LatticeGeometry &g) {
    detail::require_in_bounds(s, g);
    return Site{g.lx() + 1 - s.i, s.j};
}

/// Nearest-neighbour bonds with open boundaries: all horizontal bonds row by
/// row, then all vertical bonds.
inline std::vector<Bond> bonds(const LatticeGeometry &g) {
    std::vector<Bond> out;
    out.reserve(static_cast<std::size_t>(g.ly() * (g.lx() - 1) + g.lx() * (g.ly() - 1)));
    for (int j = 1; j <= g.ly(); ++j) {
        for (int i = 1; i < g.lx(); ++i) {
            out.push_back({Site{i, j}, Site{i + 1, j}, Orientation::horizontal});
        }
    }
    for (int j = 1; j < g.ly(); ++j) {
        for (int i = 1; i <= g.lx(); ++i) {
            out.push_back({Site{i, j}, Site{i, j + 1}, Orientation::vertical});
        }
    }
    return out;
}

/// I when i+j is even, Z when odd.
inline BellLabel checkerboard_label(const Site &s) { return (s.i + s.j) % 2 == 0 ? BellLabel::I : BellLabel::Z; }

/// A mirror pair, left site in columns 1..L_x/2.
struct MirrorPair {
    Site left;
    Site right;

    friend bool operator==(const MirrorPair &, const MirrorPair &) = default;
};

inline MirrorPair mirror_pair_of(const Site &s, const LatticeGeometry &g) {
    Site other = mirror_partner(s, g);
    return s.i <= g.lx() / 2 ? MirrorPair{s, other} : MirrorPair{other, s};
}

/// All L_x/2 * L_y mirror pairs, ordered by row then by left column.
inline std::vector<MirrorPair> mirror_pairs(const LatticeGeometry &g) {
    std::vector<MirrorPair> out;
    for (int j = 1; j <= g.ly(); ++j) {
        for (int i = 1; i <= g.lx() / 2; ++i) {
            out.push_back({Site{i, j}, Site{g.lx() + 1 - i, j}});
        }
    }
    return out;
}

/// The measured pair of the state-engineering protocol: the two sites adjacent
/// to the vertical mirror axis in row j*. By default j* is the first row whose
/// central pair carries label I in the checkerboard; when no such row exists
/// (L_y = 1 with L_x/2 odd) row 1 is returned and the pair carries Z.
inline MirrorPair central_pair(const LatticeGeometry &g, std::optional<int> row = std::nullopt) {
    const int half = g.lx() / 2;
    int chosen = 1;
    if (row) {
        if (*row < 1 || *row > g.ly()) {
            throw std::out_of_range("central row " + std::to_string(*row) + " outside " + g.label() + " lattice");
        }
        chosen = *row;
    } else {
        for (int j = 1; j <= g.ly(); ++j) {
            if ((half + j) % 2 == 0) {
                chosen = j;
                break;
            }
        }
    }
    return {Site{half, chosen}, Site{half + 1, chosen}};
}

inline int manhattan_distance(const Site &a, const Site &b) {
    return (a.i > b.i ? a.i - b.i : b.i - a.i) + (a.j > b.j ? a.j - b.j : b.j - a.j);
}

}  // namespace rainbow
