#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "autocal/camera.hpp"
#include "autocal/common.hpp"
#include "autocal/parallel.hpp"

namespace autocal {

// Colors of point-pair edges. B keeps the depth equation in both view pairs,
// R only in (1,2), G only in (1,3), W in neither. Two-view problems use B/W.
enum class Color : std::uint8_t { B = 0, R = 1, G = 2, W = 3 };

inline char color_letter(Color c) { return "BRGW"[static_cast<int>(c)]; }

inline Color color_from_letter(char ch) {
    switch (ch) {
        case 'B': return Color::B;
        case 'R': return Color::R;
        case 'G': return Color::G;
        case 'W': return Color::W;
    }
    throw Error("color_from_letter: bad color");
}

inline Color swap_rg(Color c) {
    if (c == Color::R) return Color::G;
    if (c == Color::G) return Color::R;
    return c;
}

inline int num_edges(int n_points) { return n_points * (n_points - 1) / 2; }

// Lexicographic index of the unordered pair {p,q}, p < q, over [0, n).
inline int edge_index(int n_points, int p, int q) {
    if (p > q) std::swap(p, q);
    return p * n_points - p * (p + 1) / 2 + (q - p - 1);
}

inline std::vector<std::pair<int, int>> edge_pairs(int n_points) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(num_edges(n_points));
    for (int p = 0; p < n_points; ++p)
        for (int q = p + 1; q < n_points; ++q) pairs.emplace_back(p, q);
    return pairs;
}

struct Coloring {
    int n_points = 0;
    std::vector<Color> colors;  // indexed by edge_index

    static Coloring uniform(int n_points, Color c) {
        Coloring out;
        out.n_points = n_points;
        out.colors.assign(num_edges(n_points), c);
        return out;
    }

    Color color(int p, int q) const { return colors[edge_index(n_points, p, q)]; }
    void set(int p, int q, Color c) { colors[edge_index(n_points, p, q)] = c; }

    // dropped-equation weight: R and G drop one equation, W drops both
    // (or one for two-view problems where only B/W occur)
    int drop_weight(int views) const {
        int w = 0;
        for (const Color c : colors) {
            if (c == Color::R || c == Color::G) w += 1;
            if (c == Color::W) w += views >= 3 ? 2 : 1;
        }
        return w;
    }

    bool operator==(const Coloring& other) const = default;
};

// Packs a coloring into a 64-bit code, edge 0 in the most significant
// position so integer order matches lexicographic color order.
inline std::uint64_t pack_coloring(const Coloring& c) {
    const int e = static_cast<int>(c.colors.size());
    std::uint64_t code = 0;
    for (int i = 0; i < e; ++i)
        code |= static_cast<std::uint64_t>(c.colors[i]) << (2 * (e - 1 - i));
    return code;
}

inline Coloring unpack_coloring(std::uint64_t code, int n_points) {
    const int e = num_edges(n_points);
    Coloring c;
    c.n_points = n_points;
    c.colors.resize(e);
    for (int i = 0; i < e; ++i)
        c.colors[i] = static_cast<Color>((code >> (2 * (e - 1 - i))) & 3);
    return c;
}

// One equation d_{1,j,pq}; view_pair 0 is (1,2), view_pair 1 is (1,3).
struct SelectedEquation {
    int view_pair = 0;
    int p = 0;
    int q = 0;

    bool operator==(const SelectedEquation&) const = default;
};

using EquationSelection = std::vector<SelectedEquation>;

// Kept equations per the coloring: (1,2) for B and R, (1,3) for B and G.
inline EquationSelection coloring_to_selection(const Coloring& c, int views = 3) {
    EquationSelection sel;
    const auto pairs = edge_pairs(c.n_points);
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        const Color col = c.colors[e];
        if (views < 3 && (col == Color::R || col == Color::G))
            throw Error("coloring_to_selection: R/G colors need 3 views");
        if (col == Color::B || col == Color::R)
            sel.push_back({0, pairs[e].first, pairs[e].second});
    }
    if (views >= 3) {
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            const Color col = c.colors[e];
            if (col == Color::B || col == Color::G)
                sel.push_back({1, pairs[e].first, pairs[e].second});
        }
    }
    return sel;
}

// Line graph of the non-white edges, vertex-labeled by color. Two vertices
// are adjacent when the underlying point pairs share a point.
struct LabeledLineGraph {
    std::vector<std::pair<int, int>> vertices;  // the non-white point pairs
    std::vector<Color> labels;
    std::vector<std::vector<bool>> adj;

    int size() const { return static_cast<int>(vertices.size()); }
};

inline LabeledLineGraph line_graph(const Coloring& c) {
    LabeledLineGraph lg;
    const auto pairs = edge_pairs(c.n_points);
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        if (c.colors[e] == Color::W) continue;
        lg.vertices.push_back(pairs[e]);
        lg.labels.push_back(c.colors[e]);
    }
    const int n = lg.size();
    lg.adj.assign(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const auto& a = lg.vertices[i];
            const auto& b = lg.vertices[j];
            const bool shares = a.first == b.first || a.first == b.second ||
                                a.second == b.first || a.second == b.second;
            lg.adj[i][j] = lg.adj[j][i] = shares;
        }
    return lg;
}

namespace detail {

// Label-respecting graph isomorphism by backtracking, vertices matched in
// order of ascending candidate count.
inline bool labeled_graph_isomorphic(const LabeledLineGraph& g1, const LabeledLineGraph& g2) {
    const int n = g1.size();
    if (n != g2.size()) return false;
    if (n == 0) return true;

    auto signature = [](const LabeledLineGraph& g, int v) {
        std::vector<int> neigh;
        for (int w = 0; w < g.size(); ++w)
            if (g.adj[v][w]) neigh.push_back(static_cast<int>(g.labels[w]));
        std::sort(neigh.begin(), neigh.end());
        return std::make_pair(static_cast<int>(g.labels[v]), neigh);
    };
    std::vector<std::pair<int, std::vector<int>>> sig1(n), sig2(n);
    for (int v = 0; v < n; ++v) {
        sig1[v] = signature(g1, v);
        sig2[v] = signature(g2, v);
    }
    {
        auto s1 = sig1, s2 = sig2;
        std::sort(s1.begin(), s1.end());
        std::sort(s2.begin(), s2.end());
        if (s1 != s2) return false;
    }

    std::vector<std::vector<int>> candidates(n);
    for (int v = 0; v < n; ++v)
        for (int w = 0; w < n; ++w)
            if (sig1[v] == sig2[w]) candidates[v].push_back(w);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return candidates[a].size() < candidates[b].size();
    });

    std::vector<int> map(n, -1);
    std::vector<bool> used(n, false);

    auto dfs = [&](auto&& self, int depth) -> bool {
        if (depth == n) return true;
        const int v = order[depth];
        for (const int w : candidates[v]) {
            if (used[w]) continue;
            bool ok = true;
            for (int d = 0; d < depth && ok; ++d) {
                const int v2 = order[d];
                if (g1.adj[v][v2] != g2.adj[w][map[v2]]) ok = false;
            }
            if (!ok) continue;
            map[v] = w;
            used[w] = true;
            if (self(self, depth + 1)) return true;
            used[w] = false;
            map[v] = -1;
        }
        return false;
    };
    return dfs(dfs, 0);
}

// Connected-component signatures of the non-white edge graph. Whitney's
// theorem leaves exactly one ambiguity in reading a graph off its line
// graph, K_3 versus K_{1,3}; those have equal edge counts but different
// vertex counts, so the signature carries both along with the color counts.
inline std::vector<std::vector<int>> component_signatures(const Coloring& c) {
    const int n = c.n_points;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    const auto pairs = edge_pairs(n);
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        if (c.colors[e] == Color::W) continue;
        parent[find(pairs[e].first)] = find(pairs[e].second);
    }
    std::vector<bool> touched(n, false);
    // per root: [vertex_count, edge_count, count_B, count_R, count_G]
    std::vector<std::array<int, 5>> acc(n, {0, 0, 0, 0, 0});
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        if (c.colors[e] == Color::W) continue;
        const int r = find(pairs[e].first);
        acc[r][1] += 1;
        acc[r][2 + static_cast<int>(c.colors[e])] += 1;
        touched[pairs[e].first] = touched[pairs[e].second] = true;
    }
    for (int v = 0; v < n; ++v)
        if (touched[v]) acc[find(v)][0] += 1;
    std::vector<std::vector<int>> sigs;
    for (int v = 0; v < n; ++v)
        if (acc[v][1] > 0)
            sigs.push_back({acc[v][0], acc[v][1], acc[v][2], acc[v][3], acc[v][4]});
    std::sort(sigs.begin(), sigs.end());
    return sigs;
}

inline Coloring apply_swap(const Coloring& c) {
    Coloring out = c;
    for (auto& col : out.colors) col = swap_rg(col);
    return out;
}

}  // namespace detail

// Decides isomorphism via labeled line graphs, testing both color swaps and
// guarding the K_3 / K_{1,3} ambiguity with component signatures.
inline bool isomorphic(const Coloring& c1, const Coloring& c2) {
    if (c1.n_points != c2.n_points) return false;
    const LabeledLineGraph l1 = line_graph(c1);
    const auto sig1 = detail::component_signatures(c1);
    for (const bool swap : {false, true}) {
        const Coloring c2t = swap ? detail::apply_swap(c2) : c2;
        if (detail::component_signatures(c2t) != sig1) continue;
        if (detail::labeled_graph_isomorphic(l1, line_graph(c2t))) return true;
    }
    return false;
}

// Exhaustive oracle over S_N x {id, swap R<->G}.
inline bool brute_force_isomorphic(const Coloring& c1, const Coloring& c2) {
    if (c1.n_points != c2.n_points) return false;
    const int n = c1.n_points;
    if (n > 7) throw TooLarge("brute_force_isomorphic: N must be <= 7");
    const auto pairs = edge_pairs(n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok_id = true, ok_swap = true;
        for (std::size_t e = 0; e < pairs.size() && (ok_id || ok_swap); ++e) {
            const Color mapped = c1.color(perm[pairs[e].first], perm[pairs[e].second]);
            if (c2.colors[e] != mapped) ok_id = false;
            if (c2.colors[e] != swap_rg(mapped)) ok_swap = false;
        }
        if (ok_id || ok_swap) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

namespace detail {

// Edge permutation tables for all sigma in S_N, generated in lexicographic
// sigma order so canonical forms are reproducible.
inline std::vector<std::vector<std::uint8_t>> edge_permutation_tables(int n_points) {
    const auto pairs = edge_pairs(n_points);
    std::vector<int> perm(n_points);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<std::uint8_t>> tables;
    do {
        std::vector<std::uint8_t> t(pairs.size());
        for (std::size_t e = 0; e < pairs.size(); ++e)
            t[e] = static_cast<std::uint8_t>(
                edge_index(n_points, perm[pairs[e].first], perm[pairs[e].second]));
        tables.push_back(std::move(t));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return tables;
}

// Lexicographically minimal recoloring over all point permutations and
// (optionally) the R<->G swap.
inline std::uint64_t canonical_code(const std::vector<Color>& colors,
                                    const std::vector<std::vector<std::uint8_t>>& tables,
                                    bool allow_swap) {
    static constexpr std::uint8_t kSwap[4] = {0, 2, 1, 3};
    const int e = static_cast<int>(colors.size());
    std::vector<std::uint8_t> best(e, 255);
    std::vector<std::uint8_t> cur(e);
    for (const auto& table : tables) {
        for (int pass = 0; pass < (allow_swap ? 2 : 1); ++pass) {
            bool smaller = false;
            bool bigger = false;
            for (int i = 0; i < e; ++i) {
                std::uint8_t col = static_cast<std::uint8_t>(colors[table[i]]);
                if (pass == 1) col = kSwap[col];
                cur[i] = col;
                if (!smaller) {
                    if (col > best[i]) {
                        bigger = true;
                        break;
                    }
                    if (col < best[i]) smaller = true;
                }
            }
            if (!bigger && smaller) best = cur;
        }
    }
    std::uint64_t code = 0;
    for (int i = 0; i < e; ++i)
        code |= static_cast<std::uint64_t>(best[i]) << (2 * (e - 1 - i));
    return code;
}

}  // namespace detail

inline std::uint64_t canonical_code(const Coloring& c, bool allow_swap = true) {
    const auto tables = detail::edge_permutation_tables(c.n_points);
    return detail::canonical_code(c.colors, tables, allow_swap);
}

// One canonical representative per isomorphism class of colorings obtained
// by dropping n_drop equations from the all-B coloring. Representatives are
// the lexicographically minimal members, returned in ascending code order.
inline std::vector<Coloring> enumerate_classes(int n_points, int views, int n_drop,
                                               int threads = 0) {
    if (n_drop < 0) throw Error("enumerate_classes: n_drop must be nonnegative");
    const int e = num_edges(n_points);
    const int avail = (views - 1) * e;
    if (n_drop > avail) throw Error("enumerate_classes: more drops than equations");
    const bool allow_swap = views >= 3;

    // every way of dropping n_drop of the avail equations, as packed colorings
    std::vector<std::uint64_t> packed;
    packed.reserve(static_cast<std::size_t>(binomial(avail, n_drop)));
    std::vector<int> comb(n_drop);
    std::iota(comb.begin(), comb.end(), 0);
    std::vector<Color> colors(e);
    for (;;) {
        std::fill(colors.begin(), colors.end(), Color::B);
        for (const int k : comb) {
            const int edge = k % e;
            Color& c = colors[edge];
            if (views >= 3) {
                const bool drops_12 = k < e;
                if (c == Color::B) c = drops_12 ? Color::G : Color::R;
                else c = Color::W;  // second drop on the same edge
            } else {
                c = Color::W;
            }
        }
        Coloring col;
        col.n_points = n_points;
        col.colors = colors;
        packed.push_back(pack_coloring(col));
        // next lexicographic combination
        int i = n_drop - 1;
        while (i >= 0 && comb[i] == avail - n_drop + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < n_drop; ++j) comb[j] = comb[j - 1] + 1;
    }

    const auto tables = detail::edge_permutation_tables(n_points);
    const std::size_t total = packed.size();
    const std::size_t chunk = 4096;
    const std::size_t n_chunks = (total + chunk - 1) / chunk;
    parallel_for(
        n_chunks,
        [&](std::size_t ci) {
            std::vector<Color> cols(e);
            const std::size_t lo = ci * chunk;
            const std::size_t hi = std::min(total, lo + chunk);
            for (std::size_t i = lo; i < hi; ++i) {
                const Coloring c = unpack_coloring(packed[i], n_points);
                packed[i] = detail::canonical_code(c.colors, tables, allow_swap);
            }
        },
        threads);

    std::sort(packed.begin(), packed.end());
    packed.erase(std::unique(packed.begin(), packed.end()), packed.end());

    std::vector<Coloring> reps;
    reps.reserve(packed.size());
    for (const std::uint64_t code : packed) reps.push_back(unpack_coloring(code, n_points));
    return reps;
}

enum class FeasibilityStatus { Minimal, OverconstrainedRelaxable, Infeasible };

inline std::string to_string(FeasibilityStatus s) {
    switch (s) {
        case FeasibilityStatus::Minimal: return "minimal";
        case FeasibilityStatus::OverconstrainedRelaxable: return "overconstrained-relaxable";
        case FeasibilityStatus::Infeasible: return "infeasible";
    }
    return "?";
}

struct FeasibilityRow {
    IntrinsicsSpec spec;
    int views = 0;
    int n_min = 0;
    int linear_constraints = 0;
    int n = 0;        // unknowns = (5 - L) + M*N - 1
    int n_avail = 0;  // depth equations = (M - 1) * C(N, 2)
    int n_drop = 0;
    long long raw_colorings = 0;
    FeasibilityStatus status = FeasibilityStatus::Infeasible;
};

// Feasibility accounting from the constraint-count bound
// L >= 3N + 6M - 2 - 2MN, the N >= 4 floor, and the two-view L >= 3 rule.
inline FeasibilityRow feasibility(const IntrinsicsSpec& spec, int views) {
    if (views != 2 && views != 3) throw Error("feasibility: views must be 2 or 3");
    FeasibilityRow row;
    row.spec = spec;
    row.views = views;
    row.linear_constraints = spec.linear_constraints();
    const int l = row.linear_constraints;

    if (views == 2 && l <= 2) {
        row.status = FeasibilityStatus::Infeasible;
        return row;
    }

    auto bound = [&](int n_pts) { return 3 * n_pts + 6 * views - 2 - 2 * views * n_pts; };
    int n_pts = 4;
    while (bound(n_pts) > l) ++n_pts;
    row.n_min = n_pts;
    row.n = (5 - l) + views * n_pts - 1;
    row.n_avail = (views - 1) * num_edges(n_pts);
    row.n_drop = row.n_avail - row.n;
    row.raw_colorings = binomial(row.n_avail, row.n_drop);
    row.status = (bound(n_pts) == l) ? FeasibilityStatus::Minimal
                                     : FeasibilityStatus::OverconstrainedRelaxable;
    return row;
}

// --- JSON ---

inline nlohmann::json to_json(const Coloring& c) {
    nlohmann::json edges = nlohmann::json::array();
    const auto pairs = edge_pairs(c.n_points);
    for (std::size_t e = 0; e < pairs.size(); ++e)
        edges.push_back({pairs[e].first + 1, pairs[e].second + 1,
                         std::string(1, color_letter(c.colors[e]))});
    return edges;
}

inline Coloring coloring_from_json(const nlohmann::json& j, int n_points) {
    Coloring c = Coloring::uniform(n_points, Color::W);
    for (const auto& entry : j) {
        const int p = entry[0].get<int>() - 1;
        const int q = entry[1].get<int>() - 1;
        c.set(p, q, color_from_letter(entry[2].get<std::string>()[0]));
    }
    return c;
}

}  // namespace autocal
