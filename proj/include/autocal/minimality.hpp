#pragma once

// Exact generic-rank test for depth-equation subsystems, working over a
// prime field at a random rational problem-solution pair. This avoids the
// singular-value thresholds of the floating certificate entirely: a
// selection passes when its n x n Jacobian in the unknowns is invertible
// mod p at a random exact point of the incidence variety.

#include <cstdint>
#include <vector>

#include "autocal/common.hpp"
#include "autocal/polysys.hpp"
#include "autocal/taxonomy.hpp"

namespace autocal {

namespace modp {

// arithmetic mod the Mersenne prime 2^61 - 1
constexpr std::uint64_t kPrime = 2305843009213693951ULL;

struct Fp {
    std::uint64_t v = 0;

    Fp() = default;
    explicit constexpr Fp(long long x) : v(static_cast<std::uint64_t>(((x % static_cast<long long>(kPrime)) + static_cast<long long>(kPrime)) % static_cast<long long>(kPrime))) {}

    friend Fp operator+(Fp a, Fp b) {
        std::uint64_t s = a.v + b.v;
        if (s >= kPrime) s -= kPrime;
        Fp r;
        r.v = s;
        return r;
    }
    friend Fp operator-(Fp a, Fp b) {
        Fp r;
        r.v = a.v >= b.v ? a.v - b.v : a.v + kPrime - b.v;
        return r;
    }
    friend Fp operator*(Fp a, Fp b) {
        const unsigned __int128 prod = static_cast<unsigned __int128>(a.v) * b.v;
        Fp r;
        r.v = static_cast<std::uint64_t>(prod % kPrime);
        return r;
    }
    Fp operator-() const {
        Fp r;
        r.v = v == 0 ? 0 : kPrime - v;
        return r;
    }
    Fp& operator+=(Fp o) { return *this = *this + o; }
    Fp& operator-=(Fp o) { return *this = *this - o; }
    Fp& operator*=(Fp o) { return *this = *this * o; }
    friend bool operator==(Fp a, Fp b) { return a.v == b.v; }
    friend bool operator!=(Fp a, Fp b) { return a.v != b.v; }
};

inline Fp pow(Fp base, std::uint64_t e) {
    Fp acc(1);
    while (e) {
        if (e & 1) acc *= base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

inline Fp inverse(Fp a) {
    if (a.v == 0) throw Error("modp: inverse of zero");
    return pow(a, kPrime - 2);
}

inline int matrix_rank(std::vector<std::vector<Fp>> m) {
    const int rows = static_cast<int>(m.size());
    if (rows == 0) return 0;
    const int cols = static_cast<int>(m[0].size());
    int rank = 0;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int pivot = -1;
        for (int r = rank; r < rows; ++r)
            if (m[r][c].v != 0) {
                pivot = r;
                break;
            }
        if (pivot < 0) continue;
        std::swap(m[rank], m[pivot]);
        const Fp inv = inverse(m[rank][c]);
        for (int r = rank + 1; r < rows; ++r) {
            if (m[r][c].v == 0) continue;
            const Fp factor = m[r][c] * inv;
            for (int cc = c; cc < cols; ++cc) m[r][cc] -= factor * m[rank][cc];
        }
        ++rank;
    }
    return rank;
}

}  // namespace modp

namespace detail {

// Exact synthetic problem-solution pair over F_p. Rotations come from the
// Cayley transform of random skew matrices, so the pinhole identity holds
// exactly in the field.
struct ModpSeed {
    std::vector<modp::Fp> unknowns;
    std::vector<modp::Fp> params;
};

inline ModpSeed modp_seed(const ParametricSystem& sys, Rng& rng) {
    using modp::Fp;
    const int views = sys.views;
    const int points = sys.points;

    auto small = [&](int lo, int hi) { return Fp(static_cast<long long>(lo + static_cast<long long>(rng.below(hi - lo + 1)))); };

    for (int attempt = 0; attempt < 64; ++attempt) {
        // intrinsics honor the spec: known slots carry their (integer)
        // normalized values, unknown slots draw random values
        Fp f, g, u, v, s;
        auto slot_value = [&](const Slot& slot, bool focal) {
            if (slot.kind == SlotKind::Known) {
                const long long val = static_cast<long long>(slot.value);
                if (static_cast<double>(val) != slot.value)
                    throw Error("modp_seed: spec values must be integers (use a normalized spec)");
                return Fp(val);
            }
            return focal ? small(2, 97) : small(-48, 48);
        };
        f = slot_value(sys.spec.f(), true);
        if (sys.spec.g().kind == SlotKind::TiedToF) g = f;
        else g = slot_value(sys.spec.g(), true);
        u = slot_value(sys.spec.u(), false);
        v = slot_value(sys.spec.v(), false);
        s = slot_value(sys.spec.s(), false);
        if (f.v == 0 || g.v == 0) continue;

        // world points and camera centers
        std::vector<std::array<Fp, 3>> pts(points), centers(views);
        for (auto& p : pts)
            for (auto& c : p) c = small(-30, 30);
        for (auto& cam : centers)
            for (auto& c : cam) c = small(-30, 30);

        // rotations R = (I - S)^{-1} (I + S) for random skew S
        std::vector<std::array<std::array<Fp, 3>, 3>> rots(views);
        bool ok = true;
        for (int i = 0; i < views && ok; ++i) {
            const Fp a = small(-20, 20), b = small(-20, 20), c = small(-20, 20);
            // M = I - S with S = [0 -a b; a 0 -c; -b c 0]
            Fp m[3][3] = {{Fp(1), a, -b}, {-a, Fp(1), c}, {b, -c, Fp(1)}};
            // invert M via adjugate
            Fp det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            if (det.v == 0) {
                ok = false;
                break;
            }
            const Fp idet = modp::inverse(det);
            Fp inv[3][3];
            inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * idet;
            inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * idet;
            inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * idet;
            inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * idet;
            inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * idet;
            inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * idet;
            inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * idet;
            inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * idet;
            inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * idet;
            Fp plus[3][3] = {{Fp(1), -a, b}, {a, Fp(1), -c}, {-b, c, Fp(1)}};
            for (int r = 0; r < 3; ++r)
                for (int cc = 0; cc < 3; ++cc) {
                    Fp acc(0);
                    for (int k = 0; k < 3; ++k) acc += inv[r][k] * plus[k][cc];
                    rots[i][r][cc] = acc;
                }
        }
        if (!ok) continue;

        // project: h = K R (X - C); depth is the third coordinate
        std::vector<std::vector<std::array<Fp, 2>>> pixels(views,
                                                           std::vector<std::array<Fp, 2>>(points));
        std::vector<std::vector<Fp>> depths(views, std::vector<Fp>(points));
        for (int i = 0; i < views && ok; ++i)
            for (int p = 0; p < points && ok; ++p) {
                Fp cam[3];
                for (int r = 0; r < 3; ++r) {
                    Fp acc(0);
                    for (int k = 0; k < 3; ++k)
                        acc += rots[i][r][k] * (pts[p][k] - centers[i][k]);
                    cam[r] = acc;
                }
                const Fp h0 = f * cam[0] + s * cam[1] + u * cam[2];
                const Fp h1 = g * cam[1] + v * cam[2];
                const Fp h2 = cam[2];
                if (h2.v == 0) {
                    ok = false;
                    break;
                }
                const Fp ih2 = modp::inverse(h2);
                pixels[i][p] = {h0 * ih2, h1 * ih2};
                depths[i][p] = h2;
            }
        if (!ok || depths[0][0].v == 0) continue;

        ModpSeed seed;
        seed.unknowns.assign(sys.n_unknowns, Fp(0));
        const Fp fs = f * f, gs = g * g, ss = s * modp::inverse(g);
        const Fp omega_vals[5] = {fs, gs, ss, u, v};
        for (int k = 0; k < 5; ++k)
            if (sys.omega_slot[k] >= 0) seed.unknowns[sys.omega_slot[k]] = omega_vals[k];
        const Fp iscale = modp::inverse(depths[0][0]);
        for (int i = 0; i < views; ++i)
            for (int p = 0; p < points; ++p) {
                const int slot = sys.depth_unknown(i, p);
                if (slot >= 0) seed.unknowns[slot] = depths[i][p] * iscale;
            }
        seed.params.assign(sys.n_params, Fp(0));
        for (int i = 0; i < views; ++i)
            for (int p = 0; p < points; ++p) {
                seed.params[sys.param_index(i, p, 0)] = pixels[i][p][0];
                seed.params[sys.param_index(i, p, 1)] = pixels[i][p][1];
            }
        return seed;
    }
    throw Error("modp_seed: could not build an exact synthetic pair");
}

inline std::vector<modp::Fp> modp_consts(const slp::Tape& tape) {
    std::vector<modp::Fp> consts;
    consts.reserve(tape.consts.size());
    for (const Complex c : tape.consts) {
        const long long v = std::llround(c.real());
        if (c.imag() != 0.0 || static_cast<double>(v) != c.real())
            throw Error("modp: tape constants must be integers (use a normalized spec)");
        consts.push_back(modp::Fp(v));
    }
    return consts;
}

}  // namespace detail

struct ModpRanks {
    int rank_x = 0;
    int rank_full = 0;
};

// Exact generic ranks of dg/dx and (dg/dp | dg/dx) at random points of the
// incidence variety, over F_p. Maximum over `samples` random points (rank
// only drops on special loci).
inline ModpRanks generic_ranks_modp(const ParametricSystem& sys, std::uint64_t seed,
                                    int samples = 2) {
    using modp::Fp;
    ModpRanks best;
    Rng rng = seeded_rng(seed ^ 0x517cc1b727220a95ULL);
    for (int rep = 0; rep < samples; ++rep) {
        const detail::ModpSeed point = detail::modp_seed(sys, rng);
        std::vector<Fp> vars(point.unknowns);
        vars.insert(vars.end(), point.params.begin(), point.params.end());

        slp::WorkspaceT<Fp> ws;
        std::vector<Fp> grad(vars.size());
        std::vector<std::vector<Fp>> jac_x(sys.n_equations(),
                                           std::vector<Fp>(sys.n_unknowns, Fp(0)));
        std::vector<std::vector<Fp>> jac_full(sys.n_equations(),
                                              std::vector<Fp>(vars.size(), Fp(0)));
        for (int k = 0; k < sys.n_equations(); ++k) {
            std::fill(grad.begin(), grad.end(), Fp(0));
            const std::vector<Fp> consts = detail::modp_consts(sys.equations[k]);
            const Fp residual = slp::eval_grad_t<Fp>(
                sys.equations[k], std::span<const Fp>(consts), std::span<const Fp>(vars), ws,
                grad.data());
            if (residual != Fp(0))
                throw Error("generic_ranks_modp: synthetic point does not satisfy the system");
            for (int c = 0; c < sys.n_unknowns; ++c) jac_x[k][c] = grad[c];
            jac_full[k] = grad;
        }
        best.rank_x = std::max(best.rank_x, modp::matrix_rank(std::move(jac_x)));
        best.rank_full = std::max(best.rank_full, modp::matrix_rank(std::move(jac_full)));
        if (best.rank_x == sys.n_unknowns &&
            best.rank_full == std::min<int>(sys.n_equations(), static_cast<int>(vars.size())))
            break;
    }
    return best;
}

// A selection is a minimal relaxation when it is square and satisfies the
// exact rank conditions rank(dg/dp | dg/dx) = rank(dg/dx) = n.
inline bool selection_is_minimal(const EquationSelection& selection, const IntrinsicsSpec& spec,
                                 int points, int views, std::uint64_t seed = 2024) {
    const ParametricSystem sys = build_system(selection, spec, points, views, false);
    if (sys.n_equations() != sys.n_unknowns) return false;
    const ModpRanks ranks = generic_ranks_modp(sys, seed);
    return ranks.rank_x == sys.n_unknowns && ranks.rank_full == sys.n_unknowns;
}

// Representatives of classes whose subsystems are minimal relaxations.
// The spec must carry normalized (integer) known values.
inline std::vector<Coloring> enumerate_minimal_classes(const IntrinsicsSpec& spec, int n_points,
                                                       int views, int n_drop, int threads = 0) {
    const std::vector<Coloring> raw = enumerate_classes(n_points, views, n_drop, threads);
    std::vector<int> keep(raw.size(), 0);
    parallel_for(
        raw.size(),
        [&](std::size_t i) {
            keep[i] =
                selection_is_minimal(coloring_to_selection(raw[i], views), spec, n_points, views)
                    ? 1
                    : 0;
        },
        threads);
    std::vector<Coloring> out;
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (keep[i]) out.push_back(raw[i]);
    return out;
}

}  // namespace autocal
