#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autocal/common.hpp"
#include "autocal/parallel.hpp"
#include "autocal/polysys.hpp"
#include "autocal/scene.hpp"
#include "autocal/tracker.hpp"

namespace autocal {

struct SolutionSet {
    CVecX parameters;
    std::vector<CVecX> solutions;
    std::vector<double> residuals;
    std::vector<int> provenance;  // loop index that discovered each solution

    int size() const { return static_cast<int>(solutions.size()); }
};

namespace detail {

inline double relative_max_dist(const CVecX& a, const CVecX& b) {
    double d = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        d = std::max(d, std::abs(a[i] - b[i]) / denom);
    }
    return d;
}

// Duplicate detection under relative max-norm, indexed by the real part of
// the first coordinate so lookups stay sublinear for large sets.
class DedupIndex {
public:
    explicit DedupIndex(double tol) : tol_(tol) {}

    bool insert_would_add(const SolutionSet& set, const CVecX& x) const {
        const double key = x.size() ? x[0].real() : 0.0;
        const double window = tol_ * (2.0 + std::abs(key));
        auto lo = index_.lower_bound(key - window);
        auto hi = index_.upper_bound(key + window);
        for (auto it = lo; it != hi; ++it)
            if (relative_max_dist(set.solutions[it->second], x) < tol_) return false;
        return true;
    }

    bool insert(const SolutionSet& set, const CVecX& x) {
        if (!insert_would_add(set, x)) return false;
        index_.emplace(x.size() ? x[0].real() : 0.0, set.size());
        return true;
    }

private:
    double tol_;
    std::multimap<double, int> index_;
};

}  // namespace detail

// Greedy clustering under relative max-norm; the first representative of
// each cluster is kept in input order.
inline SolutionSet dedup(const std::vector<CVecX>& solutions, double tol) {
    if (tol <= 0) throw Error("dedup: tol must be positive");
    SolutionSet out;
    detail::DedupIndex index(tol);
    for (const auto& x : solutions) {
        if (index.insert(out, x)) {
            out.solutions.push_back(x);
            out.residuals.push_back(0.0);
            out.provenance.push_back(0);
        }
    }
    return out;
}

struct SeedPair {
    CVecX p0;
    CVecX x0;
    Scene scene;
    Observations normalized_obs;
    NormalizationRecord record;
};

inline CVecX parameter_vector(const ParametricSystem& sys, const Observations& obs) {
    if (obs.num_views() != sys.views || obs.num_points() != sys.points)
        throw DimensionMismatch("parameter_vector: observation shape mismatch");
    CVecX p(sys.n_params);
    for (int i = 0; i < sys.views; ++i)
        for (int pt = 0; pt < sys.points; ++pt) {
            p[sys.param_index(i, pt, 0)] = obs.pixels[i][pt][0];
            p[sys.param_index(i, pt, 1)] = obs.pixels[i][pt][1];
        }
    return p;
}

// Fabricates a synthetic problem-solution pair: generate a scene whose
// intrinsics match the spec's known slots, project, normalize, and read the
// ground-truth unknowns off the construction.
inline SeedPair seed_pair(const ParametricSystem& sys, const IntrinsicsSpec& field_spec,
                          const SceneConfig& base_config, std::uint64_t seed) {
    SceneConfig config = base_config;
    config.num_points = sys.points;
    config.num_views = sys.views;

    SeedPair out;
    out.scene = generate_scene(config, seed);
    const Observations obs = project(out.scene, config.width, config.height);
    auto [norm_obs, rec] = normalize_observations(obs, field_spec, true);
    out.normalized_obs = norm_obs;
    out.record = rec;
    out.p0 = parameter_vector(sys, norm_obs);

    const Intrinsics k_norm = rec.normalize_intrinsics(out.scene.intrinsics);
    const OmegaParams omega = omega_params_of(k_norm);
    const auto& depths = *norm_obs.true_depths;

    CVecX x0(sys.n_unknowns);
    const double omega_vals[5] = {omega.f_star, omega.g_star, omega.s_star, omega.u, omega.v};
    for (int k = 0; k < 5; ++k)
        if (sys.omega_slot[k] >= 0) x0[sys.omega_slot[k]] = omega_vals[k];
    const double scale = depths[0][0];
    for (int i = 0; i < sys.views; ++i)
        for (int pt = 0; pt < sys.points; ++pt) {
            const int slot = sys.depth_unknown(i, pt);
            if (slot >= 0) x0[slot] = depths[i][pt] / scale;
        }
    out.x0 = x0;

    const CVecX r = evaluate(sys, out.x0, out.p0);
    if (r.size() && r.cwiseAbs().maxCoeff() > 1e-9)
        throw Error("seed_pair: synthetic pair does not satisfy the system");
    return out;
}

struct MonodromySettings {
    int stall_loops = 10;
    int max_loops = 500;
    std::optional<int> target_count;
    double dedup_tol = 1e-6;
    double loop_scale = 1.0;      // complex perturbation, relative to parameter RMS
    bool complex_anchor = true;   // move off the real seed parameters before looping
    bool component_filter = true; // reject endpoints that left the seed's component
    double component_tol = 1e-6;
    TrackSettings track;
    std::uint64_t seed = 0;
    int threads = 0;
};

// View pairs whose equations were all kept by the relaxation. The
// oriented-tetrahedron identity keeps holding on the seed's solution
// component exactly for these pairs, which separates that component from
// its depth-sign mirror images inside the relaxed variety.
inline std::vector<int> unbroken_view_pairs(const ParametricSystem& sys) {
    std::vector<int> out;
    const int full = num_edges(sys.points);
    for (int vp = 0; vp + 1 < sys.views; ++vp) {
        int count = 0;
        for (const auto& eq : sys.selection)
            if (eq.view_pair == vp) ++count;
        if (count == full) out.push_back(vp);
    }
    return out;
}

inline bool passes_component_invariants(const ParametricSystem& sys,
                                        const std::vector<int>& pairs, const CVecX& x,
                                        const CVecX& p, double rel_tol = 1e-6) {
    if (sys.points < 4 || pairs.empty()) return true;
    std::array<int, 4> subset{};
    for (int a = 0; a < sys.points; ++a)
        for (int b = a + 1; b < sys.points; ++b)
            for (int c = b + 1; c < sys.points; ++c)
                for (int d = c + 1; d < sys.points; ++d) {
                    subset = {a, b, c, d};
                    for (const int vp : pairs) {
                        const Complex res = tetra_det_residual(sys, x, p, vp, subset);
                        if (std::abs(res) > rel_tol * (1.0 + x.cwiseAbs().maxCoeff()))
                            return false;
                    }
                }
    return true;
}

namespace detail {

inline double rms_magnitude(const CVecX& p) {
    double sq = 0.0;
    for (int i = 0; i < p.size(); ++i) sq += std::norm(p[i]);
    return std::sqrt(sq / std::max<int>(1, static_cast<int>(p.size())));
}

inline CVecX perturbed(const CVecX& p, double scale, Rng& rng) {
    CVecX q = p;
    for (int i = 0; i < q.size(); ++i) q[i] += scale * rng.normal_complex();
    return q;
}

// Newton to stagnation: residual tolerance alone leaves endpoints fuzzy at
// kappa * tol, which poisons deduplication; iterate until the step norm
// bottoms out near machine precision.
inline bool newton_polish(Evaluator& ev, CVecX& x, const CVecX& p, double residual_tol,
                          int max_iters = 12) {
    CVecX r;
    CMatX jx;
    LinearSolver solver;
    for (int it = 0; it < max_iters; ++it) {
        ev.residual_jacobian(x, p, &r, &jx, nullptr);
        if (!r.allFinite()) return false;
        if (!solver.factor(jx)) break;
        const CVecX dx = solver.lu.solve(r);
        if (!dx.allFinite()) return false;
        x -= dx;
        const double step = dx.cwiseAbs().maxCoeff();
        if (step < 1e-13 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
    }
    ev.residual(x, p, r);
    return r.size() == 0 || r.cwiseAbs().maxCoeff() < residual_tol;
}

}  // namespace detail

// Grows the solution set over the seed parameters by tracking every known
// solution around random complex triangle loops, until stall_loops loops in
// a row discover nothing (or the optional target count is reached).
// Loop engine: grows an anchored set in place by triangle loops until
// stall_loops barren loops in a row (or the target count is reached).
// Throws NoProgress when a singleton set cannot be tracked around any loop.
inline void monodromy_grow(const ParametricSystem& sys, SolutionSet& set,
                           const MonodromySettings& ms) {
    Evaluator ev(sys);
    const double scale = ms.loop_scale * detail::rms_magnitude(set.parameters);
    Rng rng = seeded_rng(ms.seed ^ 0x9e3779b97f4a7c15ULL);

    const std::vector<int> guarded_pairs =
        ms.component_filter ? unbroken_view_pairs(sys) : std::vector<int>{};

    detail::DedupIndex index(ms.dedup_tol);
    {
        SolutionSet rebuilt;
        rebuilt.parameters = set.parameters;
        for (std::size_t i = 0; i < set.solutions.size(); ++i) {
            if (!index.insert(rebuilt, set.solutions[i])) continue;
            rebuilt.solutions.push_back(set.solutions[i]);
            rebuilt.residuals.push_back(set.residuals.size() > i ? set.residuals[i] : 0.0);
            rebuilt.provenance.push_back(set.provenance.size() > i ? set.provenance[i] : -1);
        }
        set = std::move(rebuilt);
    }

    auto add_solution = [&](const CVecX& x, double residual, int loop) {
        if (!passes_component_invariants(sys, guarded_pairs, x, set.parameters, ms.component_tol))
            return false;
        if (!index.insert(set, x)) return false;
        set.solutions.push_back(x);
        set.residuals.push_back(residual);
        set.provenance.push_back(loop);
        return true;
    };

    int stall = 0;
    int barren_from_seed = 0;
    for (int loop = 0; loop < ms.max_loops; ++loop) {
        if (ms.target_count && set.size() >= *ms.target_count) break;
        if (stall >= ms.stall_loops) break;

        // jitter the loop size so consecutive loops sample different
        // geometries; loops grazing the discriminant then do not repeat
        const double loop_size = scale * std::exp2(rng.uniform(-1.0, 1.0));
        const CVecX q1 = detail::perturbed(set.parameters, loop_size, rng);
        const CVecX q2 = detail::perturbed(set.parameters, loop_size, rng);
        const std::vector<CVecX> starts = set.solutions;

        std::vector<std::optional<CVecX>> endpoints(starts.size());
        parallel_for(
            starts.size(),
            [&](std::size_t i) {
                Evaluator local(sys);
                CVecX x = starts[i];
                int steps = 0;  // budget shared across the three legs
                TrackStatus s = detail::track_leg(local, x, set.parameters, q1, ms.track, &steps);
                if (s == TrackStatus::Success)
                    s = detail::track_leg(local, x, q1, q2, ms.track, &steps);
                if (s == TrackStatus::Success)
                    s = detail::track_leg(local, x, q2, set.parameters, ms.track, &steps);
                if (s != TrackStatus::Success) return;
                if (!detail::newton_polish(local, x, set.parameters, ms.track.newton_tol)) return;
                endpoints[i] = x;
            },
            ms.threads);

        // a genuinely new endpoint must also return to its start when the
        // loop is traversed backward; paths that jumped sheets do not
        std::vector<char> is_new(starts.size(), 0);
        for (std::size_t i = 0; i < starts.size(); ++i)
            if (endpoints[i] &&
                detail::relative_max_dist(*endpoints[i], starts[i]) >= ms.dedup_tol &&
                index.insert_would_add(set, *endpoints[i]))
                is_new[i] = 1;
        parallel_for(
            starts.size(),
            [&](std::size_t i) {
                if (!is_new[i]) return;
                Evaluator local(sys);
                CVecX x = *endpoints[i];
                int steps = 0;
                TrackStatus s = detail::track_leg(local, x, set.parameters, q2, ms.track, &steps);
                if (s == TrackStatus::Success)
                    s = detail::track_leg(local, x, q2, q1, ms.track, &steps);
                if (s == TrackStatus::Success)
                    s = detail::track_leg(local, x, q1, set.parameters, ms.track, &steps);
                if (s != TrackStatus::Success ||
                    !detail::newton_polish(local, x, set.parameters, ms.track.newton_tol))
                    return;  // inconclusive reverse; keep the discovery
                // a clean reverse that lands on a different start exposes a
                // sheet jump; such endpoints are discarded
                if (detail::relative_max_dist(x, starts[i]) >= ms.dedup_tol)
                    endpoints[i].reset();
            },
            ms.threads);

        int added = 0;
        int succeeded = 0;
        for (const auto& e : endpoints) {
            if (!e) continue;
            ++succeeded;
            CVecX r;
            ev.residual(*e, set.parameters, r);
            const double res = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
            if (res < ms.track.newton_tol && add_solution(*e, res, loop)) ++added;
        }

        if (set.size() == 1 && succeeded == 0) {
            if (++barren_from_seed >= ms.stall_loops)
                throw NoProgress("monodromy: seed cannot be tracked around loops");
        } else {
            barren_from_seed = 0;
        }
        stall = added == 0 ? stall + 1 : 0;
    }
}

inline SolutionSet monodromy_solve(const ParametricSystem& sys, const SeedPair& seed,
                                   const MonodromySettings& ms) {
    SolutionSet set;
    set.parameters = seed.p0;

    Evaluator ev(sys);
    const double rms = detail::rms_magnitude(seed.p0);
    Rng rng = seeded_rng(ms.seed);

    CVecX seed_x = seed.x0;

    // real synthetic parameters sit near the real discriminant; loops run at
    // a generic complex anchor the seed is first tracked to
    if (ms.complex_anchor) {
        bool moved = false;
        for (int attempt = 0; attempt < 5 && !moved; ++attempt) {
            CVecX cand(seed.p0.size());
            for (int i = 0; i < cand.size(); ++i) cand[i] = rms * rng.normal_complex();
            const TrackResult moved_seed =
                track_path(sys, seed.x0, seed.p0, cand, ms.track, rng.fork(attempt), true);
            if (moved_seed.status != TrackStatus::Success) continue;
            CVecX x = moved_seed.endpoint;
            if (!detail::newton_polish(ev, x, cand, ms.track.newton_tol)) continue;
            set.parameters = cand;
            seed_x = x;
            moved = true;
        }
        if (!moved) throw NoProgress("monodromy_solve: seed cannot leave the real parameters");
    }

    {
        CVecX x = seed_x;
        detail::newton_polish(ev, x, set.parameters, ms.track.newton_tol);
        CVecX r;
        ev.residual(x, set.parameters, r);
        if (ms.component_filter &&
            !passes_component_invariants(sys, unbroken_view_pairs(sys), x, set.parameters,
                                         ms.component_tol))
            throw Error("monodromy_solve: seed rejected by component invariants");
        set.solutions.push_back(x);
        set.residuals.push_back(r.size() ? r.cwiseAbs().maxCoeff() : 0.0);
        set.provenance.push_back(-1);
    }

    monodromy_grow(sys, set, ms);
    return set;
}

// Moves the whole set to a fresh random complex anchor. Failed paths and
// path collisions (two starts reaching the same endpoint, the signature of
// a basin jump) are re-tracked through alternate midpoints with tighter
// step settings until the transport is injective; stragglers count as lost.
inline SolutionSet reanchor(const ParametricSystem& sys, const SolutionSet& set,
                            const MonodromySettings& ms, int* lost_paths = nullptr) {
    Rng rng = seeded_rng(ms.seed ^ 0xabcdef1234567890ULL);
    const double rms = detail::rms_magnitude(set.parameters);
    CVecX p1(set.parameters.size());
    for (int i = 0; i < p1.size(); ++i) p1[i] = rms * rng.normal_complex();

    const std::vector<int> guarded_pairs =
        ms.component_filter ? unbroken_view_pairs(sys) : std::vector<int>{};

    const std::size_t n = set.solutions.size();
    std::vector<std::optional<CVecX>> endpoints(n);
    std::vector<char> failed(n, 1);
    std::vector<char> collided(n, 0);

    auto track_round = [&](int round) {
        parallel_for(
            n,
            [&](std::size_t i) {
                if (round > 0 && !failed[i] && !collided[i]) return;
                Evaluator local(sys);
                Rng path_rng = seeded_rng(ms.seed ^ (0x51ed270bULL * (round + 1))).fork(i);
                TrackSettings st = ms.track;
                if (collided[i]) {
                    // collisions are basin jumps: take smaller steps
                    st.max_step *= 0.25;
                    st.initial_step *= 0.25;
                    st.max_steps *= 4;
                }
                CVecX x = set.solutions[i];
                int steps = 0;
                TrackStatus s;
                if (round == 0) {
                    s = detail::track_leg(local, x, set.parameters, p1, st, &steps);
                } else {
                    // reroute through a fresh midpoint
                    const CVecX mid = detail::random_midpoint(set.parameters, p1, path_rng);
                    s = detail::track_leg(local, x, set.parameters, mid, st, &steps);
                    if (s == TrackStatus::Success)
                        s = detail::track_leg(local, x, mid, p1, st, &steps);
                }
                if (s != TrackStatus::Success) return;
                if (!detail::newton_polish(local, x, p1, ms.track.newton_tol)) return;
                if (!passes_component_invariants(sys, guarded_pairs, x, p1, ms.component_tol))
                    return;
                endpoints[i] = x;
            },
            ms.threads);
    };

    const int max_rounds = 6;
    for (int round = 0; round < max_rounds; ++round) {
        track_round(round);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            failed[i] = endpoints[i] ? 0 : 1;
            collided[i] = 0;
            if (failed[i]) any = true;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!endpoints[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!endpoints[j]) continue;
                if (detail::relative_max_dist(*endpoints[i], *endpoints[j]) < ms.dedup_tol) {
                    collided[i] = collided[j] = 1;
                    any = true;
                }
            }
        }
        if (!any) break;
    }

    SolutionSet out;
    out.parameters = p1;
    if (lost_paths) *lost_paths = 0;
    Evaluator ev(sys);
    detail::DedupIndex index(ms.dedup_tol);
    for (std::size_t i = 0; i < n; ++i) {
        if (!endpoints[i]) {
            if (lost_paths) ++(*lost_paths);
            continue;
        }
        CVecX r;
        ev.residual(*endpoints[i], p1, r);
        if (!index.insert(out, *endpoints[i])) {
            if (lost_paths) ++(*lost_paths);
            continue;
        }
        out.solutions.push_back(*endpoints[i]);
        out.residuals.push_back(r.size() ? r.cwiseAbs().maxCoeff() : 0.0);
        out.provenance.push_back(set.provenance[i]);
    }

    // a lost path means the fiber point exists but transport failed; a short
    // monodromy top-up at the new anchor recovers it
    if (out.size() < static_cast<int>(n)) {
        MonodromySettings top = ms;
        top.target_count = static_cast<int>(n);
        top.stall_loops = std::min(ms.stall_loops, 4);
        top.seed = ms.seed ^ 0x7f4a7c159e3779b9ULL;
        monodromy_grow(sys, out, top);
        if (lost_paths) *lost_paths = std::max(0, static_cast<int>(n) - out.size());
    }
    return out;
}

// Real candidates of a real problem instance: refine, keep near-real
// solutions, reject vanishing depths or focals, and canonicalize the
// per-view depth sign freedom so symmetric pairs collapse.
inline std::vector<VecX> filter_physical(const ParametricSystem& sys, const SolutionSet& set,
                                         const CVecX& p_real, const TrackSettings& ts = {},
                                         double imag_tol = 1e-6, double zero_tol = 1e-8) {
    Evaluator ev(sys);
    std::vector<CVecX> kept;
    for (const auto& sol : set.solutions) {
        CVecX x = sol;
        int iters = 0;
        if (!detail::newton_inplace(ev, x, p_real, ts.newton_tol, ts.max_newton_iters, &iters,
                                    nullptr))
            continue;
        double max_imag = 0.0;
        for (int i = 0; i < x.size(); ++i) max_imag = std::max(max_imag, std::abs(x[i].imag()));
        if (max_imag > imag_tol) continue;

        bool ok = true;
        if (sys.omega_slot[0] >= 0 || sys.omega_slot[1] >= 0) {
            const double fs = omega_value(sys, x, 0).real();
            const double gs = omega_value(sys, x, 1).real();
            if (std::abs(fs) < zero_tol || std::abs(gs) < zero_tol) ok = false;
            // negative squares have no real camera
            if (fs < 0.0 || gs < 0.0) ok = false;
        }
        for (int i = 0; ok && i < sys.views; ++i)
            for (int pt = 0; pt < sys.points; ++pt)
                if (std::abs(depth_value(sys, x, i, pt)) < zero_tol) ok = false;
        if (!ok) continue;
        kept.push_back(x);
    }

    std::vector<CVecX> canonical;
    for (auto& x : kept) {
        // flip whole-view depth signs to positive where the symmetry allows
        for (int i = 1; i < sys.views; ++i) {
            bool all_negative = true;
            for (int pt = 0; pt < sys.points; ++pt)
                if (depth_value(sys, x, i, pt).real() >= 0.0) all_negative = false;
            if (all_negative)
                for (int pt = 0; pt < sys.points; ++pt) {
                    const int slot = sys.depth_unknown(i, pt);
                    if (slot >= 0) x[slot] = -x[slot];
                }
        }
        canonical.push_back(x);
    }

    const SolutionSet unique = dedup(canonical, 1e-6);
    std::vector<VecX> out;
    for (const auto& x : unique.solutions) out.push_back(x.real());
    return out;
}

// --- start-system bundle persistence ---

struct StartBundle {
    ParametricSystem system;
    SolutionSet set;
    nlohmann::json settings_echo;
    std::string version = "autocal-1.0";
};

namespace detail {

inline nlohmann::json cvec_to_json(const CVecX& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back({v[i].real(), v[i].imag()});
    return arr;
}

inline CVecX cvec_from_json(const nlohmann::json& j) {
    CVecX v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<int>(i)] = Complex(j[i][0].get<double>(), j[i][1].get<double>());
    return v;
}

}  // namespace detail

inline nlohmann::json bundle_to_json(const StartBundle& bundle) {
    nlohmann::json solutions = nlohmann::json::array();
    for (const auto& s : bundle.set.solutions) solutions.push_back(detail::cvec_to_json(s));
    return {{"version", bundle.version},
            {"system", system_descriptor(bundle.system)},
            {"anchor", detail::cvec_to_json(bundle.set.parameters)},
            {"solutions", solutions},
            {"residuals", bundle.set.residuals},
            {"settings", bundle.settings_echo}};
}

inline void save_bundle(const std::string& path, const StartBundle& bundle) {
    std::ofstream out(path);
    if (!out) throw Error("save_bundle: cannot write " + path);
    out << bundle_to_json(bundle).dump(2) << "\n";
}

// Loads and, by default, re-verifies every stored solution with one Newton
// pass (residual < 1e-10 afterwards).
inline StartBundle load_bundle(const std::string& path, bool verify = true) {
    std::ifstream in(path);
    if (!in) throw Error("load_bundle: cannot read " + path);
    nlohmann::json j;
    in >> j;

    StartBundle bundle;
    bundle.version = j.at("version").get<std::string>();
    bundle.system = system_from_descriptor(j.at("system"));
    bundle.set.parameters = detail::cvec_from_json(j.at("anchor"));
    for (const auto& s : j.at("solutions"))
        bundle.set.solutions.push_back(detail::cvec_from_json(s));
    if (j.contains("residuals"))
        bundle.set.residuals = j.at("residuals").get<std::vector<double>>();
    bundle.set.residuals.resize(bundle.set.solutions.size(), 0.0);
    bundle.set.provenance.assign(bundle.set.solutions.size(), -1);
    if (j.contains("settings")) bundle.settings_echo = j.at("settings");

    if (verify) {
        Evaluator ev(bundle.system);
        CVecX r;
        CMatX jx;
        detail::LinearSolver solver;
        for (auto& x : bundle.set.solutions) {
            ev.residual_jacobian(x, bundle.set.parameters, &r, &jx, nullptr);
            if (!solver.factor(jx)) throw Error("load_bundle: singular solution Jacobian");
            x -= solver.lu.solve(r);
            ev.residual(x, bundle.set.parameters, r);
            if (r.cwiseAbs().maxCoeff() > 1e-10)
                throw Error("load_bundle: stored solution fails re-verification");
        }
    }
    return bundle;
}

}  // namespace autocal
