#pragma once

#include <string>
#include <vector>

#include "autocal/camera.hpp"
#include "autocal/common.hpp"
#include "autocal/metrics.hpp"
#include "autocal/monodromy.hpp"
#include "autocal/polysys.hpp"
#include "autocal/recovery.hpp"
#include "autocal/scene.hpp"
#include "autocal/taxonomy.hpp"
#include "autocal/tracker.hpp"

namespace autocal {

// A shipped relaxation: the intrinsics mask, the problem size, and the depth
// equations omitted from the full system.
struct SolverConfig {
    std::string name;
    std::string mask;
    int points = 0;
    int views = 3;
    EquationSelection dropped;
    Intrinsics synthetic_intrinsics;

    IntrinsicsSpec pattern() const { return parse_mask(mask); }

    IntrinsicsSpec field_spec(const Intrinsics& known_values) const {
        return spec_with_values(pattern(), known_values);
    }

    IntrinsicsSpec field_spec() const { return field_spec(synthetic_intrinsics); }

    Coloring coloring() const {
        Coloring c = Coloring::uniform(points, Color::B);
        for (const auto& d : dropped) {
            const Color cur = c.color(d.p, d.q);
            Color next;
            if (d.view_pair == 0)  // dropping d_{1,2,pq} keeps only (1,3)
                next = (cur == Color::B) ? Color::G : Color::W;
            else  // dropping d_{1,3,pq} keeps only (1,2)
                next = (cur == Color::B) ? Color::R : Color::W;
            c.set(d.p, d.q, next);
        }
        return c;
    }

    EquationSelection selection() const { return coloring_to_selection(coloring(), views); }

    ParametricSystem build() const {
        return build_system(selection(), normalized_spec(field_spec()), points, views);
    }

    SceneConfig scene_config() const {
        SceneConfig config;
        config.num_points = points;
        config.num_views = views;
        config.intrinsics = synthetic_intrinsics;
        return config;
    }
};

// The shipped configurations. Point pairs follow the published relaxations;
// indices here are zero-based.
inline std::vector<SolverConfig> solver_configs() {
    std::vector<SolverConfig> configs;

    SolverConfig calibrated;
    calibrated.name = "calibrated";
    calibrated.mask = "11000";
    calibrated.points = 4;
    calibrated.views = 3;
    calibrated.dropped = {{0, 0, 1}};
    calibrated.synthetic_intrinsics = {330.0, 310.0, 300.0, 250.0, 10.0};
    configs.push_back(calibrated);

    SolverConfig fguv0;
    fguv0.name = "fguv0";
    fguv0.mask = "fguv0";
    fguv0.points = 5;
    fguv0.views = 3;
    fguv0.dropped = {{0, 3, 4}, {1, 3, 4}};
    fguv0.synthetic_intrinsics = {330.0, 310.0, 300.0, 250.0, 0.0};
    configs.push_back(fguv0);

    SolverConfig ffuv0;
    ffuv0.name = "ffuv0";
    ffuv0.mask = "ffuv0";
    ffuv0.points = 5;
    ffuv0.views = 3;
    ffuv0.dropped = {{0, 3, 4}, {1, 3, 4}, {0, 2, 4}};
    ffuv0.synthetic_intrinsics = {330.0, 330.0, 300.0, 250.0, 0.0};
    configs.push_back(ffuv0);

    SolverConfig fguvs;
    fguvs.name = "fguvs";
    fguvs.mask = "fguvs";
    fguvs.points = 6;
    fguvs.views = 3;
    fguvs.dropped = {{0, 4, 5}, {1, 4, 5}, {0, 3, 4}, {1, 3, 4},
                     {0, 3, 5}, {0, 2, 5}, {0, 1, 5}, {1, 2, 3}};
    fguvs.synthetic_intrinsics = {330.0, 310.0, 300.0, 250.0, 10.0};
    configs.push_back(fguvs);

    return configs;
}

inline SolverConfig find_solver(const std::string& name) {
    for (const auto& config : solver_configs())
        if (config.name == name) return config;
    throw Error("find_solver: unknown solver '" + name + "'");
}

// Ranks candidates by mean reprojection error; near-ties go to the candidate
// with the larger minimum depth (better cheirality margin).
inline int select_solution_index(const std::vector<CalibrationResult>& candidates,
                                 const Observations& obs) {
    if (candidates.empty()) throw NoPhysicalSolution("select_solution: no candidates");
    auto min_depth = [](const CalibrationResult& c) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& view : c.depths)
            for (const double lambda : view) d = std::min(d, lambda);
        return d;
    };
    int best = 0;
    double best_re = reprojection(candidates[0], obs, ReprojectionMode::EstimatedPoses);
    for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
        const double re = reprojection(candidates[i], obs, ReprojectionMode::EstimatedPoses);
        const double tie = 1e-12 * std::max(1.0, std::abs(best_re));
        if (re < best_re - tie ||
            (std::abs(re - best_re) <= tie && min_depth(candidates[i]) > min_depth(candidates[best]))) {
            best = i;
            best_re = re;
        }
    }
    return best;
}

inline CalibrationResult select_solution(const std::vector<CalibrationResult>& candidates,
                                         const Observations& obs) {
    return candidates[select_solution_index(candidates, obs)];
}

struct SolveOptions {
    TrackSettings track;
    std::uint64_t seed = 0;
    int threads = 0;
};

struct InstanceSolution {
    std::vector<CalibrationResult> candidates;
    int best_index = -1;
    int paths_tracked = 0;
    int path_failures = 0;
    NormalizationRecord record;

    bool success() const { return best_index >= 0; }
    const CalibrationResult& best() const { return candidates[best_index]; }
};

// Parameter-homotopy transport of every bundle solution to new parameters.
// Failed paths are rerouted through fresh midpoints; endpoint collisions
// (two starts on one endpoint, the signature of a sheet jump) re-track the
// colliding group at smaller steps. Endpoints are polished to stagnation.
inline std::vector<std::optional<CVecX>> transport_solutions(const ParametricSystem& sys,
                                                             const SolutionSet& from,
                                                             const CVecX& p_to,
                                                             const SolveOptions& options = {}) {
    const std::size_t n = from.solutions.size();
    std::vector<std::optional<CVecX>> endpoints(n);
    std::vector<char> retry(n, 1);
    std::vector<char> collided(n, 0);

    for (int round = 0; round < 5; ++round) {
        const Rng base = seeded_rng(options.seed ^ (0xc2b2ae3d27d4eb4fULL * (round + 1)));
        parallel_for(
            n,
            [&](std::size_t i) {
                if (!retry[i]) return;
                Evaluator local(sys);
                TrackSettings st = options.track;
                if (collided[i]) {
                    st.max_step *= 0.25;
                    st.initial_step *= 0.25;
                    st.max_steps *= 4;
                }
                const TrackResult r = track_path(sys, from.solutions[i], from.parameters, p_to,
                                                 st, base.fork(i), true);
                if (r.status != TrackStatus::Success) return;
                CVecX x = r.endpoint;
                if (!detail::newton_polish(local, x, p_to, options.track.newton_tol)) return;
                endpoints[i] = x;
            },
            options.threads);

        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            retry[i] = endpoints[i] ? 0 : 1;
            collided[i] = 0;
            if (retry[i]) any = true;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!endpoints[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!endpoints[j]) continue;
                if (detail::relative_max_dist(*endpoints[i], *endpoints[j]) < 1e-6) {
                    retry[i] = retry[j] = 1;
                    collided[i] = collided[j] = 1;
                    any = true;
                }
            }
        }
        if (!any) break;
    }
    return endpoints;
}

// Online stage: normalize the instance, parameter-homotopy all bundle
// solutions to it, keep the physical ones, and recover full calibrations.
inline InstanceSolution solve_instance(const StartBundle& bundle, const Observations& obs,
                                       const IntrinsicsSpec& field_spec,
                                       const SolveOptions& options = {}) {
    const ParametricSystem& sys = bundle.system;
    auto [norm_obs, rec] = normalize_observations(obs, field_spec, true);

    InstanceSolution out;
    out.record = rec;
    const CVecX p2 = parameter_vector(sys, norm_obs);

    const auto endpoints = transport_solutions(sys, bundle.set, p2, options);

    SolutionSet result_set;
    result_set.parameters = p2;
    for (const auto& e : endpoints) {
        ++out.paths_tracked;
        if (e) {
            result_set.solutions.push_back(*e);
            result_set.residuals.push_back(0.0);
            result_set.provenance.push_back(0);
        } else {
            ++out.path_failures;
        }
    }
    const std::vector<VecX> physical = filter_physical(sys, result_set, p2, options.track);
    for (std::size_t i = 0; i < physical.size(); ++i) {
        const OmegaParams omega = resolve_omega(sys, physical[i]);
        Intrinsics k_norm;
        try {
            k_norm = k_candidates(omega)[0];
        } catch (const NegativeSquare&) {
            continue;
        }
        const Intrinsics k_full = denormalize_intrinsics(k_norm, rec);

        std::vector<std::vector<double>> depths(sys.views, std::vector<double>(sys.points));
        const CVecX xc = physical[i].cast<Complex>();
        for (int v = 0; v < sys.views; ++v)
            for (int p = 0; p < sys.points; ++p) depths[v][p] = depth_value(sys, xc, v, p).real();

        try {
            CalibrationResult cand = recover_poses(depths, obs, k_full);
            cand.solution_index = static_cast<int>(i);
            out.candidates.push_back(std::move(cand));
        } catch (const Error&) {
            continue;
        }
    }

    if (!out.candidates.empty()) out.best_index = select_solution_index(out.candidates, obs);
    return out;
}

}  // namespace autocal
