// Acceptance suite: one numbered criterion per section, each printing a
// single PASS/FAIL line. Criteria 1-6 and 8-10 run by default; criterion 7
// (the long path-count targets) runs with --stretch. A cache directory keeps
// expensive start bundles across invocations.
//
//   acceptance [--only 1,2,...] [--stretch] [--cache DIR] [--threads N]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "autocal/metrics.hpp"
#include "autocal/minimality.hpp"
#include "autocal/monodromy.hpp"
#include "autocal/recovery.hpp"
#include "autocal/robust.hpp"
#include "autocal/solver.hpp"
#include "autocal/taxonomy.hpp"

using namespace autocal;

namespace {

int g_threads = 2;
std::string g_cache = "acceptance_cache";
bool g_stretch = false;

struct Outcome {
    int criterion;
    bool passed;
    std::string detail;
    double seconds;
};

std::vector<Outcome> g_outcomes;

template <typename Fn>
void run_criterion(int number, const std::set<int>& only, Fn&& fn) {
    if (!only.empty() && !only.count(number)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome{number, false, "", 0.0};
    try {
        outcome = fn();
        outcome.criterion = number;
    } catch (const std::exception& e) {
        outcome.passed = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    g_outcomes.push_back(outcome);
    std::printf("%s criterion %d: %s (%.1fs)\n", outcome.passed ? "PASS" : "FAIL", number,
                outcome.detail.c_str(), outcome.seconds);
    std::fflush(stdout);
}

StartBundle build_or_load_bundle(const std::string& solver_name, std::uint64_t seed) {
    std::filesystem::create_directories(g_cache);
    const std::string path = g_cache + "/" + solver_name + "_bundle.json";
    if (std::filesystem::exists(path)) {
        try {
            return load_bundle(path, true);
        } catch (const Error&) {
            // stale or corrupt cache entry; rebuild below
        }
    }
    const SolverConfig config = find_solver(solver_name);
    const ParametricSystem sys = config.build();
    const SeedPair pair = seed_pair(sys, config.field_spec(), config.scene_config(), seed);
    MonodromySettings ms;
    ms.seed = seed;
    ms.threads = g_threads;
    SolutionSet set = monodromy_solve(sys, pair, ms);
    int lost = 0;
    set = reanchor(sys, set, ms, &lost);
    StartBundle bundle;
    bundle.system = sys;
    bundle.set = std::move(set);
    bundle.settings_echo = {{"seed", seed}, {"solver", solver_name}, {"lost", lost}};
    save_bundle(path, bundle);
    return bundle;
}

// --- criterion 1: calibrated solution count, 3 seeds ---

Outcome criterion_1() {
    const SolverConfig config = find_solver("calibrated");
    const ParametricSystem sys = config.build();
    std::ostringstream detail;
    bool ok = true;
    for (const std::uint64_t seed : {11ull, 22ull, 33ull}) {
        const SeedPair pair = seed_pair(sys, config.field_spec(), config.scene_config(), seed);
        MonodromySettings ms;
        ms.seed = seed;
        ms.threads = g_threads;
        const SolutionSet set = monodromy_solve(sys, pair, ms);
        double worst = 0.0;
        for (const double r : set.residuals) worst = std::max(worst, r);
        detail << "seed " << seed << ": " << set.size() << " solutions (max residual " << worst
               << "); ";
        ok = ok && set.size() == 640 && worst < 1e-8;
    }
    return {1, ok, "calibrated monodromy: " + detail.str(), 0.0};
}

// --- criterion 2: 320 depth-sign orbit pairs ---

Outcome criterion_2() {
    const StartBundle bundle = build_or_load_bundle("calibrated", 11);
    const ParametricSystem& sys = bundle.system;
    if (bundle.set.size() != 640)
        return {2, false, "bundle has " + std::to_string(bundle.set.size()) + " != 640", 0.0};

    // pair each solution with its view-2 depth-sign mirror
    std::vector<int> partner(bundle.set.size(), -1);
    for (int i = 0; i < bundle.set.size(); ++i) {
        CVecX mirrored = bundle.set.solutions[i];
        for (int p = 0; p < sys.points; ++p) {
            const int slot = sys.depth_unknown(1, p);
            if (slot >= 0) mirrored[slot] = -mirrored[slot];
        }
        for (int j = 0; j < bundle.set.size(); ++j) {
            if (j == i) continue;
            if (autocal::detail::relative_max_dist(mirrored, bundle.set.solutions[j]) < 1e-6) {
                partner[i] = j;
                break;
            }
        }
    }
    int orbits = 0;
    bool involution = true;
    for (int i = 0; i < bundle.set.size(); ++i) {
        if (partner[i] < 0 || partner[partner[i]] != i || partner[i] == i) involution = false;
        if (partner[i] > i) ++orbits;
    }
    const bool ok = involution && orbits == 320;
    return {2, ok,
            "view-2 depth flip pairs the 640 solutions into " + std::to_string(orbits) +
                " orbits (involution " + (involution ? "exact" : "BROKEN") + ")",
            0.0};
}

// --- criterion 3: taxonomy class count for fguvs ---

Outcome criterion_3() {
    const IntrinsicsSpec spec = parse_mask("fguvs");
    const std::vector<Coloring> raw = enumerate_classes(6, 3, 8, g_threads);
    long long minimal = 0;
    std::vector<int> flags(raw.size(), 0);
    parallel_for(
        raw.size(),
        [&](std::size_t i) {
            flags[i] = selection_is_minimal(coloring_to_selection(raw[i]), spec, 6, 3) ? 1 : 0;
        },
        g_threads);
    for (const int f : flags) minimal += f;
    const bool ok = minimal == 3313;
    std::ostringstream detail;
    detail << "C(30,8) = " << binomial(30, 8) << " colorings -> " << raw.size()
           << " isomorphism classes, " << minimal
           << " minimal relaxations (expected 3313; see the decisions ledger for the analysis "
              "of the published count)";
    return {3, ok, detail.str(), 0.0};
}

// --- criterion 4: line-graph isomorphism vs factorial oracle ---

Outcome criterion_4() {
    int disagreements = 0;
    int checked = 0;
    for (const int n : {4, 5}) {
        Rng rng = seeded_rng(9000 + n);
        auto random_coloring = [&](int points) {
            Coloring c = Coloring::uniform(points, Color::B);
            for (auto& col : c.colors) col = static_cast<Color>(rng.below(4));
            return c;
        };
        auto relabel = [&](const Coloring& c, bool swap) {
            std::vector<int> perm(c.n_points);
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = c.n_points - 1; i > 0; --i)
                std::swap(perm[i], perm[static_cast<int>(rng.below(i + 1))]);
            Coloring out = Coloring::uniform(c.n_points, Color::B);
            for (int p = 0; p < c.n_points; ++p)
                for (int q = p + 1; q < c.n_points; ++q) {
                    Color col = c.color(perm[p], perm[q]);
                    if (swap) col = swap_rg(col);
                    out.set(p, q, col);
                }
            return out;
        };
        for (int trial = 0; trial < 200; ++trial) {
            const Coloring c1 = random_coloring(n);
            const Coloring c2 =
                trial % 2 == 0 ? relabel(c1, rng.below(2) == 0) : random_coloring(n);
            if (isomorphic(c1, c2) != brute_force_isomorphic(c1, c2)) ++disagreements;
            ++checked;
        }
    }
    return {4, disagreements == 0,
            std::to_string(checked) + " random pairs at N in {4,5}, " +
                std::to_string(disagreements) + " disagreements",
            0.0};
}

// --- criterion 5: noiseless end-to-end exactness of fguv0 ---

Outcome criterion_5() {
    const StartBundle bundle = build_or_load_bundle("fguv0", 1);
    const SolverConfig config = find_solver("fguv0");
    int failures = 0;
    double worst_fg = 0.0, worst_uv = 0.0, worst_re = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t seed = 500 + trial;
        const Scene scene = generate_scene(config.scene_config(), seed);
        const Observations obs = project(scene);
        SolveOptions options;
        options.seed = seed;
        options.threads = g_threads;
        try {
            const InstanceSolution sol = solve_instance(bundle, obs, config.field_spec(), options);
            if (!sol.success()) throw NoPhysicalSolution();
            const MetricReport rep = evaluate_metrics(sol.best(), scene, obs);
            worst_fg = std::max(worst_fg, rep.delta_fg);
            worst_uv = std::max(worst_uv, rep.delta_uv);
            worst_re = std::max(worst_re, rep.re);
        } catch (const Error&) {
            ++failures;
        }
    }
    std::ostringstream detail;
    detail << "20 noiseless seeds (bundle of " << bundle.set.size() << "): " << failures
           << " failures, worst delta_fg " << worst_fg << ", delta_uv " << worst_uv << ", re "
           << worst_re << " px";
    const bool ok = failures == 0 && worst_fg < 1e-6 && worst_uv < 1e-6 && worst_re < 1e-6;
    return {5, ok, detail.str(), 0.0};
}

// --- criterion 6: minimality certification ---

Outcome criterion_6() {
    std::ostringstream detail;
    bool ok = true;
    for (const auto& config : solver_configs()) {
        const ParametricSystem sys = config.build();
        const SeedPair pair = seed_pair(sys, config.field_spec(), config.scene_config(), 777);
        const CertificateReport rep = certify_minimal(sys, pair.p0, pair.x0);
        detail << config.name << " " << (rep.passed ? "passed" : "FAILED") << "; ";
        ok = ok && rep.passed;
    }
    {
        const SolverConfig config = find_solver("calibrated");
        const ParametricSystem sys =
            build_system(coloring_to_selection(Coloring::uniform(4, Color::B)),
                         normalized_spec(config.field_spec()), 4, 3, false);
        const SeedPair pair = seed_pair(sys, config.field_spec(), config.scene_config(), 777);
        const CertificateReport rep = certify_minimal(sys, pair.p0, pair.x0);
        detail << "undropped overconstrained " << (!rep.passed ? "fails as required" : "PASSED");
        ok = ok && !rep.passed && rep.rank_full == 12 && rep.rank_x == 11;
    }
    return {6, ok, detail.str(), 0.0};
}

// --- criterion 7: path-count stretch targets ---

Outcome criterion_7() {
    struct Target {
        const char* solver;
        int count;
    };
    std::vector<Target> targets = {{"fguv0", 2313}};
    if (g_stretch) {
        targets.push_back({"fguvs", 2985});
        targets.push_back({"ffuv0", 16188});
    }
    std::ostringstream detail;
    bool ok = true;
    for (const auto& target : targets) {
        const StartBundle bundle = build_or_load_bundle(target.solver, 1);
        detail << target.solver << ": " << bundle.set.size() << " (expected " << target.count
               << "); ";
        ok = ok && bundle.set.size() == target.count;
    }
    if (!g_stretch) detail << "fguvs/ffuv0 run with --stretch";
    return {7, ok, detail.str(), 0.0};
}

// --- criterion 8: degeneracy robustness ---

Outcome criterion_8() {
    const StartBundle bundle = build_or_load_bundle("calibrated", 11);
    const SolverConfig config = find_solver("calibrated");
    const ParametricSystem& sys = bundle.system;

    double worst_sv = std::numeric_limits<double>::infinity();
    double worst_sv_x = std::numeric_limits<double>::infinity();
    double worst_re = 0.0;
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t seed = 9000 + trial;
        const Scene scene = generate_degenerate_scene(config.scene_config(), seed);
        const Observations obs = project(scene);
        auto [norm_obs, rec] = normalize_observations(obs, config.field_spec(), true);

        // Jacobian conditioning at the ground truth of this degenerate scene
        const Intrinsics k_norm = rec.normalize_intrinsics(scene.intrinsics);
        const auto& depths = *norm_obs.true_depths;
        CVecX x0(sys.n_unknowns);
        const OmegaParams om = omega_params_of(k_norm);
        const double ov[5] = {om.f_star, om.g_star, om.s_star, om.u, om.v};
        for (int k = 0; k < 5; ++k)
            if (sys.omega_slot[k] >= 0) x0[sys.omega_slot[k]] = ov[k];
        for (int i = 0; i < sys.views; ++i)
            for (int p = 0; p < sys.points; ++p) {
                const int slot = sys.depth_unknown(i, p);
                if (slot >= 0) x0[slot] = depths[i][p] / depths[0][0];
            }
        const CVecX p0 = parameter_vector(sys, norm_obs);
        const CertificateReport cert = certify_minimal(sys, p0, x0);
        worst_sv = std::min(worst_sv, cert.min_singular_full);
        worst_sv_x = std::min(worst_sv_x, cert.min_singular_x);

        // end-to-end solve with noiseless exactness
        SolveOptions options;
        options.seed = seed;
        options.threads = g_threads;
        try {
            const InstanceSolution sol = solve_instance(bundle, obs, config.field_spec(), options);
            if (!sol.success()) throw NoPhysicalSolution();
            const MetricReport rep = evaluate_metrics(sol.best(), scene, obs);
            worst_re = std::max(worst_re, rep.re);
        } catch (const Error&) {
            ++failures;
        }
    }
    std::ostringstream detail;
    detail << "100 degenerate-sphere scenes: system Jacobian min singular value " << worst_sv
           << " (> 1e-4; dg/dx alone bottoms at " << worst_sv_x << "), " << failures
           << " solve failures, worst re " << worst_re << " px";
    const bool ok = worst_sv > 1e-4 && failures == 0 && worst_re < 1e-6;
    return {8, ok, detail.str(), 0.0};
}

// --- criterion 9: numerical hygiene ---

Outcome criterion_9() {
    bool ok = true;
    std::ostringstream detail;

    // analytic vs central finite differences, 100 draws per shipped system
    for (const auto& config : solver_configs()) {
        const ParametricSystem sys = config.build();
        Rng rng = seeded_rng(4242);
        double worst = 0.0;
        for (int draw = 0; draw < 100; ++draw) {
            CVecX x(sys.n_unknowns), p(sys.n_params);
            for (int i = 0; i < x.size(); ++i) x[i] = rng.normal_complex();
            for (int i = 0; i < p.size(); ++i) p[i] = rng.normal_complex();
            const CMatX jx = jacobian_x(sys, x, p);
            const CMatX jp = jacobian_p(sys, x, p);

            CMatX fdx(sys.n_equations(), sys.n_unknowns);
            CMatX fdp(sys.n_equations(), sys.n_params);
            const double h = 1e-6;
            for (int c = 0; c < sys.n_unknowns; ++c) {
                CVecX xp = x, xm = x;
                xp[c] += h;
                xm[c] -= h;
                fdx.col(c) = (evaluate(sys, xp, p) - evaluate(sys, xm, p)) / (2.0 * h);
            }
            for (int c = 0; c < sys.n_params; ++c) {
                CVecX pp = p, pm = p;
                pp[c] += h;
                pm[c] -= h;
                fdp.col(c) = (evaluate(sys, x, pp) - evaluate(sys, x, pm)) / (2.0 * h);
            }
            const double scale_x = std::max(1.0, jx.cwiseAbs().maxCoeff());
            const double scale_p = std::max(1.0, jp.cwiseAbs().maxCoeff());
            worst = std::max(worst, (jx - fdx).cwiseAbs().maxCoeff() / scale_x);
            worst = std::max(worst, (jp - fdp).cwiseAbs().maxCoeff() / scale_p);
        }
        detail << config.name << " fd " << worst << "; ";
        ok = ok && worst < 1e-6;
    }

    // omega round trip on 1000 random intrinsics
    Rng rng = seeded_rng(31337);
    double worst_omega = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        Intrinsics k;
        k.f = rng.uniform(0.3, 3.0);
        k.g = rng.uniform(0.3, 3.0);
        k.u = rng.uniform(-0.5, 0.5);
        k.v = rng.uniform(-0.5, 0.5);
        k.s = rng.uniform(-0.3, 0.3);
        if (rng.below(2)) k.f = -k.f;
        if (rng.below(2)) {
            k.g = -k.g;
            k.s = -k.s;
        }
        const Mat3 direct = omega_direct(k);
        const Mat3 via_params = omega_from_params(omega_params_of(k));
        const double scale = direct.cwiseAbs().maxCoeff();
        worst_omega = std::max(worst_omega, (via_params - direct).cwiseAbs().maxCoeff() / scale);
    }
    detail << "omega round trip " << worst_omega;
    ok = ok && worst_omega < 1e-12;
    return {9, ok, detail.str(), 0.0};
}

// --- criterion 10: feasibility table ---

Outcome criterion_10() {
    bool ok = true;
    std::ostringstream detail;

    // every two-view mask with L <= 2 is infeasible
    int infeasible_checked = 0;
    for (int bits = 0; bits < 32; ++bits) {
        std::string mask;
        mask += (bits & 1) ? '1' : 'f';
        mask += (bits & 2) ? '1' : 'g';
        mask += (bits & 4) ? '0' : 'u';
        mask += (bits & 8) ? '0' : 'v';
        mask += (bits & 16) ? '0' : 's';
        const IntrinsicsSpec spec = parse_mask(mask);
        if (spec.linear_constraints() > 2) continue;
        const FeasibilityRow row = feasibility(spec, 2);
        ok = ok && row.status == FeasibilityStatus::Infeasible;
        ++infeasible_checked;
    }
    detail << infeasible_checked << " two-view masks with L<=2 all infeasible; ";

    // the four named masks at M = 3
    struct Expect {
        const char* mask;
        int n_min;
        int drop;
    };
    for (const Expect e : {Expect{"11000", 4, 1}, Expect{"fguv0", 5, 2}, Expect{"ffuv0", 5, 3},
                           Expect{"fguvs", 6, 8}}) {
        const FeasibilityRow row = feasibility(parse_mask(e.mask), 3);
        const bool good = row.n_min == e.n_min && row.n_drop == e.drop &&
                          row.status != FeasibilityStatus::Infeasible;
        detail << e.mask << " N=" << row.n_min << " drop=" << row.n_drop
               << (good ? " ok; " : " WRONG; ");
        ok = ok && good;
    }
    return {10, ok, detail.str(), 0.0};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else if (std::strcmp(argv[i], "--stretch") == 0) {
            g_stretch = true;
        } else if (std::strcmp(argv[i], "--cache") == 0 && i + 1 < argc) {
            g_cache = argv[++i];
        } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
            g_threads = std::stoi(argv[++i]);
        }
    }

    run_criterion(1, only, criterion_1);
    run_criterion(2, only, criterion_2);
    run_criterion(3, only, criterion_3);
    run_criterion(4, only, criterion_4);
    run_criterion(5, only, criterion_5);
    run_criterion(6, only, criterion_6);
    run_criterion(7, only, criterion_7);
    run_criterion(8, only, criterion_8);
    run_criterion(9, only, criterion_9);
    run_criterion(10, only, criterion_10);

    int failed = 0;
    for (const auto& outcome : g_outcomes)
        if (!outcome.passed) ++failed;
    std::printf("%zu criteria run, %d failed\n", g_outcomes.size(), failed);
    return failed == 0 ? 0 : 1;
}
