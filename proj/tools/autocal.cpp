// autocal: minimal-relaxation camera autocalibration toolkit.
//
// Subcommands: table, enumerate, certify, solve-offline, simulate,
// calibrate, eval. Every output file gets a sibling <out>.manifest.json
// recording the command, settings, seeds, and wall time.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autocal/metrics.hpp"
#include "autocal/minimality.hpp"
#include "autocal/monodromy.hpp"
#include "autocal/robust.hpp"
#include "autocal/scene.hpp"
#include "autocal/solver.hpp"
#include "autocal/taxonomy.hpp"

using namespace autocal;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "autocal 1.0.0";

struct Manifest {
    std::string command;
    json settings = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    std::string path_for(const std::string& out_path) const { return out_path + ".manifest.json"; }

    void write(const std::string& out_path) {
        const double wall_ms = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
        json j = {{"tool", kVersion},  {"command", command}, {"settings", settings},
                  {"inputs", inputs},  {"outputs", outputs}, {"wall_ms", wall_ms}};
        std::ofstream f(path_for(out_path));
        f << j.dump(2) << "\n";
    }
};

json track_settings_json(const TrackSettings& st) {
    return {{"newton_tol", st.newton_tol},
            {"max_newton_iters", st.max_newton_iters},
            {"initial_step", st.initial_step},
            {"min_step", st.min_step},
            {"max_step", st.max_step},
            {"step_growth", st.step_growth},
            {"step_shrink", st.step_shrink},
            {"max_steps", st.max_steps},
            {"divergence_bound", st.divergence_bound}};
}

std::string rank_string(const CertificateReport& rep) {
    std::ostringstream os;
    os << rep.rank_full << "/" << rep.rank_x << "/" << rep.n;
    return os.str();
}

// the 40 mask patterns of the taxonomy table: 2^5 known/unknown patterns
// with normalized known values, plus the 8 square-pixel tie patterns
std::vector<std::string> table_masks() {
    std::vector<std::string> masks;
    for (int bits = 0; bits < 32; ++bits) {
        std::string m;
        m += (bits & 1) ? '1' : 'f';
        m += (bits & 2) ? '1' : 'g';
        m += (bits & 4) ? '0' : 'u';
        m += (bits & 8) ? '0' : 'v';
        m += (bits & 16) ? '0' : 's';
        masks.push_back(m);
    }
    for (int bits = 0; bits < 8; ++bits) {
        std::string m = "ff";
        m += (bits & 1) ? '0' : 'u';
        m += (bits & 2) ? '0' : 'v';
        m += (bits & 4) ? '0' : 's';
        masks.push_back(m);
    }
    return masks;
}

struct ClassCounts {
    long long raw = -1;
    long long minimal = -1;
};

int cmd_table(const std::string& out_path, bool full, int threads) {
    Manifest manifest;
    manifest.command = "table";
    manifest.settings = {{"full", full}, {"threads", threads}};

    std::map<std::tuple<int, int, int>, ClassCounts> memo;
    auto classes_for = [&](const IntrinsicsSpec& spec, const FeasibilityRow& row) -> ClassCounts {
        const auto key = std::make_tuple(row.views, row.n_min, row.n_drop);
        const auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        ClassCounts counts;
        if (row.raw_colorings <= 200000 || full) {
            const auto raw = enumerate_classes(row.n_min, row.views, row.n_drop, threads);
            counts.raw = static_cast<long long>(raw.size());
            long long minimal = 0;
            for (const auto& rep : raw)
                if (selection_is_minimal(coloring_to_selection(rep, row.views),
                                         normalized_spec(spec), row.n_min, row.views))
                    ++minimal;
            counts.minimal = minimal;
        }
        memo[key] = counts;
        return counts;
    };

    std::ostringstream csv;
    csv << "spec,M,N,L,n,avail,drop,raw,classes,status\n";
    for (const int views : {2, 3}) {
        for (const std::string& mask : table_masks()) {
            const IntrinsicsSpec spec = parse_mask(mask);
            const FeasibilityRow row = feasibility(spec, views);
            csv << mask << "," << views << ",";
            if (row.status == FeasibilityStatus::Infeasible) {
                csv << ",,,,,,," << to_string(row.status) << "\n";
                continue;
            }
            csv << row.n_min << "," << row.linear_constraints << "," << row.n << ","
                << row.n_avail << "," << row.n_drop << "," << row.raw_colorings << ",";
            const ClassCounts counts = classes_for(spec, row);
            if (counts.minimal >= 0) csv << counts.minimal;
            else csv << "-";
            csv << "," << to_string(row.status) << "\n";
        }
    }

    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(out_path);
        if (!f) throw Error("cannot write " + out_path);
        f << "# manifest: " << manifest.path_for(out_path) << "\n" << csv.str();
        manifest.outputs.push_back(out_path);
        manifest.write(out_path);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int cmd_enumerate(const std::string& mask, int views, bool all_classes, bool brute_check,
                  const std::string& out_path, int threads) {
    Manifest manifest;
    manifest.command = "enumerate";
    manifest.settings = {{"mask", mask}, {"views", views}, {"all", all_classes},
                         {"brute_check", brute_check}, {"threads", threads}};

    const IntrinsicsSpec spec = parse_mask(mask);
    const FeasibilityRow row = feasibility(spec, views);
    if (row.status == FeasibilityStatus::Infeasible) {
        std::cerr << "infeasible: " << mask << " with M=" << views << "\n";
        return 2;
    }

    std::cout << mask << " M=" << views << ": N=" << row.n_min << " n=" << row.n
              << " drop=" << row.n_drop << " raw colorings=" << row.raw_colorings << "\n";

    const std::vector<Coloring> raw = enumerate_classes(row.n_min, views, row.n_drop, threads);
    std::vector<Coloring> reps;
    if (all_classes) {
        reps = raw;
    } else {
        for (const auto& rep : raw)
            if (selection_is_minimal(coloring_to_selection(rep, views), normalized_spec(spec),
                                     row.n_min, views))
                reps.push_back(rep);
    }
    std::cout << "isomorphism classes: " << raw.size() << " raw, " << reps.size()
              << (all_classes ? " emitted (all)" : " minimal (emitted)") << "\n";

    if (brute_check) {
        if (row.n_min > 5) {
            std::cerr << "--brute-check needs N <= 5\n";
            return 2;
        }
        for (std::size_t i = 0; i < raw.size(); ++i)
            for (std::size_t j = i + 1; j < raw.size(); ++j)
                if (brute_force_isomorphic(raw[i], raw[j]))
                    throw Error("brute-check failed: representatives are isomorphic");
        std::cout << "brute-check: " << raw.size() << " representatives pairwise distinct\n";
    }

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw Error("cannot write " + out_path);
        out = &file;
    }
    for (std::size_t k = 0; k < reps.size(); ++k) {
        json line = {{"n", row.n_min},
                     {"m", views},
                     {"drop", row.n_drop},
                     {"class_id", static_cast<int>(k)},
                     {"coloring", to_json(reps[k])}};
        (*out) << line.dump() << "\n";
    }
    if (!out_path.empty()) {
        manifest.outputs.push_back(out_path);
        manifest.write(out_path);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

SolverConfig resolve_config(const std::string& solver, const std::string& mask, int class_id,
                            int threads) {
    if (!solver.empty()) return find_solver(solver);
    if (mask.empty()) throw Error("need --solver or --mask");
    const IntrinsicsSpec spec = parse_mask(mask);
    const FeasibilityRow row = feasibility(spec, 3);
    if (row.status == FeasibilityStatus::Infeasible) throw Infeasible("mask is infeasible");
    const std::vector<Coloring> reps =
        enumerate_minimal_classes(normalized_spec(spec), row.n_min, 3, row.n_drop, threads);
    if (class_id < 0 || class_id >= static_cast<int>(reps.size()))
        throw Error("class id out of range (have " + std::to_string(reps.size()) + " classes)");

    SolverConfig config;
    config.name = mask + "#" + std::to_string(class_id);
    config.mask = mask;
    config.points = row.n_min;
    config.views = 3;
    // express the class as drops from the all-B coloring
    const Coloring& c = reps[class_id];
    for (int p = 0; p < c.n_points; ++p)
        for (int q = p + 1; q < c.n_points; ++q) {
            const Color col = c.color(p, q);
            if (col == Color::G || col == Color::W) config.dropped.push_back({0, p, q});
            if (col == Color::R || col == Color::W) config.dropped.push_back({1, p, q});
        }
    config.synthetic_intrinsics = find_solver("fguvs").synthetic_intrinsics;
    if (spec.s().kind == SlotKind::Known) config.synthetic_intrinsics.s = 0.0;
    if (spec.g().kind == SlotKind::TiedToF)
        config.synthetic_intrinsics.g = config.synthetic_intrinsics.f;
    if (spec.u().kind == SlotKind::Known) config.synthetic_intrinsics.u = 300.0;
    if (spec.v().kind == SlotKind::Known) config.synthetic_intrinsics.v = 250.0;
    return config;
}

int cmd_certify(const std::string& solver, const std::string& mask, int class_id,
                std::uint64_t seed, int threads) {
    const SolverConfig config = resolve_config(solver, mask, class_id, threads);
    const ParametricSystem sys = config.build();
    const SeedPair pair = seed_pair(sys, config.field_spec(), config.scene_config(), seed);
    const CertificateReport rep = certify_minimal(sys, pair.p0, pair.x0);
    std::cout << "system: " << config.name << " (n=" << sys.n_unknowns
              << ", equations=" << sys.n_equations() << ")\n";
    std::cout << "rank(dg/dp | dg/dx) = " << rep.rank_full << "\n";
    std::cout << "rank(dg/dx)        = " << rep.rank_x << "\n";
    std::cout << "min singular value = " << rep.min_singular_x << "\n";
    std::cout << "certificate: " << (rep.passed ? "PASSED" : "FAILED") << "\n";
    return rep.passed ? 0 : 1;
}

int cmd_solve_offline(const std::string& solver, const std::string& mask, int class_id,
                      const std::string& out_path, std::uint64_t seed, int stall,
                      std::optional<int> target, int max_loops, const TrackSettings& track,
                      int threads) {
    Manifest manifest;
    manifest.command = "solve-offline";

    const SolverConfig config = resolve_config(solver, mask, class_id, threads);
    const ParametricSystem sys = config.build();
    const SeedPair pair = seed_pair(sys, config.field_spec(), config.scene_config(), seed);

    const CertificateReport cert = certify_minimal(sys, pair.p0, pair.x0);
    std::cout << "certificate: " << (cert.passed ? "passed" : "FAILED") << " (rank "
              << rank_string(cert) << ", min singular " << cert.min_singular_x << ")\n";

    MonodromySettings ms;
    ms.seed = seed;
    ms.threads = threads;
    ms.stall_loops = stall;
    ms.target_count = target;
    ms.max_loops = max_loops;
    ms.track = track;

    SolutionSet set = monodromy_solve(sys, pair, ms);
    std::cout << "monodromy: " << set.size() << " solutions\n";
    int lost = 0;
    set = reanchor(sys, set, ms, &lost);
    std::cout << "re-anchored: " << set.size() << " solutions (" << lost << " lost)\n";

    StartBundle bundle;
    bundle.system = sys;
    bundle.set = std::move(set);
    bundle.settings_echo = {{"seed", seed},
                            {"stall_loops", stall},
                            {"max_loops", max_loops},
                            {"solver", config.name},
                            {"track", track_settings_json(track)}};
    if (target) bundle.settings_echo["target_count"] = *target;
    bundle.settings_echo["manifest"] = manifest.path_for(out_path);
    save_bundle(out_path, bundle);
    manifest.settings = bundle.settings_echo;
    manifest.outputs.push_back(out_path);
    manifest.write(out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_simulate(const std::string& solver, std::uint64_t seed, double sigma, int points,
                 bool degenerate, const std::string& out_path, const std::string& scene_path) {
    Manifest manifest;
    manifest.command = "simulate";
    manifest.settings = {{"solver", solver}, {"seed", seed},   {"sigma", sigma},
                         {"points", points}, {"degenerate", degenerate}};

    const SolverConfig config = find_solver(solver);
    SceneConfig sc = config.scene_config();
    if (points > 0) sc.num_points = points;
    const Scene scene = degenerate ? generate_degenerate_scene(sc, seed) : generate_scene(sc, seed);
    Observations obs = project(scene, sc.width, sc.height);
    if (sigma > 0.0) obs = add_noise(obs, sigma, seed ^ 0x5deece66dULL);

    json obs_json = to_json(obs);
    obs_json["manifest"] = manifest.path_for(out_path);
    std::ofstream f(out_path);
    if (!f) throw Error("cannot write " + out_path);
    f << obs_json.dump(2) << "\n";
    manifest.outputs.push_back(out_path);

    if (!scene_path.empty()) {
        json scene_json = to_json(scene);
        scene_json["manifest"] = manifest.path_for(out_path);
        std::ofstream sf(scene_path);
        if (!sf) throw Error("cannot write " + scene_path);
        sf << scene_json.dump(2) << "\n";
        manifest.outputs.push_back(scene_path);
    }
    manifest.write(out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

json result_to_json(const CalibrationResult& result) {
    json rotations = json::array();
    for (const auto& r : result.rotations) {
        json row = json::array();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) row.push_back(r(i, j));
        rotations.push_back(row);
    }
    json centers = json::array();
    for (const auto& c : result.centers) centers.push_back({c[0], c[1], c[2]});
    json points = json::array();
    for (const auto& p : result.points) points.push_back({p[0], p[1], p[2]});
    return {{"intrinsics", to_json(result.intrinsics)},
            {"rotations", rotations},
            {"centers", centers},
            {"points", points},
            {"depths", result.depths},
            {"solution_index", result.solution_index}};
}

int cmd_calibrate(const std::string& bundle_path, const std::string& obs_path, bool use_msac,
                  int iters, double huber, double inlier, std::uint64_t seed,
                  const std::string& out_path, const std::string& scene_path,
                  const TrackSettings& track, int threads) {
    Manifest manifest;
    manifest.command = "calibrate";
    manifest.inputs = {bundle_path, obs_path};
    manifest.settings = {{"msac", use_msac},           {"iters", iters},
                         {"huber_delta", huber},       {"inlier_threshold", inlier},
                         {"seed", seed},               {"track", track_settings_json(track)}};

    const StartBundle bundle = load_bundle(bundle_path);
    std::ifstream in(obs_path);
    if (!in) throw Error("cannot read " + obs_path);
    json obs_json;
    in >> obs_json;
    const Observations obs = observations_from_json(obs_json);

    // the bundle's spec stores normalized known values; for field data the
    // known values come from the solver protocol defaults
    const IntrinsicsSpec field_spec =
        spec_with_values(bundle.system.spec, find_solver("fguvs").synthetic_intrinsics);

    CalibrationResult best;
    double score = -1.0;
    if (use_msac) {
        MsacSettings settings;
        settings.max_iterations = iters;
        settings.huber_delta = huber;
        settings.inlier_threshold = inlier;
        settings.seed = seed;
        settings.threads = threads;
        settings.track = track;
        const MsacResult res = msac_calibrate(obs, bundle, field_spec, settings);
        best = res.best;
        score = res.score;
        std::cout << "msac: " << res.iterations_run << " iterations, " << res.hypotheses_scored
                  << " hypotheses, best score " << score << "\n";
    } else {
        SolveOptions options;
        options.seed = seed;
        options.threads = threads;
        options.track = track;
        const InstanceSolution sol = solve_instance(bundle, obs, field_spec, options);
        std::cout << "paths: " << sol.paths_tracked << " tracked, " << sol.path_failures
                  << " failed; physical candidates: " << sol.candidates.size() << "\n";
        if (!sol.success()) throw NoPhysicalSolution("calibrate: no physical solution");
        best = sol.best();
    }

    const Intrinsics k = best.intrinsics;
    std::cout << "K: f=" << k.f << " g=" << k.g << " u=" << k.u << " v=" << k.v << " s=" << k.s
              << "\n";
    std::cout << "reprojection: " << reprojection(best, obs, ReprojectionMode::EstimatedPoses)
              << " px\n";

    if (!scene_path.empty()) {
        std::ifstream sf(scene_path);
        if (!sf) throw Error("cannot read " + scene_path);
        json scene_json;
        sf >> scene_json;
        const Scene scene = scene_from_json(scene_json);
        const MetricReport rep = evaluate_metrics(best, scene, obs);
        std::cout << "vs ground truth: delta_fg=" << rep.delta_fg << " delta_uv=" << rep.delta_uv
                  << " delta_s=" << rep.delta_s << " re=" << rep.re << " re_gt=" << rep.re_gt
                  << " eps_r=" << rep.eps_r << " eps_c=" << rep.eps_c << "\n";
        manifest.inputs.push_back(scene_path);
    }

    if (!out_path.empty()) {
        json out = result_to_json(best);
        if (score >= 0) out["msac_score"] = score;
        out["manifest"] = manifest.path_for(out_path);
        std::ofstream f(out_path);
        if (!f) throw Error("cannot write " + out_path);
        f << out.dump(2) << "\n";
        manifest.outputs.push_back(out_path);
        manifest.write(out_path);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& solver, const std::string& bundle_path, int trials,
             const std::string& sigma_list, std::uint64_t seed, const std::string& out_path,
             const TrackSettings& track, int threads) {
    Manifest manifest;
    manifest.command = "eval";
    manifest.inputs = {bundle_path};
    manifest.settings = {{"solver", solver},   {"trials", trials}, {"sigmas", sigma_list},
                         {"seed", seed},       {"track", track_settings_json(track)}};

    const SolverConfig config = find_solver(solver);
    const StartBundle bundle = load_bundle(bundle_path);
    if (bundle.system.points != config.points)
        throw Error("bundle and solver disagree on the point count");

    std::vector<double> sigmas;
    {
        std::stringstream ss(sigma_list);
        std::string item;
        while (std::getline(ss, item, ',')) sigmas.push_back(std::stod(item));
    }

    std::ostringstream csv;
    csv << "seed,sigma,solver,delta_fg,delta_uv,delta_s,re,re_gt,eps_r,eps_c,status\n";
    for (const double sigma : sigmas) {
        for (int trial = 0; trial < trials; ++trial) {
            const std::uint64_t scene_seed = seed + 1000003ULL * trial;
            const Scene scene = generate_scene(config.scene_config(), scene_seed);
            Observations obs = project(scene);
            if (sigma > 0.0) obs = add_noise(obs, sigma, scene_seed ^ 0xabcdefULL);

            csv << scene_seed << "," << sigma << "," << solver << ",";
            try {
                SolveOptions options;
                options.seed = scene_seed;
                options.threads = threads;
                options.track = track;
                const InstanceSolution sol =
                    solve_instance(bundle, obs, config.field_spec(), options);
                if (!sol.success()) throw NoPhysicalSolution();
                const MetricReport rep = evaluate_metrics(sol.best(), scene, obs);
                csv << rep.delta_fg << "," << rep.delta_uv << "," << rep.delta_s << "," << rep.re
                    << "," << rep.re_gt << "," << rep.eps_r << "," << rep.eps_c << ",ok\n";
            } catch (const Error&) {
                csv << ",,,,,,,fail\n";
            }
        }
    }

    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(out_path);
        if (!f) throw Error("cannot write " + out_path);
        f << "# manifest: " << manifest.path_for(out_path) << "\n" << csv.str();
        manifest.outputs.push_back(out_path);
        manifest.write(out_path);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) +
                 " - enumerate, certify, and solve minimal camera autocalibration relaxations"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = hardware)")->capture_default_str();

    TrackSettings track;
    app.add_option("--newton-tol", track.newton_tol, "corrector residual tolerance");
    app.add_option("--max-steps", track.max_steps, "tracking step limit per path");
    app.add_option("--min-step", track.min_step, "minimum homotopy step");
    app.add_option("--max-step", track.max_step, "maximum homotopy step");

    auto* table = app.add_subcommand("table", "feasibility table over all mask patterns");
    std::string table_out;
    bool table_full = false;
    table->add_option("--out", table_out, "CSV output path");
    table->add_flag("--full", table_full, "also enumerate the heavy fguvs class count");

    auto* enumerate = app.add_subcommand("enumerate", "isomorphism classes of relaxations");
    std::string enum_mask;
    int enum_views = 3;
    bool enum_all = false, enum_brute = false;
    std::string enum_out;
    enumerate->add_option("--mask", enum_mask, "intrinsics mask, e.g. fguvs, ffuv0, 11000")
        ->required();
    enumerate->add_option("--views", enum_views, "number of views (2 or 3)");
    enumerate->add_flag("--all", enum_all, "emit all classes, not only minimal ones");
    enumerate->add_flag("--brute-check", enum_brute, "cross-validate with the factorial oracle");
    enumerate->add_option("--out", enum_out, "JSONL output path");

    auto* certify =
        app.add_subcommand("certify", "rank-condition certificate at a synthetic point");
    std::string cert_solver, cert_mask;
    int cert_class = 0;
    certify->add_option("--solver", cert_solver, "shipped solver name");
    certify->add_option("--mask", cert_mask, "intrinsics mask (with --class-id)");
    certify->add_option("--class-id", cert_class, "class index from enumerate");

    auto* offline = app.add_subcommand("solve-offline", "monodromy start-system bundle");
    std::string off_solver, off_mask, off_out = "bundle.json";
    int off_class = 0, off_stall = MonodromySettings{}.stall_loops, off_max_loops = 500;
    int off_target = -1;
    offline->add_option("--solver", off_solver, "shipped solver name");
    offline->add_option("--mask", off_mask, "intrinsics mask (with --class-id)");
    offline->add_option("--class-id", off_class, "class index from enumerate");
    offline->add_option("--out", off_out, "bundle output path")->required();
    offline->add_option("--stall", off_stall, "stop after this many barren loops");
    offline->add_option("--target", off_target, "stop at this solution count");
    offline->add_option("--max-loops", off_max_loops, "loop budget");

    auto* simulate = app.add_subcommand("simulate", "synthetic scene and observations");
    std::string sim_solver = "calibrated", sim_out = "obs.json", sim_scene;
    double sim_sigma = 0.0;
    int sim_points = 0;
    bool sim_degenerate = false;
    simulate->add_option("--solver", sim_solver, "solver whose protocol to follow");
    simulate->add_option("--sigma", sim_sigma, "pixel noise standard deviation");
    simulate->add_option("--points", sim_points, "override point count");
    simulate->add_flag("--degenerate", sim_degenerate, "Kruppa-degenerate sphere configuration");
    simulate->add_option("--out", sim_out, "observations JSON path")->required();
    simulate->add_option("--scene-out", sim_scene, "ground-truth scene JSON path");

    auto* calibrate = app.add_subcommand("calibrate", "solve an instance from a bundle");
    std::string cal_bundle, cal_obs, cal_out, cal_scene;
    bool cal_msac = false;
    int cal_iters = 200;
    double cal_huber = 2.0, cal_inlier = 4.0;
    calibrate->add_option("--bundle", cal_bundle, "start-system bundle")->required();
    calibrate->add_option("--obs,--tracks", cal_obs, "observations/tracks JSON")->required();
    calibrate->add_flag("--msac", cal_msac, "robust MSAC wrapper over the tracks");
    calibrate->add_option("--iters", cal_iters, "MSAC iteration limit");
    calibrate->add_option("--huber", cal_huber, "Huber delta in pixels");
    calibrate->add_option("--inlier", cal_inlier, "inlier threshold in pixels");
    calibrate->add_option("--out", cal_out, "result JSON path");
    calibrate->add_option("--scene", cal_scene, "ground-truth scene JSON for metrics");

    auto* eval = app.add_subcommand("eval", "metric CSV over synthetic trials");
    std::string eval_solver, eval_bundle, eval_out;
    std::string eval_sigmas = "0,0.2,0.4,0.6,0.8,1.0";
    int eval_trials = 10;
    eval->add_option("--solver", eval_solver, "shipped solver name")->required();
    eval->add_option("--bundle", eval_bundle, "start-system bundle")->required();
    eval->add_option("--trials", eval_trials, "trials per sigma");
    eval->add_option("--sigmas", eval_sigmas, "comma-separated noise grid");
    eval->add_option("--out", eval_out, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    }

    try {
        if (*table) return cmd_table(table_out, table_full, threads);
        if (*enumerate)
            return cmd_enumerate(enum_mask, enum_views, enum_all, enum_brute, enum_out, threads);
        if (*certify) return cmd_certify(cert_solver, cert_mask, cert_class, seed, threads);
        if (*offline)
            return cmd_solve_offline(
                off_solver, off_mask, off_class, off_out, seed, off_stall,
                off_target >= 0 ? std::optional<int>(off_target) : std::nullopt, off_max_loops,
                track, threads);
        if (*simulate)
            return cmd_simulate(sim_solver, seed, sim_sigma, sim_points, sim_degenerate, sim_out,
                                sim_scene);
        if (*calibrate)
            return cmd_calibrate(cal_bundle, cal_obs, cal_msac, cal_iters, cal_huber, cal_inlier,
                                 seed, cal_out, cal_scene, track, threads);
        if (*eval)
            return cmd_eval(eval_solver, eval_bundle, eval_trials, eval_sigmas, seed, eval_out,
                            track, threads);
    } catch (const Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
