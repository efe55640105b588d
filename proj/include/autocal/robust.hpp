#pragma once

#include <numeric>
#include <vector>

#include "autocal/common.hpp"
#include "autocal/solver.hpp"

namespace autocal {

struct MsacSettings {
    int max_iterations = 200;
    double huber_delta = 2.0;       // pixels
    double inlier_threshold = 4.0;  // pixels, truncation point of the score
    std::uint64_t seed = 0;
    int threads = 0;
    TrackSettings track;

    void validate() const {
        if (max_iterations < 1) throw Error("MsacSettings: max_iterations must be >= 1");
        if (huber_delta <= 0) throw Error("MsacSettings: huber_delta must be positive");
    }
};

struct MsacResult {
    CalibrationResult best;
    double score = std::numeric_limits<double>::infinity();
    int iterations_run = 0;
    int hypotheses_scored = 0;
    std::vector<double> hypothesis_scores;  // one per scored hypothesis, in order
};

namespace detail {

inline double huber_loss(double r, double delta) {
    const double a = std::abs(r);
    return a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
}

// DLT triangulation of one track against known cameras, then mean
// reprojection error over all views. Infinity when the point lands behind
// a camera.
inline double track_reprojection_error(const CalibrationResult& hyp,
                                       const std::vector<Vec2>& track_pixels) {
    const int views = static_cast<int>(hyp.rotations.size());
    const Mat3 k = build_k(hyp.intrinsics);
    Eigen::MatrixXd a(2 * views, 4);
    for (int i = 0; i < views; ++i) {
        Eigen::Matrix<double, 3, 4> cam;
        cam.leftCols<3>() = hyp.rotations[i];
        cam.col(3) = -hyp.rotations[i] * hyp.centers[i];
        cam = k * cam;
        const Vec2& px = track_pixels[i];
        a.row(2 * i + 0) = px[0] * cam.row(2) - cam.row(0);
        a.row(2 * i + 1) = px[1] * cam.row(2) - cam.row(1);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const Eigen::Vector4d h = svd.matrixV().col(3);
    if (std::abs(h[3]) < 1e-14) return std::numeric_limits<double>::infinity();
    const Vec3 x(h[0] / h[3], h[1] / h[3], h[2] / h[3]);

    double total = 0.0;
    for (int i = 0; i < views; ++i) {
        const Vec3 cam_pt = hyp.rotations[i] * (x - hyp.centers[i]);
        if (cam_pt[2] <= 0.0) return std::numeric_limits<double>::infinity();
        const Vec3 hpx = k * cam_pt;
        total += (Vec2(hpx[0] / hpx[2], hpx[1] / hpx[2]) - track_pixels[i]).norm();
    }
    return total / views;
}

inline double msac_score(const CalibrationResult& hyp, const Observations& tracks,
                         const MsacSettings& st) {
    const double cap = huber_loss(st.inlier_threshold, st.huber_delta);
    double score = 0.0;
    std::vector<Vec2> track_pixels(tracks.num_views());
    for (int t = 0; t < tracks.num_points(); ++t) {
        for (int i = 0; i < tracks.num_views(); ++i) track_pixels[i] = tracks.pixels[i][t];
        const double r = track_reprojection_error(hyp, track_pixels);
        score += std::isfinite(r) ? std::min(huber_loss(r, st.huber_delta), cap) : cap;
    }
    return score;
}

}  // namespace detail

// MSAC around the minimal solver: sample N tracks, solve, score every
// physical hypothesis against all tracks by truncated Huber reprojection.
inline MsacResult msac_calibrate(const Observations& tracks, const StartBundle& bundle,
                                 const IntrinsicsSpec& field_spec, const MsacSettings& settings) {
    settings.validate();
    const int n_min = bundle.system.points;
    const int n_tracks = tracks.num_points();
    if (tracks.num_views() != bundle.system.views)
        throw DimensionMismatch("msac_calibrate: view count mismatch");
    if (n_tracks < n_min) throw Error("msac_calibrate: not enough tracks");

    MsacResult out;
    const Rng base = seeded_rng(settings.seed);

    for (int iter = 0; iter < settings.max_iterations; ++iter) {
        ++out.iterations_run;
        Rng rng = base.fork(static_cast<std::uint64_t>(iter));

        // uniform sample of n_min distinct tracks (partial Fisher-Yates)
        std::vector<int> pool(n_tracks);
        std::iota(pool.begin(), pool.end(), 0);
        for (int k = 0; k < n_min; ++k) {
            const int j = k + static_cast<int>(rng.below(n_tracks - k));
            std::swap(pool[k], pool[j]);
        }
        Observations sample;
        sample.width = tracks.width;
        sample.height = tracks.height;
        sample.pixels.assign(tracks.num_views(), std::vector<Vec2>(n_min));
        for (int i = 0; i < tracks.num_views(); ++i)
            for (int k = 0; k < n_min; ++k) sample.pixels[i][k] = tracks.pixels[i][pool[k]];

        SolveOptions options;
        options.track = settings.track;
        options.seed = rng.raw();
        options.threads = settings.threads;
        InstanceSolution sol;
        try {
            sol = solve_instance(bundle, sample, field_spec, options);
        } catch (const Error&) {
            continue;
        }

        for (const auto& hyp : sol.candidates) {
            ++out.hypotheses_scored;
            const double score = detail::msac_score(hyp, tracks, settings);
            out.hypothesis_scores.push_back(score);
            if (score < out.score) {
                out.score = score;
                out.best = hyp;
            }
        }
    }

    if (!std::isfinite(out.score))
        throw NoHypothesis("msac_calibrate: no physical hypothesis in any iteration");
    return out;
}

}  // namespace autocal
