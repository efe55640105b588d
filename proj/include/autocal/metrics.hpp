#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "autocal/camera.hpp"
#include "autocal/common.hpp"
#include "autocal/recovery.hpp"
#include "autocal/scene.hpp"

namespace autocal {

struct MetricReport {
    double delta_fg = 0.0;
    double delta_uv = 0.0;
    double delta_s = 0.0;
    double re = 0.0;     // pixels, estimated poses
    double re_gt = 0.0;  // pixels, ground-truth poses
    double eps_r = 0.0;  // degrees
    double eps_c = 0.0;  // degrees
};

inline double delta_fg(const Intrinsics& est, const Intrinsics& gt) {
    if (gt.f == 0.0 || gt.g == 0.0) throw ZeroGroundTruth("delta_fg: zero ground-truth focal");
    return 0.5 * (std::abs(est.f - gt.f) / std::abs(gt.f) + std::abs(est.g - gt.g) / std::abs(gt.g));
}

inline double delta_uv(const Intrinsics& est, const Intrinsics& gt) {
    if (gt.u == 0.0 || gt.v == 0.0)
        throw ZeroGroundTruth("delta_uv: zero ground-truth principal point");
    return 0.5 * (std::abs(est.u - gt.u) / std::abs(gt.u) + std::abs(est.v - gt.v) / std::abs(gt.v));
}

inline double delta_s(const Intrinsics& est, const Intrinsics& gt) {
    if (gt.f + gt.g == 0.0) throw ZeroGroundTruth("delta_s: zero ground-truth focal sum");
    return 2.0 * std::abs(est.s - gt.s) / std::abs(gt.f + gt.g);
}

namespace detail {

inline double clamped_acos_deg(double x) {
    // floating-point traces and dot products exceed [-1,1] by ulps
    x = std::min(1.0, std::max(-1.0, x));
    return rad2deg(std::acos(x));
}

}  // namespace detail

// Ground-truth poses expressed relative to camera 1 (the estimation gauge).
struct RelativePoses {
    std::vector<Mat3> rotations;
    std::vector<Vec3> centers;
};

inline RelativePoses gauge_align(const Scene& scene) {
    RelativePoses out;
    const Mat3 r1 = scene.rotations[0];
    const Vec3 c1 = scene.centers[0];
    for (int i = 0; i < scene.num_views(); ++i) {
        out.rotations.push_back(scene.rotations[i] * r1.transpose());
        out.centers.push_back(r1 * (scene.centers[i] - c1));
    }
    return out;
}

enum class ReprojectionMode { EstimatedPoses, GtPoses };

// Mean L2 pixel error of reprojecting the view-1 back-projections through
// views 2..M. Points behind a camera are skipped and counted.
inline double reprojection(const CalibrationResult& est, const Observations& obs,
                           ReprojectionMode mode, const RelativePoses* gt = nullptr,
                           int* skipped = nullptr) {
    const int views = obs.num_views();
    const int points = obs.num_points();
    if (views < 2) throw Error("reprojection: need at least two views");
    if (static_cast<int>(est.points.size()) != points ||
        static_cast<int>(est.rotations.size()) != views)
        throw DimensionMismatch("reprojection: result and observations disagree in shape");
    if (mode == ReprojectionMode::GtPoses && gt == nullptr)
        throw Error("reprojection: ground-truth poses required");

    const Mat3 k = build_k(est.intrinsics);
    double total = 0.0;
    int used = 0;
    int behind = 0;
    for (int i = 1; i < views; ++i) {
        const Mat3& r = mode == ReprojectionMode::EstimatedPoses ? est.rotations[i]
                                                                 : gt->rotations[i];
        const Vec3& c = mode == ReprojectionMode::EstimatedPoses ? est.centers[i] : gt->centers[i];
        for (int p = 0; p < points; ++p) {
            const Vec3 cam = r * (est.points[p] - c);
            if (cam[2] <= 0.0) {
                ++behind;
                continue;
            }
            const Vec3 h = k * cam;
            const Vec2 proj(h[0] / h[2], h[1] / h[2]);
            total += (proj - obs.pixels[i][p]).norm();
            ++used;
        }
    }
    if (skipped) *skipped = behind;
    if (used == 0) return std::numeric_limits<double>::infinity();
    // normalized by the full N (M-1) count so skipped points do not inflate
    return total / static_cast<double>(points * (views - 1));
}

// (eps_r, eps_c) in degrees, averaged over views 2..M.
inline std::pair<double, double> angular_errors(const CalibrationResult& est,
                                                const RelativePoses& gt) {
    const int views = static_cast<int>(est.rotations.size());
    if (views < 2) throw Error("angular_errors: need at least two views");
    double sum_r = 0.0, sum_c = 0.0;
    for (int i = 1; i < views; ++i) {
        const double tr = (gt.rotations[i].transpose() * est.rotations[i]).trace();
        sum_r += std::abs(detail::clamped_acos_deg((tr - 1.0) / 2.0));
        const double ngt = gt.centers[i].norm();
        const double nest = est.centers[i].norm();
        if (ngt == 0.0 || nest == 0.0) throw ZeroCenter("angular_errors: zero camera center");
        sum_c += std::abs(detail::clamped_acos_deg(gt.centers[i].dot(est.centers[i]) / (ngt * nest)));
    }
    return {sum_r / (views - 1), sum_c / (views - 1)};
}

inline MetricReport evaluate_metrics(const CalibrationResult& est, const Scene& scene,
                                     const Observations& obs) {
    const RelativePoses gt = gauge_align(scene);
    MetricReport rep;
    rep.delta_fg = delta_fg(est.intrinsics, scene.intrinsics);
    rep.delta_uv = delta_uv(est.intrinsics, scene.intrinsics);
    rep.delta_s = delta_s(est.intrinsics, scene.intrinsics);
    rep.re = reprojection(est, obs, ReprojectionMode::EstimatedPoses);
    rep.re_gt = reprojection(est, obs, ReprojectionMode::GtPoses, &gt);
    const auto [er, ec] = angular_errors(est, gt);
    rep.eps_r = er;
    rep.eps_c = ec;
    return rep;
}

}  // namespace autocal
