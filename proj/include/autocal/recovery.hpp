#pragma once

#include <vector>

#include "autocal/camera.hpp"
#include "autocal/common.hpp"
#include "autocal/scene.hpp"

namespace autocal {

// Euclidean reconstruction recovered from a depth solution, in the gauge
// R1 = I, C1 = 0 with the scale fixed by lambda_11 = 1.
struct CalibrationResult {
    Intrinsics intrinsics;
    std::vector<Mat3> rotations;
    std::vector<Vec3> centers;
    std::vector<Vec3> points;                  // view-1 back-projections
    std::vector<std::vector<double>> depths;   // views x points
    int solution_index = -1;
};

// X_ip = lambda_ip K^{-1} x_ip, per view, in Cartesian coordinates.
inline std::vector<std::vector<Vec3>> points_from_depths(
    const std::vector<std::vector<double>>& depths, const Observations& obs,
    const Intrinsics& k) {
    const Mat3 kinv = k_inverse(k);
    const int views = obs.num_views();
    const int points = obs.num_points();
    std::vector<std::vector<Vec3>> out(views, std::vector<Vec3>(points));
    for (int i = 0; i < views; ++i)
        for (int p = 0; p < points; ++p) {
            const Vec3 ray = kinv * Vec3(obs.pixels[i][p][0], obs.pixels[i][p][1], 1.0);
            out[i][p] = depths[i][p] * ray;
        }
    return out;
}

namespace detail {

inline Mat3 nearest_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
    return u * v.transpose();
}

}  // namespace detail

// Rotations from ratios of centered point triples, projected to SO(3);
// centers follow from the rigid alignment of view-1 and view-i clouds.
inline CalibrationResult recover_poses(const std::vector<std::vector<double>>& depths,
                                       const Observations& obs, const Intrinsics& k) {
    const int views = obs.num_views();
    const int points = obs.num_points();
    if (points < 4) throw DegeneratePoints("recover_poses: need at least 4 points");

    const auto x = points_from_depths(depths, obs, k);

    CalibrationResult result;
    result.intrinsics = k;
    result.depths = depths;
    result.points.assign(x[0].begin(), x[0].end());
    result.rotations.assign(views, Mat3::Identity());
    result.centers.assign(views, Vec3::Zero());

    // differences against point 1; the triple {2,3,4} per the recovery
    // formula, falling back to the best-conditioned triple if degenerate
    auto basis = [&](int view, const std::array<int, 3>& triple) {
        Mat3 m;
        for (int c = 0; c < 3; ++c) m.col(c) = x[view][triple[c]] - x[view][0];
        return m;
    };

    std::array<int, 3> triple = {1, 2, 3};
    {
        auto conditioned = [&](const std::array<int, 3>& t) {
            const Mat3 m = basis(0, t);
            Eigen::JacobiSVD<Mat3> svd(m);
            const double smin = svd.singularValues()(2);
            const double smax = svd.singularValues()(0);
            return smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
        };
        double best = conditioned(triple);
        if (best > 1e12) {
            for (int a = 1; a < points && best > 1e12; ++a)
                for (int b = a + 1; b < points && best > 1e12; ++b)
                    for (int c = b + 1; c < points && best > 1e12; ++c) {
                        const std::array<int, 3> t = {a, b, c};
                        const double cond = conditioned(t);
                        if (cond < best) {
                            best = cond;
                            triple = t;
                        }
                    }
            if (best > 1e12)
                throw DegeneratePoints("recover_poses: view-1 point differences are singular");
        }
    }

    const Mat3 base = basis(0, triple);
    const Mat3 base_inv = base.inverse();
    for (int i = 1; i < views; ++i) {
        const Mat3 raw = basis(i, triple) * base_inv;
        const Mat3 r = detail::nearest_rotation(raw);
        result.rotations[i] = r;
        // translation via point 2, then back to a center
        const Vec3 t = x[i][1] - r * x[0][1];
        result.centers[i] = -r.transpose() * t;
    }
    return result;
}

}  // namespace autocal
