#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "autocal/metrics.hpp"
#include "autocal/recovery.hpp"
#include "autocal/scene.hpp"
#include "autocal/solver.hpp"

using namespace autocal;

namespace {

// scale of the reconstruction relative to the scene: recovered clouds carry
// the lambda_11 = 1 gauge
std::vector<std::vector<double>> gauge_depths(const Observations& obs) {
    auto depths = *obs.true_depths;
    const double scale = depths[0][0];
    for (auto& view : depths)
        for (auto& d : view) d /= scale;
    return depths;
}

}  // namespace

TEST_CASE("points_from_depths hand case") {
    Observations obs;
    obs.pixels = {{Vec2(0, 0)}};
    const auto pts = points_from_depths({{1.0}}, obs, Intrinsics{1, 1, 0, 0, 0});
    CHECK((pts[0][0] - Vec3(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("ground-truth depths reproduce poses and structure") {
    SceneConfig config;
    config.num_points = 5;
    const Scene scene = generate_scene(config, 77);
    const Observations obs = project(scene);
    const auto depths = gauge_depths(obs);

    const CalibrationResult result = recover_poses(depths, obs, scene.intrinsics);
    const RelativePoses gt = gauge_align(scene);

    CHECK(result.rotations[0].isIdentity(0.0));
    CHECK(result.centers[0].norm() == 0.0);

    const double scale = 1.0 / (*obs.true_depths)[0][0];
    for (int i = 1; i < scene.num_views(); ++i) {
        CHECK((result.rotations[i] - gt.rotations[i]).cwiseAbs().maxCoeff() < 1e-8);
        // centers recover up to the global lambda_11 scale
        CHECK((result.centers[i] - scale * gt.centers[i]).cwiseAbs().maxCoeff() < 1e-8);
    }

    // view-1 cloud matches the scene points up to a similarity (Umeyama)
    Eigen::MatrixXd src(3, scene.num_points()), dst(3, scene.num_points());
    for (int p = 0; p < scene.num_points(); ++p) {
        src.col(p) = result.points[p];
        dst.col(p) = scene.points[p];
    }
    const Eigen::Matrix4d t = Eigen::umeyama(src, dst, true);
    double worst = 0.0;
    for (int p = 0; p < scene.num_points(); ++p) {
        const Vec3 mapped = t.topLeftCorner<3, 3>() * src.col(p) + t.topRightCorner<3, 1>();
        worst = std::max(worst, (mapped - dst.col(p)).norm());
    }
    CHECK(worst < 1e-8);

    // pairwise distances agree across views; that is the depth equation
    const auto clouds = points_from_depths(depths, obs, scene.intrinsics);
    for (int i = 0; i < scene.num_views(); ++i)
        for (int p = 0; p < scene.num_points(); ++p)
            for (int q = p + 1; q < scene.num_points(); ++q) {
                const double d0 = (clouds[0][p] - clouds[0][q]).norm();
                const double di = (clouds[i][p] - clouds[i][q]).norm();
                CHECK(std::abs(d0 - di) < 1e-8);
            }
}

TEST_CASE("recovered rotations are orthogonal even from perturbed depths") {
    SceneConfig config;
    config.num_points = 4;
    const Scene scene = generate_scene(config, 13);
    const Observations obs = project(scene);
    auto depths = gauge_depths(obs);
    Rng rng = seeded_rng(3);
    for (auto& view : depths)
        for (auto& d : view) d *= 1.0 + 0.01 * rng.normal();

    const CalibrationResult result = recover_poses(depths, obs, scene.intrinsics);
    for (const auto& r : result.rotations) {
        CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
        CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("degenerate view-1 geometry is rejected") {
    // all backprojected view-1 points on a line through point 1
    Observations obs;
    obs.pixels.assign(2, std::vector<Vec2>(4));
    for (int p = 0; p < 4; ++p) {
        obs.pixels[0][p] = Vec2(0.1 * p, 0.0);
        obs.pixels[1][p] = Vec2(0.1 * p + 0.01, 0.02);
    }
    std::vector<std::vector<double>> depths(2, std::vector<double>(4, 1.0));
    // view-1 points (0.1p, 0, 1): coplanar rays from collinear pixels are
    // linearly dependent differences
    CHECK_THROWS_AS(recover_poses(depths, obs, Intrinsics{1, 1, 0, 0, 0}), DegeneratePoints);
}

TEST_CASE("select_solution ranks by reprojection error") {
    SceneConfig config;
    config.num_points = 4;
    const Scene scene = generate_scene(config, 15);
    const Observations obs = project(scene);
    const auto depths = gauge_depths(obs);

    const CalibrationResult good = recover_poses(depths, obs, scene.intrinsics);
    auto bad_depths = depths;
    for (auto& view : bad_depths)
        for (auto& d : view) d *= 1.02;
    bad_depths[1][2] *= 1.3;
    const CalibrationResult bad = recover_poses(bad_depths, obs, scene.intrinsics);

    CHECK(select_solution_index({good, bad}, obs) == 0);
    CHECK(select_solution_index({bad, good}, obs) == 1);
    CHECK(select_solution_index({good}, obs) == 0);
    CHECK_THROWS_AS(select_solution({}, obs), NoPhysicalSolution);
}
