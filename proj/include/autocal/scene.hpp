#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "autocal/camera.hpp"
#include "autocal/common.hpp"

namespace autocal {

struct Scene {
    std::vector<Vec3> points;      // world coordinates
    std::vector<Mat3> rotations;   // camera axes as rows, world frame
    std::vector<Vec3> centers;
    Intrinsics intrinsics;

    int num_views() const { return static_cast<int>(rotations.size()); }
    int num_points() const { return static_cast<int>(points.size()); }
};

struct Observations {
    // pixels[i][p] is point p in view i, homogeneous third coordinate 1.
    std::vector<std::vector<Vec2>> pixels;
    // present for synthetic data only
    std::optional<std::vector<std::vector<double>>> true_depths;
    double width = 640.0;
    double height = 480.0;

    int num_views() const { return static_cast<int>(pixels.size()); }
    int num_points() const { return pixels.empty() ? 0 : static_cast<int>(pixels[0].size()); }
};

struct SceneConfig {
    int num_points = 100;
    int num_views = 3;
    Intrinsics intrinsics{330.0, 310.0, 300.0, 250.0, 10.0};
    double width = 640.0;
    double height = 480.0;
    double camera_distance = 2.0;      // first center on the y-axis
    double translation_spread = 0.5;   // per-axis uniform offset of views 2..M
    double min_translation = 0.1;
    double max_angle_deg = 45.0;
    int max_attempts = 10000;
};

namespace detail {

inline Mat3 rot_x(double t) {
    Mat3 r;
    r << 1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t);
    return r;
}
inline Mat3 rot_y(double t) {
    Mat3 r;
    r << std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t);
    return r;
}
inline Mat3 rot_z(double t) {
    Mat3 r;
    r << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
    return r;
}

// Camera rotation whose optical axis (third row) points from center toward
// the origin.
inline Mat3 look_at_origin(const Vec3& center) {
    const Vec3 axis = (-center).normalized();
    Vec3 up(0, 0, 1);
    if (std::abs(axis.dot(up)) > 0.99) up = Vec3(0, 1, 0);
    const Vec3 right = up.cross(axis).normalized();
    const Vec3 down = axis.cross(right);
    Mat3 r;
    r.row(0) = right;
    r.row(1) = down;
    r.row(2) = axis;
    return r;
}

inline Vec3 sample_in_unit_ball(Rng& rng) {
    for (;;) {
        const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        if (p.squaredNorm() <= 1.0) return p;
    }
}

inline bool project_point(const Scene& scene, int view, int point, Vec2* pixel, double* depth) {
    const Vec3 cam = scene.rotations[view] * (scene.points[point] - scene.centers[view]);
    if (cam[2] <= 0.0) return false;
    const Mat3 k = build_k(scene.intrinsics);
    const Vec3 h = k * cam;
    *pixel = Vec2(h[0] / h[2], h[1] / h[2]);
    *depth = cam[2];
    return true;
}

inline bool all_points_visible(const Scene& scene, double width, double height) {
    for (int i = 0; i < scene.num_views(); ++i) {
        for (int p = 0; p < scene.num_points(); ++p) {
            Vec2 px;
            double depth;
            if (!project_point(scene, i, p, &px, &depth)) return false;
            if (px[0] < 0.0 || px[0] > width || px[1] < 0.0 || px[1] > height) return false;
        }
    }
    return true;
}

}  // namespace detail

inline Observations project(const Scene& scene, double width = 640.0, double height = 480.0) {
    Observations obs;
    obs.width = width;
    obs.height = height;
    obs.pixels.assign(scene.num_views(), std::vector<Vec2>(scene.num_points()));
    std::vector<std::vector<double>> depths(scene.num_views(),
                                            std::vector<double>(scene.num_points()));
    for (int i = 0; i < scene.num_views(); ++i) {
        for (int p = 0; p < scene.num_points(); ++p) {
            Vec2 px;
            double d;
            if (!detail::project_point(scene, i, p, &px, &d))
                throw BehindCamera("project: point behind camera");
            obs.pixels[i][p] = px;
            depths[i][p] = d;
        }
    }
    obs.true_depths = std::move(depths);
    return obs;
}

inline Scene generate_scene(const SceneConfig& config, std::uint64_t seed) {
    if (config.num_points < 4) throw Error("generate_scene: need at least 4 points");
    if (config.num_views < 2 || config.num_views > 3)
        throw Error("generate_scene: num_views must be 2 or 3");
    Rng rng = seeded_rng(seed);
    const double max_angle = deg2rad(config.max_angle_deg);
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        Scene scene;
        scene.intrinsics = config.intrinsics;
        scene.points.reserve(config.num_points);
        for (int p = 0; p < config.num_points; ++p)
            scene.points.push_back(detail::sample_in_unit_ball(rng));

        scene.centers.push_back(Vec3(0.0, -config.camera_distance, 0.0));
        for (int i = 1; i < config.num_views; ++i) {
            Vec3 delta;
            int draws = 0;
            do {
                if (++draws > 10000)
                    throw ExhaustedRetries("generate_scene: min_translation unsatisfiable");
                delta = Vec3(rng.uniform(-config.translation_spread, config.translation_spread),
                             rng.uniform(-config.translation_spread, config.translation_spread),
                             rng.uniform(-config.translation_spread, config.translation_spread));
            } while (delta.norm() < config.min_translation);
            scene.centers.push_back(scene.centers[0] + delta);
        }

        for (int i = 0; i < config.num_views; ++i) {
            const Mat3 base = detail::look_at_origin(scene.centers[i]);
            const Mat3 jitter = detail::rot_x(rng.uniform(-max_angle, max_angle)) *
                                detail::rot_y(rng.uniform(-max_angle, max_angle)) *
                                detail::rot_z(rng.uniform(-max_angle, max_angle));
            scene.rotations.push_back(jitter * base);
        }

        if (detail::all_points_visible(scene, config.width, config.height)) return scene;
    }
    throw ExhaustedRetries("generate_scene: no visible configuration found");
}

// Kruppa-degenerate configuration: all centers on a sphere about the origin
// with optical axes through the sphere center, plus a random roll.
inline Scene generate_degenerate_scene(const SceneConfig& config, std::uint64_t seed) {
    if (config.num_points < 4) throw Error("generate_degenerate_scene: need at least 4 points");
    if (config.num_views < 2 || config.num_views > 3)
        throw Error("generate_degenerate_scene: num_views must be 2 or 3");
    Rng rng = seeded_rng(seed);
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        Scene scene;
        scene.intrinsics = config.intrinsics;
        for (int p = 0; p < config.num_points; ++p)
            scene.points.push_back(detail::sample_in_unit_ball(rng));

        for (int i = 0; i < config.num_views; ++i) {
            Vec3 center;
            int draws = 0;
            bool placed = false;
            while (!placed) {
                if (++draws > 10000)
                    throw ExhaustedRetries("generate_degenerate_scene: center placement failed");
                Vec3 dir(rng.normal(), rng.normal(), rng.normal());
                if (dir.norm() < 1e-6) continue;
                center = config.camera_distance * dir.normalized();
                placed = true;
                // keep baselines nondegenerate, as in the generic generator
                for (int j = 0; j < i; ++j)
                    if ((center - scene.centers[j]).norm() < config.min_translation) placed = false;
            }
            scene.centers.push_back(center);
            const Mat3 base = detail::look_at_origin(center);
            scene.rotations.push_back(detail::rot_z(rng.uniform(-kPi, kPi)) * base);
        }

        if (detail::all_points_visible(scene, config.width, config.height)) return scene;
    }
    throw ExhaustedRetries("generate_degenerate_scene: no visible configuration found");
}

inline Observations add_noise(const Observations& obs, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw Error("add_noise: sigma must be nonnegative");
    Observations out;
    out.width = obs.width;
    out.height = obs.height;
    out.pixels = obs.pixels;
    if (sigma == 0.0) {
        out.true_depths = obs.true_depths;
        return out;
    }
    Rng rng = seeded_rng(seed);
    for (auto& view : out.pixels)
        for (auto& px : view) {
            px[0] += rng.normal(sigma);
            px[1] += rng.normal(sigma);
        }
    // perturbed pixels no longer satisfy the projection identity
    out.true_depths.reset();
    return out;
}

// Applies the spec-implied coordinate normalization to every pixel.
inline std::pair<Observations, NormalizationRecord> normalize_observations(
    const Observations& obs, const IntrinsicsSpec& spec, bool prescale_unknowns = false) {
    const NormalizationRecord rec =
        make_normalization_record(spec, obs.width, obs.height, prescale_unknowns);
    Observations out = obs;
    for (auto& view : out.pixels)
        for (auto& px : view) px = rec.apply(px);
    return {out, rec};
}

// --- JSON ---

inline nlohmann::json to_json(const Scene& scene) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : scene.points) points.push_back({p[0], p[1], p[2]});
    nlohmann::json rotations = nlohmann::json::array();
    for (const auto& r : scene.rotations) {
        nlohmann::json row = nlohmann::json::array();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) row.push_back(r(i, j));
        rotations.push_back(row);
    }
    nlohmann::json centers = nlohmann::json::array();
    for (const auto& c : scene.centers) centers.push_back({c[0], c[1], c[2]});
    return {{"points", points},
            {"rotations", rotations},
            {"centers", centers},
            {"intrinsics", to_json(scene.intrinsics)}};
}

inline Scene scene_from_json(const nlohmann::json& j) {
    Scene scene;
    for (const auto& p : j.at("points"))
        scene.points.push_back(Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>()));
    for (const auto& r : j.at("rotations")) {
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) m(i, k) = r[3 * i + k].get<double>();
        scene.rotations.push_back(m);
    }
    for (const auto& c : j.at("centers"))
        scene.centers.push_back(Vec3(c[0].get<double>(), c[1].get<double>(), c[2].get<double>()));
    scene.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    return scene;
}

inline nlohmann::json to_json(const Observations& obs) {
    nlohmann::json pixels = nlohmann::json::array();
    for (const auto& view : obs.pixels) {
        nlohmann::json vrow = nlohmann::json::array();
        for (const auto& px : view) vrow.push_back({px[0], px[1]});
        pixels.push_back(vrow);
    }
    nlohmann::json j = {{"pixels", pixels}, {"image_size", {obs.width, obs.height}}};
    if (obs.true_depths) j["depths"] = *obs.true_depths;
    return j;
}

inline Observations observations_from_json(const nlohmann::json& j) {
    Observations obs;
    const auto& pixels = j.is_array() ? j : j.at("pixels");
    for (const auto& view : pixels) {
        std::vector<Vec2> vrow;
        for (const auto& px : view) vrow.push_back(Vec2(px[0].get<double>(), px[1].get<double>()));
        obs.pixels.push_back(std::move(vrow));
    }
    if (!j.is_array()) {
        if (j.contains("image_size")) {
            obs.width = j["image_size"][0].get<double>();
            obs.height = j["image_size"][1].get<double>();
        }
        if (j.contains("depths")) obs.true_depths = j["depths"].get<std::vector<std::vector<double>>>();
    }
    return obs;
}

}  // namespace autocal
