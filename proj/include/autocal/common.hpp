#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace autocal {

using Real = double;
using Complex = std::complex<double>;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using CVecX = Eigen::VectorXcd;
using CMatX = Eigen::MatrixXcd;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define AUTOCAL_ERROR(Name)                                          \
    struct Name : Error {                                            \
        explicit Name(const std::string& msg = #Name) : Error(msg) {} \
    }

AUTOCAL_ERROR(ZeroFocal);
AUTOCAL_ERROR(ZeroFocalSquare);
AUTOCAL_ERROR(NegativeSquare);
AUTOCAL_ERROR(ShearWithoutV);
AUTOCAL_ERROR(ExhaustedRetries);
AUTOCAL_ERROR(BehindCamera);
AUTOCAL_ERROR(SizeMismatch);
AUTOCAL_ERROR(DimensionMismatch);
AUTOCAL_ERROR(NotOnVariety);
AUTOCAL_ERROR(SingularJacobian);
AUTOCAL_ERROR(NoConvergence);
AUTOCAL_ERROR(TooLarge);
AUTOCAL_ERROR(Infeasible);
AUTOCAL_ERROR(DegeneratePoints);
AUTOCAL_ERROR(NoPhysicalSolution);
AUTOCAL_ERROR(ZeroGroundTruth);
AUTOCAL_ERROR(ZeroCenter);
AUTOCAL_ERROR(NoProgress);
AUTOCAL_ERROR(NoHypothesis);

#undef AUTOCAL_ERROR

// Deterministic RNG. std::mt19937_64 has a pinned bit stream, but the
// standard distributions do not, so the mappings to uniform/normal are
// done by hand to keep seeded runs byte-identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (no cached spare)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double sigma) { return sigma * normal(); }

    Complex normal_complex() { return Complex(normal(), normal()); }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return x % n;
    }

    // derive an independent stream (e.g. per path / per iteration)
    Rng fork(std::uint64_t salt) const {
        std::uint64_t s = state_hash_ ^ (salt * 0x9e3779b97f4a7c15ULL);
        s ^= s >> 33;
        s *= 0xff51afd7ed558ccdULL;
        s ^= s >> 33;
        return Rng(s);
    }

    void set_fork_base(std::uint64_t base) { state_hash_ = base; }

private:
    std::mt19937_64 gen_;
    std::uint64_t state_hash_ = 0x6a09e667f3bcc908ULL;
};

inline Rng seeded_rng(std::uint64_t seed) {
    Rng r(seed);
    r.set_fork_base(seed * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL);
    return r;
}

inline long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace autocal
