#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "autocal/tracker.hpp"

using namespace autocal;

namespace {

// x^2 - p as a one-unknown, one-parameter system
ParametricSystem toy_square_root() {
    ParametricSystem sys;
    sys.n_unknowns = 1;
    sys.n_params = 1;
    slp::Builder b;
    const auto x = b.var(0);
    const auto p = b.var(1);
    sys.equations.push_back(b.finish(b.sub(b.mul(x, x), p)));
    sys.unknown_names = {"x"};
    return sys;
}

// two-unknown system { x0^2 - p0, x0 x1 - p1 }
ParametricSystem toy_pair() {
    ParametricSystem sys;
    sys.n_unknowns = 2;
    sys.n_params = 2;
    {
        slp::Builder b;
        sys.equations.push_back(b.finish(b.sub(b.mul(b.var(0), b.var(0)), b.var(2))));
    }
    {
        slp::Builder b;
        sys.equations.push_back(b.finish(b.sub(b.mul(b.var(0), b.var(1)), b.var(3))));
    }
    sys.unknown_names = {"x0", "x1"};
    return sys;
}

CVecX cvec(std::initializer_list<Complex> vals) {
    CVecX v(static_cast<int>(vals.size()));
    int i = 0;
    for (const Complex c : vals) v[i++] = c;
    return v;
}

}  // namespace

TEST_CASE("newton_correct on the toy root") {
    const ParametricSystem sys = toy_square_root();

    SUBCASE("converges quadratically from a nearby guess") {
        const CVecX x = newton_correct(sys, cvec({2.1}), cvec({4.0}), 1e-12, 8);
        CHECK(std::abs(x[0] - 2.0) < 1e-12);
    }
    SUBCASE("an exact solution is returned unchanged") {
        const CVecX x0 = cvec({2.0});
        const CVecX x = newton_correct(sys, x0, cvec({4.0}), 1e-10, 8);
        CHECK(x[0] == x0[0]);
    }
    SUBCASE("far-off starts with a tight budget fail") {
        CHECK_THROWS_AS(newton_correct(sys, cvec({100.0}), cvec({4.0}), 1e-12, 2), NoConvergence);
    }
    SUBCASE("singular Jacobian is reported") {
        CHECK_THROWS_AS(newton_correct(sys, cvec({0.0}), cvec({4.0}), 1e-12, 8),
                        SingularJacobian);
    }
}

TEST_CASE("track_path basics") {
    const ParametricSystem sys = toy_square_root();
    TrackSettings st;

    SUBCASE("identical endpoints are a no-op") {
        const TrackResult r =
            track_path(sys, cvec({1.0}), cvec({1.0}), cvec({1.0}), st, seeded_rng(1));
        CHECK(r.status == TrackStatus::Success);
        CHECK(r.endpoint[0] == Complex(1.0));
        CHECK(r.steps_taken == 0);
    }
    SUBCASE("tracks along the continuous branch") {
        const TrackResult r =
            track_path(sys, cvec({1.0}), cvec({1.0}), cvec({4.0}), st, seeded_rng(2));
        REQUIRE(r.status == TrackStatus::Success);
        CHECK(std::abs(r.endpoint[0] - 2.0) < 1e-8);
        CHECK(r.residual < st.newton_tol);
    }
    SUBCASE("the other branch stays separate") {
        const TrackResult r =
            track_path(sys, cvec({-1.0}), cvec({1.0}), cvec({4.0}), st, seeded_rng(3));
        REQUIRE(r.status == TrackStatus::Success);
        CHECK(std::abs(r.endpoint[0] + 2.0) < 1e-8);
    }
    SUBCASE("success endpoints are Newton-stationary") {
        const TrackResult r =
            track_path(sys, cvec({1.0}), cvec({1.0}), cvec({Complex(2.0, 1.5)}), st,
                       seeded_rng(4));
        REQUIRE(r.status == TrackStatus::Success);
        const CVecX polished = newton_correct(sys, r.endpoint, cvec({Complex(2.0, 1.5)}),
                                              st.newton_tol, 8);
        CHECK((polished - r.endpoint).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("shrinking min_step does not move success endpoints") {
        TrackSettings tight = st;
        tight.min_step /= 10.0;
        const CVecX target = cvec({Complex(3.0, -2.0)});
        const TrackResult a =
            track_path(sys, cvec({1.0}), cvec({1.0}), target, st, seeded_rng(5));
        const TrackResult b =
            track_path(sys, cvec({1.0}), cvec({1.0}), target, tight, seeded_rng(5));
        REQUIRE(a.status == TrackStatus::Success);
        REQUIRE(b.status == TrackStatus::Success);
        CHECK((a.endpoint - b.endpoint).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("settings are validated") {
        TrackSettings bad;
        bad.min_step = 0.5;
        bad.initial_step = 0.05;
        CHECK_THROWS_AS(
            track_path(sys, cvec({1.0}), cvec({1.0}), cvec({4.0}), bad, seeded_rng(6)), Error);
    }
}

TEST_CASE("track_all aligns results with starts") {
    const ParametricSystem sys = toy_square_root();
    TrackSettings st;

    SUBCASE("empty starts give empty results") {
        CHECK(track_all(sys, {}, cvec({1.0}), cvec({4.0}), st).empty());
    }

    SUBCASE("positional alignment and determinism across thread counts") {
        const std::vector<CVecX> starts = {cvec({1.0}), cvec({-1.0})};
        const auto r1 = track_all(sys, starts, cvec({1.0}), cvec({4.0}), st, 99, 1);
        const auto r2 = track_all(sys, starts, cvec({1.0}), cvec({4.0}), st, 99, 2);
        REQUIRE(r1.size() == 2);
        REQUIRE(r2.size() == 2);
        CHECK(std::abs(r1[0].endpoint[0] - 2.0) < 1e-8);
        CHECK(std::abs(r1[1].endpoint[0] + 2.0) < 1e-8);
        for (int i = 0; i < 2; ++i) {
            CHECK(r1[i].endpoint[0] == r2[i].endpoint[0]);
            CHECK(r1[i].steps_taken == r2[i].steps_taken);
        }
    }
}

TEST_CASE("tracking a two-unknown system") {
    const ParametricSystem sys = toy_pair();
    TrackSettings st;
    // start: x = (1, 1) at p = (1, 1); target p = (4, 6) -> x = (2, 3)
    const TrackResult r = track_path(sys, cvec({1.0, 1.0}), cvec({1.0, 1.0}),
                                     cvec({4.0, 6.0}), st, seeded_rng(7));
    REQUIRE(r.status == TrackStatus::Success);
    CHECK(std::abs(r.endpoint[0] - 2.0) < 1e-8);
    CHECK(std::abs(r.endpoint[1] - 3.0) < 1e-8);
}
