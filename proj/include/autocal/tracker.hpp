#pragma once

#include <limits>
#include <vector>

#include "autocal/common.hpp"
#include "autocal/parallel.hpp"
#include "autocal/polysys.hpp"

namespace autocal {

struct TrackSettings {
    double newton_tol = 1e-10;
    int max_newton_iters = 8;
    double initial_step = 0.05;
    double min_step = 1e-7;
    double max_step = 0.25;
    double step_growth = 1.5;
    double step_shrink = 0.5;
    int fast_steps_to_grow = 2;  // consecutive fast corrections before growing
    int max_steps = 10000;
    double divergence_bound = 1e8;

    void validate() const {
        if (!(0 < min_step && min_step <= initial_step && initial_step <= max_step &&
              max_step <= 1.0))
            throw Error("TrackSettings: need 0 < min_step <= initial_step <= max_step <= 1");
        if (newton_tol <= 0) throw Error("TrackSettings: newton_tol must be positive");
    }
};

enum class TrackStatus { Success, Diverged, SingularEndpoint, StepLimit };

inline std::string to_string(TrackStatus s) {
    switch (s) {
        case TrackStatus::Success: return "success";
        case TrackStatus::Diverged: return "diverged";
        case TrackStatus::SingularEndpoint: return "singular-endpoint";
        case TrackStatus::StepLimit: return "step-limit";
    }
    return "?";
}

struct TrackResult {
    TrackStatus status = TrackStatus::SingularEndpoint;
    CVecX endpoint;
    double residual = std::numeric_limits<double>::infinity();
    int steps_taken = 0;
};

namespace detail {

// LU with a pivot-ratio singularity guard.
struct LinearSolver {
    Eigen::PartialPivLU<CMatX> lu;

    bool factor(const CMatX& a) {
        lu.compute(a);
        const auto diag = lu.matrixLU().diagonal();
        double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < diag.size(); ++i) {
            const double d = std::abs(diag[i]);
            dmax = std::max(dmax, d);
            dmin = std::min(dmin, d);
        }
        return dmax > 0.0 && dmin > dmax * 1e-14 && std::isfinite(dmax);
    }
};

// Newton iteration; returns true when the residual max-norm drops below tol
// within max_iters. iters_used counts corrector steps actually taken.
inline bool newton_inplace(Evaluator& ev, CVecX& x, const CVecX& p, double tol, int max_iters,
                           int* iters_used, bool* singular) {
    CVecX r;
    CMatX jx;
    LinearSolver solver;
    if (singular) *singular = false;
    for (int it = 0; it <= max_iters; ++it) {
        ev.residual_jacobian(x, p, &r, (it < max_iters) ? &jx : nullptr, nullptr);
        if (!r.allFinite()) return false;
        if (r.cwiseAbs().maxCoeff() < tol) {
            if (iters_used) *iters_used = it;
            return true;
        }
        if (it == max_iters) break;
        if (!solver.factor(jx)) {
            if (singular) *singular = true;
            return false;
        }
        const CVecX dx = solver.lu.solve(r);
        if (!dx.allFinite()) return false;
        x -= dx;
    }
    return false;
}

}  // namespace detail

// Standalone corrector with the failure contract of the spec.
inline CVecX newton_correct(const ParametricSystem& sys, const CVecX& x0, const CVecX& p,
                            double tol = 1e-10, int max_iters = 8) {
    Evaluator ev(sys);
    CVecX x = x0;
    int iters = 0;
    bool singular = false;
    if (detail::newton_inplace(ev, x, p, tol, max_iters, &iters, &singular)) return x;
    if (singular) throw SingularJacobian("newton_correct: singular Jacobian");
    throw NoConvergence("newton_correct: no convergence");
}

namespace detail {

// One homotopy leg p(t) = (1-t) pa + t pb with Euler prediction and Newton
// correction under adaptive steps. steps counts against settings.max_steps
// across legs of the same path.
inline TrackStatus track_leg(Evaluator& ev, CVecX& x, const CVecX& pa, const CVecX& pb,
                             const TrackSettings& st, int* steps) {
    const CVecX dp = pb - pa;
    if (dp.cwiseAbs().maxCoeff() == 0.0) return TrackStatus::Success;

    CVecX r, rhs, v, x_try;
    CMatX jx, jp;
    LinearSolver solver;
    double t = 0.0;
    double h = st.initial_step;
    int fast_run = 0;

    while (t < 1.0) {
        if (*steps >= st.max_steps) return TrackStatus::StepLimit;
        ++(*steps);
        h = std::min(h, 1.0 - t);

        const CVecX p_now = pa + t * dp;
        ev.residual_jacobian(x, p_now, &r, &jx, &jp);
        bool ok = solver.factor(jx);
        CVecX x_pred;
        double pred_move = 0.0;
        if (ok) {
            rhs = jp * dp;
            v = solver.lu.solve(rhs);
            x_pred = x - h * v;  // dx/dt = -Jx^{-1} Jp dp
            pred_move = h * v.cwiseAbs().maxCoeff();
            ok = x_pred.allFinite();
        }
        int iters = 0;
        if (ok) {
            x_try = x_pred;
            const CVecX p_next = pa + (t + h) * dp;
            ok = newton_inplace(ev, x_try, p_next, st.newton_tol, st.max_newton_iters, &iters,
                                nullptr);
        }
        if (ok) {
            // reject corrections out of proportion to the predicted motion;
            // accepting them is how paths jump onto neighboring solutions
            const double correction = (x_try - x_pred).cwiseAbs().maxCoeff();
            const double allowed =
                0.5 * pred_move + 1e-8 * (1.0 + x.cwiseAbs().maxCoeff());
            if (correction > allowed) ok = false;
        }
        if (ok) {
            t += h;
            x = x_try;
            if (x.cwiseAbs().maxCoeff() > st.divergence_bound) return TrackStatus::Diverged;
            if (iters <= 2) {
                if (++fast_run >= st.fast_steps_to_grow) {
                    h = std::min(h * st.step_growth, st.max_step);
                    fast_run = 0;
                }
            } else {
                fast_run = 0;
            }
        } else {
            h *= st.step_shrink;
            fast_run = 0;
            if (h < st.min_step) return TrackStatus::SingularEndpoint;
        }
    }
    return TrackStatus::Success;
}

inline CVecX random_midpoint(const CVecX& pa, const CVecX& pb, Rng& rng) {
    const int m = static_cast<int>(pa.size());
    double sq = 0.0;
    for (int i = 0; i < m; ++i) sq += std::norm(pa[i]) + std::norm(pb[i]);
    const double scale = 0.1 * std::sqrt(sq / (2.0 * m));
    CVecX mid = 0.5 * (pa + pb);
    for (int i = 0; i < m; ++i) mid[i] += scale * rng.normal_complex();
    return mid;
}

}  // namespace detail

// Tracks one solution from p_start to p_end. The default route detours
// through a random complex midpoint so real-to-real homotopies stay clear of
// real discriminant points; pass two_leg = false for already-generic
// endpoints (monodromy loop legs).
inline TrackResult track_path(const ParametricSystem& sys, const CVecX& x_start,
                              const CVecX& p_start, const CVecX& p_end, const TrackSettings& st,
                              Rng rng, bool two_leg = true) {
    st.validate();
    Evaluator ev(sys);
    TrackResult result;
    result.endpoint = x_start;

    auto finish = [&](CVecX x, TrackStatus status, int steps) {
        result.steps_taken = steps;
        if (status == TrackStatus::Success) {
            int iters = 0;
            if (!detail::newton_inplace(ev, x, p_end, st.newton_tol, st.max_newton_iters, &iters,
                                        nullptr)) {
                result.status = TrackStatus::SingularEndpoint;
                result.endpoint = x;
                return;
            }
            CVecX r;
            ev.residual(x, p_end, r);
            result.residual = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
            result.endpoint = x;
            result.status = TrackStatus::Success;
        } else {
            result.status = status;
            result.endpoint = x;
        }
    };

    if ((p_end - p_start).cwiseAbs().maxCoeff() == 0.0) {
        finish(x_start, TrackStatus::Success, 0);
        return result;
    }

    CVecX x = x_start;
    int steps = 0;
    if (two_leg) {
        const CVecX mid = detail::random_midpoint(p_start, p_end, rng);
        TrackStatus s = detail::track_leg(ev, x, p_start, mid, st, &steps);
        if (s != TrackStatus::Success) {
            finish(x, s, steps);
            return result;
        }
        s = detail::track_leg(ev, x, mid, p_end, st, &steps);
        finish(x, s, steps);
    } else {
        const TrackStatus s = detail::track_leg(ev, x, p_start, p_end, st, &steps);
        finish(x, s, steps);
    }
    return result;
}

// Tracks every start independently; results are positionally aligned with
// the starts and deterministic for a fixed seed regardless of thread count.
inline std::vector<TrackResult> track_all(const ParametricSystem& sys,
                                          const std::vector<CVecX>& starts, const CVecX& p_start,
                                          const CVecX& p_end, const TrackSettings& st,
                                          std::uint64_t seed = 0, int threads = 0,
                                          bool two_leg = true) {
    std::vector<TrackResult> results(starts.size());
    const Rng base = seeded_rng(seed);
    parallel_for(
        starts.size(),
        [&](std::size_t i) {
            results[i] = track_path(sys, starts[i], p_start, p_end, st, base.fork(i), two_leg);
        },
        threads);
    return results;
}

}  // namespace autocal
