#pragma once

#include <array>
#include <string>
#include <vector>

#include "autocal/camera.hpp"
#include "autocal/common.hpp"
#include "autocal/slp.hpp"
#include "autocal/taxonomy.hpp"

namespace autocal {

// Denominator-cleared depth equations d_{1,j,pq} as straight-line programs.
// Unknowns come first (unknown omega parameters in f*,g*,s*,u,v order, then
// depths lambda_ip for (i,p) != (1,1) in view-major order with lambda_11 = 1),
// followed by the pixel parameters, two per view-point in view-major order.
struct ParametricSystem {
    IntrinsicsSpec spec;  // known slots carry the values substituted into omega
    int views = 0;
    int points = 0;
    EquationSelection selection;

    int n_unknowns = 0;
    int n_params = 0;

    std::array<int, 5> omega_slot{-1, -1, -1, -1, -1};  // f*, g*, s*, u, v
    std::array<double, 5> omega_const{1, 1, 0, 0, 0};
    std::vector<int> depth_slot;  // views*points entries, -1 for the fixed depth

    std::vector<slp::Tape> equations;
    std::vector<std::string> unknown_names;

    int n_equations() const { return static_cast<int>(equations.size()); }

    int param_index(int view, int point, int coord) const {
        return 2 * (view * points + point) + coord;
    }

    int depth_unknown(int view, int point) const { return depth_slot[view * points + point]; }
};

namespace detail {

inline slp::Tape build_depth_equation(const ParametricSystem& sys, const SelectedEquation& eq) {
    slp::Builder b;
    using Expr = slp::Builder::Expr;

    auto omega_expr = [&](int k) -> Expr {
        return sys.omega_slot[k] >= 0 ? b.var(sys.omega_slot[k])
                                      : b.constant(sys.omega_const[k]);
    };
    const Expr fs = omega_expr(0);
    const Expr gs = omega_expr(1);
    const Expr ss = omega_expr(2);
    const Expr uu = omega_expr(3);
    const Expr vv = omega_expr(4);

    // Omega = f* g* omega, expanded from K^{-T} K^{-1}
    const Expr w = b.sub(uu, b.mul(ss, vv));  // u - s* v
    const Expr o11 = gs;
    const Expr o12 = b.neg(b.mul(ss, gs));
    const Expr o13 = b.neg(b.mul(gs, w));
    const Expr o22 = b.add(fs, b.mul(b.square(ss), gs));
    const Expr o23 = b.sub(b.mul(b.mul(ss, gs), w), b.mul(vv, fs));
    const Expr o33 = b.add(b.add(b.mul(fs, gs), b.mul(b.square(vv), fs)), b.mul(gs, b.square(w)));

    auto depth = [&](int view, int point) -> Expr {
        const int slot = sys.depth_unknown(view, point);
        return slot >= 0 ? b.var(slot) : b.constant(1.0);
    };
    auto pixel = [&](int view, int point, int coord) -> Expr {
        return b.var(sys.n_unknowns + sys.param_index(view, point, coord));
    };

    // y_k = lambda_ip x_ip - lambda_iq x_iq with homogeneous third coordinate 1
    auto difference = [&](int view) -> std::array<Expr, 3> {
        const Expr lp = depth(view, eq.p);
        const Expr lq = depth(view, eq.q);
        return {b.sub(b.mul(lp, pixel(view, eq.p, 0)), b.mul(lq, pixel(view, eq.q, 0))),
                b.sub(b.mul(lp, pixel(view, eq.p, 1)), b.mul(lq, pixel(view, eq.q, 1))),
                b.sub(lp, lq)};
    };

    const Expr two = b.constant(2.0);
    auto quad = [&](const std::array<Expr, 3>& y) -> Expr {
        Expr diag = b.add(b.add(b.mul(o11, b.square(y[0])), b.mul(o22, b.square(y[1]))),
                          b.mul(o33, b.square(y[2])));
        Expr cross = b.add(b.add(b.mul(o12, b.mul(y[0], y[1])), b.mul(o13, b.mul(y[0], y[2]))),
                           b.mul(o23, b.mul(y[1], y[2])));
        return b.add(diag, b.mul(two, cross));
    };

    const auto yi = difference(0);
    const auto yj = difference(eq.view_pair + 1);
    return b.finish(b.sub(quad(yi), quad(yj)));
}

}  // namespace detail

// Builds the cleared system for a selection of depth equations. Minimal
// selections must be square; certification of the undropped overconstrained
// system passes require_square = false.
inline ParametricSystem build_system(const EquationSelection& selection,
                                     const IntrinsicsSpec& spec, int points, int views,
                                     bool require_square = true) {
    if (!spec.valid()) throw Error("build_system: invalid spec");
    ParametricSystem sys;
    sys.spec = spec;
    sys.views = views;
    sys.points = points;
    sys.selection = selection;

    int slot = 0;
    const char* omega_names[5] = {"f*", "g*", "s*", "u", "v"};
    // f*
    if (spec.f().kind == SlotKind::Unknown) {
        sys.omega_slot[0] = slot++;
        sys.unknown_names.push_back(omega_names[0]);
    } else {
        sys.omega_const[0] = spec.f().value * spec.f().value;
    }
    // g*
    if (spec.g().kind == SlotKind::Unknown) {
        sys.omega_slot[1] = slot++;
        sys.unknown_names.push_back(omega_names[1]);
    } else if (spec.g().kind == SlotKind::TiedToF) {
        if (spec.f().kind == SlotKind::Unknown) {
            sys.omega_slot[1] = sys.omega_slot[0];  // square pixels share f*
        } else {
            sys.omega_const[1] = spec.f().value * spec.f().value;
        }
    } else {
        sys.omega_const[1] = spec.g().value * spec.g().value;
    }
    // s*
    if (spec.s().kind == SlotKind::Unknown) {
        sys.omega_slot[2] = slot++;
        sys.unknown_names.push_back(omega_names[2]);
    } else if (spec.s().value == 0.0) {
        sys.omega_const[2] = 0.0;
    } else {
        double g = 0.0;
        if (!spec.g_value(&g)) throw Error("build_system: known nonzero s needs known g");
        sys.omega_const[2] = spec.s().value / g;
    }
    // u, v
    for (int k = 3; k <= 4; ++k) {
        const Slot& sl = spec.slots[k == 3 ? 2 : 3];
        if (sl.kind == SlotKind::Unknown) {
            sys.omega_slot[k] = slot++;
            sys.unknown_names.push_back(omega_names[k]);
        } else {
            sys.omega_const[k] = sl.value;
        }
    }

    sys.depth_slot.assign(views * points, -1);
    for (int i = 0; i < views; ++i)
        for (int p = 0; p < points; ++p) {
            if (i == 0 && p == 0) continue;  // lambda_11 = 1 fixes the scale
            sys.depth_slot[i * points + p] = slot;
            sys.unknown_names.push_back("l_" + std::to_string(i + 1) + std::to_string(p + 1));
            ++slot;
        }

    sys.n_unknowns = slot;
    sys.n_params = 2 * views * points;

    if (require_square && static_cast<int>(selection.size()) != sys.n_unknowns)
        throw SizeMismatch("build_system: selection size " + std::to_string(selection.size()) +
                           " != unknown count " + std::to_string(sys.n_unknowns));

    for (const auto& eq : selection) {
        if (eq.view_pair < 0 || eq.view_pair + 1 >= views)
            throw Error("build_system: selection references a missing view pair");
        sys.equations.push_back(detail::build_depth_equation(sys, eq));
    }
    return sys;
}

// Per-thread evaluation scratch. All methods are pure with respect to the
// bound system; create one evaluator per worker.
class Evaluator {
public:
    explicit Evaluator(const ParametricSystem& sys) : sys_(&sys) {
        vars_.resize(sys.n_unknowns + sys.n_params);
        grad_.resize(vars_.size());
    }

    const ParametricSystem& system() const { return *sys_; }

    void load(const CVecX& x, const CVecX& p) {
        if (x.size() != sys_->n_unknowns || p.size() != sys_->n_params)
            throw DimensionMismatch("evaluator: bad vector sizes");
        for (int i = 0; i < x.size(); ++i) vars_[i] = x[i];
        for (int i = 0; i < p.size(); ++i) vars_[sys_->n_unknowns + i] = p[i];
    }

    void residual(const CVecX& x, const CVecX& p, CVecX& out) {
        load(x, p);
        out.resize(sys_->n_equations());
        for (int k = 0; k < sys_->n_equations(); ++k)
            out[k] = slp::eval(sys_->equations[k], vars_, ws_);
    }

    // residual plus d/dx; optionally d/dp as well
    void residual_jacobian(const CVecX& x, const CVecX& p, CVecX* r, CMatX* jx, CMatX* jp) {
        load(x, p);
        const int ne = sys_->n_equations();
        const int n = sys_->n_unknowns;
        const int m = sys_->n_params;
        r->resize(ne);
        if (jx) jx->resize(ne, n);
        if (jp) jp->resize(ne, m);
        for (int k = 0; k < ne; ++k) {
            std::fill(grad_.begin(), grad_.end(), Complex(0.0));
            (*r)[k] = slp::eval_grad(sys_->equations[k], vars_, ws_, grad_.data());
            if (jx)
                for (int i = 0; i < n; ++i) (*jx)(k, i) = grad_[i];
            if (jp)
                for (int i = 0; i < m; ++i) (*jp)(k, i) = grad_[n + i];
        }
    }

private:
    const ParametricSystem* sys_;
    std::vector<Complex> vars_;
    std::vector<Complex> grad_;
    slp::Workspace ws_;
};

inline CVecX evaluate(const ParametricSystem& sys, const CVecX& x, const CVecX& p) {
    Evaluator ev(sys);
    CVecX r;
    ev.residual(x, p, r);
    return r;
}

inline CMatX jacobian_x(const ParametricSystem& sys, const CVecX& x, const CVecX& p) {
    Evaluator ev(sys);
    CVecX r;
    CMatX jx;
    ev.residual_jacobian(x, p, &r, &jx, nullptr);
    return jx;
}

inline CMatX jacobian_p(const ParametricSystem& sys, const CVecX& x, const CVecX& p) {
    Evaluator ev(sys);
    CVecX r;
    CMatX jp;
    ev.residual_jacobian(x, p, &r, nullptr, &jp);
    return jp;
}

inline Complex depth_value(const ParametricSystem& sys, const CVecX& x, int view, int point) {
    const int slot = sys.depth_unknown(view, point);
    return slot >= 0 ? x[slot] : Complex(1.0);
}

inline Complex omega_value(const ParametricSystem& sys, const CVecX& x, int k) {
    const int slot = sys.omega_slot[k];
    return slot >= 0 ? x[slot] : Complex(sys.omega_const[k]);
}

// Omega parameters of a real solution vector.
inline OmegaParams resolve_omega(const ParametricSystem& sys, const VecX& x_real) {
    CVecX x = x_real.cast<Complex>();
    return {omega_value(sys, x, 0).real(), omega_value(sys, x, 1).real(),
            omega_value(sys, x, 2).real(), omega_value(sys, x, 3).real(),
            omega_value(sys, x, 4).real()};
}

struct CertificateReport {
    int rank_full = 0;
    int rank_x = 0;
    int n = 0;
    double min_singular_x = 0.0;     // smallest singular value of dg/dx
    double min_singular_full = 0.0;  // smallest singular value of (dg/dp | dg/dx)
    bool passed = false;
};

namespace detail {

inline int rank_from_singular_values(const VecX& sv, double rel_tol) {
    if (sv.size() == 0) return 0;
    const double cutoff = sv[0] * rel_tol;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff) ++rank;
    return rank;
}

}  // namespace detail

// Rank conditions rank(dg/dp | dg/dx) = rank(dg/dx) = n at a problem-solution
// pair, via singular values thresholded at 1e-8 relative.
inline CertificateReport certify_minimal(const ParametricSystem& sys, const CVecX& p0,
                                         const CVecX& x0, double residual_tol = 1e-9,
                                         double rank_rel_tol = 1e-8) {
    Evaluator ev(sys);
    CVecX r;
    CMatX jx, jp;
    ev.residual_jacobian(x0, p0, &r, &jx, &jp);
    if (r.size() > 0 && r.cwiseAbs().maxCoeff() > residual_tol)
        throw NotOnVariety("certify_minimal: residual too large at (p0, x0)");

    CMatX full(jx.rows(), jp.cols() + jx.cols());
    full << jp, jx;

    Eigen::JacobiSVD<CMatX> svd_full(full);
    Eigen::JacobiSVD<CMatX> svd_x(jx);

    CertificateReport rep;
    rep.n = sys.n_unknowns;
    rep.rank_full = detail::rank_from_singular_values(svd_full.singularValues(), rank_rel_tol);
    rep.rank_x = detail::rank_from_singular_values(svd_x.singularValues(), rank_rel_tol);
    const auto& sv = svd_x.singularValues();
    rep.min_singular_x = sv.size() > 0 ? sv[sv.size() - 1] : 0.0;
    const auto& svf = svd_full.singularValues();
    rep.min_singular_full = svf.size() > 0 ? svf[svf.size() - 1] : 0.0;
    rep.passed = rep.rank_full == rep.n && rep.rank_x == rep.n;
    return rep;
}

// Difference of oriented-tetrahedron determinants between the two views of a
// view pair; vanishes on scene-consistent data because det K is constant.
inline Complex tetra_det_residual(const ParametricSystem& sys, const CVecX& x, const CVecX& p,
                                  int view_pair, std::array<int, 4> subset = {0, 1, 2, 3}) {
    auto scaled_pixel = [&](int view, int point) -> Eigen::Vector3cd {
        const Complex lambda = depth_value(sys, x, view, point);
        const Complex px = p[sys.param_index(view, point, 0)];
        const Complex py = p[sys.param_index(view, point, 1)];
        return {lambda * px, lambda * py, lambda};
    };
    auto det_for_view = [&](int view) -> Complex {
        const Eigen::Vector3cd base = scaled_pixel(view, subset[1]);
        Eigen::Matrix3cd m;
        m.col(0) = scaled_pixel(view, subset[0]) - base;
        m.col(1) = scaled_pixel(view, subset[2]) - base;
        m.col(2) = scaled_pixel(view, subset[3]) - base;
        return m.determinant();
    };
    return det_for_view(0) - det_for_view(view_pair + 1);
}

// --- descriptor JSON (enough to rebuild the system bit-compatibly) ---

inline nlohmann::json system_descriptor(const ParametricSystem& sys) {
    nlohmann::json sel = nlohmann::json::array();
    for (const auto& eq : sys.selection) sel.push_back({eq.view_pair, eq.p, eq.q});
    return {{"spec", to_json(sys.spec)},
            {"views", sys.views},
            {"points", sys.points},
            {"selection", sel},
            {"unknowns", sys.unknown_names}};
}

inline ParametricSystem system_from_descriptor(const nlohmann::json& j) {
    const IntrinsicsSpec spec = spec_from_json(j.at("spec"));
    EquationSelection sel;
    for (const auto& e : j.at("selection"))
        sel.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>()});
    ParametricSystem sys = build_system(sel, spec, j.at("points").get<int>(),
                                        j.at("views").get<int>(), false);
    return sys;
}

}  // namespace autocal
