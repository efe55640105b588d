#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "autocal/common.hpp"

namespace autocal::slp {

// A straight-line program over complex scalars with one output. Nodes are
// topologically ordered by construction, so evaluation is a single forward
// sweep and the gradient a single reverse sweep.
struct Tape {
    enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Neg };

    struct Node {
        Op op;
        std::int32_t a = -1;  // operand index; Const: index into consts, Var: variable slot
        std::int32_t b = -1;
    };

    std::vector<Node> nodes;
    std::vector<Complex> consts;
    std::int32_t out = -1;

    std::size_t size() const { return nodes.size(); }
};

// The evaluation core is generic over the scalar ring so the same tapes run
// on complex doubles for tracking and on prime fields for exact rank tests.
// Callers supply the tape constants pre-converted to T.
template <class T>
struct WorkspaceT {
    std::vector<T> values;
    std::vector<T> adjoint;

    void fit(const Tape& tape) {
        if (values.size() < tape.size()) {
            values.resize(tape.size());
            adjoint.resize(tape.size());
        }
    }
};

using Workspace = WorkspaceT<Complex>;

template <class T>
T eval_t(const Tape& tape, std::span<const T> consts, std::span<const T> vars,
         WorkspaceT<T>& ws) {
    ws.fit(tape);
    T* v = ws.values.data();
    for (std::size_t i = 0; i < tape.nodes.size(); ++i) {
        const auto& n = tape.nodes[i];
        switch (n.op) {
            case Tape::Op::Const: v[i] = consts[n.a]; break;
            case Tape::Op::Var: v[i] = vars[n.a]; break;
            case Tape::Op::Add: v[i] = v[n.a] + v[n.b]; break;
            case Tape::Op::Sub: v[i] = v[n.a] - v[n.b]; break;
            case Tape::Op::Mul: v[i] = v[n.a] * v[n.b]; break;
            case Tape::Op::Neg: v[i] = -v[n.a]; break;
        }
    }
    return tape.out >= 0 ? v[tape.out] : T(0);
}

// Evaluates and accumulates d(out)/d(var) into grad_row, which the caller
// must have sized to the variable count and zeroed.
template <class T>
T eval_grad_t(const Tape& tape, std::span<const T> consts, std::span<const T> vars,
              WorkspaceT<T>& ws, T* grad_row) {
    const T result = eval_t(tape, consts, vars, ws);
    if (tape.out < 0) return result;
    T* adj = ws.adjoint.data();
    const T* v = ws.values.data();
    std::fill(adj, adj + tape.nodes.size(), T(0));
    adj[tape.out] = T(1);
    for (std::int32_t i = tape.out; i >= 0; --i) {
        const T w = adj[i];
        if (w == T(0)) continue;
        const auto& n = tape.nodes[i];
        switch (n.op) {
            case Tape::Op::Const: break;
            case Tape::Op::Var: grad_row[n.a] += w; break;
            case Tape::Op::Add:
                adj[n.a] += w;
                adj[n.b] += w;
                break;
            case Tape::Op::Sub:
                adj[n.a] += w;
                adj[n.b] -= w;
                break;
            case Tape::Op::Mul:
                adj[n.a] += w * v[n.b];
                adj[n.b] += w * v[n.a];
                break;
            case Tape::Op::Neg: adj[n.a] -= w; break;
        }
    }
    return result;
}

inline Complex eval(const Tape& tape, std::span<const Complex> vars, Workspace& ws) {
    return eval_t<Complex>(tape, std::span<const Complex>(tape.consts), vars, ws);
}

inline Complex eval_grad(const Tape& tape, std::span<const Complex> vars, Workspace& ws,
                         Complex* grad_row) {
    return eval_grad_t<Complex>(tape, std::span<const Complex>(tape.consts), vars, ws, grad_row);
}

// Builder with light constant folding so known-zero intrinsics collapse the
// calibrated tapes down to plain distance terms.
class Builder {
public:
    struct Expr {
        std::int32_t idx = -1;
    };

    Expr var(int slot) {
        return push({Tape::Op::Var, slot, -1});
    }

    Expr constant(Complex value) {
        // reuse existing constants so zero/one checks stay exact
        for (std::size_t i = 0; i < tape_.consts.size(); ++i)
            if (tape_.consts[i] == value) {
                if (const_nodes_[i] >= 0) return {const_nodes_[i]};
            }
        tape_.consts.push_back(value);
        const Expr e = push({Tape::Op::Const, static_cast<std::int32_t>(tape_.consts.size() - 1), -1});
        const_nodes_.push_back(e.idx);
        return e;
    }

    Expr add(Expr a, Expr b) {
        if (is_zero(a)) return b;
        if (is_zero(b)) return a;
        if (is_const(a) && is_const(b)) return constant(const_of(a) + const_of(b));
        return push({Tape::Op::Add, a.idx, b.idx});
    }

    Expr sub(Expr a, Expr b) {
        if (is_zero(b)) return a;
        if (is_const(a) && is_const(b)) return constant(const_of(a) - const_of(b));
        if (is_zero(a)) return neg(b);
        return push({Tape::Op::Sub, a.idx, b.idx});
    }

    Expr mul(Expr a, Expr b) {
        if (is_zero(a) || is_zero(b)) return constant(0.0);
        if (is_one(a)) return b;
        if (is_one(b)) return a;
        if (is_const(a) && is_const(b)) return constant(const_of(a) * const_of(b));
        return push({Tape::Op::Mul, a.idx, b.idx});
    }

    Expr neg(Expr a) {
        if (is_const(a)) return constant(-const_of(a));
        return push({Tape::Op::Neg, a.idx, -1});
    }

    Expr square(Expr a) { return mul(a, a); }

    Tape finish(Expr root) {
        Tape t = tape_;
        t.out = root.idx;
        return t;
    }

private:
    Expr push(Tape::Node node) {
        tape_.nodes.push_back(node);
        return {static_cast<std::int32_t>(tape_.nodes.size() - 1)};
    }

    bool is_const(Expr e) const { return tape_.nodes[e.idx].op == Tape::Op::Const; }
    Complex const_of(Expr e) const { return tape_.consts[tape_.nodes[e.idx].a]; }
    bool is_zero(Expr e) const { return is_const(e) && const_of(e) == Complex(0.0); }
    bool is_one(Expr e) const { return is_const(e) && const_of(e) == Complex(1.0); }

    Tape tape_;
    std::vector<std::int32_t> const_nodes_;
};

}  // namespace autocal::slp
