#include "mcrepar/tape.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "mcrepar/errors.hpp"

namespace mcrepar {

const char* op_name(OpKind op) {
    switch (op) {
        case OpKind::Constant: return "constant";
        case OpKind::Parameter: return "parameter";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Neg: return "neg";
        case OpKind::Reciprocal: return "reciprocal";
        case OpKind::PowInt: return "pow_int";
        case OpKind::Log: return "log";
        case OpKind::Exp: return "exp";
        case OpKind::Abs: return "abs";
        case OpKind::SumReduce: return "sum_reduce";
        case OpKind::DotCombine: return "dot_combine";
    }
    return "?";
}

namespace {

double pow_by_muls(double x, int k) {
    double p = x;
    for (int j = 2; j <= k; ++j) p *= x;
    return p;
}

}  // namespace

Val Tape::push(Node n) {
    if (!std::isfinite(n.value)) {
        throw NonFiniteError(std::string("non-finite value in ") +
                             op_name(n.op) + " node " +
                             std::to_string(nodes_.size()));
    }
    nodes_.push_back(n);
    return Val{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Val Tape::constant(double v) {
    Node n;
    n.value = v;
    n.op = OpKind::Constant;
    n.requires_grad = false;
    return push(n);
}

Val Tape::param(double v) {
    Node n;
    n.value = v;
    n.op = OpKind::Parameter;
    n.requires_grad = true;
    Val h = push(n);
    params_.push_back(h.id);
    return h;
}

Val Tape::unary(OpKind op, Val a, double value) {
    Node n;
    n.value = value;
    n.a = a.id;
    n.op = op;
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(n);
}

Val Tape::binary(OpKind op, Val a, Val b, double value) {
    Node n;
    n.value = value;
    n.a = a.id;
    n.b = b.id;
    n.op = op;
    n.requires_grad = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return push(n);
}

Val Tape::add(Val a, Val b) {
    return binary(OpKind::Add, a, b, nodes_[a.id].value + nodes_[b.id].value);
}

Val Tape::sub(Val a, Val b) {
    return binary(OpKind::Sub, a, b, nodes_[a.id].value - nodes_[b.id].value);
}

Val Tape::mul(Val a, Val b) {
    return binary(OpKind::Mul, a, b, nodes_[a.id].value * nodes_[b.id].value);
}

Val Tape::dot_combine(Val a, Val b) {
    return binary(OpKind::DotCombine, a, b,
                  nodes_[a.id].value * nodes_[b.id].value);
}

Val Tape::neg(Val a) { return unary(OpKind::Neg, a, -nodes_[a.id].value); }

Val Tape::reciprocal(Val a) {
    const double v = nodes_[a.id].value;
    if (v == 0.0) throw DomainError("reciprocal of zero");
    return unary(OpKind::Reciprocal, a, 1.0 / v);
}

Val Tape::pow_int(Val a, int k) {
    if (k < 1) throw DomainError("pow_int exponent must be >= 1");
    Val h = unary(OpKind::PowInt, a, pow_by_muls(nodes_[a.id].value, k));
    nodes_[h.id].exponent = k;
    return h;
}

Val Tape::log(Val a) {
    const double v = nodes_[a.id].value;
    if (v <= 0.0) throw DomainError("log of non-positive value");
    return unary(OpKind::Log, a, std::log(v));
}

Val Tape::exp(Val a) { return unary(OpKind::Exp, a, std::exp(nodes_[a.id].value)); }

Val Tape::abs(Val a) {
    return unary(OpKind::Abs, a, std::fabs(nodes_[a.id].value));
}

Val Tape::sum_reduce(std::span<const Val> xs) {
    bool any_grad = false;
    double total = 0.0;
    for (Val v : xs) {
        any_grad = any_grad || nodes_[v.id].requires_grad;
        total += nodes_[v.id].value;
    }
    if (!any_grad) return constant(total);
    Node n;
    n.value = total;
    n.op = OpKind::SumReduce;
    n.requires_grad = true;
    n.extra_off = static_cast<std::uint32_t>(extra_.size());
    n.extra_len = static_cast<std::uint32_t>(xs.size());
    for (Val v : xs) extra_.push_back(v.id);
    return push(n);
}

double Tape::value(Val v) const { return nodes_[v.id].value; }
bool Tape::requires_grad(Val v) const { return nodes_[v.id].requires_grad; }
const Node& Tape::node(Val v) const { return nodes_[v.id]; }

std::vector<double> Tape::backward(Val root) {
    std::vector<double> grads(params_.size(), 0.0);
    last_visits_ = 0;
    if (!root.valid() || !nodes_[root.id].requires_grad) return grads;

    on_path_.assign(root.id + 1, 0);
    for (std::size_t i = 0; i <= root.id; ++i) nodes_[i].adjoint = 0.0;
    nodes_[root.id].adjoint = 1.0;
    on_path_[root.id] = 1;

    auto touch = [&](std::uint32_t pid, double contribution) {
        Node& p = nodes_[pid];
        if (!p.requires_grad) return;
        p.adjoint += contribution;
        on_path_[pid] = 1;
    };

    for (std::uint32_t id = root.id + 1; id-- > 0;) {
        if (!on_path_[id]) continue;
        ++last_visits_;
        Node& n = nodes_[id];
        const double w = n.adjoint;
        switch (n.op) {
            case OpKind::Constant:
            case OpKind::Parameter:
                break;
            case OpKind::Add:
                touch(n.a, w);
                touch(n.b, w);
                break;
            case OpKind::Sub:
                touch(n.a, w);
                touch(n.b, -w);
                break;
            case OpKind::Mul:
            case OpKind::DotCombine:
                touch(n.a, w * nodes_[n.b].value);
                touch(n.b, w * nodes_[n.a].value);
                break;
            case OpKind::Neg:
                touch(n.a, -w);
                break;
            case OpKind::Reciprocal:
                // value = 1/x, d/dx = -1/x^2 = -value^2
                touch(n.a, -w * n.value * n.value);
                break;
            case OpKind::PowInt: {
                const double x = nodes_[n.a].value;
                const int k = n.exponent;
                const double dp =
                    (k == 1) ? 1.0 : static_cast<double>(k) * pow_by_muls(x, k - 1);
                touch(n.a, w * dp);
                break;
            }
            case OpKind::Log:
                touch(n.a, w / nodes_[n.a].value);
                break;
            case OpKind::Exp:
                touch(n.a, w * n.value);
                break;
            case OpKind::Abs: {
                const double x = nodes_[n.a].value;
                const double s = (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                touch(n.a, w * s);
                break;
            }
            case OpKind::SumReduce:
                for (std::uint32_t i = 0; i < n.extra_len; ++i)
                    touch(extra_[n.extra_off + i], w);
                break;
        }
    }

    for (std::size_t i = 0; i < params_.size(); ++i)
        grads[i] = nodes_[params_[i]].adjoint;
    return grads;
}

GraphStats Tape::stats() const {
    GraphStats s;
    s.total_nodes = nodes_.size();
    for (const Node& n : nodes_) {
        if (n.requires_grad) ++s.grad_nodes;
        if (n.op == OpKind::Parameter) ++s.param_nodes;
        if (n.op == OpKind::DotCombine) {
            const bool ga = nodes_[n.a].requires_grad;
            const bool gb = nodes_[n.b].requires_grad;
            if (ga != gb) ++s.interaction_nodes;
        }
    }
    return s;
}

void Tape::reset() {
    nodes_.clear();
    params_.clear();
    extra_.clear();
    last_visits_ = 0;
}

void Tape::dump(std::ostream& os) const {
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const Node& n = nodes_[id];
        os << id << ',' << op_name(n.op) << ',';
        if (n.op == OpKind::SumReduce) {
            for (std::uint32_t i = 0; i < n.extra_len; ++i) {
                if (i) os << ' ';
                os << extra_[n.extra_off + i];
            }
        } else {
            if (n.a != Val::kInvalid) os << n.a;
            if (n.b != Val::kInvalid) os << ' ' << n.b;
        }
        os << ',' << (n.requires_grad ? 1 : 0) << '\n';
    }
}

double finite_diff_check(
    const std::function<Val(Tape&, std::span<const Val>)>& build,
    std::span<const double> theta, double h) {
    std::vector<double> grads;
    {
        Tape tape;
        std::vector<Val> params;
        params.reserve(theta.size());
        for (double t : theta) params.push_back(tape.param(t));
        Val root = build(tape, params);
        grads = tape.backward(root);
    }

    auto eval_at = [&](std::span<const double> point) {
        Tape tape;
        std::vector<Val> params;
        params.reserve(point.size());
        for (double t : point) params.push_back(tape.param(t));
        return tape.value(build(tape, params));
    };

    double worst = 0.0;
    std::vector<double> point(theta.begin(), theta.end());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double saved = point[i];
        point[i] = saved + h;
        const double up = eval_at(point);
        point[i] = saved - h;
        const double down = eval_at(point);
        point[i] = saved;
        const double central = (up - down) / (2.0 * h);
        worst = std::max(worst, std::fabs(central - grads[i]));
    }
    return worst;
}

}  // namespace mcrepar
