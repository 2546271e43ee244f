#pragma once

// Reverse-mode tape over scalar nodes. The tape exists to make gradient-graph
// cost measurable: GraphStats reports how many nodes carry gradient state and
// how many are dot-combine products joining a parameter-dependent operand
// with a sample-side constant, which is the graph-size figure the factored
// estimators are built to minimize.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace mcrepar {

enum class OpKind : std::uint8_t {
    Constant,
    Parameter,
    Add,
    Sub,
    Mul,
    Neg,
    Reciprocal,
    PowInt,
    Log,
    Exp,
    Abs,
    SumReduce,
    DotCombine,  // multiplication joining a parameter-side and a sample-side operand
};

const char* op_name(OpKind op);

struct Val {
    std::uint32_t id{kInvalid};
    static constexpr std::uint32_t kInvalid = 0xffffffffu;
    bool valid() const { return id != kInvalid; }
};

struct Node {
    double value{0.0};
    double adjoint{0.0};
    std::uint32_t a{Val::kInvalid};      // first parent
    std::uint32_t b{Val::kInvalid};      // second parent (binary ops)
    std::uint32_t extra_off{0};          // SumReduce parent list (pool slice)
    std::uint32_t extra_len{0};
    std::int32_t exponent{0};            // PowInt only
    OpKind op{OpKind::Constant};
    bool requires_grad{false};
};

struct GraphStats {
    std::size_t total_nodes{0};
    std::size_t grad_nodes{0};
    std::size_t param_nodes{0};
    // DotCombine nodes with exactly one gradient-carrying operand.
    std::size_t interaction_nodes{0};

    bool operator==(const GraphStats&) const = default;
};

class Tape {
public:
    // Leaf nodes. Constants never require gradients; parameters always do.
    Val constant(double v);
    Val param(double v);

    Val add(Val a, Val b);
    Val sub(Val a, Val b);
    Val mul(Val a, Val b);
    Val neg(Val a);
    Val reciprocal(Val a);
    Val pow_int(Val a, int k);  // k >= 1
    Val log(Val a);
    Val exp(Val a);
    Val abs(Val a);
    // Sum of operands. If none requires a gradient the result is entered as a
    // single constant carrying the already-reduced value; this is what keeps
    // sample aggregation outside the gradient graph.
    Val sum_reduce(std::span<const Val> xs);
    Val dot_combine(Val a, Val b);

    double value(Val v) const;
    bool requires_grad(Val v) const;
    const Node& node(Val v) const;
    std::size_t size() const { return nodes_.size(); }

    // Gradient of root w.r.t. every registered parameter, in registration
    // order. Only nodes on the gradient path from root are visited.
    std::vector<double> backward(Val root);
    std::size_t last_backward_visits() const { return last_visits_; }

    const std::vector<std::uint32_t>& parameter_ids() const { return params_; }
    GraphStats stats() const;

    // Drops all nodes but keeps allocated capacity; ids start over.
    void reset();

    // One node per line: id, op, parents, requires_grad.
    void dump(std::ostream& os) const;

private:
    Val push(Node n);
    Val unary(OpKind op, Val a, double value);
    Val binary(OpKind op, Val a, Val b, double value);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> params_;
    std::vector<std::uint32_t> extra_;
    std::vector<std::uint8_t> on_path_;
    std::size_t last_visits_{0};
};

// Builds f on a fresh tape at theta, runs backward, and compares every
// parameter gradient against a central finite difference with step h.
// Returns the largest absolute discrepancy.
double finite_diff_check(
    const std::function<Val(Tape&, std::span<const Val>)>& build,
    std::span<const double> theta, double h);

}  // namespace mcrepar
