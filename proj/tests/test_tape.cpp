#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "mcrepar/errors.hpp"
#include "mcrepar/rng.hpp"
#include "mcrepar/tape.hpp"

using namespace mcrepar;

TEST_CASE("square of a parameter: value and gradient by hand") {
    Tape t;
    Val x = t.param(0.5);
    Val y = t.pow_int(x, 2);
    CHECK(t.value(y) == doctest::Approx(0.25));
    auto g = t.backward(y);
    CHECK(g[0] == doctest::Approx(1.0));  // d(x^2)/dx at 0.5
}

TEST_CASE("product rule: d(mu*mu)/dmu = 2 mu") {
    Tape t;
    Val mu = t.param(3.0);
    Val y = t.mul(mu, mu);
    auto g = t.backward(y);
    CHECK(g[0] == doctest::Approx(6.0));
}

TEST_CASE("gradient of a constant root is zero") {
    Tape t;
    Val mu = t.param(3.0);
    (void)mu;
    Val c = t.constant(7.0);
    auto g = t.backward(c);
    CHECK(g[0] == 0.0);
    CHECK(t.last_backward_visits() == 0);
}

TEST_CASE("requires_grad propagates only from parameters") {
    Tape t;
    Val c1 = t.constant(2.0);
    Val c2 = t.constant(5.0);
    Val p = t.param(1.5);
    CHECK_FALSE(t.requires_grad(t.add(c1, c2)));
    CHECK(t.requires_grad(t.mul(p, c1)));
    CHECK(t.requires_grad(t.exp(p)));
    CHECK_FALSE(t.requires_grad(t.log(c1)));
}

TEST_CASE("sum_reduce of no-grad operands collapses to one constant node") {
    Tape t;
    std::vector<Val> xs;
    for (int i = 1; i <= 5; ++i) xs.push_back(t.constant(i));
    const std::size_t before = t.size();
    Val s = t.sum_reduce(xs);
    CHECK(t.size() == before + 1);
    CHECK(t.node(s).op == OpKind::Constant);
    CHECK_FALSE(t.requires_grad(s));
    CHECK(t.value(s) == doctest::Approx(15.0));
}

TEST_CASE("sum_reduce with a gradient operand keeps parents") {
    Tape t;
    Val p = t.param(2.0);
    std::vector<Val> xs = {p, t.constant(3.0), t.mul(p, p)};
    Val s = t.sum_reduce(xs);
    CHECK(t.requires_grad(s));
    CHECK(t.value(s) == doctest::Approx(9.0));
    auto g = t.backward(s);
    CHECK(g[0] == doctest::Approx(1.0 + 4.0));
}

TEST_CASE("backward visits exactly the gradient path") {
    Tape t;
    Val p = t.param(1.0);
    Val q = t.param(2.0);
    // Gradient path: p -> a -> root plus q -> root; a dead grad branch (d) and
    // a constant branch (c) must not be visited.
    Val a = t.exp(p);
    Val c = t.mul(t.constant(3.0), t.constant(4.0));
    Val d = t.mul(q, t.constant(2.0));  // dead: not reachable from root
    (void)c;
    (void)d;
    Val root = t.add(a, q);
    t.backward(root);
    // Path grad nodes: root, a, p, q.
    CHECK(t.last_backward_visits() == 4);
}

TEST_CASE("finite differences confirm every op rule") {
    // f(theta) = theta0^2 (spec anchor: discrepancy < 1e-6 at theta=1)
    auto square = [](Tape& t, std::span<const Val> p) {
        return t.pow_int(p[0], 2);
    };
    const double theta1[] = {1.0};
    CHECK(finite_diff_check(square, theta1, 1e-5) < 1e-6);

    // Composite touching every op kind.
    auto mixed = [](Tape& t, std::span<const Val> p) {
        Val u = t.add(t.mul(p[0], p[1]), t.constant(0.7));
        Val v = t.log(t.exp(t.neg(p[2])));
        Val w = t.reciprocal(t.pow_int(t.add(p[0], t.constant(2.0)), 3));
        Val z = t.abs(t.sub(p[1], t.constant(0.3)));
        std::array<Val, 4> parts = {u, v, w, z};
        Val s = t.sum_reduce(parts);
        return t.dot_combine(s, t.constant(1.25));
    };
    const double theta3[] = {0.8, -1.1, 0.4};
    CHECK(finite_diff_check(mixed, theta3, 1e-5) < 1e-6);
}

TEST_CASE("abs derivative is the sign, zero at zero") {
    Tape t;
    Val p = t.param(-2.5);
    auto g = t.backward(t.abs(p));
    CHECK(g[0] == doctest::Approx(-1.0));

    Tape t2;
    Val q = t2.param(0.0);
    auto g2 = t2.backward(t2.abs(q));
    CHECK(g2[0] == 0.0);
}

TEST_CASE("graph stats count parameters, grad nodes and interactions") {
    Tape t;
    Val mu = t.param(0.5);
    Val sigma = t.param(0.1);
    Val n0 = t.pow_int(mu, 2);
    Val n1 = t.mul(mu, sigma);
    Val n2 = t.pow_int(sigma, 2);
    Val t0 = t.constant(1.0);
    Val t1 = t.constant(0.2);
    Val t2 = t.constant(0.05);
    Val s = t.add(t.add(t.dot_combine(n0, t0), t.dot_combine(n1, t1)),
                  t.dot_combine(n2, t2));
    (void)s;
    GraphStats st = t.stats();
    CHECK(st.param_nodes == 2);
    CHECK(st.interaction_nodes == 3);
    CHECK(st.grad_nodes == 10);  // 2 params + 3 monomials + 3 dots + 2 adds
    CHECK(st.total_nodes == 13);

    // A dot_combine of two constants is not an interaction.
    Tape t2c;
    Val c = t2c.dot_combine(t2c.constant(2.0), t2c.constant(3.0));
    (void)c;
    CHECK(t2c.stats().interaction_nodes == 0);
}

TEST_CASE("identical build sequences are bit-for-bit identical") {
    auto build = [](Tape& t) {
        Val a = t.param(1.234567);
        Val b = t.param(-0.98765);
        Val r = t.mul(t.exp(t.mul(a, b)), t.add(a, t.reciprocal(b)));
        return r;
    };
    Tape t1, t2;
    Val r1 = build(t1);
    Val r2 = build(t2);
    CHECK(std::memcmp(&t1.node(r1).value, &t2.node(r2).value, sizeof(double)) ==
          0);
    auto g1 = t1.backward(r1);
    auto g2 = t2.backward(r2);
    REQUIRE(g1.size() == g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i)
        CHECK(std::memcmp(&g1[i], &g2[i], sizeof(double)) == 0);
    CHECK(t1.stats() == t2.stats());
}

TEST_CASE("domain and finiteness guards") {
    Tape t;
    CHECK_THROWS_AS(t.log(t.constant(0.0)), DomainError);
    CHECK_THROWS_AS(t.log(t.constant(-1.0)), DomainError);
    CHECK_THROWS_AS(t.reciprocal(t.constant(0.0)), DomainError);
    CHECK_THROWS_AS(t.pow_int(t.constant(1.0), 0), DomainError);
    Val big = t.constant(1e308);
    CHECK_THROWS_AS(t.mul(big, big), NonFiniteError);
    CHECK_THROWS_AS(t.exp(t.constant(1e300)), NonFiniteError);
}

TEST_CASE("debug dump lists one node per line") {
    Tape t;
    Val p = t.param(2.0);
    Val c = t.constant(3.0);
    Val m = t.dot_combine(p, c);
    (void)m;
    std::ostringstream os;
    t.dump(os);
    CHECK(os.str() == "0,parameter,,1\n1,constant,,0\n2,dot_combine,0 1,1\n");
}

TEST_CASE("reset clears nodes and parameters") {
    Tape t;
    t.param(1.0);
    t.constant(2.0);
    t.reset();
    CHECK(t.size() == 0);
    CHECK(t.parameter_ids().empty());
    Val p = t.param(4.0);
    CHECK(p.id == 0);
}
