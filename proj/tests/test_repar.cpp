#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "mcrepar/distributions.hpp"
#include "mcrepar/errors.hpp"
#include "mcrepar/repar.hpp"
#include "mcrepar/rng.hpp"
#include "mcrepar/tape.hpp"

using namespace mcrepar;

namespace {

SuffSamples normal_locscale(std::size_t m, std::uint64_t seed) {
    std::vector<double> xi(m);
    RngStream rng(seed);
    rng.fill_normal(xi);
    return SuffSamples::locscale(xi);
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max(1.0, std::fabs(b));
}

}  // namespace

TEST_CASE("binomial and multinomial coefficients") {
    CHECK(binom_u64(6, 3) == 20);
    CHECK(binom_u64(5, 0) == 1);
    CHECK(binom_u64(5, 5) == 1);
    const int a412[] = {2, 1, 1};
    CHECK(multinomial_u64(4, a412) == 12);
    const int a22[] = {1, 1};
    CHECK(multinomial_u64(2, a22) == 2);
    CHECK_THROWS_AS(binom_u64(3, 4), DomainError);
    CHECK_THROWS_AS(binom_u64(100, 50), DomainError);  // u64 overflow
    const int bad[] = {1, 1};
    CHECK_THROWS_AS(multinomial_u64(3, bad), DomainError);
}

TEST_CASE("monomial enumeration: graded lexicographic, counts match formulas") {
    auto m22 = monomials_of_degree(2, 2);
    REQUIRE(m22.size() == 3);
    CHECK(m22[0] == std::vector<int>{2, 0});
    CHECK(m22[1] == std::vector<int>{1, 1});
    CHECK(m22[2] == std::vector<int>{0, 2});

    for (int S : {1, 2, 3}) {
        for (int k = 1; k <= 6; ++k) {
            CHECK(monomials_of_degree(k, S).size() == dp_power(k, S));
            CHECK(monomials_up_to_degree(k, S).size() == dp_polynomial(k, S));
        }
    }
}

TEST_CASE("d_P count formulas") {
    CHECK(dp_power(2, 2) == 3);
    CHECK(dp_power(1, 1) == 1);
    CHECK(dp_power(3, 2) == 4);  // mu^3, mu^2 s, mu s^2, s^3

    CHECK(dp_polynomial(3, 2) == 9);
    CHECK(dp_polynomial(2, 2) == 5);
    CHECK(dp_polynomial(1, 1) == 1);

    auto r32 = dp_taylor_routes(3, 2);
    CHECK(r32.route1 == 16);
    CHECK(r32.route2 == 11);
    auto r12 = dp_taylor_routes(1, 2);
    CHECK(r12.route1 == 2);

    CHECK_THROWS_AS(dp_power(0, 2), DomainError);
    CHECK_THROWS_AS(dp_taylor_routes(2, 1), DomainError);
    CHECK_THROWS_AS(dp_power(21, 2), DomainError);  // documented degree cap
}

TEST_CASE("scaling tuples: frozen hand expansions") {
    // theta = 3, g = w^2, xi = (1, 2): 9 * (1 + 4)/2 = 22.5.
    const double xi12[] = {1.0, 2.0};
    auto xs = SuffSamples::scaling(xi12);
    auto tup = build_scaling_tuple(GSpec::power(2));
    CHECK(tup.d_p == 1);
    const double theta3[] = {3.0};
    CHECK(tup.value(theta3, xs) == doctest::Approx(22.5));

    Tape tape;
    Val th = tape.param(3.0);
    const Val eta[] = {th};
    Val root = tup.evaluate(tape, eta, xs);
    CHECK(tape.value(root) == doctest::Approx(22.5));
    CHECK(tape.stats().interaction_nodes == 1);
    // d/dtheta 2.5 theta^2 = 5 theta = 15
    auto grads = tape.backward(root);
    CHECK(grads[0] == doctest::Approx(15.0));

    // g = ln w, theta = 2, xi = (1, 1): ln 2.
    const double xi11[] = {1.0, 1.0};
    auto xs_ones = SuffSamples::scaling(xi11);
    auto lt = build_scaling_tuple(GSpec::log_pow(1));
    CHECK(lt.d_p == 1);
    const double theta2[] = {2.0};
    CHECK(lt.value(theta2, xs_ones) == doctest::Approx(std::log(2.0)));

    // g = 1/w, theta = 2, xi = (1, 2): mean(1/2, 1/4) = 0.375.
    auto rt = build_scaling_tuple(GSpec::recip_power(1));
    CHECK(rt.d_p == 1);
    CHECK(rt.value(theta2, xs) == doctest::Approx(0.375));

    // g = (ln w)^2, theta = 2, xi = (1, 2): mean((ln 2)^2, (2 ln 2)^2).
    auto l2 = build_scaling_tuple(GSpec::log_pow(2));
    CHECK(l2.d_p == 2);
    const double l2v = 2.5 * std::log(2.0) * std::log(2.0);
    CHECK(l2.value(theta2, xs) == doctest::Approx(l2v).epsilon(1e-12));
    CHECK(direct_mc_value(GSpec::log_pow(2), theta2, xs) ==
          doctest::Approx(l2v).epsilon(1e-12));
}

TEST_CASE("location-scale power tuple: frozen hand expansion") {
    // k=2, mu=0.5, sigma=0.1, xi=(0.1,-0.2,0.3): mean of 0.51^2,0.48^2,0.53^2.
    const double xi[] = {0.1, -0.2, 0.3};
    auto xs = SuffSamples::locscale(xi);
    auto tup = build_locscale_power_tuple(2, 2);
    CHECK(tup.d_p == 3);
    const double eta[] = {0.5, 0.1};
    CHECK(tup.value(eta, xs) == doctest::Approx(0.2571333333333333).epsilon(1e-12));

    auto tv = tup.t_aggregate(xs);
    REQUIRE(tv.t.size() == 3);
    CHECK(tv.t[0] == doctest::Approx(1.0));                     // mu^2 slot
    CHECK(tv.t[1] == doctest::Approx(2.0 * 0.2 / 3.0));          // mu sigma: 2*mean(xi)
    CHECK(tv.t[2] == doctest::Approx(0.14 / 3.0));               // sigma^2: mean(xi^2)

    // k=1: mu + sigma*mean(xi).
    auto t1 = build_locscale_power_tuple(1, 2);
    CHECK(t1.value(eta, xs) ==
          doctest::Approx(0.5 + 0.1 * (0.2 / 3.0)).epsilon(1e-14));
    // k=2, sigma=0: mu^2 regardless of xi.
    const double eta0[] = {0.5, 0.0};
    CHECK(tup.value(eta0, xs) == doctest::Approx(0.25));
}

TEST_CASE("polynomial tuple") {
    const double xi[] = {0.4, -1.1, 0.2, 0.9};
    auto xs = SuffSamples::locscale(xi);
    const double eta[] = {0.3, 0.7};

    // p(w) = w + w^2 -> d_P = 5, equals the sum of the power tuples.
    const double c012[] = {0.0, 1.0, 1.0};
    auto tup = build_polynomial_tuple(c012, 2);
    CHECK(tup.d_p == 5);
    auto p1 = build_locscale_power_tuple(1, 2);
    auto p2 = build_locscale_power_tuple(2, 2);
    CHECK(tup.value(eta, xs) ==
          doctest::Approx(p1.value(eta, xs) + p2.value(eta, xs)).epsilon(1e-14));

    // Zero a_1 degenerates to the pure power tuple.
    const double c002[] = {0.0, 0.0, 1.0};
    auto only2 = build_polynomial_tuple(c002, 2);
    CHECK(only2.d_p == 3);
    CHECK(only2.value(eta, xs) == doctest::Approx(p2.value(eta, xs)).epsilon(1e-14));

    // Constant polynomial: zero gradient, value is the constant.
    const double c7[] = {7.0};
    auto konst = build_polynomial_tuple(c7, 2);
    CHECK(konst.d_p == 0);
    Tape tape;
    const Val ev[] = {tape.param(0.3), tape.param(0.7)};
    Val root = konst.evaluate(tape, ev, xs);
    CHECK(tape.value(root) == doctest::Approx(7.0));
    auto grads = tape.backward(root);
    CHECK(grads[0] == 0.0);
    CHECK(grads[1] == 0.0);
}

TEST_CASE("tuple-direct exactness across families, g, and M") {
    struct FamilyCase {
        const char* name;
        std::vector<double> eta;
        bool scaling;
    };
    RngStream seeds(101);
    const FamilyCase fams[] = {
        {"exponential", {1.7}, true},
        {"rayleigh", {0.8}, true},
        {"normal", {0.4, 1.2}, false},
        {"radial", {-0.3, 0.9}, false},
        {"lognormal-base", {0.2, 0.5}, false},
    };
    auto radial_eps = [&](std::size_t m, std::uint64_t seed) {
        auto spec = make_radial_posterior(std::vector<double>{0.0, 1.0}, 4);
        std::vector<double> eps(m);
        RngStream rng(seed);
        spec.sample_ancillary(rng, eps);
        return SuffSamples::locscale(eps);
    };

    for (const auto& fam : fams) {
        std::vector<GSpec> gs = {GSpec::power(1), GSpec::power(2), GSpec::power(3)};
        if (fam.scaling) {
            gs.push_back(GSpec::log_pow(1));
            gs.push_back(GSpec::recip_power(1));
        }
        for (std::size_t mi : {1u, 2u, 7u, 100u, 1000u}) {
            const std::uint64_t seed = mix_seed(42, mi, static_cast<std::uint64_t>(
                                                            &fam - fams));
            SuffSamples xs;
            if (fam.scaling) {
                std::vector<double> xi(mi);
                RngStream rng(seed);
                std::string n = fam.name;
                for (auto& v : xi)
                    v = (n == "exponential") ? rng.exponential() : rng.rayleigh();
                xs = SuffSamples::scaling(xi);
            } else if (std::string(fam.name) == "radial") {
                xs = radial_eps(mi, seed);
            } else {
                xs = normal_locscale(mi, seed);
            }
            for (const auto& g : gs) {
                auto tup = tuple_for(g, static_cast<int>(fam.eta.size()));
                for (DirectForm form : {DirectForm::Sum, DirectForm::Monomial}) {
                    Tape tape;
                    std::vector<Val> ev;
                    for (double v : fam.eta) ev.push_back(tape.param(v));
                    Val dr = direct_mc_build(tape, g, ev, xs, form);
                    Val tr = tup.evaluate(tape, ev, xs);
                    CHECK(rel_err(tape.value(tr), tape.value(dr)) <= 1e-10);
                }
                // Tape-free paths agree too.
                CHECK(rel_err(tup.value(fam.eta, xs),
                              direct_mc_value(g, fam.eta, xs)) <= 1e-10);
            }
        }
    }
}

TEST_CASE("gradients: tuple matches direct build and finite differences") {
    RngStream rng(77);
    for (int rep = 0; rep < 25; ++rep) {
        const double mu = rng.normal();
        const double sg = 0.2 + rng.uniform01();
        auto xs = normal_locscale(257, mix_seed(5, rep));
        for (const auto& g : {GSpec::power(2), GSpec::power(3)}) {
            Tape td;
            const Val ed[] = {td.param(mu), td.param(sg)};
            auto gd = td.backward(direct_mc_build(td, g, ed, xs, DirectForm::Sum));

            Tape tt;
            const Val et[] = {tt.param(mu), tt.param(sg)};
            auto tup = tuple_for(g, 2);
            auto gt = tt.backward(tup.evaluate(tt, et, xs));

            REQUIRE(gd.size() == 2);
            REQUIRE(gt.size() == 2);
            for (int i = 0; i < 2; ++i)
                CHECK(std::fabs(gt[static_cast<std::size_t>(i)] -
                                gd[static_cast<std::size_t>(i)]) <=
                      1e-8 * std::max(1.0, std::fabs(gd[static_cast<std::size_t>(i)])));

            const double theta[] = {mu, sg};
            const double fd = finite_diff_check(
                [&](Tape& tape, std::span<const Val> eta) {
                    return tup.evaluate(tape, eta, xs);
                },
                theta, 1e-5);
            CHECK(fd <= 1e-6);
        }
    }
}

TEST_CASE("graph size: repar is M-independent, direct grows as 3M") {
    auto stats_for = [&](std::size_t m, bool repar) {
        auto xs = normal_locscale(m, 99);
        Tape tape;
        const Val eta[] = {tape.param(0.5), tape.param(0.1)};
        if (repar) {
            auto tup = build_locscale_power_tuple(2, 2);
            (void)tup.evaluate(tape, eta, xs);
        } else {
            (void)direct_mc_build(tape, GSpec::power(2), eta, xs,
                                  DirectForm::Monomial);
        }
        return tape.stats();
    };

    auto s1 = stats_for(1, true);
    auto s10 = stats_for(10, true);
    auto s10k = stats_for(10000, true);
    CHECK(s1 == s10);
    CHECK(s1 == s10k);
    CHECK(s1.interaction_nodes == 3);

    CHECK(stats_for(3, false).interaction_nodes == 9);  // the 3-sample diagram
    for (std::size_t m : {1u, 10u, 100u})
        CHECK(stats_for(m, false).interaction_nodes == 3 * m);
}

TEST_CASE("measured interaction counts equal the formulas (k,K <= 6, S in 2,3)") {
    RngStream rng(11);
    for (int S : {2, 3}) {
        // Generic statistics: no constant column needed for counting.
        std::vector<std::vector<double>> colsv(static_cast<std::size_t>(S),
                                               std::vector<double>(16));
        for (auto& c : colsv)
            for (auto& v : c) v = 0.5 + rng.uniform01();
        auto xs = SuffSamples::from_columns(colsv);

        for (int k = 1; k <= 6; ++k) {
            Tape tape;
            std::vector<Val> eta;
            for (int s = 0; s < S; ++s) eta.push_back(tape.param(0.3 + 0.2 * s));
            auto tup = tuple_for(GSpec::power(k), S);
            (void)tup.evaluate(tape, eta, xs);
            CHECK(tape.stats().interaction_nodes == dp_power(k, S));
        }
        for (int K = 1; K <= 6; ++K) {
            std::vector<double> coeffs(static_cast<std::size_t>(K) + 1, 0.25);
            Tape tape;
            std::vector<Val> eta;
            for (int s = 0; s < S; ++s) eta.push_back(tape.param(0.3 + 0.2 * s));
            auto tup = build_polynomial_tuple(coeffs, S);
            (void)tup.evaluate(tape, eta, xs);
            CHECK(tape.stats().interaction_nodes == dp_polynomial(K, S));
        }
    }
}

TEST_CASE("taylor tuple: coefficients, routes, and exactness vs truncated target") {
    auto ts = taylor_log_spec(3, 1.0);
    REQUIRE(ts.coeffs.size() == 4);
    CHECK(ts.coeffs[0] == 0.0);
    CHECK(ts.coeffs[1] == doctest::Approx(1.0));
    CHECK(ts.coeffs[2] == doctest::Approx(-0.5));
    CHECK(ts.coeffs[3] == doctest::Approx(1.0 / 3.0));

    auto xs = normal_locscale(257, 4242);
    const double eta[] = {1.1, 0.2};

    // Route 2 (constant statistic at slot 0): dp_polynomial interactions.
    auto tup2 = build_taylor_tuple(ts, 2, 0, 1.0);
    {
        Tape tape;
        const Val ev[] = {tape.param(eta[0]), tape.param(eta[1])};
        (void)tup2.evaluate(tape, ev, xs);
        CHECK(tape.stats().interaction_nodes == 9);
        CHECK(tup2.d_p == 9);
    }
    // Route 1 (no constant statistic): C(K+S+1,S+1) - (K+1) interactions.
    auto tup1 = build_taylor_tuple(ts, 2, -1);
    {
        Tape tape;
        const Val ev[] = {tape.param(eta[0]), tape.param(eta[1])};
        (void)tup1.evaluate(tape, ev, xs);
        CHECK(tape.stats().interaction_nodes == 16);
        CHECK(tup1.d_p == 16);
    }

    // Both routes reproduce direct MC of the truncated polynomial exactly.
    auto g_trunc = GSpec::shifted_polynomial(1.0, ts.coeffs);
    {
        Tape tape;
        const Val ev[] = {tape.param(eta[0]), tape.param(eta[1])};
        const double direct = tape.value(
            direct_mc_build(tape, g_trunc, ev, xs, DirectForm::Sum));
        CHECK(rel_err(tup2.value(eta, xs), direct) <= 1e-10);
        CHECK(rel_err(tup1.value(eta, xs), direct) <= 1e-10);
    }

    // At mu = a = 1 and sigma = 0 the approximation is exactly zero.
    const double eta_a[] = {1.0, 0.0};
    CHECK(build_taylor_tuple(ts, 2, 0).value(eta_a, xs) == 0.0);
}

TEST_CASE("taylor K=5 approximates E ln w for a tight normal") {
    const std::size_t m = 1000000;
    std::vector<double> xi(m);
    RngStream rng(314159);
    rng.fill_normal(xi);
    auto xs = SuffSamples::locscale(xi);
    const double eta[] = {1.0, 0.05};

    auto ts = taylor_log_spec(5, 1.0);
    auto tup = build_taylor_tuple(ts, 2, 0, 1.0);
    const double approx = tup.value(eta, xs);
    const double exact_mc = direct_mc_value(GSpec::log_pow(1), eta, xs);
    CHECK(std::fabs(approx - exact_mc) <= 1e-3);

    const double trunc_mc =
        direct_mc_value(GSpec::shifted_polynomial(1.0, ts.coeffs), eta, xs);
    CHECK(std::fabs(approx - trunc_mc) <= 1e-10 * std::max(1.0, std::fabs(trunc_mc)));

    CHECK(taylor_outside_fraction(ts, eta, xs) == 0.0);
    // A center far below the realizations puts everything outside the radius.
    auto ts_bad = taylor_log_spec(5, 0.001);
    CHECK(taylor_outside_fraction(ts_bad, eta, xs) >= 0.99);
}

TEST_CASE("pooled moments reproduce per-tuple aggregation bitwise") {
    std::vector<double> xi(4097);
    RngStream rng(8);
    rng.fill_normal(xi);
    auto xs = SuffSamples::locscale(xi);
    auto pm = compute_pooled_moments(xs, 6);

    for (int k = 1; k <= 6; ++k) {
        auto tup = build_locscale_power_tuple(k, 2);
        auto a = tup.t_aggregate(xs);
        auto b = tup.t_from_moments(pm);
        REQUIRE(a.t.size() == b.t.size());
        for (std::size_t j = 0; j < a.t.size(); ++j)
            CHECK(std::memcmp(&a.t[j], &b.t[j], sizeof(double)) == 0);
        CHECK(a.offset == b.offset);
    }

    // Scaling layouts pool log and reciprocal moments on request.
    std::vector<double> pos(513);
    for (auto& v : pos) v = 0.1 + rng.uniform01();
    auto sxs = SuffSamples::scaling(pos);
    auto spm = compute_pooled_moments(sxs, 4, true, true);
    for (const auto& g : {GSpec::log_pow(2), GSpec::recip_power(2)}) {
        auto tup = build_scaling_tuple(g);
        auto a = tup.t_aggregate(sxs);
        auto b = tup.t_from_moments(spm);
        REQUIRE(a.t.size() == b.t.size());
        for (std::size_t j = 0; j < a.t.size(); ++j)
            CHECK(std::memcmp(&a.t[j], &b.t[j], sizeof(double)) == 0);
        CHECK(a.offset == b.offset);
    }

    CHECK_THROWS_AS(
        compute_pooled_moments(
            SuffSamples::from_columns({{1.0, 2.0}, {3.0, 4.0}}), 2),
        DomainError);
}

TEST_CASE("estimator statistics: unbiased, variance slope near -1") {
    const double eta[] = {0.7, 0.9};
    const double truth = 0.7 * 0.7 + 0.9 * 0.9;
    auto tup = build_locscale_power_tuple(2, 2);

    const std::size_t ms[] = {16, 64, 256, 1024};
    const int reps = 400;
    std::vector<double> log_m, log_var;
    for (std::size_t m : ms) {
        double sum_err = 0.0, sum_sq = 0.0;
        for (int r = 0; r < reps; ++r) {
            auto xs = normal_locscale(m, mix_seed(2024, m, static_cast<std::uint64_t>(r)));
            const double err = tup.value(eta, xs) - truth;
            sum_err += err;
            sum_sq += err * err;
        }
        const double var = sum_sq / reps;
        // Unbiased: mean error within 4 standard errors.
        CHECK(std::fabs(sum_err / reps) <= 4.0 * std::sqrt(var / reps));
        log_m.push_back(std::log(static_cast<double>(m)));
        log_var.push_back(std::log(var));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < log_m.size(); ++i) {
        mx += log_m[i];
        my += log_var[i];
    }
    mx /= static_cast<double>(log_m.size());
    my /= static_cast<double>(log_m.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < log_m.size(); ++i) {
        num += (log_m[i] - mx) * (log_var[i] - my);
        den += (log_m[i] - mx) * (log_m[i] - mx);
    }
    const double slope = num / den;  // variance ~ 1/M
    CHECK(slope >= -1.2);
    CHECK(slope <= -0.8);
}

TEST_CASE("unsupported g and domain guards") {
    CHECK_THROWS_AS(tuple_for(GSpec::abs(), 2), UnsupportedGError);
    CHECK_THROWS_AS(tuple_for(GSpec::log_pow(1), 2), UnsupportedGError);
    CHECK_THROWS_AS(tuple_for(GSpec::recip_power(2), 2), UnsupportedGError);
    CHECK_THROWS_AS(build_scaling_tuple(GSpec::abs()), UnsupportedGError);

    // Log aggregation requires positive statistics.
    const double with_neg[] = {0.5, -1.0};
    auto xs = SuffSamples::scaling(with_neg);
    auto lt = build_scaling_tuple(GSpec::log_pow(1));
    CHECK_THROWS_AS(lt.t_aggregate(xs), DomainError);

    // |w| still has a direct build.
    Tape tape;
    const Val eta[] = {tape.param(0.5), tape.param(0.2)};
    const double xi[] = {0.3, -0.8, 1.4};
    auto lxs = SuffSamples::locscale(xi);
    Val root = direct_mc_build(tape, GSpec::abs(), eta, lxs, DirectForm::Sum);
    const double want =
        (std::fabs(0.5 + 0.2 * 0.3) + std::fabs(0.5 - 0.2 * 0.8) +
         std::fabs(0.5 + 0.2 * 1.4)) /
        3.0;
    CHECK(tape.value(root) == doctest::Approx(want).epsilon(1e-14));
    CHECK_THROWS_AS(
        direct_mc_build(tape, GSpec::abs(), eta, lxs, DirectForm::Monomial),
        UnsupportedGError);
}

TEST_CASE("tuple construction is deterministic") {
    auto xs = normal_locscale(101, 5);
    const double eta[] = {0.4, 1.1};
    auto t1 = build_polynomial_tuple(std::vector<double>{0.5, 1.0, -2.0, 0.25}, 2);
    auto t2 = build_polynomial_tuple(std::vector<double>{0.5, 1.0, -2.0, 0.25}, 2);
    CHECK(t1.exponents == t2.exponents);
    CHECK(t1.coeffs == t2.coeffs);
    const double v1 = t1.value(eta, xs);
    const double v2 = t2.value(eta, xs);
    CHECK(std::memcmp(&v1, &v2, sizeof(double)) == 0);
}
