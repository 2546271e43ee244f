#include "mcrepar/kl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mcrepar/errors.hpp"
#include "mcrepar/parallel.hpp"
#include "mcrepar/rng.hpp"

namespace mcrepar {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // (1/2)·ln(2π)

struct Draws {
    std::vector<double> anc;  // raw ancillary draws
    SuffSamples xs;           // factored per-draw statistics
};

Draws draw_stats(const DistributionSpec& post, std::size_t m,
                 std::uint64_t seed) {
    RngStream rng(seed);
    Draws d;
    d.anc.resize(m);
    post.sample_ancillary(rng, d.anc);
    d.xs = post.kind == FamilyKind::Scaling ? SuffSamples::scaling(d.anc)
                                            : SuffSamples::locscale(d.anc);
    return d;
}

void check_theta(const DistributionSpec& post, std::span<const double> th) {
    if (th.size() != post.theta.size())
        throw DomainError("kl_estimate: posterior " + post.name + " takes " +
                          std::to_string(post.theta.size()) +
                          " parameter handles, got " +
                          std::to_string(th.size()));
    for (double v : th)
        if (!std::isfinite(v))
            throw ParameterDomainError("kl_estimate: non-finite parameter value");
    const double scale = post.kind == FamilyKind::Scaling ? th[0] : th[1];
    if (!(scale > 0.0))
        throw ParameterDomainError("kl_estimate: " + post.name +
                                   " needs a positive scale, got " +
                                   std::to_string(scale));
}

double realize_numeric(const DistributionSpec& post, std::span<const double> th,
                       double a) {
    switch (post.kind) {
        case FamilyKind::Scaling:
            return th[0] * a;
        case FamilyKind::LocationScale:
            return th[0] + th[1] * a;
        case FamilyKind::Transformed:
            return std::exp(th[0] + th[1] * a);
    }
    return 0.0;
}

Val mean_reduce(Tape& tape, std::span<const Val> items) {
    const Val s = tape.sum_reduce(items);
    return tape.mul(s, tape.constant(1.0 / static_cast<double>(items.size())));
}

// Tuple value with the term coefficient folded into the constant t side, so
// the theta-side graph stays coefficient-free.
Val scaled_tuple_val(Tape& tape, const ParamTuple& pt, std::span<const Val> eta,
                     const SuffSamples& xs, double coeff) {
    TValues tv = pt.t_aggregate(xs);
    for (auto& t : tv.t) t *= coeff;
    tv.offset *= coeff;
    return pt.evaluate_with_t(tape, eta, tv);
}

// Per-sample realization nodes w_i (and base nodes v_i for transformed
// families), the shared input of every naive per-draw subgraph.
std::vector<Val> build_w_nodes(Tape& tape, const DistributionSpec& post,
                               std::span<const Val> theta,
                               std::span<const double> anc) {
    std::vector<Val> w;
    w.reserve(anc.size());
    switch (post.kind) {
        case FamilyKind::Scaling:
            for (double a : anc)
                w.push_back(tape.dot_combine(theta[0], tape.constant(a)));
            break;
        case FamilyKind::LocationScale: {
            const Val one = tape.constant(1.0);
            for (double a : anc)
                w.push_back(tape.add(tape.dot_combine(theta[0], one),
                                     tape.dot_combine(theta[1], tape.constant(a))));
            break;
        }
        case FamilyKind::Transformed: {
            const Val one = tape.constant(1.0);
            for (double a : anc) {
                const Val v = tape.add(tape.dot_combine(theta[0], one),
                                       tape.dot_combine(theta[1], tape.constant(a)));
                w.push_back(tape.exp(v));
            }
            break;
        }
    }
    return w;
}

Val gaussian_entropy_closed(Tape& tape, Val sigma) {
    return tape.add(tape.neg(tape.log(sigma)),
                    tape.constant(-(kHalfLog2Pi + 0.5)));
}

// E[ln q] through the factored route. Gaussian/radial have closed forms;
// the rest assemble the family's ln q from tuple-valued moments of the same
// shared draws the cross part uses.
Val entropy_repar(Tape& tape, const DistributionSpec& post,
                  std::span<const Val> theta, const SuffSamples& xs) {
    if (post.name == "normal") return gaussian_entropy_closed(tape, theta[1]);
    if (post.name == "radial") return tape.neg(tape.log(theta[1]));
    if (post.name == "exponential") {
        // ln q = -ln θ - w/θ
        const ParamTuple p1 = build_scaling_tuple(GSpec::power(1));
        const Val ew = scaled_tuple_val(tape, p1, theta, xs, 1.0);
        return tape.sub(tape.neg(tape.log(theta[0])),
                        tape.mul(ew, tape.reciprocal(theta[0])));
    }
    if (post.name == "rayleigh") {
        // ln q = ln w - 2 ln s - w²/(2s²)
        const ParamTuple plog = build_scaling_tuple(GSpec::log_pow(1));
        const ParamTuple p2 = build_scaling_tuple(GSpec::power(2));
        const Val elnw = scaled_tuple_val(tape, plog, theta, xs, 1.0);
        const Val ew2 = scaled_tuple_val(tape, p2, theta, xs, 1.0);
        const Val s = theta[0];
        const Val m2ls = tape.mul(tape.constant(-2.0), tape.log(s));
        const Val half_inv_s2 =
            tape.reciprocal(tape.mul(tape.constant(2.0), tape.pow_int(s, 2)));
        return tape.add(elnw,
                        tape.add(m2ls, tape.neg(tape.mul(ew2, half_inv_s2))));
    }
    if (post.name == "lognormal") {
        // ln q(w) = -v - (1/2)ln 2π - ln σ - (v-μ)²/(2σ²),  v = ln w = μ+σξ
        const ParamTuple b1 = build_locscale_power_tuple(1, 2);
        const ParamTuple b2 = build_locscale_power_tuple(2, 2);
        const Val t1 = scaled_tuple_val(tape, b1, theta, xs, 1.0);
        const Val t2 = scaled_tuple_val(tape, b2, theta, xs, 1.0);
        const Val mu = theta[0];
        const Val sg = theta[1];
        const Val dev2 = tape.add(
            tape.sub(t2, tape.mul(tape.mul(tape.constant(2.0), mu), t1)),
            tape.pow_int(mu, 2));
        const Val half_inv_s2 =
            tape.reciprocal(tape.mul(tape.constant(2.0), tape.pow_int(sg, 2)));
        const Val head = tape.add(tape.neg(t1), tape.constant(-kHalfLog2Pi));
        return tape.add(head, tape.add(tape.neg(tape.log(sg)),
                                       tape.neg(tape.mul(dev2, half_inv_s2))));
    }
    throw UnsupportedPosteriorError("entropy: uncatalogued posterior " +
                                    post.name);
}

// E[ln q] through the naive route: per-sample ln q(w_i), averaged. Gaussian
// and radial keep their closed forms (the MC mean would differ from the
// factored route by O(1/√M), breaking the shared-seed identity).
Val entropy_direct(Tape& tape, const DistributionSpec& post,
                   std::span<const Val> theta, std::span<const Val> w) {
    if (post.name == "normal") return gaussian_entropy_closed(tape, theta[1]);
    if (post.name == "radial") return tape.neg(tape.log(theta[1]));
    std::vector<Val> q;
    q.reserve(w.size());
    if (post.name == "exponential") {
        const Val nlt = tape.neg(tape.log(theta[0]));
        const Val rth = tape.reciprocal(theta[0]);
        for (Val wi : w) q.push_back(tape.sub(nlt, tape.mul(wi, rth)));
        return mean_reduce(tape, q);
    }
    if (post.name == "rayleigh") {
        const Val s = theta[0];
        const Val m2ls = tape.mul(tape.constant(-2.0), tape.log(s));
        const Val half_inv_s2 =
            tape.reciprocal(tape.mul(tape.constant(2.0), tape.pow_int(s, 2)));
        for (Val wi : w)
            q.push_back(tape.add(
                tape.log(wi),
                tape.add(m2ls,
                         tape.neg(tape.mul(tape.pow_int(wi, 2), half_inv_s2)))));
        return mean_reduce(tape, q);
    }
    if (post.name == "lognormal") {
        const Val mu = theta[0];
        const Val sg = theta[1];
        const Val nls = tape.neg(tape.log(sg));
        const Val half_inv_s2 =
            tape.reciprocal(tape.mul(tape.constant(2.0), tape.pow_int(sg, 2)));
        for (Val wi : w) {
            const Val lnw = tape.log(wi);
            const Val dev2 = tape.pow_int(tape.sub(lnw, mu), 2);
            q.push_back(
                tape.add(tape.add(tape.neg(lnw), tape.constant(-kHalfLog2Pi)),
                         tape.add(nls, tape.neg(tape.mul(dev2, half_inv_s2)))));
        }
        return mean_reduce(tape, q);
    }
    throw UnsupportedPosteriorError("entropy: uncatalogued posterior " +
                                    post.name);
}

// One prior term under the naive route: mean of shape(w_i), times coeff.
Val direct_term_val(Tape& tape, const LogDensityTerm& term,
                    std::span<const Val> w) {
    std::vector<Val> nodes;
    nodes.reserve(w.size());
    for (Val wi : w) {
        switch (term.shape) {
            case TermShape::Power:
                nodes.push_back(term.k == 1 ? wi : tape.pow_int(wi, term.k));
                break;
            case TermShape::Log: {
                const Val l = tape.log(wi);
                nodes.push_back(term.k == 1 ? l : tape.pow_int(l, term.k));
                break;
            }
            case TermShape::RecipPower:
                nodes.push_back(tape.reciprocal(
                    term.k == 1 ? wi : tape.pow_int(wi, term.k)));
                break;
            case TermShape::Abs:
                nodes.push_back(tape.abs(wi));
                break;
        }
    }
    return tape.mul(mean_reduce(tape, nodes), tape.constant(term.coeff));
}

// Tuple route for one prior term given the posterior's factorization; empty
// when no exact tuple exists (Taylor-configured ln terms count as a route).
std::optional<ParamTuple> route_term(const DistributionSpec& post,
                                     const LogDensityTerm& term,
                                     const KlOptions& opts,
                                     std::optional<TaylorSpec>* taylor_out) {
    switch (post.kind) {
        case FamilyKind::Scaling:
            switch (term.shape) {
                case TermShape::Power:
                    return build_scaling_tuple(GSpec::power(term.k));
                case TermShape::Log:
                    return build_scaling_tuple(GSpec::log_pow(term.k));
                case TermShape::RecipPower:
                    return build_scaling_tuple(GSpec::recip_power(term.k));
                case TermShape::Abs:
                    return std::nullopt;
            }
            break;
        case FamilyKind::LocationScale:
            switch (term.shape) {
                case TermShape::Power:
                    return build_locscale_power_tuple(term.k, 2);
                case TermShape::Log:
                    if (term.k == 1 && opts.taylor_k > 0) {
                        const TaylorSpec ts =
                            taylor_log_spec(opts.taylor_k, opts.taylor_center);
                        *taylor_out = ts;
                        // canonical stats are T = (1, ξ): slot 0 is constant
                        return tuple_for(
                            GSpec::shifted_polynomial(
                                ts.center, std::span<const double>(ts.coeffs)),
                            2, /*const_slot=*/0, /*const_value=*/1.0);
                    }
                    return std::nullopt;
                case TermShape::RecipPower:
                case TermShape::Abs:
                    return std::nullopt;
            }
            break;
        case FamilyKind::Transformed:
            // base-domain polynomials only: (ln w)^k = v^k
            if (term.shape == TermShape::Log)
                return build_locscale_power_tuple(term.k, 2);
            return std::nullopt;
    }
    return std::nullopt;
}

std::string term_desc(const LogDensityTerm& term) {
    switch (term.shape) {
        case TermShape::Power:
            return "w^" + std::to_string(term.k);
        case TermShape::Log:
            return term.k == 1 ? std::string("ln w")
                               : "(ln w)^" + std::to_string(term.k);
        case TermShape::RecipPower:
            return "w^-" + std::to_string(term.k);
        case TermShape::Abs:
            return "|w|";
    }
    return "?";
}

}  // namespace

KlBreakdown kl_estimate(Tape& tape, const DistributionSpec& posterior,
                        std::span<const Val> theta, const std::string& prior,
                        std::span<const double> prior_params,
                        const KlMethod& method, const KlOptions& opts) {
    std::vector<double> th(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) th[i] = tape.value(theta[i]);
    check_theta(posterior, th);

    const auto stats0 = tape.stats();
    KlBreakdown out;

    if (method.tag == KlMethod::Tag::ClosedForm) {
        if (posterior.name != "normal" || prior != "normal")
            throw UnsupportedPosteriorError(
                "closed-form KL is catalogued for Gaussian posterior and "
                "Gaussian prior only, got " +
                posterior.name + " || " + prior);
        if (prior_params.size() != 2)
            throw ParameterDomainError("normal prior takes (mu0, sigma0)");
        const double mu0 = prior_params[0];
        const double sigma0 = prior_params[1];
        if (!(sigma0 > 0.0) || !std::isfinite(mu0))
            throw ParameterDomainError("normal prior needs sigma0 > 0");
        const Val e = gaussian_entropy_closed(tape, theta[1]);
        const Val dev = tape.sub(theta[0], tape.constant(mu0));
        const Val c = tape.add(
            tape.constant(kHalfLog2Pi + std::log(sigma0)),
            tape.mul(tape.add(tape.pow_int(theta[1], 2), tape.pow_int(dev, 2)),
                     tape.constant(1.0 / (2.0 * sigma0 * sigma0))));
        out.root = tape.add(e, c);
        out.entropy_part = tape.value(e);
        out.cross_part = tape.value(c);
        out.total = tape.value(out.root);
        out.grad_nodes_used = tape.stats().grad_nodes - stats0.grad_nodes;
        return out;
    }

    if (method.m == 0)
        throw DomainError("kl_estimate: Monte-Carlo methods need m >= 1");

    const TermList list = log_pdf_terms(prior, prior_params);
    const Draws d = draw_stats(posterior, method.m, method.seed);

    // every realized draw must sit inside the prior's support, else ln p is
    // undefined and no estimator (factored or naive) makes sense
    for (double a : d.anc) {
        const double w = realize_numeric(posterior, th, a);
        if (!prior_support_contains(prior, w))
            throw DomainError("kl_estimate: realized draw w = " +
                              std::to_string(w) + " outside the support of " +
                              prior);
    }

    Val e{}, cross_sum{};
    std::vector<Val> w_nodes;  // naive per-draw nodes, built when needed
    const auto w_lazy = [&]() -> std::span<const Val> {
        if (w_nodes.empty())
            w_nodes = build_w_nodes(tape, posterior, theta, d.anc);
        return w_nodes;
    };

    // E[ln p] = C + Σ coeff·E[shape(w)]
    bool have_term = false;
    Val terms_acc{};
    const auto accumulate = [&](Val v) {
        terms_acc = have_term ? tape.add(terms_acc, v) : v;
        have_term = true;
    };

    if (method.tag == KlMethod::Tag::ReparMC) {
        e = entropy_repar(tape, posterior, theta, d.xs);
        for (const auto& term : list.terms) {
            std::optional<TaylorSpec> ts;
            const auto pt = route_term(posterior, term, opts, &ts);
            if (pt) {
                accumulate(scaled_tuple_val(tape, *pt, theta, d.xs, term.coeff));
                if (ts) {
                    out.taylor_used = true;
                    out.taylor_outside = std::max(
                        out.taylor_outside,
                        taylor_outside_fraction(*ts, th, d.xs));
                }
            } else if (opts.allow_direct_fallback) {
                accumulate(direct_term_val(tape, term, w_lazy()));
                out.fallback_used = true;
            } else {
                throw UnsupportedTermError(
                    "no parameterization tuple for prior term " +
                    term_desc(term) + " under posterior " + posterior.name +
                    (term.shape == TermShape::Log &&
                             posterior.kind == FamilyKind::LocationScale
                         ? " (set taylor_k, or allow_direct_fallback)"
                         : " (set allow_direct_fallback)"));
            }
        }
    } else {
        const auto w = w_lazy();
        e = entropy_direct(tape, posterior, theta, w);
        for (const auto& term : list.terms) accumulate(direct_term_val(tape, term, w));
    }

    const Val c_const = tape.constant(list.constant);
    const Val lnp = have_term ? tape.add(terms_acc, c_const) : c_const;
    cross_sum = tape.neg(lnp);

    out.root = tape.add(e, cross_sum);
    out.entropy_part = tape.value(e);
    out.cross_part = tape.value(cross_sum);
    out.total = tape.value(out.root);
    out.grad_nodes_used = tape.stats().grad_nodes - stats0.grad_nodes;
    return out;
}

Val entropy_term(Tape& tape, const DistributionSpec& posterior,
                 std::span<const Val> theta, const KlMethod& method) {
    std::vector<double> th(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) th[i] = tape.value(theta[i]);
    check_theta(posterior, th);
    if (posterior.name == "normal")
        return gaussian_entropy_closed(tape, theta[1]);
    if (posterior.name == "radial") return tape.neg(tape.log(theta[1]));
    if (method.tag == KlMethod::Tag::ClosedForm)
        throw UnsupportedPosteriorError("no closed-form entropy for " +
                                        posterior.name);
    if (method.m == 0)
        throw DomainError("entropy_term: Monte-Carlo methods need m >= 1");
    const Draws d = draw_stats(posterior, method.m, method.seed);
    if (method.tag == KlMethod::Tag::ReparMC)
        return entropy_repar(tape, posterior, theta, d.xs);
    const auto w = build_w_nodes(tape, posterior, theta, d.anc);
    return entropy_direct(tape, posterior, theta, w);
}

double kl_value_gaussian(double mu, double sigma, double mu0, double sigma0,
                         const PooledMoments& pm) {
    if (!(sigma > 0.0) || !(sigma0 > 0.0))
        throw ParameterDomainError("kl_value_gaussian: sigmas must be positive");
    static const ParamTuple p1 = build_locscale_power_tuple(1, 2);
    static const ParamTuple p2 = build_locscale_power_tuple(2, 2);
    const double eta[2] = {mu, sigma};
    const double m1 = p1.value_with_t(eta, p1.t_from_moments(pm));
    const double m2 = p2.value_with_t(eta, p2.t_from_moments(pm));
    // ln p(w) = c0 + c1·w + c2·w², the Gaussian prior's term list
    const double c0 =
        -kHalfLog2Pi - std::log(sigma0) - mu0 * mu0 / (2.0 * sigma0 * sigma0);
    const double c1 = mu0 / (sigma0 * sigma0);
    const double c2 = -1.0 / (2.0 * sigma0 * sigma0);
    const double entropy = -std::log(sigma) - (kHalfLog2Pi + 0.5);
    return entropy - (c0 + c1 * m1 + c2 * m2);
}

MeanFieldResult kl_mean_field_gaussian(double mu, double sigma, double mu0,
                                       double sigma0, std::size_t dims,
                                       std::size_t m, std::uint64_t seed) {
    if (m == 0) throw DomainError("kl_mean_field_gaussian: m >= 1");
    MeanFieldResult r;
    r.closed_form =
        kl_gaussian_closed_form(mu, sigma, mu0, sigma0) * static_cast<double>(dims);
    std::vector<double> buf(m);
    double total = 0.0;
    for (std::size_t dd = 0; dd < dims; ++dd) {
        RngStream rng(mix_seed(seed, dd));
        rng.fill_normal(buf);
        const SuffSamples xs = SuffSamples::locscale(buf);
        const PooledMoments pm = compute_pooled_moments(xs, 2);
        total += kl_value_gaussian(mu, sigma, mu0, sigma0, pm);
    }
    r.estimate = total;
    return r;
}

std::vector<KlSweepRow> kl_error_sweep(double mu, double sigma, double mu0,
                                       double sigma0,
                                       std::span<const std::size_t> m_grid,
                                       int replications, std::uint64_t seed,
                                       int threads) {
    if (replications < 1) throw DomainError("kl_error_sweep: replications >= 1");
    for (std::size_t m : m_grid)
        if (m == 0) throw DomainError("kl_error_sweep: m >= 1");
    const double cf = kl_gaussian_closed_form(mu, sigma, mu0, sigma0);

    // graph stats per m: one tape build each (counts are deterministic)
    std::vector<std::size_t> grad_nodes(m_grid.size()), inter_nodes(m_grid.size());
    const DistributionSpec post = make_posterior("normal", std::vector<double>{mu, sigma});
    for (std::size_t mi = 0; mi < m_grid.size(); ++mi) {
        Tape tape;
        const Val h[2] = {tape.param(mu), tape.param(sigma)};
        const double zeta[2] = {mu0, sigma0};
        kl_estimate(tape, post, h, "normal", zeta,
                    KlMethod::repar_mc(m_grid[mi], mix_seed(seed, m_grid[mi], 0)));
        const auto g = tape.stats();
        grad_nodes[mi] = g.grad_nodes;
        inter_nodes[mi] = g.interaction_nodes;
    }

    const std::size_t r_count = static_cast<std::size_t>(replications);
    std::vector<KlSweepRow> rows(m_grid.size() * r_count);
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        const std::size_t mi = i / r_count;
        const int r = static_cast<int>(i % r_count);
        const std::size_t m = m_grid[mi];
        const auto t0 = std::chrono::steady_clock::now();
        RngStream rng(mix_seed(seed, m, static_cast<std::uint64_t>(r) + 1));
        std::vector<double> buf(m);
        rng.fill_normal(buf);
        const SuffSamples xs = SuffSamples::locscale(buf);
        const PooledMoments pm = compute_pooled_moments(xs, 2);
        const double est = kl_value_gaussian(mu, sigma, mu0, sigma0, pm);
        const auto t1 = std::chrono::steady_clock::now();
        rows[i] = KlSweepRow{
            m,
            r,
            est - cf,
            0.0,
            grad_nodes[mi],
            inter_nodes[mi],
            static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
                    .count())};
    });

    for (std::size_t mi = 0; mi < m_grid.size(); ++mi) {
        double ss = 0.0;
        for (std::size_t r = 0; r < r_count; ++r) {
            const double e = rows[mi * r_count + r].error;
            ss += e * e;
        }
        const double rmse = std::sqrt(ss / static_cast<double>(r_count));
        for (std::size_t r = 0; r < r_count; ++r)
            rows[mi * r_count + r].rmse = rmse;
    }
    return rows;
}

std::vector<KlDSweepRow> kl_error_d_sweep(double mu, double sigma, double mu0,
                                          double sigma0,
                                          std::span<const std::size_t> d_grid,
                                          std::size_t m, int replications,
                                          std::uint64_t seed, int threads) {
    if (replications < 1)
        throw DomainError("kl_error_d_sweep: replications >= 1");
    if (m == 0) throw DomainError("kl_error_d_sweep: m >= 1");
    for (std::size_t d : d_grid)
        if (d == 0) throw DomainError("kl_error_d_sweep: d >= 1");

    const std::size_t r_count = static_cast<std::size_t>(replications);
    std::vector<KlDSweepRow> rows(d_grid.size() * r_count);
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        const std::size_t di = i / r_count;
        const int r = static_cast<int>(i % r_count);
        const std::size_t d = d_grid[di];
        const auto t0 = std::chrono::steady_clock::now();
        const auto mf = kl_mean_field_gaussian(
            mu, sigma, mu0, sigma0, d, m,
            mix_seed(seed, d, static_cast<std::uint64_t>(r) + 1, 2));
        const auto t1 = std::chrono::steady_clock::now();
        rows[i] = KlDSweepRow{
            d,
            m,
            r,
            mf.estimate - mf.closed_form,
            0.0,
            static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
                    .count())};
    });

    for (std::size_t di = 0; di < d_grid.size(); ++di) {
        double ss = 0.0;
        for (std::size_t r = 0; r < r_count; ++r) {
            const double e = rows[di * r_count + r].error;
            ss += e * e;
        }
        const double rmse = std::sqrt(ss / static_cast<double>(r_count));
        for (std::size_t r = 0; r < r_count; ++r)
            rows[di * r_count + r].rmse = rmse;
    }
    return rows;
}

}  // namespace mcrepar
