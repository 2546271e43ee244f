#include "mcrepar/bnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "mcrepar/distributions.hpp"
#include "mcrepar/errors.hpp"
#include "mcrepar/repar.hpp"
#include "mcrepar/rng.hpp"

namespace mcrepar {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // (1/2)·ln(2π)
}

double softplus(double rho) {
    if (rho > 30.0) return rho;  // log1p(exp(rho)) == rho to double precision
    return std::log1p(std::exp(rho));
}

double softplus_inv(double sigma) {
    if (!(sigma > 0.0))
        throw ParameterDomainError("softplus_inv needs sigma > 0");
    return std::log(std::expm1(sigma));
}

// --- model container ----------------------------------------------------------

std::size_t BnnModel::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += 2 * l.weight_count();
    return n;
}

std::vector<double> BnnModel::flat_params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (const auto& l : layers) {
        p.insert(p.end(), l.mu_w.begin(), l.mu_w.end());
        p.insert(p.end(), l.mu_b.begin(), l.mu_b.end());
        p.insert(p.end(), l.rho_w.begin(), l.rho_w.end());
        p.insert(p.end(), l.rho_b.begin(), l.rho_b.end());
    }
    return p;
}

void BnnModel::set_flat_params(std::span<const double> p) {
    if (p.size() != param_count())
        throw DomainError("set_flat_params: size mismatch");
    std::size_t k = 0;
    for (auto& l : layers) {
        for (auto& v : l.mu_w) v = p[k++];
        for (auto& v : l.mu_b) v = p[k++];
        for (auto& v : l.rho_w) v = p[k++];
        for (auto& v : l.rho_b) v = p[k++];
    }
}

BnnModel init_model(std::span<const int> dims, PosteriorKind posterior,
                    const std::string& prior,
                    std::span<const double> prior_params, std::uint64_t seed) {
    if (dims.size() < 2) throw DomainError("init_model: need at least 2 dims");
    for (int d : dims)
        if (d < 1) throw DomainError("init_model: dims must be positive");
    // validate prior name/params once up front
    (void)log_pdf_terms(prior, prior_params);
    RngStream rng(seed);
    BnnModel m;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        BayesDense layer;
        layer.in_dim = dims[l];
        layer.out_dim = dims[l + 1];
        layer.posterior = posterior;
        layer.prior = prior;
        layer.prior_params.assign(prior_params.begin(), prior_params.end());
        const double limit = 1.0 / std::sqrt(static_cast<double>(layer.in_dim));
        const double rho0 = softplus_inv(0.05 * limit);
        const std::size_t nw =
            static_cast<std::size_t>(layer.out_dim) * layer.in_dim;
        layer.mu_w.resize(nw);
        layer.mu_b.resize(layer.out_dim);
        for (auto& v : layer.mu_w) v = (2.0 * rng.uniform01() - 1.0) * limit;
        for (auto& v : layer.mu_b) v = (2.0 * rng.uniform01() - 1.0) * limit;
        layer.rho_w.assign(nw, rho0);
        layer.rho_b.assign(layer.out_dim, rho0);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

// --- numeric weight realizations ----------------------------------------------

namespace {

// flat (mu_w, mu_b) and softplus'd (sigma_w, sigma_b) views of one layer
struct FlatLayer {
    std::vector<double> mu, sigma;
};

FlatLayer flatten(const BayesDense& l) {
    FlatLayer f;
    f.mu.reserve(l.weight_count());
    f.mu.insert(f.mu.end(), l.mu_w.begin(), l.mu_w.end());
    f.mu.insert(f.mu.end(), l.mu_b.begin(), l.mu_b.end());
    f.sigma.reserve(l.weight_count());
    for (double r : l.rho_w) f.sigma.push_back(softplus(r));
    for (double r : l.rho_b) f.sigma.push_back(softplus(r));
    return f;
}

// Draw order is fixed: Gaussian draws one normal per coordinate in flat
// order; Radial draws the direction vector (flat order) then the radius.
void realize_layer(const FlatLayer& f, PosteriorKind kind, RngStream& rng,
                   std::vector<double>& out) {
    const std::size_t nw = f.mu.size();
    out.resize(nw);
    if (kind == PosteriorKind::Gaussian) {
        for (std::size_t c = 0; c < nw; ++c)
            out[c] = f.mu[c] + f.sigma[c] * rng.normal();
        return;
    }
    std::vector<double> xi(nw);
    rng.fill_normal(xi);
    const double r = rng.normal();
    out = radial_realize(f.mu, f.sigma, xi, r);
}

void affine_apply(std::span<const double> w, int in_dim, int out_dim,
                  const double* x, double* u) {
    for (int o = 0; o < out_dim; ++o) {
        double acc = w[static_cast<std::size_t>(out_dim) * in_dim + o];  // bias
        const double* wrow = w.data() + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) acc += wrow[i] * x[i];
        u[o] = acc;
    }
}

}  // namespace

std::vector<double> forward_sample(const BayesDense& layer,
                                   std::span<const double> input,
                                   std::size_t rows, SampleMode mode,
                                   std::uint64_t seed) {
    if (input.size() != rows * static_cast<std::size_t>(layer.in_dim))
        throw DomainError("forward_sample: input width mismatch");
    const FlatLayer f = flatten(layer);
    RngStream rng(seed);
    std::vector<double> out(rows * static_cast<std::size_t>(layer.out_dim));
    std::vector<double> w;
    if (mode == SampleMode::PerBatch)
        realize_layer(f, layer.posterior, rng, w);
    for (std::size_t r = 0; r < rows; ++r) {
        if (mode == SampleMode::PerDatapoint)
            realize_layer(f, layer.posterior, rng, w);
        affine_apply(w, layer.in_dim, layer.out_dim,
                     input.data() + r * layer.in_dim,
                     out.data() + r * layer.out_dim);
    }
    return out;
}

std::vector<double> forward_mean(const BnnModel& model,
                                 std::span<const double> x, std::size_t rows) {
    if (model.layers.empty()) throw DomainError("forward_mean: empty model");
    std::vector<double> cur(x.begin(), x.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        if (cur.size() != rows * static_cast<std::size_t>(layer.in_dim))
            throw DomainError("forward_mean: width mismatch at layer " +
                              std::to_string(l));
        std::vector<double> nxt(rows * static_cast<std::size_t>(layer.out_dim));
        for (std::size_t r = 0; r < rows; ++r) {
            for (int o = 0; o < layer.out_dim; ++o) {
                double acc = layer.mu_b[static_cast<std::size_t>(o)];
                const double* wrow =
                    layer.mu_w.data() + static_cast<std::size_t>(o) * layer.in_dim;
                const double* xr = cur.data() + r * layer.in_dim;
                for (int i = 0; i < layer.in_dim; ++i) acc += wrow[i] * xr[i];
                if (l + 1 < model.layers.size() && acc < 0.0) acc = 0.0;
                nxt[r * layer.out_dim + static_cast<std::size_t>(o)] = acc;
            }
        }
        cur = std::move(nxt);
    }
    return cur;
}

// --- likelihood nodes ----------------------------------------------------------

Val log_lik_regression(Tape& tape, Val u, double y, double sigma_hat) {
    if (!(sigma_hat > 0.0))
        throw ParameterDomainError("log_lik_regression: sigma_hat > 0");
    const Val dev = tape.sub(tape.constant(y), u);
    return tape.add(
        tape.constant(-kHalfLog2Pi - std::log(sigma_hat)),
        tape.mul(tape.pow_int(dev, 2),
                 tape.constant(-1.0 / (2.0 * sigma_hat * sigma_hat))));
}

Val log_lik_classification(Tape& tape, Val u, int y) {
    if (y != 0 && y != 1)
        throw DomainError("log_lik_classification: y must be 0 or 1");
    const Val e = tape.exp(tape.neg(u));
    Val lp = tape.neg(tape.log(tape.add(tape.constant(1.0), e)));
    if (y == 0) lp = tape.sub(lp, u);
    return lp;
}

Val log_lik_classification_taylor2(Tape& tape, Val u, int y) {
    if (y != 0 && y != 1)
        throw DomainError("log_lik_classification_taylor2: y must be 0 or 1");
    const double c1 = static_cast<double>(y) - 0.5;
    return tape.add(tape.constant(-std::log(2.0)),
                    tape.add(tape.mul(u, tape.constant(c1)),
                             tape.mul(tape.pow_int(u, 2), tape.constant(-0.25))));
}

// --- last-layer likelihood reparameterization ----------------------------------

namespace {

Val mean_over(Tape& tape, std::span<const Val> items) {
    const Val s = tape.sum_reduce(items);
    return tape.mul(s, tape.constant(1.0 / static_cast<double>(items.size())));
}

}  // namespace

Val last_layer_lik_repar(Tape& tape, std::span<const Val> act,
                         std::size_t rows, std::size_t width,
                         std::span<const Val> mu_w, Val mu_b,
                         std::span<const Val> sigma_w, Val sigma_b,
                         std::span<const double> y, LikTask task,
                         double sigma_hat, std::size_t m, std::uint64_t seed) {
    if (m == 0) throw DomainError("last_layer_lik_repar: m >= 1");
    if (rows == 0) throw DomainError("last_layer_lik_repar: empty batch");
    if (act.size() != rows * width || mu_w.size() != width ||
        sigma_w.size() != width || y.size() != rows)
        throw DomainError("last_layer_lik_repar: shape mismatch");
    if (task == LikTask::Regression && !(sigma_hat > 0.0))
        throw ParameterDomainError("last_layer_lik_repar: sigma_hat > 0");

    // u_b = (act_b·mu_w + mu_b) + Σ_j (act_bj σ_j) ε_j + σ_b ε_0: a
    // location-scale variable over S = width + 2 slots whose first statistic
    // is the constant 1
    const std::size_t S = width + 2;
    std::vector<Val> per_b(rows);
    std::vector<Val> eta(S);
    for (std::size_t b = 0; b < rows; ++b) {
        Val mean = mu_b;
        for (std::size_t j = 0; j < width; ++j)
            mean = tape.add(mean, tape.mul(act[b * width + j], mu_w[j]));
        eta[0] = mean;
        for (std::size_t j = 0; j < width; ++j)
            eta[1 + j] = tape.mul(act[b * width + j], sigma_w[j]);
        eta[S - 1] = sigma_b;

        SuffSamples xs;
        xs.M = m;
        xs.cols.resize(S);
        xs.cols[0].is_const = true;
        xs.cols[0].const_value = 1.0;
        for (std::size_t s = 1; s < S; ++s) xs.cols[s].data.resize(m);
        RngStream rng(mix_seed(seed, b));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t s = 1; s < S; ++s) xs.cols[s].data[i] = rng.normal();

        double c[3];
        if (task == LikTask::Regression) {
            const double s2 = sigma_hat * sigma_hat;
            c[0] = -kHalfLog2Pi - std::log(sigma_hat) - y[b] * y[b] / (2.0 * s2);
            c[1] = y[b] / s2;
            c[2] = -1.0 / (2.0 * s2);
        } else {
            const int yb = static_cast<int>(y[b]);
            if (yb != 0 && yb != 1)
                throw DomainError("last_layer_lik_repar: labels must be 0/1");
            c[0] = -std::log(2.0);
            c[1] = static_cast<double>(yb) - 0.5;
            c[2] = -0.25;
        }
        const ParamTuple pt = build_polynomial_tuple(c, static_cast<int>(S));
        per_b[b] = pt.evaluate(tape, eta, xs);
    }
    return mean_over(tape, per_b);
}

// --- parameter handles ----------------------------------------------------------

ParamHandles build_params(Tape& tape, const BnnModel& model) {
    ParamHandles h;
    h.layers.resize(model.layers.size());
    const Val one = tape.constant(1.0);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& m = model.layers[l];
        auto& lh = h.layers[l];
        auto add_params = [&](const std::vector<double>& src,
                              std::vector<Val>& dst) {
            dst.reserve(src.size());
            for (double v : src) {
                const Val p = tape.param(v);
                dst.push_back(p);
                h.flat.push_back(p);
            }
        };
        add_params(m.mu_w, lh.mu_w);
        add_params(m.mu_b, lh.mu_b);
        add_params(m.rho_w, lh.rho_w);
        add_params(m.rho_b, lh.rho_b);
        auto softplus_nodes = [&](const std::vector<Val>& rho,
                                  std::vector<Val>& sig) {
            sig.reserve(rho.size());
            for (Val r : rho)
                sig.push_back(tape.log(tape.add(one, tape.exp(r))));
        };
        softplus_nodes(lh.rho_w, lh.sigma_w);
        softplus_nodes(lh.rho_b, lh.sigma_b);
    }
    return h;
}

// --- per-layer KL ----------------------------------------------------------------

namespace {

// eps matrix (m x nw), row per draw: Gaussian iid; Radial one shared
// direction + radius per draw.
void draw_layer_eps(PosteriorKind kind, std::size_t m, std::size_t nw,
                    RngStream& rng, std::vector<double>& eps) {
    eps.resize(m * nw);
    if (kind == PosteriorKind::Gaussian) {
        rng.fill_normal(eps);
        return;
    }
    std::vector<double> xi(nw);
    for (std::size_t i = 0; i < m; ++i) {
        rng.fill_normal(xi);
        const double r = rng.normal();
        double n2 = 0.0;
        for (double v : xi) n2 += v * v;
        const double norm = std::sqrt(n2);
        if (!(norm > 1e-300))
            throw DegenerateDirectionError("layer_kl: direction norm ~ 0");
        const double scale = std::abs(r) / norm;
        for (std::size_t c = 0; c < nw; ++c) eps[i * nw + c] = xi[c] * scale;
    }
}

}  // namespace

Val layer_kl(Tape& tape, const BayesDense& layer, const LayerHandles& h,
             KlMethod::Tag method, std::size_t m, std::uint64_t seed) {
    if (m == 0) throw DomainError("layer_kl: m >= 1");
    if (method == KlMethod::Tag::ClosedForm)
        throw UnsupportedPosteriorError(
            "layer_kl: closed form is not routed here; use ReparMC/DirectMC");
    const std::size_t nw = layer.weight_count();
    const TermList terms = log_pdf_terms(layer.prior, layer.prior_params);
    const bool restricted = !prior_support_contains(layer.prior, -1.0) ||
                            !prior_support_contains(layer.prior, 0.0);

    std::vector<double> eps;
    RngStream rng(mix_seed(seed, 0xb17));
    draw_layer_eps(layer.posterior, m, nw, rng, eps);

    // flat views of handles and numeric values for the support guard
    std::vector<Val> mu_h, sg_h;
    mu_h.reserve(nw);
    sg_h.reserve(nw);
    mu_h.insert(mu_h.end(), h.mu_w.begin(), h.mu_w.end());
    mu_h.insert(mu_h.end(), h.mu_b.begin(), h.mu_b.end());
    sg_h.insert(sg_h.end(), h.sigma_w.begin(), h.sigma_w.end());
    sg_h.insert(sg_h.end(), h.sigma_b.begin(), h.sigma_b.end());
    if (restricted) {
        for (std::size_t c = 0; c < nw; ++c) {
            const double muc = tape.value(mu_h[c]);
            const double sgc = tape.value(sg_h[c]);
            for (std::size_t i = 0; i < m; ++i) {
                const double w = muc + sgc * eps[i * nw + c];
                if (!prior_support_contains(layer.prior, w))
                    throw DomainError("layer_kl: draw outside the support of " +
                                      layer.prior);
            }
        }
    }

    // prior term tuples are coordinate-independent: build once
    std::vector<ParamTuple> term_tuples;
    if (method == KlMethod::Tag::ReparMC) {
        for (const auto& t : terms.terms) {
            if (t.shape != TermShape::Power)
                throw UnsupportedTermError(
                    "layer_kl: no tuple for prior term shape under a "
                    "location-scale posterior (prior " +
                    layer.prior + ")");
            term_tuples.push_back(build_locscale_power_tuple(t.k, 2));
        }
    }

    const Val ent_const = tape.constant(-(kHalfLog2Pi + 0.5));
    const Val prior_const = tape.constant(terms.constant);
    const bool gauss_ent = layer.posterior == PosteriorKind::Gaussian;

    std::vector<double> col(m);
    std::vector<Val> kl_c(nw);
    for (std::size_t c = 0; c < nw; ++c) {
        for (std::size_t i = 0; i < m; ++i) col[i] = eps[i * nw + c];
        const Val eta[2] = {mu_h[c], sg_h[c]};
        Val ent = tape.neg(tape.log(sg_h[c]));
        if (gauss_ent) ent = tape.add(ent, ent_const);

        Val lnp = prior_const;
        if (method == KlMethod::Tag::ReparMC) {
            const SuffSamples xs = SuffSamples::locscale(col);
            for (std::size_t t = 0; t < terms.terms.size(); ++t) {
                TValues tv = term_tuples[t].t_aggregate(xs);
                for (auto& v : tv.t) v *= terms.terms[t].coeff;
                tv.offset *= terms.terms[t].coeff;
                lnp = tape.add(lnp, term_tuples[t].evaluate_with_t(tape, eta, tv));
            }
        } else {
            std::vector<Val> per_draw(m);
            for (std::size_t i = 0; i < m; ++i) {
                const Val w =
                    tape.add(mu_h[c], tape.mul(sg_h[c], tape.constant(col[i])));
                Val acc{};
                bool have = false;
                for (const auto& t : terms.terms) {
                    Val node{};
                    switch (t.shape) {
                        case TermShape::Power:
                            node = t.k == 1 ? w : tape.pow_int(w, t.k);
                            break;
                        case TermShape::Log: {
                            const Val lg = tape.log(w);
                            node = t.k == 1 ? lg : tape.pow_int(lg, t.k);
                            break;
                        }
                        case TermShape::RecipPower:
                            node = tape.reciprocal(t.k == 1 ? w
                                                            : tape.pow_int(w, t.k));
                            break;
                        case TermShape::Abs:
                            node = tape.abs(w);
                            break;
                    }
                    const Val scaled = tape.mul(node, tape.constant(t.coeff));
                    acc = have ? tape.add(acc, scaled) : scaled;
                    have = true;
                }
                per_draw[i] = have ? acc : tape.constant(0.0);
            }
            lnp = tape.add(lnp, mean_over(tape, per_draw));
        }
        kl_c[c] = tape.add(ent, tape.neg(lnp));
    }
    return tape.sum_reduce(kl_c);
}

namespace {

// Per-datapoint sampled forward pass on the tape. Applies `layers` of the
// model (ReLU after each except the model's last), drawing realizations
// from rng in layer order.
std::vector<Val> tape_forward(Tape& tape, const BnnModel& model,
                              const ParamHandles& h, const double* xrow,
                              std::size_t layers, RngStream& rng, Val half) {
    std::vector<Val> a;
    a.reserve(static_cast<std::size_t>(model.layers[0].in_dim));
    for (int d = 0; d < model.layers[0].in_dim; ++d)
        a.push_back(tape.constant(xrow[d]));
    std::vector<double> eps;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& layer = model.layers[l];
        const auto& lh = h.layers[l];
        const std::size_t nw = layer.weight_count();
        draw_layer_eps(layer.posterior, 1, nw, rng, eps);
        const std::size_t wn = static_cast<std::size_t>(layer.out_dim) *
                               static_cast<std::size_t>(layer.in_dim);
        std::vector<Val> u(static_cast<std::size_t>(layer.out_dim));
        for (int o = 0; o < layer.out_dim; ++o) {
            const std::size_t ob = static_cast<std::size_t>(o);
            Val acc = tape.add(
                lh.mu_b[ob],
                tape.mul(lh.sigma_b[ob], tape.constant(eps[wn + ob])));
            for (int i = 0; i < layer.in_dim; ++i) {
                const std::size_t wi = ob * layer.in_dim + i;
                const Val w = tape.add(
                    lh.mu_w[wi],
                    tape.mul(lh.sigma_w[wi], tape.constant(eps[wi])));
                acc = tape.add(acc, tape.mul(w, a[static_cast<std::size_t>(i)]));
            }
            u[ob] = acc;
        }
        if (l + 1 < model.layers.size())
            for (auto& v : u) v = tape.mul(tape.add(v, tape.abs(v)), half);
        a = std::move(u);
    }
    return a;
}

}  // namespace

// --- ELBO --------------------------------------------------------------------

ElboBuild elbo(Tape& tape, const BnnModel& model, const ParamHandles& h,
               std::span<const double> x, std::span<const double> y,
               std::size_t rows, const ElboConfig& cfg, double beta,
               std::uint64_t seed) {
    if (model.layers.empty()) throw DomainError("elbo: empty model");
    if (beta < 0.0) throw DomainError("elbo: beta must be resolved to >= 0");
    if (rows == 0) throw DomainError("elbo: empty batch");
    const std::size_t in_dim =
        static_cast<std::size_t>(model.layers.front().in_dim);
    if (x.size() != rows * in_dim || y.size() != rows)
        throw DomainError("elbo: batch shape mismatch");
    if (cfg.m_lik == 0) throw DomainError("elbo: m_lik >= 1");
    const std::size_t L = model.layers.size();
    const int out_dim = model.layers.back().out_dim;
    if (out_dim != 1)
        throw UnsupportedTaskError("elbo: a single output unit is supported");

    // KL part
    std::vector<Val> kls;
    kls.reserve(L);
    for (std::size_t l = 0; l < L; ++l)
        kls.push_back(layer_kl(tape, model.layers[l], h.layers[l],
                               cfg.kl_method, cfg.m_kl, mix_seed(seed, 2, l)));
    const Val kl = kls.size() == 1 ? kls[0] : tape.sum_reduce(kls);

    // S1 part
    const Val half = tape.constant(0.5);
    RngStream lik_rng(mix_seed(seed, 1));
    std::vector<Val> lp(rows);
    if (cfg.last_layer_repar) {
        const auto& last = model.layers.back();
        const std::size_t width = static_cast<std::size_t>(last.in_dim);
        std::vector<Val> act;
        act.reserve(rows * width);
        for (std::size_t b = 0; b < rows; ++b) {
            const auto a = tape_forward(tape, model, h, x.data() + b * in_dim,
                                        L - 1, lik_rng, half);
            act.insert(act.end(), a.begin(), a.end());
        }
        const auto& lh = h.layers.back();
        const Val s1 = last_layer_lik_repar(
            tape, act, rows, width, lh.mu_w, lh.mu_b[0], lh.sigma_w,
            lh.sigma_b[0], y,
            cfg.task == Task::Regression ? LikTask::Regression
                                         : LikTask::ClassificationTaylor,
            cfg.sigma_hat, cfg.m_last_layer, mix_seed(seed, 3));
        const Val loss = tape.add(tape.mul(tape.constant(beta), kl),
                                  tape.neg(s1));
        ElboBuild out;
        out.loss = loss;
        out.loss_value = tape.value(loss);
        out.kl_value = tape.value(kl);
        out.s1_value = tape.value(s1);
        return out;
    }

    for (std::size_t b = 0; b < rows; ++b) {
        std::vector<Val> draws(cfg.m_lik);
        for (std::size_t s = 0; s < cfg.m_lik; ++s) {
            const auto u = tape_forward(tape, model, h, x.data() + b * in_dim,
                                        L, lik_rng, half);
            if (cfg.task == Task::Classification) {
                const int yb = static_cast<int>(y[b]);
                draws[s] = log_lik_classification(tape, u[0], yb);
            } else {
                draws[s] = log_lik_regression(tape, u[0], y[b], cfg.sigma_hat);
            }
        }
        lp[b] = cfg.m_lik == 1 ? draws[0] : mean_over(tape, draws);
    }
    const Val s1 = mean_over(tape, lp);
    const Val loss = tape.add(tape.mul(tape.constant(beta), kl), tape.neg(s1));
    ElboBuild out;
    out.loss = loss;
    out.loss_value = tape.value(loss);
    out.kl_value = tape.value(kl);
    out.s1_value = tape.value(s1);
    return out;
}

// --- datasets ------------------------------------------------------------------

TrainData make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
    if (n == 0) throw DomainError("make_two_moons: n >= 1");
    RngStream rng(seed);
    TrainData d;
    d.n = n;
    d.dim = 2;
    d.x.resize(2 * n);
    d.y.resize(n);
    constexpr double kPi = 3.141592653589793238462643383279502884;
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(i % 2);
        const double t = kPi * rng.uniform01();
        double cx, cy;
        if (cls == 0) {
            cx = std::cos(t);
            cy = std::sin(t);
        } else {
            cx = 1.0 - std::cos(t);
            cy = 0.5 - std::sin(t);
        }
        d.x[2 * i] = cx + noise * rng.normal();
        d.x[2 * i + 1] = cy + noise * rng.normal();
        d.y[i] = cls;
    }
    return d;
}

TrainData make_sinusoid(std::size_t n, double noise, std::uint64_t seed) {
    if (n == 0) throw DomainError("make_sinusoid: n >= 1");
    RngStream rng(seed);
    TrainData d;
    d.n = n;
    d.dim = 1;
    d.x.resize(n);
    d.y.resize(n);
    constexpr double kPi = 3.141592653589793238462643383279502884;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (2.0 * rng.uniform01() - 1.0) * kPi;
        d.x[i] = x;
        d.y[i] = std::sin(x) + noise * rng.normal();
    }
    return d;
}

// --- training ------------------------------------------------------------------

TrainReport train(BnnModel& model, const TrainData& train_set,
                  const TrainData& val_set, const TrainOptions& opts,
                  std::uint64_t seed) {
    if (train_set.n == 0 || val_set.n == 0)
        throw DomainError("train: empty split");
    if (opts.epochs < 1) throw DomainError("train: epochs >= 1");
    if (opts.elbo.batch_size == 0) throw DomainError("train: batch_size >= 1");
    const auto wall0 = std::chrono::steady_clock::now();

    const std::size_t B = opts.elbo.batch_size;
    const std::size_t n_batches = (train_set.n + B - 1) / B;
    const double beta = opts.elbo.beta >= 0.0
                            ? opts.elbo.beta
                            : 1.0 / static_cast<double>(n_batches);

    std::vector<double> theta = model.flat_params();
    std::vector<double> mbuf(theta.size(), 0.0), vbuf(theta.size(), 0.0);
    const auto& oc = opts.optim;
    long step_count = 0;

    std::vector<std::size_t> idx(train_set.n);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::size_t dim = train_set.dim;
    std::vector<double> bx(B * dim), by(B);

    TrainReport report;
    report.seed = seed;
    report.epochs.reserve(static_cast<std::size_t>(opts.epochs));

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        // deterministic Fisher-Yates reshuffle per epoch
        RngStream shuf(mix_seed(seed, 17, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = idx.size(); i > 1; --i) {
            const std::size_t j =
                static_cast<std::size_t>(shuf.uniform01() * static_cast<double>(i));
            std::swap(idx[i - 1], idx[j < i ? j : i - 1]);
        }

        double sum_loss = 0.0, sum_kl = 0.0, sum_s1 = 0.0;
        for (std::size_t bstart = 0, step = 0; bstart < train_set.n;
             bstart += B, ++step) {
            const std::size_t rows = std::min(B, train_set.n - bstart);
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t src = idx[bstart + r];
                for (std::size_t dcol = 0; dcol < dim; ++dcol)
                    bx[r * dim + dcol] = train_set.x[src * dim + dcol];
                by[r] = train_set.y[src];
            }
            Tape tape;
            const ParamHandles h = build_params(tape, model);
            ElboBuild eb;
            try {
                eb = elbo(tape, model, h,
                          std::span<const double>(bx.data(), rows * dim),
                          std::span<const double>(by.data(), rows), rows,
                          opts.elbo, beta,
                          mix_seed(seed, static_cast<std::uint64_t>(epoch),
                                   step, 5));
            } catch (const NonFiniteError& e) {
                throw DivergenceError("train: " + std::string(e.what()) +
                                      " at epoch " + std::to_string(epoch) +
                                      " batch " + std::to_string(step));
            }
            if (!std::isfinite(eb.loss_value))
                throw DivergenceError("train: non-finite loss at epoch " +
                                      std::to_string(epoch) + " batch " +
                                      std::to_string(step));
            const std::vector<double> g = tape.backward(eb.loss);
            ++step_count;
            const double bc1 =
                1.0 - std::pow(oc.beta1, static_cast<double>(step_count));
            const double bc2 =
                1.0 - std::pow(oc.beta2, static_cast<double>(step_count));
            for (std::size_t p = 0; p < theta.size(); ++p) {
                mbuf[p] = oc.beta1 * mbuf[p] + (1.0 - oc.beta1) * g[p];
                vbuf[p] = oc.beta2 * vbuf[p] + (1.0 - oc.beta2) * g[p] * g[p];
                theta[p] -= oc.lr * (mbuf[p] / bc1) /
                            (std::sqrt(vbuf[p] / bc2) + oc.eps);
            }
            model.set_flat_params(theta);
            sum_loss += eb.loss_value;
            sum_kl += eb.kl_value;
            sum_s1 += eb.s1_value;
        }

        EpochRecord rec;
        const double nb = static_cast<double>(n_batches);
        rec.elbo = sum_loss / nb;
        rec.kl = sum_kl / nb;
        rec.nll = -sum_s1 / nb;
        if (opts.elbo.task == Task::Classification) {
            const auto logits = forward_mean(model, val_set.x, val_set.n);
            std::size_t correct = 0;
            for (std::size_t i = 0; i < val_set.n; ++i) {
                const int pred = logits[i] > 0.0 ? 1 : 0;
                if (pred == static_cast<int>(val_set.y[i])) ++correct;
            }
            rec.accuracy =
                static_cast<double>(correct) / static_cast<double>(val_set.n);
        }
        report.epochs.push_back(rec);
    }

    if (opts.elbo.task == Task::Classification) {
        const auto pred = predict_with_confidence(
            model, val_set.x, val_set.n, opts.n_predictive, mix_seed(seed, 99));
        std::size_t correct = 0;
        for (std::size_t i = 0; i < val_set.n; ++i)
            if (pred.label[i] == static_cast<int>(val_set.y[i])) ++correct;
        report.overall_accuracy =
            static_cast<double>(correct) / static_cast<double>(val_set.n);
        report.thresholds = opts.thresholds;
        for (double tau : opts.thresholds) {
            std::size_t size = 0, ok = 0;
            for (std::size_t i = 0; i < val_set.n; ++i) {
                if (pred.confidence[i] >= tau - 1e-12) {
                    ++size;
                    if (pred.label[i] == static_cast<int>(val_set.y[i])) ++ok;
                }
            }
            report.confident_size.push_back(size);
            report.confident_accuracy.push_back(
                size == 0 ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(ok) / static_cast<double>(size));
        }
    }

    report.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
            .count();
    return report;
}

// --- prediction -----------------------------------------------------------------

Prediction predict_with_confidence(const BnnModel& model,
                                   std::span<const double> x, std::size_t rows,
                                   std::size_t n_samples, std::uint64_t seed,
                                   ConfidenceStat stat) {
    if (n_samples == 0) throw DomainError("predict: n_samples >= 1");
    if (model.layers.empty()) throw DomainError("predict: empty model");
    if (model.layers.back().out_dim != 1)
        throw UnsupportedTaskError("predict: a single output unit is supported");
    const std::size_t in_dim =
        static_cast<std::size_t>(model.layers.front().in_dim);
    if (x.size() != rows * in_dim) throw DomainError("predict: shape mismatch");

    std::vector<FlatLayer> flats;
    flats.reserve(model.layers.size());
    for (const auto& l : model.layers) flats.push_back(flatten(l));

    Prediction out;
    out.label.resize(rows);
    out.confidence.resize(rows);
    std::vector<double> w, cur, nxt;
    for (std::size_t rix = 0; rix < rows; ++rix) {
        RngStream rng(mix_seed(seed, rix));
        std::size_t votes1 = 0;
        double prob_sum = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            cur.assign(x.begin() + static_cast<std::ptrdiff_t>(rix * in_dim),
                       x.begin() + static_cast<std::ptrdiff_t>((rix + 1) * in_dim));
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                const auto& layer = model.layers[l];
                realize_layer(flats[l], layer.posterior, rng, w);
                nxt.resize(static_cast<std::size_t>(layer.out_dim));
                affine_apply(w, layer.in_dim, layer.out_dim, cur.data(),
                             nxt.data());
                if (l + 1 < model.layers.size())
                    for (auto& v : nxt) v = v > 0.0 ? v : 0.0;
                cur = nxt;
            }
            const double u = cur[0];
            if (u > 0.0) ++votes1;
            prob_sum += 1.0 / (1.0 + std::exp(-u));
        }
        if (stat == ConfidenceStat::VoteFraction) {
            const double frac1 = static_cast<double>(votes1) /
                                 static_cast<double>(n_samples);
            const int label = frac1 > 0.5 ? 1 : 0;  // tie -> lower class
            out.label[rix] = label;
            out.confidence[rix] = label == 1 ? frac1 : 1.0 - frac1;
        } else {
            const double p = prob_sum / static_cast<double>(n_samples);
            const int label = p > 0.5 ? 1 : 0;
            out.label[rix] = label;
            out.confidence[rix] = label == 1 ? p : 1.0 - p;
        }
    }
    return out;
}

// --- checkpoint -----------------------------------------------------------------

// Layout (text, whitespace-separated tokens, all reals as C hexfloats):
//   mcrepar-bnn 1
//   layers <L>
//   per layer:
//     layer <in> <out> <gaussian|radial> <prior-name> <n-prior-params> <params...>
//     mu_w <out*in values>   mu_b <out values>
//     rho_w <out*in values>  rho_b <out values>
//   end
void save_model(const BnnModel& model, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DomainError("save_model: cannot open " + path);
    char buf[64];
    auto put = [&](const std::vector<double>& v) {
        for (double d : v) {
            std::snprintf(buf, sizeof buf, "%a", d);
            f << ' ' << buf;
        }
        f << '\n';
    };
    f << "mcrepar-bnn 1\n";
    f << "layers " << model.layers.size() << '\n';
    for (const auto& l : model.layers) {
        f << "layer " << l.in_dim << ' ' << l.out_dim << ' '
          << (l.posterior == PosteriorKind::Gaussian ? "gaussian" : "radial")
          << ' ' << l.prior << ' ' << l.prior_params.size();
        for (double p : l.prior_params) {
            std::snprintf(buf, sizeof buf, "%a", p);
            f << ' ' << buf;
        }
        f << '\n';
        f << "mu_w";
        put(l.mu_w);
        f << "mu_b";
        put(l.mu_b);
        f << "rho_w";
        put(l.rho_w);
        f << "rho_b";
        put(l.rho_b);
    }
    f << "end\n";
    if (!f) throw DomainError("save_model: write failed for " + path);
}

namespace {

struct TokenReader {
    std::vector<std::string> toks;
    std::size_t pos = 0;
    const std::string& next(const char* what) {
        if (pos >= toks.size())
            throw DomainError(std::string("checkpoint: truncated at ") + what);
        return toks[pos++];
    }
    void expect(const char* word) {
        const std::string& t = next(word);
        if (t != word)
            throw DomainError("checkpoint: expected '" + std::string(word) +
                              "', got '" + t + "'");
    }
    long integer(const char* what) {
        const std::string& t = next(what);
        char* end = nullptr;
        const long v = std::strtol(t.c_str(), &end, 10);
        if (end == t.c_str() || *end != '\0')
            throw DomainError("checkpoint: bad integer for " +
                              std::string(what));
        return v;
    }
    double real(const char* what) {
        const std::string& t = next(what);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end == t.c_str() || *end != '\0')
            throw DomainError("checkpoint: bad number for " +
                              std::string(what));
        return v;
    }
    void reals(std::vector<double>& dst, std::size_t n, const char* what) {
        dst.resize(n);
        for (std::size_t i = 0; i < n; ++i) dst[i] = real(what);
    }
};

}  // namespace

BnnModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DomainError("load_model: cannot open " + path);
    TokenReader r;
    std::string tok;
    while (f >> tok) r.toks.push_back(tok);

    r.expect("mcrepar-bnn");
    if (r.integer("version") != 1)
        throw DomainError("checkpoint: unsupported version");
    r.expect("layers");
    const long L = r.integer("layer count");
    if (L < 1 || L > 1024) throw DomainError("checkpoint: bad layer count");
    BnnModel m;
    for (long l = 0; l < L; ++l) {
        r.expect("layer");
        BayesDense layer;
        layer.in_dim = static_cast<int>(r.integer("in_dim"));
        layer.out_dim = static_cast<int>(r.integer("out_dim"));
        if (layer.in_dim < 1 || layer.out_dim < 1)
            throw DomainError("checkpoint: bad layer dims");
        const std::string& kind = r.next("posterior");
        if (kind == "gaussian")
            layer.posterior = PosteriorKind::Gaussian;
        else if (kind == "radial")
            layer.posterior = PosteriorKind::Radial;
        else
            throw DomainError("checkpoint: unknown posterior " + kind);
        layer.prior = r.next("prior");
        const long np = r.integer("prior param count");
        if (np < 0 || np > 16)
            throw DomainError("checkpoint: bad prior param count");
        r.reals(layer.prior_params, static_cast<std::size_t>(np),
                "prior param");
        const std::size_t wn = static_cast<std::size_t>(layer.out_dim) *
                               static_cast<std::size_t>(layer.in_dim);
        r.expect("mu_w");
        r.reals(layer.mu_w, wn, "mu_w");
        r.expect("mu_b");
        r.reals(layer.mu_b, static_cast<std::size_t>(layer.out_dim), "mu_b");
        r.expect("rho_w");
        r.reals(layer.rho_w, wn, "rho_w");
        r.expect("rho_b");
        r.reals(layer.rho_b, static_cast<std::size_t>(layer.out_dim), "rho_b");
        m.layers.push_back(std::move(layer));
    }
    r.expect("end");
    return m;
}

}  // namespace mcrepar
