#include "mcrepar/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "mcrepar/bnn.hpp"
#include "mcrepar/distributions.hpp"
#include "mcrepar/errors.hpp"
#include "mcrepar/kl.hpp"
#include "mcrepar/repar.hpp"
#include "mcrepar/rng.hpp"
#include "mcrepar/svg.hpp"
#include "mcrepar/tape.hpp"

namespace mcrepar {

namespace {

constexpr double kHalfLog2PiE = 1.4189385332046727;  // (1/2)·ln(2πe)

// %.17g round-trips doubles exactly, so re-runs diff clean.
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string num(std::size_t v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

std::string meta_header(const std::string& command, std::uint64_t seed,
                        const Config& cfg) {
    std::string out;
    out += "# command = " + command + "\n";
    out += "# version = 1\n";
    out += "# seed = " + std::to_string(seed) + "\n";
    for (const Config::Entry& e : cfg.entries())
        out += "# cfg " + e.key + " = " + e.value + "\n";
    return out;
}

// Consumes the keys every command accepts. The command key, when present,
// must match so a config can't silently run under the wrong command.
void consume_common(Config& cfg, const std::string& command) {
    const std::string declared = cfg.get_string("command", command);
    if (declared != command)
        throw ConfigError(cfg.origin() + ": config declares command '" + declared +
                          "' but '" + command + "' was invoked");
    cfg.get_string("out", ".");
}

std::uint64_t resolve_seed(Config& cfg, const CommandOptions& opt) {
    const long long raw = cfg.get_int("seed", 1);
    if (raw < 0) throw ConfigError(cfg.origin() + ": seed must be >= 0");
    return opt.seed ? *opt.seed : static_cast<std::uint64_t>(raw);
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------------------
// graph-size
// ---------------------------------------------------------------------------

GSpec g_by_name(const std::string& name, const std::string& origin) {
    if (name == "w") return GSpec::power(1);
    if (name == "w2") return GSpec::power(2);
    if (name == "w3") return GSpec::power(3);
    if (name == "logw") return GSpec::log_pow(1);
    if (name == "recipw") return GSpec::recip_power(1);
    throw ConfigError(origin + ": unknown g '" + name +
                      "' (use w, w2, w3, logw, recipw)");
}

std::vector<double> default_theta(const std::string& family) {
    if (family == "exponential") return {1.3};
    if (family == "rayleigh") return {0.8};
    if (family == "normal") return {0.4, 1.1};
    if (family == "lognormal") return {0.2, 0.6};
    if (family == "radial") return {0.4, 1.1};
    return {};  // make_posterior rejects the name with its own message
}

}  // namespace

std::vector<OutputFile> cmd_graph_size(Config& cfg, const CommandOptions& opt) {
    consume_common(cfg, "graph-size");
    const std::uint64_t seed = resolve_seed(cfg, opt);
    const std::vector<std::string> families = cfg.get_string_list(
        "families", {"exponential", "rayleigh", "normal", "lognormal", "radial"});
    const std::vector<std::string> g_names =
        cfg.get_string_list("g", {"w", "w2", "w3"});
    const std::vector<std::size_t> m_grid =
        cfg.get_size_list("m", {1, 10, 100, 10000});
    std::vector<DistributionSpec> specs;
    for (const std::string& fam : families) {
        const std::vector<double> theta =
            cfg.get_real_list("theta_" + fam, default_theta(fam));
        specs.push_back(make_posterior(fam, theta));
    }
    std::vector<GSpec> gs;
    for (const std::string& gn : g_names) gs.push_back(g_by_name(gn, cfg.origin()));
    cfg.require_consumed();
    for (std::size_t fi = 0; fi < specs.size(); ++fi)
        for (const GSpec& g : gs)
            if (specs[fi].kind != FamilyKind::Scaling &&
                (g.kind == GSpec::Kind::LogPow || g.kind == GSpec::Kind::RecipPower))
                throw ConfigError(cfg.origin() + ": g '" + g.desc() +
                                  "' has a factored route only for scaling "
                                  "families, not '" +
                                  families[fi] + "'");

    std::string csv = meta_header("graph-size", seed, cfg);
    csv += "method,family,g,m,total_nodes,grad_nodes,param_nodes,interaction_nodes\n";
    // per (method, family) interaction counts for the first g, for the plot
    std::vector<SvgSeries> plot_series(2 * specs.size());

    Tape tape;
    for (std::size_t fi = 0; fi < specs.size(); ++fi) {
        const DistributionSpec& spec = specs[fi];
        for (std::size_t gi = 0; gi < gs.size(); ++gi) {
            for (std::size_t mi = 0; mi < m_grid.size(); ++mi) {
                RngStream rng(mix_seed(seed, fi, gi, mi));
                std::vector<double> anc(m_grid[mi]);
                spec.sample_ancillary(rng, anc);
                const SuffSamples xs = spec.kind == FamilyKind::Scaling
                                           ? SuffSamples::scaling(anc)
                                           : SuffSamples::locscale(anc);
                const std::vector<double> eta = spec.eta();
                for (int method = 0; method < 2; ++method) {
                    tape.reset();
                    std::vector<Val> handles;
                    for (double e : eta) handles.push_back(tape.param(e));
                    if (method == 0) {
                        direct_mc_build(tape, gs[gi], handles, xs,
                                        DirectForm::Monomial);
                    } else {
                        const ParamTuple tup =
                            tuple_for(gs[gi], static_cast<int>(eta.size()));
                        tup.evaluate(tape, handles, xs);
                    }
                    const GraphStats st = tape.stats();
                    csv += std::string(method == 0 ? "direct" : "repar") + "," +
                           spec.name + "," + gs[gi].desc() + "," + num(m_grid[mi]) +
                           "," + num(st.total_nodes) + "," + num(st.grad_nodes) +
                           "," + num(st.param_nodes) + "," +
                           num(st.interaction_nodes) + "\n";
                    if (gi == 0) {
                        SvgSeries& s = plot_series[2 * fi + method];
                        s.label = std::string(method == 0 ? "direct " : "repar ") +
                                  spec.name;
                        s.x.push_back(static_cast<double>(m_grid[mi]));
                        s.y.push_back(static_cast<double>(st.interaction_nodes));
                    }
                }
            }
        }
    }

    std::vector<OutputFile> files{{"graph_size.csv", csv}};
    if (opt.plots) {
        SvgPlot plot;
        plot.title = "interaction nodes vs sample count (g = " + gs[0].desc() + ")";
        plot.x_label = "M";
        plot.y_label = "interaction nodes";
        plot.log_x = true;
        plot.log_y = true;
        plot.series = plot_series;
        files.push_back({"graph_size.svg", render_svg(plot)});
    }
    return files;
}

// ---------------------------------------------------------------------------
// kl-error
// ---------------------------------------------------------------------------

std::vector<OutputFile> cmd_kl_error(Config& cfg, const CommandOptions& opt) {
    consume_common(cfg, "kl-error");
    const std::uint64_t seed = resolve_seed(cfg, opt);
    const double mu = cfg.get_real("mu", 0.0);
    const double sigma = cfg.get_real("sigma", 0.5);
    const double mu0 = cfg.get_real("mu0", 0.0);
    const double sigma0 = cfg.get_real("sigma0", 1.0);
    const std::vector<std::size_t> m_grid =
        cfg.get_size_list("m", {100, 1000, 10000, 100000});
    const int replications = static_cast<int>(cfg.get_int("replications", 100));
    const std::vector<double> sigma_grid =
        cfg.get_real_list("sigma_grid", {0.25, 0.5, 1.0, 2.0});
    const std::vector<std::size_t> d_grid =
        cfg.get_size_list("d_grid", {100, 10000, 1000000});
    const std::size_t d_m = static_cast<std::size_t>(cfg.get_int("d_m", 100));
    const int d_replications =
        static_cast<int>(cfg.get_int("d_replications", 20));
    const int threads = static_cast<int>(cfg.get_int("threads", 1));
    cfg.require_consumed();
    if (replications < 2)
        throw ConfigError(cfg.origin() + ": replications must be >= 2");
    if (d_replications < 2)
        throw ConfigError(cfg.origin() + ": d_replications must be >= 2");
    if (threads < 1) throw ConfigError(cfg.origin() + ": threads must be >= 1");

    std::vector<OutputFile> files;

    // error vs sample count at the base posterior
    const std::vector<KlSweepRow> base_rows = kl_error_sweep(
        mu, sigma, mu0, sigma0, m_grid, replications, seed, threads);
    std::string csv = meta_header("kl-error", seed, cfg);
    csv += "m,replication,error,rmse,grad_nodes,interaction_nodes,wall_time_ns\n";
    for (const KlSweepRow& r : base_rows)
        csv += num(r.m) + "," + num(r.replication) + "," + num(r.error) + "," +
               num(r.rmse) + "," + num(r.grad_nodes) + "," +
               num(r.interaction_nodes) + "," + num(r.wall_time_ns) + "\n";
    files.push_back({"kl_error.csv", csv});

    // error vs sample count across posterior widths
    std::string scsv = meta_header("kl-error", seed, cfg);
    scsv += "sigma,m,replication,error,rmse,wall_time_ns\n";
    std::vector<SvgSeries> sigma_series;
    for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
        const std::vector<KlSweepRow> rows =
            kl_error_sweep(mu, sigma_grid[si], mu0, sigma0, m_grid, replications,
                           mix_seed(seed, 0x51, si), threads);
        SvgSeries series;
        series.label = "sigma = " + num(sigma_grid[si]);
        for (const KlSweepRow& r : rows) {
            scsv += num(sigma_grid[si]) + "," + num(r.m) + "," +
                    num(r.replication) + "," + num(r.error) + "," + num(r.rmse) +
                    "," + num(r.wall_time_ns) + "\n";
            if (r.replication == 0) {
                series.x.push_back(static_cast<double>(r.m));
                series.y.push_back(r.rmse);
            }
        }
        sigma_series.push_back(std::move(series));
    }
    files.push_back({"kl_error_sigma.csv", scsv});

    // error vs mean-field model size at fixed m
    const std::vector<KlDSweepRow> d_rows =
        kl_error_d_sweep(mu, sigma, mu0, sigma0, d_grid, d_m, d_replications,
                         mix_seed(seed, 0xd5), threads);
    std::string dcsv = meta_header("kl-error", seed, cfg);
    dcsv += "d,m,replication,error,rmse,wall_time_ns\n";
    SvgSeries d_series;
    d_series.label = "m = " + num(d_m);
    for (const KlDSweepRow& r : d_rows) {
        dcsv += num(r.d) + "," + num(r.m) + "," + num(r.replication) + "," +
                num(r.error) + "," + num(r.rmse) + "," + num(r.wall_time_ns) + "\n";
        if (r.replication == 0) {
            d_series.x.push_back(static_cast<double>(r.d));
            d_series.y.push_back(r.rmse);
        }
    }
    files.push_back({"kl_error_d.csv", dcsv});

    if (opt.plots) {
        SvgPlot plot;
        plot.title = "KL estimation RMSE vs sample count";
        plot.x_label = "M";
        plot.y_label = "RMSE";
        plot.log_x = true;
        plot.log_y = true;
        plot.series = sigma_series;
        files.push_back({"kl_error.svg", render_svg(plot)});

        SvgPlot dplot;
        dplot.title = "total-KL RMSE vs model size";
        dplot.x_label = "weights D";
        dplot.y_label = "RMSE";
        dplot.log_x = true;
        dplot.log_y = true;
        dplot.series = {d_series};
        files.push_back({"kl_error_d.svg", render_svg(dplot)});
    }
    return files;
}

// ---------------------------------------------------------------------------
// timing
// ---------------------------------------------------------------------------

namespace {

struct GaussianCross {
    // ln p(w) = c0 + c1·w + c2·w² against N(mu0, sigma0²)
    double c0, c1, c2;
    explicit GaussianCross(double mu0, double sigma0)
        : c0(-kHalfLog2PiE + 0.5 - std::log(sigma0) -
             mu0 * mu0 / (2.0 * sigma0 * sigma0)),
          c1(mu0 / (sigma0 * sigma0)),
          c2(-1.0 / (2.0 * sigma0 * sigma0)) {}
};

std::uint64_t elapsed_ns(std::chrono::steady_clock::time_point t0) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
}

}  // namespace

std::vector<OutputFile> cmd_timing(Config& cfg, const CommandOptions& opt) {
    consume_common(cfg, "timing");
    const std::uint64_t seed = resolve_seed(cfg, opt);
    const double mu = cfg.get_real("mu", 0.4);
    const double sigma = cfg.get_real("sigma", 1.1);
    const double mu0 = cfg.get_real("mu0", 0.0);
    const double sigma0 = cfg.get_real("sigma0", 1.0);
    const std::vector<std::size_t> m_repar =
        cfg.get_size_list("m_repar", {100, 1000, 10000, 100000});
    const std::vector<std::size_t> m_direct =
        cfg.get_size_list("m_direct", {10, 100, 1000});
    const std::vector<std::size_t> m_accum =
        cfg.get_size_list("m_accum", {10, 100, 1000});
    const int repeats = static_cast<int>(cfg.get_int("repeats", 20));
    const std::size_t d_repar =
        static_cast<std::size_t>(cfg.get_int("d_repar", 5000));
    const std::size_t d_direct =
        static_cast<std::size_t>(cfg.get_int("d_direct", 50));
    cfg.require_consumed();
    if (repeats < 20)
        throw ConfigError(cfg.origin() + ": repeats must be >= 20 (medians)");
    if (d_repar < 1 || d_direct < 1)
        throw ConfigError(cfg.origin() + ": dimension counts must be >= 1");
    for (std::size_t m : m_repar)
        if (m < 1) throw ConfigError(cfg.origin() + ": m_repar entries must be >= 1");
    for (std::size_t m : m_direct)
        if (m < 1) throw ConfigError(cfg.origin() + ": m_direct entries must be >= 1");
    for (std::size_t m : m_accum)
        if (m < 1) throw ConfigError(cfg.origin() + ": m_accum entries must be >= 1");

    const GaussianCross cross(mu0, sigma0);
    const ParamTuple tup1 = build_locscale_power_tuple(1, 2);
    const ParamTuple tup2 = build_locscale_power_tuple(2, 2);
    double sink = 0.0;

    // One estimate: factored route. KL over D mean-field coordinates sharing
    // a pooled ancillary block; cost = O(M) pooling + O(D) fixed graph.
    auto time_repar = [&](std::size_t m, std::uint64_t cell_seed) {
        RngStream rng(cell_seed);
        std::vector<double> anc(m);
        rng.fill_normal(anc);
        const SuffSamples xs = SuffSamples::locscale(anc);
        Tape tape;
        std::vector<double> samples(repeats);
        for (int rep = 0; rep < repeats; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            tape.reset();
            const PooledMoments pm = compute_pooled_moments(xs, 2);
            const TValues t1 = tup1.t_from_moments(pm);
            const TValues t2 = tup2.t_from_moments(pm);
            std::vector<Val> parts;
            parts.reserve(d_repar);
            const Val half_le = tape.constant(kHalfLog2PiE);
            const Val c0 = tape.constant(cross.c0);
            const Val c1 = tape.constant(cross.c1);
            const Val c2 = tape.constant(cross.c2);
            for (std::size_t d = 0; d < d_repar; ++d) {
                const Val pmu = tape.param(mu);
                const Val psig = tape.param(sigma);
                const Val eta[2] = {pmu, psig};
                const Val e1 = tup1.evaluate_with_t(tape, eta, t1);
                const Val e2 = tup2.evaluate_with_t(tape, eta, t2);
                const Val crossv = tape.add(
                    c0, tape.add(tape.mul(c1, e1), tape.mul(c2, e2)));
                const Val ent = tape.sub(tape.neg(tape.log(psig)), half_le);
                parts.push_back(tape.sub(ent, crossv));
            }
            const Val root = tape.sum_reduce(parts);
            const std::vector<double> grads = tape.backward(root);
            samples[static_cast<std::size_t>(rep)] =
                static_cast<double>(elapsed_ns(t0));
            sink += tape.value(root) + grads[0];
        }
        return samples;
    };

    // One estimate: naive per-sample graph over D coordinates.
    auto time_direct = [&](std::size_t m, std::uint64_t cell_seed) {
        RngStream rng(cell_seed);
        std::vector<double> anc(m);
        rng.fill_normal(anc);
        const SuffSamples xs = SuffSamples::locscale(anc);
        const double poly[3] = {cross.c0, cross.c1, cross.c2};
        const GSpec g = GSpec::polynomial(poly);
        Tape tape;
        std::vector<double> samples(repeats);
        for (int rep = 0; rep < repeats; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            tape.reset();
            std::vector<Val> parts;
            parts.reserve(d_direct);
            const Val half_le = tape.constant(kHalfLog2PiE);
            for (std::size_t d = 0; d < d_direct; ++d) {
                const Val pmu = tape.param(mu);
                const Val psig = tape.param(sigma);
                const Val eta[2] = {pmu, psig};
                const Val crossv = direct_mc_build(tape, g, eta, xs);
                const Val ent = tape.sub(tape.neg(tape.log(psig)), half_le);
                parts.push_back(tape.sub(ent, crossv));
            }
            const Val root = tape.sum_reduce(parts);
            const std::vector<double> grads = tape.backward(root);
            samples[static_cast<std::size_t>(rep)] =
                static_cast<double>(elapsed_ns(t0));
            sink += tape.value(root) + grads[0];
        }
        return samples;
    };

    // One estimate: M separate one-draw build+backward passes, gradients
    // accumulated outside the tape.
    auto time_accum = [&](std::size_t m, std::uint64_t cell_seed) {
        RngStream rng(cell_seed);
        std::vector<double> anc(m);
        rng.fill_normal(anc);
        const double poly[3] = {cross.c0, cross.c1, cross.c2};
        const GSpec g = GSpec::polynomial(poly);
        Tape tape;
        std::vector<double> samples(repeats);
        std::vector<double> grad_acc(2 * d_direct);
        for (int rep = 0; rep < repeats; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
            double value_acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                tape.reset();
                const SuffSamples one =
                    SuffSamples::locscale(std::span<const double>(&anc[i], 1));
                std::vector<Val> parts;
                parts.reserve(d_direct);
                const Val half_le = tape.constant(kHalfLog2PiE);
                for (std::size_t d = 0; d < d_direct; ++d) {
                    const Val pmu = tape.param(mu);
                    const Val psig = tape.param(sigma);
                    const Val eta[2] = {pmu, psig};
                    const Val crossv = direct_mc_build(tape, g, eta, one);
                    const Val ent = tape.sub(tape.neg(tape.log(psig)), half_le);
                    parts.push_back(tape.sub(ent, crossv));
                }
                const Val root = tape.sum_reduce(parts);
                const std::vector<double> grads = tape.backward(root);
                for (std::size_t k = 0; k < grad_acc.size(); ++k)
                    grad_acc[k] += grads[k];
                value_acc += tape.value(root);
            }
            samples[static_cast<std::size_t>(rep)] =
                static_cast<double>(elapsed_ns(t0));
            sink += value_acc / static_cast<double>(m) +
                    grad_acc[0] / static_cast<double>(m);
        }
        return samples;
    };

    std::string csv = meta_header("timing", seed, cfg);
    csv += "method,m,median_wall_time_ns,repeats\n";
    std::vector<SvgSeries> series(3);
    series[0].label = "repar (D = " + num(d_repar) + ")";
    series[1].label = "direct (D = " + num(d_direct) + ")";
    series[2].label = "accumulation (D = " + num(d_direct) + ")";

    for (std::size_t mi = 0; mi < m_repar.size(); ++mi) {
        const double med = median_of(time_repar(m_repar[mi], mix_seed(seed, 1, mi)));
        csv += "repar," + num(m_repar[mi]) + "," +
               num(static_cast<std::uint64_t>(med)) + "," + num(repeats) + "\n";
        series[0].x.push_back(static_cast<double>(m_repar[mi]));
        series[0].y.push_back(med);
    }
    for (std::size_t mi = 0; mi < m_direct.size(); ++mi) {
        const double med =
            median_of(time_direct(m_direct[mi], mix_seed(seed, 2, mi)));
        csv += "direct," + num(m_direct[mi]) + "," +
               num(static_cast<std::uint64_t>(med)) + "," + num(repeats) + "\n";
        series[1].x.push_back(static_cast<double>(m_direct[mi]));
        series[1].y.push_back(med);
    }
    for (std::size_t mi = 0; mi < m_accum.size(); ++mi) {
        const double med = median_of(time_accum(m_accum[mi], mix_seed(seed, 3, mi)));
        csv += "accumulation," + num(m_accum[mi]) + "," +
               num(static_cast<std::uint64_t>(med)) + "," + num(repeats) + "\n";
        series[2].x.push_back(static_cast<double>(m_accum[mi]));
        series[2].y.push_back(med);
    }
    if (!std::isfinite(sink))
        throw NonFiniteError("timing: estimate values diverged");

    std::vector<OutputFile> files{{"timing.csv", csv}};
    if (opt.plots) {
        SvgPlot plot;
        plot.title = "wall time per gradient estimate";
        plot.x_label = "M";
        plot.y_label = "median ns";
        plot.log_x = true;
        plot.log_y = true;
        plot.series = series;
        files.push_back({"timing.svg", render_svg(plot)});
    }
    return files;
}

// ---------------------------------------------------------------------------
// train-demo
// ---------------------------------------------------------------------------

std::vector<OutputFile> cmd_train_demo(Config& cfg, const CommandOptions& opt) {
    consume_common(cfg, "train-demo");
    const std::uint64_t seed = resolve_seed(cfg, opt);
    const std::vector<std::size_t> hidden = cfg.get_size_list("hidden", {16, 16});
    const std::string posterior = cfg.get_string("posterior", "radial");
    const std::string prior = cfg.get_string("prior", "normal");
    const std::vector<double> prior_params =
        cfg.get_real_list("prior_params", {0.0, 1.0});
    const std::size_t n_train =
        static_cast<std::size_t>(cfg.get_int("n_train", 1600));
    const std::size_t n_val = static_cast<std::size_t>(cfg.get_int("n_val", 200));
    const double moon_noise = cfg.get_real("moon_noise", 0.05);
    const std::uint64_t data_seed_train =
        static_cast<std::uint64_t>(cfg.get_int("data_seed_train", 1001));
    const std::uint64_t data_seed_val =
        static_cast<std::uint64_t>(cfg.get_int("data_seed_val", 2002));
    const int epochs = static_cast<int>(cfg.get_int("epochs", 100));
    const std::size_t batch_size =
        static_cast<std::size_t>(cfg.get_int("batch_size", 16));
    const double lr = cfg.get_real("lr", 0.01);
    const double beta = cfg.get_real("beta", -1.0);
    const std::vector<std::size_t> m_kl = cfg.get_size_list("m_kl", {1, 100});
    const std::size_t m_lik = static_cast<std::size_t>(cfg.get_int("m_lik", 1));
    const bool last_layer_repar = cfg.get_bool("last_layer_repar", false);
    const std::size_t m_last_layer =
        static_cast<std::size_t>(cfg.get_int("m_last_layer", 64));
    const std::size_t n_predictive =
        static_cast<std::size_t>(cfg.get_int("n_predictive", 128));
    // Seed pairs: entry i of both lists names run i. The command-level seed
    // only offsets defaults so --seed still yields fresh defaults.
    std::vector<std::uint64_t> train_seeds, init_seeds;
    if (cfg.has("train_seeds")) {
        train_seeds = cfg.get_seed_list("train_seeds");
    } else {
        for (std::uint64_t s = 0; s < 10; ++s) train_seeds.push_back(9000 + seed + s);
    }
    if (cfg.has("init_seeds")) {
        init_seeds = cfg.get_seed_list("init_seeds");
    } else {
        for (std::uint64_t s = 0; s < 10; ++s) init_seeds.push_back(500 + seed + s);
    }
    cfg.require_consumed();
    if (train_seeds.empty() || train_seeds.size() != init_seeds.size())
        throw ConfigError(cfg.origin() +
                          ": train_seeds and init_seeds must be non-empty lists "
                          "of equal length");
    if (m_kl.empty()) throw ConfigError(cfg.origin() + ": m_kl must be non-empty");
    for (std::size_t m : m_kl)
        if (m < 1) throw ConfigError(cfg.origin() + ": m_kl entries must be >= 1");
    if (epochs < 1) throw ConfigError(cfg.origin() + ": epochs must be >= 1");
    PosteriorKind pk;
    if (posterior == "radial")
        pk = PosteriorKind::Radial;
    else if (posterior == "gaussian")
        pk = PosteriorKind::Gaussian;
    else
        throw ConfigError(cfg.origin() + ": posterior must be radial or gaussian");

    const TrainData tr = make_two_moons(n_train, moon_noise, data_seed_train);
    const TrainData va = make_two_moons(n_val, moon_noise, data_seed_val);
    std::vector<int> dims{2};
    for (std::size_t h : hidden) dims.push_back(static_cast<int>(h));
    dims.push_back(1);

    TrainOptions base;
    base.epochs = epochs;
    base.optim.lr = lr;
    base.elbo.beta = beta;
    base.elbo.m_lik = m_lik;
    base.elbo.batch_size = batch_size;
    base.elbo.task = Task::Classification;
    base.elbo.last_layer_repar = last_layer_repar;
    base.elbo.m_last_layer = m_last_layer;
    base.n_predictive = n_predictive;

    const std::size_t n_thresholds = base.thresholds.size();
    std::vector<std::vector<TrainReport>> reports(m_kl.size());
    for (std::size_t ai = 0; ai < m_kl.size(); ++ai) {
        for (std::size_t si = 0; si < train_seeds.size(); ++si) {
            BnnModel model =
                init_model(dims, pk, prior, prior_params, init_seeds[si]);
            TrainOptions opts = base;
            opts.elbo.m_kl = m_kl[ai];
            reports[ai].push_back(train(model, tr, va, opts, train_seeds[si]));
        }
    }

    std::string csv = meta_header("train-demo", seed, cfg);
    csv += "m_kl,train_seed,init_seed,overall_accuracy";
    const char* suffix[] = {"0_5", "0_6", "0_7", "0_8", "0_9", "1_0"};
    for (std::size_t t = 0; t < n_thresholds; ++t)
        csv += std::string(",acc_") + suffix[t];
    for (std::size_t t = 0; t < n_thresholds; ++t)
        csv += std::string(",size_") + suffix[t];
    csv += ",wall_time_sec\n";
    for (std::size_t ai = 0; ai < m_kl.size(); ++ai)
        for (std::size_t si = 0; si < train_seeds.size(); ++si) {
            const TrainReport& r = reports[ai][si];
            csv += num(m_kl[ai]) + "," + num(train_seeds[si]) + "," +
                   num(init_seeds[si]) + "," + num(r.overall_accuracy);
            for (std::size_t t = 0; t < n_thresholds; ++t)
                csv += "," + num(r.confident_accuracy[t]);
            for (std::size_t t = 0; t < n_thresholds; ++t)
                csv += "," + num(r.confident_size[t]);
            csv += "," + num(r.wall_time_sec) + "\n";
        }
    std::vector<OutputFile> files{{"train_demo.csv", csv}};

    // Arm summary: per-threshold medians, low vs high m_kl.
    if (m_kl.size() == 2) {
        const std::vector<TrainReport>& low = reports[0];
        const std::vector<TrainReport>& high = reports[1];
        std::string sum = meta_header("train-demo", seed, cfg);
        sum += "# m_low = " + num(m_kl[0]) + "\n";
        sum += "# m_high = " + num(m_kl[1]) + "\n";
        sum +=
            "threshold,acc_low_median,acc_high_median,delta_accuracy_median,"
            "size_std_low,size_std_high\n";
        for (std::size_t t = 0; t < n_thresholds; ++t) {
            std::vector<double> acc_low, acc_high, delta, sz_low, sz_high;
            for (std::size_t si = 0; si < low.size(); ++si) {
                const double a = low[si].confident_accuracy[t];
                const double b = high[si].confident_accuracy[t];
                if (std::isfinite(a)) acc_low.push_back(a);
                if (std::isfinite(b)) acc_high.push_back(b);
                if (std::isfinite(a) && std::isfinite(b)) delta.push_back(b - a);
                sz_low.push_back(static_cast<double>(low[si].confident_size[t]));
                sz_high.push_back(static_cast<double>(high[si].confident_size[t]));
            }
            sum += num(base.thresholds[t]) + "," + num(median_of(acc_low)) + "," +
                   num(median_of(acc_high)) + "," + num(median_of(delta)) + "," +
                   num(stddev_of(sz_low)) + "," + num(stddev_of(sz_high)) + "\n";
        }
        files.push_back({"train_demo_summary.csv", sum});
    }

    if (opt.plots) {
        SvgPlot plot;
        plot.title = "confident-set accuracy vs threshold";
        plot.x_label = "confidence threshold";
        plot.y_label = "median accuracy";
        for (std::size_t ai = 0; ai < m_kl.size(); ++ai) {
            SvgSeries s;
            s.label = "m_kl = " + num(m_kl[ai]);
            for (std::size_t t = 0; t < n_thresholds; ++t) {
                std::vector<double> accs;
                for (const TrainReport& r : reports[ai])
                    if (std::isfinite(r.confident_accuracy[t]))
                        accs.push_back(r.confident_accuracy[t]);
                s.x.push_back(base.thresholds[t]);
                s.y.push_back(median_of(accs));
            }
            plot.series.push_back(std::move(s));
        }
        files.push_back({"train_demo.svg", render_svg(plot)});
    }
    return files;
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

int run_command(const std::string& name, const std::string& config_path,
                const CommandOptions& opt, std::ostream& err,
                std::vector<std::string>* written) {
    try {
        Config cfg = Config::from_file(config_path);
        std::vector<OutputFile> files;
        if (name == "graph-size")
            files = cmd_graph_size(cfg, opt);
        else if (name == "kl-error")
            files = cmd_kl_error(cfg, opt);
        else if (name == "timing")
            files = cmd_timing(cfg, opt);
        else if (name == "train-demo")
            files = cmd_train_demo(cfg, opt);
        else {
            err << "unknown command '" << name
                << "' (use graph-size, kl-error, timing, train-demo)\n";
            return 2;
        }
        const std::string dir =
            opt.out_dir ? *opt.out_dir : cfg.get_string("out", ".");
        std::filesystem::create_directories(dir);
        for (const OutputFile& f : files) {
            const std::string path = dir + "/" + f.name;
            std::ofstream out(path, std::ios::binary);
            out << f.content;
            if (!out) {
                err << "cannot write " << path << "\n";
                return 1;
            }
            if (written) written->push_back(path);
        }
        return 0;
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const NonFiniteError& e) {
        err << "numeric divergence: " << e.what() << "\n";
        return 3;
    } catch (const DivergenceError& e) {
        err << "numeric divergence: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 1;
    }
}

}  // namespace mcrepar
