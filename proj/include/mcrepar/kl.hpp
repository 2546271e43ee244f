#pragma once

// KL(q_theta || p) estimation on the tape, plus the error sweeps the
// benchmark commands run.
//
// An estimate is assembled as entropy part + cross part,
//   KL = E_q[ln q] - E_q[ln p],
// with three methods:
//   ClosedForm  exact formula on the tape (Gaussian q, Gaussian p only)
//   DirectMC    naive per-draw graph: realize w_i, evaluate ln q, ln p per
//               sample, average (graph grows with M)
//   ReparMC     factored route: the prior's log-density terms are routed to
//               parameterization tuples, so sample aggregates collapse into
//               constants and the graph size is independent of M
// Both MC methods consume one shared ancillary stream per (seed, m), so at a
// common seed they estimate from the same draws and agree to rounding
// whenever every term has an exact tuple.
//
// Entropy routing: Gaussian and radial posteriors use the closed form
// (-ln sigma - (1/2)ln(2 pi e), resp. -ln sigma with the theta-free radial
// constant dropped); the other families assemble E[ln q] from the same
// shared draws, tuple-form under ReparMC and per-sample under DirectMC.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcrepar/distributions.hpp"
#include "mcrepar/repar.hpp"
#include "mcrepar/tape.hpp"

namespace mcrepar {

struct KlMethod {
    enum class Tag { ClosedForm, DirectMC, ReparMC };
    Tag tag{Tag::ReparMC};
    std::size_t m{0};       // sample count (MC methods)
    std::uint64_t seed{0};  // ancillary stream seed (MC methods)

    static KlMethod closed_form() { return {Tag::ClosedForm, 0, 0}; }
    static KlMethod direct_mc(std::size_t m, std::uint64_t seed) {
        return {Tag::DirectMC, m, seed};
    }
    static KlMethod repar_mc(std::size_t m, std::uint64_t seed) {
        return {Tag::ReparMC, m, seed};
    }
};

struct KlOptions {
    // Degree of the polynomial stand-in for ln w on location-scale
    // posteriors. 0 means unconfigured: such terms throw
    // UnsupportedTermError instead of silently approximating.
    int taylor_k{0};
    double taylor_center{1.0};
    // Route terms with no tuple (e.g. the Laplace |w| term) through the
    // naive per-sample graph on the same shared stream instead of throwing.
    bool allow_direct_fallback{false};
};

struct KlBreakdown {
    Val root{};                    // total, differentiable via tape.backward
    double entropy_part{0.0};      // E[ln q]
    double cross_part{0.0};        // -E[ln p]
    double total{0.0};
    std::size_t grad_nodes_used{0};
    bool taylor_used{false};
    double taylor_outside{0.0};    // worst fraction of draws outside the
                                   // expansion's convergence radius
    bool fallback_used{false};
};

// Assemble the estimate on the tape. theta are live parameter handles whose
// current values must be admissible for the family (scale/sigma > 0).
// Throws DomainError when a realized draw leaves the prior's support,
// UnsupportedTermError / UnsupportedPosteriorError per the routing rules
// above, UnknownPriorError for an uncatalogued prior name.
KlBreakdown kl_estimate(Tape& tape, const DistributionSpec& posterior,
                        std::span<const Val> theta, const std::string& prior,
                        std::span<const double> prior_params,
                        const KlMethod& method, const KlOptions& opts = {});

// Entropy part alone (E[ln q] as a tape value). Draws its own stream from
// the method for the MC families; closed-form families ignore the method.
Val entropy_term(Tape& tape, const DistributionSpec& posterior,
                 std::span<const Val> theta, const KlMethod& method);

// --- value-path estimators (no tape; kernels only) ---------------------------

// Factored-route estimate of KL(N(mu, sigma^2) || N(mu0, sigma0^2)) from the
// pooled moments of one ancillary block (closed-form entropy + tuple cross
// part). Matches the tape ReparMC estimate on the same draws to rounding.
double kl_value_gaussian(double mu, double sigma, double mu0, double sigma0,
                         const PooledMoments& pm);

// Mean-field product of `dims` identical Gaussian factors, one independent
// substream per dimension (mix_seed(seed, d)), each at sample count m.
struct MeanFieldResult {
    double estimate{0.0};
    double closed_form{0.0};
};
MeanFieldResult kl_mean_field_gaussian(double mu, double sigma, double mu0,
                                       double sigma0, std::size_t dims,
                                       std::size_t m, std::uint64_t seed);

// --- error sweeps -------------------------------------------------------------

// Error vs sample count at fixed (mu, sigma). One row per (m, replication):
// signed error against the closed form, the block RMSE of that m (repeated
// on each of its rows), the measured graph stats of one ReparMC build at
// that m, and the wall time of the replication's value-path estimate.
// Per-cell seeds are mix_seed(seed, m, r); rows are ordered by (m grid
// position, replication) regardless of thread count.
struct KlSweepRow {
    std::size_t m{0};
    int replication{0};
    double error{0.0};
    double rmse{0.0};
    std::size_t grad_nodes{0};
    std::size_t interaction_nodes{0};
    std::uint64_t wall_time_ns{0};
};
std::vector<KlSweepRow> kl_error_sweep(double mu, double sigma, double mu0,
                                       double sigma0,
                                       std::span<const std::size_t> m_grid,
                                       int replications, std::uint64_t seed,
                                       int threads = 1);

// Error vs model size: mean-field totals over d dimensions at fixed m.
// Graph stats are omitted (the large-d path is value-only); the error is
// against the summed closed form.
struct KlDSweepRow {
    std::size_t d{0};
    std::size_t m{0};
    int replication{0};
    double error{0.0};
    double rmse{0.0};
    std::uint64_t wall_time_ns{0};
};
std::vector<KlDSweepRow> kl_error_d_sweep(double mu, double sigma, double mu0,
                                          double sigma0,
                                          std::span<const std::size_t> d_grid,
                                          std::size_t m, int replications,
                                          std::uint64_t seed, int threads = 1);

}  // namespace mcrepar
