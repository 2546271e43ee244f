#pragma once

// Family catalogue. A posterior family is described by how a draw factors
// into parameter-only and sample-only parts:
//   Scaling         W = eta(theta) * T(xi), one component
//   LocationScale   W = sum_s eta_s(theta) * T_s(xi), canonical T = (1, xi)
//   Transformed     W' = f(W) for invertible f over a base of the above
// plus, for priors, log-densities flattened to coefficient-weighted terms of
// shapes the factored estimators can route.

#include <span>
#include <string>
#include <vector>

#include "mcrepar/rng.hpp"

namespace mcrepar {

enum class FamilyKind { Scaling, LocationScale, Transformed };
enum class TransformKind { None, Exp };
enum class AncillaryLaw { Normal, Exponential, Rayleigh, RadialCoordinate };

struct DistributionSpec {
    std::string name;
    FamilyKind kind{FamilyKind::Scaling};
    TransformKind transform{TransformKind::None};
    AncillaryLaw ancillary{AncillaryLaw::Normal};
    int S{1};                    // component count of the eta/T factorization
    std::vector<double> theta;   // family parameters
    int radial_dim{0};           // RadialCoordinate: dimension of each direction draw

    std::vector<double> eta() const;
    std::vector<double> suff(double xi) const;

    // Direct sampling map W(theta, xi), transform applied.
    double realize(double xi) const;
    // Same value assembled through sum_s eta_s * T_s(xi); the two routes must
    // agree, which is what pins the factorization as correct.
    double realize_via_terms(double xi) const;

    double sample_base(RngStream& rng) const;
    void sample_ancillary(RngStream& rng, std::span<double> out) const;
};

// Posterior factory. Names: "exponential" (scale), "rayleigh" (scale),
// "normal" (mu, sigma), "lognormal" (mu, sigma of the log),
// "radial" (mu, sigma; direction dimension defaults to 4).
DistributionSpec make_posterior(const std::string& name,
                                std::span<const double> theta);
DistributionSpec make_radial_posterior(std::span<const double> theta, int dim);

// w = mu + sigma .* (xi / ||xi||) * |r|, elementwise over coordinates.
std::vector<double> radial_realize(std::span<const double> mu,
                                   std::span<const double> sigma,
                                   std::span<const double> xi, double r);

// --- prior log-density terms -------------------------------------------------

// Shapes: Power = w^k, Log = (ln w)^k, RecipPower = w^-k, Abs = |w|.
enum class TermShape { Power, Log, RecipPower, Abs };

struct LogDensityTerm {
    TermShape shape{TermShape::Power};
    int k{1};
    double coeff{0.0};
};

struct TermList {
    double constant{0.0};
    std::vector<LogDensityTerm> terms;
};

// Prior names and parameters: "normal" (mu0, sigma0), "exponential" (rate),
// "gamma" (shape, rate), "laplace" (0, b; nonzero location has no term form),
// "lognormal" (mu0, sigma0), "rayleigh" (scale).
TermList log_pdf_terms(const std::string& prior, std::span<const double> zeta);

// Formula-based log pdf, the oracle the term lists are checked against.
// Throws DomainError off the prior's support.
double direct_log_pdf(const std::string& prior, std::span<const double> zeta,
                      double w);

double eval_term_list(const TermList& list, double w);

// Is w inside the prior's support (for sampling-based checks).
bool prior_support_contains(const std::string& prior, double w);

// ln p(w) = ln h(w) + eta' T(w) - A: the exponential-family split.
struct ExpFamilyForm {
    std::vector<LogDensityTerm> log_h_terms;
    std::vector<double> eta_nat;
    std::vector<LogDensityTerm> suff_stats;  // coeff 1 shapes
    double log_partition{0.0};
};

ExpFamilyForm exp_family_form(const std::string& prior,
                              std::span<const double> zeta);

// KL(N(mu, sigma^2) || N(mu0, sigma0^2)).
double kl_gaussian_closed_form(double mu, double sigma, double mu0,
                               double sigma0);

}  // namespace mcrepar
