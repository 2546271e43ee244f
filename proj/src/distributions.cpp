#include "mcrepar/distributions.hpp"

#include <cmath>
#include <numbers>

#include "mcrepar/errors.hpp"

namespace mcrepar {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // ln(2*pi)/2

void require(bool ok, const char* what) {
    if (!ok) throw ParameterDomainError(what);
}

double radial_coordinate_draw(RngStream& rng, int dim) {
    double norm_sq = 0.0;
    double first = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double z = rng.normal();
        if (i == 0) first = z;
        norm_sq += z * z;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm < 1e-12)
        throw DegenerateDirectionError("radial direction norm below 1e-12");
    const double r = rng.normal();
    return first / norm * std::fabs(r);
}

}  // namespace

std::vector<double> DistributionSpec::eta() const {
    switch (kind) {
        case FamilyKind::Scaling:
            return {theta[0]};
        case FamilyKind::LocationScale:
        case FamilyKind::Transformed:
            return {theta[0], theta[1]};
    }
    return {};
}

std::vector<double> DistributionSpec::suff(double xi) const {
    switch (kind) {
        case FamilyKind::Scaling:
            return {xi};
        case FamilyKind::LocationScale:
        case FamilyKind::Transformed:
            return {1.0, xi};
    }
    return {};
}

double DistributionSpec::realize(double xi) const {
    double base = 0.0;
    switch (kind) {
        case FamilyKind::Scaling:
            base = theta[0] * xi;
            break;
        case FamilyKind::LocationScale:
        case FamilyKind::Transformed:
            base = theta[0] + theta[1] * xi;
            break;
    }
    return transform == TransformKind::Exp ? std::exp(base) : base;
}

double DistributionSpec::realize_via_terms(double xi) const {
    const auto e = eta();
    const auto t = suff(xi);
    double base = 0.0;
    for (std::size_t s = 0; s < e.size(); ++s) base += e[s] * t[s];
    return transform == TransformKind::Exp ? std::exp(base) : base;
}

double DistributionSpec::sample_base(RngStream& rng) const {
    switch (ancillary) {
        case AncillaryLaw::Normal:
            return rng.normal();
        case AncillaryLaw::Exponential:
            return rng.exponential();
        case AncillaryLaw::Rayleigh:
            return rng.rayleigh();
        case AncillaryLaw::RadialCoordinate:
            return radial_coordinate_draw(rng, radial_dim);
    }
    return 0.0;
}

void DistributionSpec::sample_ancillary(RngStream& rng,
                                        std::span<double> out) const {
    for (auto& v : out) v = sample_base(rng);
}

DistributionSpec make_posterior(const std::string& name,
                                std::span<const double> theta) {
    DistributionSpec spec;
    spec.name = name;
    spec.theta.assign(theta.begin(), theta.end());
    if (name == "exponential") {
        require(theta.size() == 1, "exponential posterior takes (scale)");
        require(theta[0] > 0.0, "exponential scale must be positive");
        spec.kind = FamilyKind::Scaling;
        spec.ancillary = AncillaryLaw::Exponential;
        spec.S = 1;
    } else if (name == "rayleigh") {
        require(theta.size() == 1, "rayleigh posterior takes (scale)");
        require(theta[0] > 0.0, "rayleigh scale must be positive");
        spec.kind = FamilyKind::Scaling;
        spec.ancillary = AncillaryLaw::Rayleigh;
        spec.S = 1;
    } else if (name == "normal") {
        require(theta.size() == 2, "normal posterior takes (mu, sigma)");
        require(theta[1] > 0.0, "normal sigma must be positive");
        spec.kind = FamilyKind::LocationScale;
        spec.ancillary = AncillaryLaw::Normal;
        spec.S = 2;
    } else if (name == "lognormal") {
        require(theta.size() == 2, "lognormal posterior takes (mu, sigma)");
        require(theta[1] > 0.0, "lognormal sigma must be positive");
        spec.kind = FamilyKind::Transformed;
        spec.transform = TransformKind::Exp;
        spec.ancillary = AncillaryLaw::Normal;
        spec.S = 2;
    } else if (name == "radial") {
        return make_radial_posterior(theta, 4);
    } else {
        throw ParameterDomainError("unknown posterior family: " + name);
    }
    return spec;
}

DistributionSpec make_radial_posterior(std::span<const double> theta, int dim) {
    require(theta.size() == 2, "radial posterior takes (mu, sigma)");
    require(theta[1] > 0.0, "radial sigma must be positive");
    require(dim >= 1, "radial dimension must be >= 1");
    DistributionSpec spec;
    spec.name = "radial";
    spec.theta.assign(theta.begin(), theta.end());
    spec.kind = FamilyKind::LocationScale;
    spec.ancillary = AncillaryLaw::RadialCoordinate;
    spec.S = 2;
    spec.radial_dim = dim;
    return spec;
}

std::vector<double> radial_realize(std::span<const double> mu,
                                   std::span<const double> sigma,
                                   std::span<const double> xi, double r) {
    require(mu.size() == sigma.size() && mu.size() == xi.size(),
            "radial_realize dimension mismatch");
    double norm_sq = 0.0;
    for (double v : xi) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    if (norm < 1e-12)
        throw DegenerateDirectionError("radial direction norm below 1e-12");
    const double scale = std::fabs(r);
    std::vector<double> w(mu.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = mu[i] + sigma[i] * (xi[i] / norm) * scale;
    return w;
}

// --- priors ------------------------------------------------------------------

TermList log_pdf_terms(const std::string& prior,
                       std::span<const double> zeta) {
    TermList list;
    if (prior == "normal") {
        require(zeta.size() == 2 && zeta[1] > 0.0, "normal prior takes (mu0, sigma0 > 0)");
        const double mu0 = zeta[0], s0 = zeta[1];
        list.constant = -kHalfLog2Pi - std::log(s0) - mu0 * mu0 / (2.0 * s0 * s0);
        if (mu0 != 0.0)
            list.terms.push_back({TermShape::Power, 1, mu0 / (s0 * s0)});
        list.terms.push_back({TermShape::Power, 2, -1.0 / (2.0 * s0 * s0)});
    } else if (prior == "exponential") {
        require(zeta.size() == 1 && zeta[0] > 0.0, "exponential prior takes (rate > 0)");
        list.constant = std::log(zeta[0]);
        list.terms.push_back({TermShape::Power, 1, -zeta[0]});
    } else if (prior == "gamma") {
        require(zeta.size() == 2 && zeta[0] > 0.0 && zeta[1] > 0.0,
                "gamma prior takes (shape > 0, rate > 0)");
        const double k = zeta[0], beta = zeta[1];
        list.constant = k * std::log(beta) - std::lgamma(k);
        if (k != 1.0) list.terms.push_back({TermShape::Log, 1, k - 1.0});
        list.terms.push_back({TermShape::Power, 1, -beta});
    } else if (prior == "laplace") {
        require(zeta.size() == 2 && zeta[1] > 0.0, "laplace prior takes (mu0, b > 0)");
        if (zeta[0] != 0.0)
            throw UnsupportedTermError(
                "laplace prior with nonzero location has no term-list form");
        list.constant = -std::log(2.0 * zeta[1]);
        list.terms.push_back({TermShape::Abs, 1, -1.0 / zeta[1]});
    } else if (prior == "lognormal") {
        require(zeta.size() == 2 && zeta[1] > 0.0,
                "lognormal prior takes (mu0, sigma0 > 0)");
        const double mu0 = zeta[0], s0 = zeta[1];
        list.constant = -kHalfLog2Pi - std::log(s0) - mu0 * mu0 / (2.0 * s0 * s0);
        list.terms.push_back({TermShape::Log, 1, mu0 / (s0 * s0) - 1.0});
        list.terms.push_back({TermShape::Log, 2, -1.0 / (2.0 * s0 * s0)});
    } else if (prior == "rayleigh") {
        require(zeta.size() == 1 && zeta[0] > 0.0, "rayleigh prior takes (scale > 0)");
        const double s = zeta[0];
        list.constant = -2.0 * std::log(s);
        list.terms.push_back({TermShape::Log, 1, 1.0});
        list.terms.push_back({TermShape::Power, 2, -1.0 / (2.0 * s * s)});
    } else {
        throw UnknownPriorError("unknown prior: " + prior);
    }
    return list;
}

bool prior_support_contains(const std::string& prior, double w) {
    if (prior == "normal" || prior == "laplace") return true;
    if (prior == "exponential" || prior == "gamma" || prior == "lognormal" ||
        prior == "rayleigh")
        return w > 0.0;
    throw UnknownPriorError("unknown prior: " + prior);
}

double direct_log_pdf(const std::string& prior, std::span<const double> zeta,
                      double w) {
    if (!prior_support_contains(prior, w))
        throw DomainError("value outside prior support");
    if (prior == "normal") {
        const double mu0 = zeta[0], s0 = zeta[1];
        const double z = (w - mu0) / s0;
        return -kHalfLog2Pi - std::log(s0) - 0.5 * z * z;
    }
    if (prior == "exponential") {
        return std::log(zeta[0]) - zeta[0] * w;
    }
    if (prior == "gamma") {
        const double k = zeta[0], beta = zeta[1];
        return k * std::log(beta) - std::lgamma(k) + (k - 1.0) * std::log(w) -
               beta * w;
    }
    if (prior == "laplace") {
        const double mu0 = zeta[0], b = zeta[1];
        return -std::log(2.0 * b) - std::fabs(w - mu0) / b;
    }
    if (prior == "lognormal") {
        const double mu0 = zeta[0], s0 = zeta[1];
        const double z = (std::log(w) - mu0) / s0;
        return -std::log(w) - kHalfLog2Pi - std::log(s0) - 0.5 * z * z;
    }
    if (prior == "rayleigh") {
        const double s = zeta[0];
        return std::log(w) - 2.0 * std::log(s) - w * w / (2.0 * s * s);
    }
    throw UnknownPriorError("unknown prior: " + prior);
}

double eval_term_list(const TermList& list, double w) {
    double acc = list.constant;
    for (const auto& term : list.terms) {
        double g = 0.0;
        switch (term.shape) {
            case TermShape::Power: {
                double p = w;
                for (int j = 2; j <= term.k; ++j) p *= w;
                g = p;
                break;
            }
            case TermShape::Log: {
                const double lw = std::log(w);
                double p = lw;
                for (int j = 2; j <= term.k; ++j) p *= lw;
                g = p;
                break;
            }
            case TermShape::RecipPower: {
                double p = 1.0 / w;
                for (int j = 2; j <= term.k; ++j) p *= 1.0 / w;
                g = p;
                break;
            }
            case TermShape::Abs:
                g = std::fabs(w);
                break;
        }
        acc += term.coeff * g;
    }
    return acc;
}

ExpFamilyForm exp_family_form(const std::string& prior,
                              std::span<const double> zeta) {
    ExpFamilyForm f;
    if (prior == "normal") {
        const double mu0 = zeta[0], s0 = zeta[1];
        f.eta_nat = {mu0 / (s0 * s0), -1.0 / (2.0 * s0 * s0)};
        f.suff_stats = {{TermShape::Power, 1, 1.0}, {TermShape::Power, 2, 1.0}};
        f.log_partition =
            mu0 * mu0 / (2.0 * s0 * s0) + std::log(s0) + kHalfLog2Pi;
    } else if (prior == "exponential") {
        f.eta_nat = {-zeta[0]};
        f.suff_stats = {{TermShape::Power, 1, 1.0}};
        f.log_partition = -std::log(zeta[0]);
    } else if (prior == "gamma") {
        const double k = zeta[0], beta = zeta[1];
        f.eta_nat = {k - 1.0, -beta};
        f.suff_stats = {{TermShape::Log, 1, 1.0}, {TermShape::Power, 1, 1.0}};
        f.log_partition = std::lgamma(k) - k * std::log(beta);
    } else if (prior == "laplace") {
        if (zeta[0] != 0.0)
            throw UnsupportedTermError(
                "laplace prior with nonzero location has no term-list form");
        f.eta_nat = {-1.0 / zeta[1]};
        f.suff_stats = {{TermShape::Abs, 1, 1.0}};
        f.log_partition = std::log(2.0 * zeta[1]);
    } else if (prior == "lognormal") {
        const double mu0 = zeta[0], s0 = zeta[1];
        f.log_h_terms = {{TermShape::Log, 1, -1.0}};  // h(w) = 1/w
        f.eta_nat = {mu0 / (s0 * s0), -1.0 / (2.0 * s0 * s0)};
        f.suff_stats = {{TermShape::Log, 1, 1.0}, {TermShape::Log, 2, 1.0}};
        f.log_partition =
            mu0 * mu0 / (2.0 * s0 * s0) + std::log(s0) + kHalfLog2Pi;
    } else if (prior == "rayleigh") {
        const double s = zeta[0];
        f.log_h_terms = {{TermShape::Log, 1, 1.0}};  // h(w) = w
        f.eta_nat = {-1.0 / (2.0 * s * s)};
        f.suff_stats = {{TermShape::Power, 2, 1.0}};
        f.log_partition = 2.0 * std::log(s);
    } else {
        throw UnknownPriorError("unknown prior: " + prior);
    }
    return f;
}

double kl_gaussian_closed_form(double mu, double sigma, double mu0,
                               double sigma0) {
    if (sigma <= 0.0 || sigma0 <= 0.0)
        throw ParameterDomainError("gaussian KL requires positive sigmas");
    const double d = mu - mu0;
    return std::log(sigma0 / sigma) +
           (sigma * sigma + d * d) / (2.0 * sigma0 * sigma0) - 0.5;
}

}  // namespace mcrepar
