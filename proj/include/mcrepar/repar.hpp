// Parameterization tuples: factor a Monte-Carlo average (1/M)·Σᵢ g(W(θ, ξᵢ))
// into a parameter-only side n(θ), a sample-only aggregate t(ξ₁..ξ_M), and a
// dot-product combiner. Built on the tape, the combiner emits exactly d_P
// interaction nodes no matter how large M is; the naive per-sample build grows
// linearly in M. This header also hosts the d_P count formulas, the monomial
// basis enumeration, and the naive direct build used as the exactness oracle.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcrepar/tape.hpp"

namespace mcrepar {

// ---------------------------------------------------------------------------
// exact combinatorics (inputs capped: degrees <= 20, slots <= 64, and any
// enumerated monomial basis <= kMaxTupleMonomials; DomainError beyond, or on
// u64 overflow)
// ---------------------------------------------------------------------------

inline constexpr int kMaxTupleDegree = 20;
inline constexpr int kMaxTupleSlots = 64;
inline constexpr std::uint64_t kMaxTupleMonomials = 1u << 20;

std::uint64_t binom_u64(int n, int k);
std::uint64_t multinomial_u64(int k, std::span<const int> alpha);

// All exponent vectors over S slots with total degree exactly k, graded
// lexicographic (first slot's exponent descending). Deterministic order.
std::vector<std::vector<int>> monomials_of_degree(int k, int S);
// Degrees 1..K concatenated in increasing degree, each block as above.
std::vector<std::vector<int>> monomials_up_to_degree(int K, int S);

// Interaction-count formulas.
std::uint64_t dp_power(int k, int S);       // C(k+S-1, S-1)
std::uint64_t dp_polynomial(int K, int S);  // C(K+S, S) - 1

// The two count formulas for the Taylor construction: route 1 keeps the
// expansion center as an extra indeterminate, route 2 absorbs it into the
// slot whose statistic is constant. Both are reported as stated; the
// measured interaction count of the route-2 build is dp_polynomial(K, S)
// (see the note on build_taylor_tuple below).
struct TaylorRouteCounts {
    std::uint64_t route1;  // (K+1)·C(K+S+1, S)/(S+1) - (K+1) = C(K+S+1, S+1) - (K+1)
    std::uint64_t route2;  // (K+1)·C(K+S, S-1)/S + 1   = C(K+S, S) + 1
};
TaylorRouteCounts dp_taylor_routes(int K, int S);

// ---------------------------------------------------------------------------
// sample-side statistics
// ---------------------------------------------------------------------------

// M draws of the per-slot statistics T_s(ξ). Columns marked constant carry no
// per-sample storage (canonical location-scale uses T = (1, ξ)).
struct SuffSamples {
    struct Column {
        bool is_const = false;
        double const_value = 0.0;
        std::vector<double> data;  // size M when not constant
    };
    std::size_t M = 0;
    std::vector<Column> cols;

    std::size_t S() const { return cols.size(); }
    double at(std::size_t i, std::size_t s) const {
        const Column& c = cols[s];
        return c.is_const ? c.const_value : c.data[i];
    }
    // Index of the single constant column, or -1 if none/ambiguous choice is
    // resolved to the first constant column.
    int find_const_col() const;

    // T = (1, ξ): the canonical location-scale layout.
    static SuffSamples locscale(std::span<const double> xi);
    // T = (ξ): single-statistic scaling layout.
    static SuffSamples scaling(std::span<const double> xi);
    // Arbitrary data columns (testing / generic S).
    static SuffSamples from_columns(std::vector<std::vector<double>> columns);
};

// Pooled per-column moments so many tuples sharing one ancillary pool can
// aggregate in O(1) each. Only meaningful for the canonical layouts (at most
// one non-constant column).
struct PooledMoments {
    std::size_t M = 0;
    int data_col = -1;                 // index of the sample column; -1 = all constant
    std::vector<double> col_const;     // per-column constants (data_col entry unused)
    std::vector<double> mean_pow;      // mean_pow[j] = (1/M)·Σ x^j, j = 0..kmax
    std::vector<double> mean_log_pow;  // (1/M)·Σ (ln x)^j when requested
    std::vector<double> mean_recip_pow;  // (1/M)·Σ x^(-j) when requested
};
PooledMoments compute_pooled_moments(const SuffSamples& xs, int kmax,
                                     bool want_logs = false, bool want_recips = false);

// ---------------------------------------------------------------------------
// estimated-function descriptor
// ---------------------------------------------------------------------------

struct GSpec {
    enum class Kind {
        Power,        // w^k
        LogPow,       // (ln w)^k   (exact tuple for scaling families only)
        RecipPower,   // w^(-k)     (exact tuple for scaling families only)
        Abs,          // |w|        (no tuple; direct build only)
        Polynomial,   // Σ_k c_k w^k, coeffs c_0..c_K fixed
        ShiftedPolynomial,  // Σ_k c_k (w - a)^k (Taylor-truncated target)
    };
    Kind kind = Kind::Power;
    int k = 1;
    std::vector<double> coeffs;  // c_0..c_K for the polynomial kinds
    double center = 1.0;         // a for ShiftedPolynomial

    int degree() const;
    std::string desc() const;

    static GSpec power(int k);
    static GSpec log_pow(int k = 1);
    static GSpec recip_power(int k);
    static GSpec abs();
    static GSpec polynomial(std::span<const double> c0_to_cK);
    static GSpec shifted_polynomial(double a, std::span<const double> c0_to_cK);
};

// Taylor coefficients of ln about a: c_0 = ln a, c_k = (-1)^(k+1)/(k·a^k).
// (A displayed variant with 1/k! coefficients circulates; it does not match
// the derivatives of ln and is not used.)
struct TaylorSpec {
    double center = 1.0;
    int K = 0;
    std::vector<double> coeffs;  // c_0..c_K
};
TaylorSpec taylor_log_spec(int K, double a = 1.0);
// Fraction of realizations w = Σ η_s T_s(ξᵢ) outside the series' convergence
// region |w - a| < a. Reported as a warning statistic, never enforced.
double taylor_outside_fraction(const TaylorSpec& ts, std::span<const double> eta,
                               const SuffSamples& xs);

// ---------------------------------------------------------------------------
// the tuple
// ---------------------------------------------------------------------------

// Aggregated sample side: t pairs one-to-one with the tuple entries, offset
// collects everything with no θ dependence (constant term plus θ-free sample
// aggregates). The offset enters the graph as a plain constant: derivative
// zero, no interaction.
struct TValues {
    std::vector<double> t;
    double offset = 0.0;
};

struct ParamTuple {
    enum class NForm {
        Monomials,   // n_j = Π_s base_s^{α_js}, base_s = η_s - shift_s (or a fixed constant slot)
        LogPow,      // n_j = (ln η_0)^j, j = 1..k (scaling families)
        RecipPower,  // n_0 = η_0^(-k)              (scaling families)
    };

    NForm form = NForm::Monomials;
    int S = 0;       // number of real parameter slots
    int recip_k = 1;
    int log_k = 1;
    std::vector<double> shift;        // per real slot; empty = no shift
    std::vector<double> fixed_slots;  // extra constant slots appended after the real ones
    std::vector<std::vector<int>> exponents;  // per entry; length S + fixed_slots.size()
    std::vector<double> coeffs;       // per entry: multinomial × polynomial coefficient
    double const_offset = 0.0;        // build-time constant part (e.g. c_0)
    std::size_t d_p = 0;              // declared interaction count = entry count
    std::string desc;

    // Sample side: no-grad arithmetic only.
    TValues t_aggregate(const SuffSamples& xs) const;
    TValues t_from_moments(const PooledMoments& pm) const;

    // Parameter side: one tape value per entry, built from the η handles.
    std::vector<Val> n_build(Tape& tape, std::span<const Val> eta) const;

    // Combiner: Σ_j dot(n_j, t_j) + offset. Emits exactly d_p interaction nodes.
    Val evaluate_with_t(Tape& tape, std::span<const Val> eta, const TValues& tv) const;
    Val evaluate(Tape& tape, std::span<const Val> eta, const SuffSamples& xs) const;

    // Tape-free value (same algebra as evaluate; used by large-M sweeps).
    double value(std::span<const double> eta, const SuffSamples& xs) const;
    double value_with_t(std::span<const double> eta, const TValues& tv) const;
};

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

// Scaling family W = η(θ)·T(ξ): d_P = 1 tuples for w^k and w^(-k); (ln w)^k
// expands binomially into k entries (k = 1 is the classic single-interaction
// log tuple with a θ-free aggregate in the offset).
ParamTuple build_scaling_tuple(const GSpec& g);

// Location-scale W = Σ_s η_s T_s: all degree-k monomials, d_P = dp_power(k, S).
ParamTuple build_locscale_power_tuple(int k, int S);

// Σ_k c_k w^k with θ-independent coefficients c_0..c_K: union of the power
// tuples for the degrees with c_k ≠ 0 (zero coefficients are pruned, so the
// declared d_p matches dp_polynomial only when all of c_1..c_K are nonzero);
// c_0 goes to the offset.
ParamTuple build_polynomial_tuple(std::span<const double> c0_to_cK, int S);

// Truncated Taylor target Σ_k c_k (w - a)^k. When some statistic is constant
// (T_j ≡ c, canonical T_0 = 1), the center is absorbed by shifting that slot's
// parameter, η*_j = η_j - a/c, and the polynomial machinery applies unchanged:
// measured interactions = dp_polynomial(K, S), plus one subtraction node that
// is not an interaction (route 2). With no constant statistic the center is
// kept as an (S+1)-th constant slot (route 1); entries touching only that slot
// fold into the offset, leaving C(K+S+1, S+1) - (K+1) interactions.
// const_slot: index of the constant-statistic slot, or -1 to force route 1.
ParamTuple build_taylor_tuple(const TaylorSpec& ts, int S, int const_slot,
                              double const_value = 1.0);

// Internal dispatcher the builders share; exposed for the direct build and
// tests. Throws UnsupportedGError where no tuple exists (Abs; LogPow or
// RecipPower with S > 1).
ParamTuple tuple_for(const GSpec& g, int S, int const_slot = -1,
                     double const_value = 1.0);

// ---------------------------------------------------------------------------
// naive per-sample build (the baseline and exactness oracle)
// ---------------------------------------------------------------------------

enum class DirectForm {
    Sum,       // w_i = Σ_s dot(η_s, T_s(ξᵢ)) as in the usual hand-written code,
               // then g applied with tape ops, then the sample mean
    Monomial,  // per sample, one dot per basis monomial against the shared
               // n-side nodes: interaction count = M · d_p exactly
};

Val direct_mc_build(Tape& tape, const GSpec& g, std::span<const Val> eta,
                    const SuffSamples& xs, DirectForm form = DirectForm::Sum);

// Tape-free naive value, per-sample evaluation order (kernels fast paths for
// the canonical layouts). Used by the error sweeps at large M.
double direct_mc_value(const GSpec& g, std::span<const double> eta,
                       const SuffSamples& xs);

}  // namespace mcrepar
