#include "mcrepar/repar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcrepar/errors.hpp"
#include "mcrepar/kernels.hpp"

namespace mcrepar {
namespace {

// x^e by repeated multiplication, e >= 0: fixed order, no libm dependence.
double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

std::uint64_t mul_checked(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw DomainError("integer overflow in coefficient arithmetic");
    return r;
}

void check_degree_slots(int deg, int S, const char* who) {
    if (deg < 0 || deg > kMaxTupleDegree)
        throw DomainError(std::string(who) + ": degree out of range (max " +
                          std::to_string(kMaxTupleDegree) + ")");
    if (S < 1 || S > kMaxTupleSlots)
        throw DomainError(std::string(who) + ": slot count out of range (max " +
                          std::to_string(kMaxTupleSlots) + ")");
}

void enumerate_degree(int remaining, int slot, int S, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
    if (slot == S - 1) {
        cur[slot] = remaining;
        out.push_back(cur);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        cur[slot] = e;
        enumerate_degree(remaining - e, slot + 1, S, cur, out);
    }
}

void check_finite_t(const TValues& tv) {
    for (double v : tv.t)
        if (!std::isfinite(v)) throw NonFiniteError("sample aggregate is not finite");
    if (!std::isfinite(tv.offset))
        throw NonFiniteError("sample aggregate offset is not finite");
}

}  // namespace

// ---------------------------------------------------------------------------
// combinatorics
// ---------------------------------------------------------------------------

std::uint64_t binom_u64(int n, int k) {
    if (n < 0 || k < 0 || k > n) throw DomainError("binom: need 0 <= k <= n");
    if (k > n - k) k = n - k;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        // Multiply before divide keeps every intermediate integral.
        r = mul_checked(r, static_cast<std::uint64_t>(n - k + i));
        r /= static_cast<std::uint64_t>(i);
    }
    return r;
}

std::uint64_t multinomial_u64(int k, std::span<const int> alpha) {
    int total = 0;
    std::uint64_t r = 1;
    for (int a : alpha) {
        if (a < 0) throw DomainError("multinomial: negative exponent");
        total += a;
        r = mul_checked(r, binom_u64(total, a));
    }
    if (total != k) throw DomainError("multinomial: exponents do not sum to k");
    return r;
}

std::vector<std::vector<int>> monomials_of_degree(int k, int S) {
    check_degree_slots(k, S, "monomials_of_degree");
    if (k < 1) throw DomainError("monomials_of_degree: degree must be >= 1");
    if (binom_u64(k + S - 1, S - 1) > kMaxTupleMonomials)
        throw DomainError("monomials_of_degree: basis too large (max " +
                          std::to_string(kMaxTupleMonomials) + ")");
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(S), 0);
    enumerate_degree(k, 0, S, cur, out);
    return out;
}

std::vector<std::vector<int>> monomials_up_to_degree(int K, int S) {
    check_degree_slots(K, S, "monomials_up_to_degree");
    if (K < 1) throw DomainError("monomials_up_to_degree: degree must be >= 1");
    if (binom_u64(K + S, S) - 1 > kMaxTupleMonomials)
        throw DomainError("monomials_up_to_degree: basis too large (max " +
                          std::to_string(kMaxTupleMonomials) + ")");
    std::vector<std::vector<int>> out;
    for (int k = 1; k <= K; ++k) {
        auto block = monomials_of_degree(k, S);
        out.insert(out.end(), block.begin(), block.end());
    }
    return out;
}

std::uint64_t dp_power(int k, int S) {
    check_degree_slots(k, S, "dp_power");
    if (k < 1) throw DomainError("dp_power: k must be >= 1");
    return binom_u64(k + S - 1, S - 1);
}

std::uint64_t dp_polynomial(int K, int S) {
    check_degree_slots(K, S, "dp_polynomial");
    if (K < 1) throw DomainError("dp_polynomial: K must be >= 1");
    return binom_u64(K + S, S) - 1;
}

TaylorRouteCounts dp_taylor_routes(int K, int S) {
    check_degree_slots(K, S, "dp_taylor_routes");
    if (K < 1) throw DomainError("dp_taylor_routes: K must be >= 1");
    if (S < 2) throw DomainError("dp_taylor_routes: S must be >= 2");
    TaylorRouteCounts out{};
    // (K+1)·C(K+S+1,S)/(S+1) - (K+1); the division is exact, via the identity
    // C(n,S)·(K+1)/(S+1) = C(n,S+1) at n = K+S+1.
    out.route1 = binom_u64(K + S + 1, S + 1) - static_cast<std::uint64_t>(K + 1);
    // (K+1)·C(K+S,S-1)/S + 1 = C(K+S,S) + 1, same style of identity.
    out.route2 = binom_u64(K + S, S) + 1;
    return out;
}

// ---------------------------------------------------------------------------
// SuffSamples / PooledMoments
// ---------------------------------------------------------------------------

int SuffSamples::find_const_col() const {
    for (std::size_t s = 0; s < cols.size(); ++s)
        if (cols[s].is_const) return static_cast<int>(s);
    return -1;
}

SuffSamples SuffSamples::locscale(std::span<const double> xi) {
    SuffSamples xs;
    xs.M = xi.size();
    xs.cols.resize(2);
    xs.cols[0].is_const = true;
    xs.cols[0].const_value = 1.0;
    xs.cols[1].data.assign(xi.begin(), xi.end());
    return xs;
}

SuffSamples SuffSamples::scaling(std::span<const double> xi) {
    SuffSamples xs;
    xs.M = xi.size();
    xs.cols.resize(1);
    xs.cols[0].data.assign(xi.begin(), xi.end());
    return xs;
}

SuffSamples SuffSamples::from_columns(std::vector<std::vector<double>> columns) {
    SuffSamples xs;
    if (columns.empty()) throw DomainError("from_columns: no columns");
    xs.M = columns.front().size();
    for (auto& c : columns) {
        if (c.size() != xs.M) throw DomainError("from_columns: ragged columns");
        Column col;
        col.data = std::move(c);
        xs.cols.push_back(std::move(col));
    }
    return xs;
}

PooledMoments compute_pooled_moments(const SuffSamples& xs, int kmax,
                                     bool want_logs, bool want_recips) {
    if (xs.M == 0) throw DomainError("pooled moments: empty sample set");
    if (kmax < 0 || kmax > kernels::kMaxPower)
        throw DomainError("pooled moments: kmax out of range");
    PooledMoments pm;
    pm.M = xs.M;
    pm.col_const.resize(xs.S(), 0.0);
    for (std::size_t s = 0; s < xs.S(); ++s) {
        if (xs.cols[s].is_const) {
            pm.col_const[s] = xs.cols[s].const_value;
        } else if (pm.data_col < 0) {
            pm.data_col = static_cast<int>(s);
        } else {
            throw DomainError("pooled moments: more than one sample column");
        }
    }
    const double inv_m = 1.0 / static_cast<double>(xs.M);
    pm.mean_pow.assign(static_cast<std::size_t>(kmax) + 1, 1.0);
    if (pm.data_col >= 0) {
        const auto& x = xs.cols[static_cast<std::size_t>(pm.data_col)].data;
        std::vector<double> sums(static_cast<std::size_t>(kmax) + 1, 0.0);
        kernels::power_sums(x.data(), x.size(), kmax, sums.data());
        for (int j = 0; j <= kmax; ++j)
            pm.mean_pow[static_cast<std::size_t>(j)] =
                sums[static_cast<std::size_t>(j)] * inv_m;
        pm.mean_pow[0] = 1.0;
        if (want_logs) {
            std::vector<double> logs(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (!(x[i] > 0.0))
                    throw DomainError("pooled moments: log of non-positive statistic");
                logs[i] = std::log(x[i]);
            }
            std::vector<double> lsums(static_cast<std::size_t>(kmax) + 1, 0.0);
            kernels::power_sums(logs.data(), logs.size(), kmax, lsums.data());
            pm.mean_log_pow.resize(static_cast<std::size_t>(kmax) + 1);
            for (int j = 0; j <= kmax; ++j)
                pm.mean_log_pow[static_cast<std::size_t>(j)] =
                    lsums[static_cast<std::size_t>(j)] * inv_m;
            pm.mean_log_pow[0] = 1.0;
        }
        if (want_recips) {
            pm.mean_recip_pow.resize(static_cast<std::size_t>(kmax) + 1, 1.0);
            for (int j = 1; j <= kmax; ++j)
                pm.mean_recip_pow[static_cast<std::size_t>(j)] =
                    kernels::sum_recip_pow(x.data(), x.size(), j) * inv_m;
        }
    }
    return pm;
}

// ---------------------------------------------------------------------------
// GSpec / TaylorSpec
// ---------------------------------------------------------------------------

int GSpec::degree() const {
    switch (kind) {
        case Kind::Power:
        case Kind::LogPow:
        case Kind::RecipPower:
            return k;
        case Kind::Abs:
            return 1;
        case Kind::Polynomial:
        case Kind::ShiftedPolynomial:
            return coeffs.empty() ? 0 : static_cast<int>(coeffs.size()) - 1;
    }
    return 0;
}

std::string GSpec::desc() const {
    switch (kind) {
        case Kind::Power:
            return "w^" + std::to_string(k);
        case Kind::LogPow:
            return k == 1 ? "ln w" : "(ln w)^" + std::to_string(k);
        case Kind::RecipPower:
            return "w^-" + std::to_string(k);
        case Kind::Abs:
            return "|w|";
        case Kind::Polynomial:
            return "poly deg " + std::to_string(degree());
        case Kind::ShiftedPolynomial:
            return "poly deg " + std::to_string(degree()) + " about " +
                   std::to_string(center);
    }
    return "?";
}

GSpec GSpec::power(int k) {
    GSpec g;
    g.kind = Kind::Power;
    g.k = k;
    return g;
}
GSpec GSpec::log_pow(int k) {
    GSpec g;
    g.kind = Kind::LogPow;
    g.k = k;
    return g;
}
GSpec GSpec::recip_power(int k) {
    GSpec g;
    g.kind = Kind::RecipPower;
    g.k = k;
    return g;
}
GSpec GSpec::abs() {
    GSpec g;
    g.kind = Kind::Abs;
    return g;
}
GSpec GSpec::polynomial(std::span<const double> c0_to_cK) {
    if (c0_to_cK.empty()) throw DomainError("polynomial: no coefficients");
    GSpec g;
    g.kind = Kind::Polynomial;
    g.coeffs.assign(c0_to_cK.begin(), c0_to_cK.end());
    return g;
}
GSpec GSpec::shifted_polynomial(double a, std::span<const double> c0_to_cK) {
    if (c0_to_cK.empty()) throw DomainError("shifted polynomial: no coefficients");
    GSpec g;
    g.kind = Kind::ShiftedPolynomial;
    g.center = a;
    g.coeffs.assign(c0_to_cK.begin(), c0_to_cK.end());
    return g;
}

TaylorSpec taylor_log_spec(int K, double a) {
    if (K < 0 || K > kMaxTupleDegree) throw DomainError("taylor_log_spec: bad K");
    if (!(a > 0.0)) throw DomainError("taylor_log_spec: center must be positive");
    TaylorSpec ts;
    ts.center = a;
    ts.K = K;
    ts.coeffs.resize(static_cast<std::size_t>(K) + 1);
    ts.coeffs[0] = std::log(a);
    for (int k = 1; k <= K; ++k) {
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        ts.coeffs[static_cast<std::size_t>(k)] =
            sign / (static_cast<double>(k) * ipow(a, k));
    }
    return ts;
}

double taylor_outside_fraction(const TaylorSpec& ts, std::span<const double> eta,
                               const SuffSamples& xs) {
    if (eta.size() != xs.S()) throw DomainError("taylor_outside_fraction: size mismatch");
    if (xs.M == 0) return 0.0;
    std::size_t outside = 0;
    for (std::size_t i = 0; i < xs.M; ++i) {
        double w = 0.0;
        for (std::size_t s = 0; s < xs.S(); ++s) w += eta[s] * xs.at(i, s);
        if (!(std::fabs(w - ts.center) < ts.center)) ++outside;
    }
    return static_cast<double>(outside) / static_cast<double>(xs.M);
}

// ---------------------------------------------------------------------------
// ParamTuple: sample side
// ---------------------------------------------------------------------------

TValues ParamTuple::t_aggregate(const SuffSamples& xs) const {
    if (xs.M == 0) throw DomainError("t_aggregate: empty sample set");
    if (static_cast<int>(xs.S()) != S)
        throw DomainError("t_aggregate: statistic count does not match tuple");
    TValues tv;
    tv.offset = const_offset;
    const double inv_m = 1.0 / static_cast<double>(xs.M);

    if (form == NForm::RecipPower) {
        const auto& c = xs.cols[0];
        double mean;
        if (c.is_const) {
            mean = 1.0 / ipow(c.const_value, recip_k);
        } else {
            mean = kernels::sum_recip_pow(c.data.data(), c.data.size(), recip_k) * inv_m;
        }
        tv.t.push_back(mean);
        check_finite_t(tv);
        return tv;
    }

    if (form == NForm::LogPow) {
        // (ln w)^k with w = η·T: binomial split over (ln η)^j (ln T)^{k-j}.
        std::vector<double> mean_log_pow(static_cast<std::size_t>(log_k) + 1, 1.0);
        const auto& c = xs.cols[0];
        if (c.is_const) {
            if (!(c.const_value > 0.0))
                throw DomainError("t_aggregate: log of non-positive statistic");
            const double l = std::log(c.const_value);
            for (int j = 1; j <= log_k; ++j)
                mean_log_pow[static_cast<std::size_t>(j)] = ipow(l, j);
        } else {
            std::vector<double> logs(xs.M);
            for (std::size_t i = 0; i < xs.M; ++i) {
                if (!(c.data[i] > 0.0))
                    throw DomainError("t_aggregate: log of non-positive statistic");
                logs[i] = std::log(c.data[i]);
            }
            std::vector<double> sums(static_cast<std::size_t>(log_k) + 1, 0.0);
            kernels::power_sums(logs.data(), logs.size(), log_k, sums.data());
            for (int j = 0; j <= log_k; ++j)
                mean_log_pow[static_cast<std::size_t>(j)] =
                    sums[static_cast<std::size_t>(j)] * inv_m;
            mean_log_pow[0] = 1.0;
        }
        for (int j = 1; j <= log_k; ++j)
            tv.t.push_back(static_cast<double>(binom_u64(log_k, j)) *
                           mean_log_pow[static_cast<std::size_t>(log_k - j)]);
        tv.offset += mean_log_pow[static_cast<std::size_t>(log_k)];
        check_finite_t(tv);
        return tv;
    }

    // Monomials. Constant columns contribute scalar factors; at most one data
    // column takes the power-sum fast path, otherwise a per-entry scan.
    std::vector<int> data_cols;
    for (std::size_t s = 0; s < xs.S(); ++s)
        if (!xs.cols[s].is_const) data_cols.push_back(static_cast<int>(s));

    std::vector<double> base(exponents.size());
    for (std::size_t j = 0; j < exponents.size(); ++j) {
        double f = coeffs[j];
        for (int s = 0; s < S; ++s)
            if (xs.cols[static_cast<std::size_t>(s)].is_const)
                f *= ipow(xs.cols[static_cast<std::size_t>(s)].const_value,
                          exponents[j][static_cast<std::size_t>(s)]);
        base[j] = f;  // fixed slots have unit statistics: no contribution here
    }

    if (data_cols.empty()) {
        tv.t.assign(base.begin(), base.end());
    } else if (data_cols.size() == 1) {
        const int dc = data_cols[0];
        int maxdeg = 0;
        for (const auto& e : exponents)
            maxdeg = std::max(maxdeg, e[static_cast<std::size_t>(dc)]);
        if (maxdeg > kernels::kMaxPower)
            throw DomainError("t_aggregate: degree beyond kernel power cap");
        const auto& x = xs.cols[static_cast<std::size_t>(dc)].data;
        std::vector<double> sums(static_cast<std::size_t>(maxdeg) + 1, 0.0);
        kernels::power_sums(x.data(), x.size(), maxdeg, sums.data());
        std::vector<double> mean_pow(static_cast<std::size_t>(maxdeg) + 1, 1.0);
        for (int j = 1; j <= maxdeg; ++j)
            mean_pow[static_cast<std::size_t>(j)] = sums[static_cast<std::size_t>(j)] * inv_m;
        tv.t.resize(exponents.size());
        for (std::size_t j = 0; j < exponents.size(); ++j)
            tv.t[j] = base[j] *
                      mean_pow[static_cast<std::size_t>(
                          exponents[j][static_cast<std::size_t>(dc)])];
    } else {
        tv.t.resize(exponents.size());
        std::vector<std::pair<int, int>> nz;  // (data column, exponent > 0)
        for (std::size_t j = 0; j < exponents.size(); ++j) {
            nz.clear();
            for (int dc : data_cols) {
                const int e = exponents[j][static_cast<std::size_t>(dc)];
                if (e > 0) nz.emplace_back(dc, e);
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < xs.M; ++i) {
                double p = 1.0;
                for (const auto& [dc, e] : nz)
                    p *= ipow(xs.at(i, static_cast<std::size_t>(dc)), e);
                acc += p;
            }
            tv.t[j] = base[j] * acc * inv_m;
        }
    }
    check_finite_t(tv);
    return tv;
}

TValues ParamTuple::t_from_moments(const PooledMoments& pm) const {
    if (static_cast<int>(pm.col_const.size()) != S)
        throw DomainError("t_from_moments: column count does not match tuple");
    TValues tv;
    tv.offset = const_offset;

    if (form == NForm::RecipPower) {
        if (pm.data_col != 0) throw DomainError("t_from_moments: need sample column 0");
        if (recip_k >= static_cast<int>(pm.mean_recip_pow.size()))
            throw DomainError("t_from_moments: reciprocal moments not pooled");
        tv.t.push_back(pm.mean_recip_pow[static_cast<std::size_t>(recip_k)]);
        check_finite_t(tv);
        return tv;
    }
    if (form == NForm::LogPow) {
        if (pm.data_col != 0) throw DomainError("t_from_moments: need sample column 0");
        if (log_k >= static_cast<int>(pm.mean_log_pow.size()))
            throw DomainError("t_from_moments: log moments not pooled");
        for (int j = 1; j <= log_k; ++j)
            tv.t.push_back(static_cast<double>(binom_u64(log_k, j)) *
                           pm.mean_log_pow[static_cast<std::size_t>(log_k - j)]);
        tv.offset += pm.mean_log_pow[static_cast<std::size_t>(log_k)];
        check_finite_t(tv);
        return tv;
    }

    tv.t.resize(exponents.size());
    for (std::size_t j = 0; j < exponents.size(); ++j) {
        double f = coeffs[j];
        for (int s = 0; s < S; ++s) {
            const int e = exponents[j][static_cast<std::size_t>(s)];
            if (e == 0) continue;
            if (s == pm.data_col) {
                if (e >= static_cast<int>(pm.mean_pow.size()))
                    throw DomainError("t_from_moments: moment order not pooled");
                f *= pm.mean_pow[static_cast<std::size_t>(e)];
            } else {
                f *= ipow(pm.col_const[static_cast<std::size_t>(s)], e);
            }
        }
        tv.t[j] = f;
    }
    check_finite_t(tv);
    return tv;
}

// ---------------------------------------------------------------------------
// ParamTuple: parameter side and combiner
// ---------------------------------------------------------------------------

std::vector<Val> ParamTuple::n_build(Tape& tape, std::span<const Val> eta) const {
    if (static_cast<int>(eta.size()) != S)
        throw DomainError("n_build: parameter count does not match tuple");
    const std::size_t total_slots = static_cast<std::size_t>(S) + fixed_slots.size();

    if (form == NForm::RecipPower) {
        Val base = eta[0];
        if (recip_k > 1) base = tape.pow_int(base, recip_k);
        return {tape.reciprocal(base)};
    }
    if (form == NForm::LogPow) {
        Val l = tape.log(eta[0]);
        std::vector<Val> out;
        out.reserve(static_cast<std::size_t>(log_k));
        for (int j = 1; j <= log_k; ++j)
            out.push_back(j == 1 ? l : tape.pow_int(l, j));
        return out;
    }

    // Slot bases, built lazily: shifted parameters and fixed constants.
    std::vector<Val> bases(total_slots, Val{});
    auto slot_base = [&](std::size_t s) -> Val {
        if (!bases[s].valid()) {
            if (s < static_cast<std::size_t>(S)) {
                if (!shift.empty() && shift[s] != 0.0)
                    bases[s] = tape.sub(eta[s], tape.constant(shift[s]));
                else
                    bases[s] = eta[s];
            } else {
                bases[s] = tape.constant(fixed_slots[s - static_cast<std::size_t>(S)]);
            }
        }
        return bases[s];
    };
    // (slot, power) cache so μ² in μ²σ and μ²σ² is one node.
    std::vector<std::vector<Val>> pow_cache(total_slots);
    auto slot_pow = [&](std::size_t s, int e) -> Val {
        if (e == 1) return slot_base(s);
        auto& cache = pow_cache[s];
        if (cache.size() <= static_cast<std::size_t>(e))
            cache.resize(static_cast<std::size_t>(e) + 1, Val{});
        if (!cache[static_cast<std::size_t>(e)].valid())
            cache[static_cast<std::size_t>(e)] = tape.pow_int(slot_base(s), e);
        return cache[static_cast<std::size_t>(e)];
    };

    std::vector<Val> out;
    out.reserve(exponents.size());
    for (const auto& alpha : exponents) {
        Val acc{};
        for (std::size_t s = 0; s < total_slots; ++s) {
            const int e = alpha[s];
            if (e == 0) continue;
            Val f = slot_pow(s, e);
            acc = acc.valid() ? tape.mul(acc, f) : f;
        }
        if (!acc.valid())
            throw DomainError("n_build: entry with empty parameter monomial");
        out.push_back(acc);
    }
    return out;
}

Val ParamTuple::evaluate_with_t(Tape& tape, std::span<const Val> eta,
                                const TValues& tv) const {
    auto ns = n_build(tape, eta);
    if (ns.size() != tv.t.size())
        throw DomainError("evaluate: n and t dimension mismatch");
    Val acc{};
    for (std::size_t j = 0; j < ns.size(); ++j) {
        Val term = tape.dot_combine(ns[j], tape.constant(tv.t[j]));
        acc = acc.valid() ? tape.add(acc, term) : term;
    }
    if (!acc.valid()) return tape.constant(tv.offset);
    if (tv.offset != 0.0) acc = tape.add(acc, tape.constant(tv.offset));
    return acc;
}

Val ParamTuple::evaluate(Tape& tape, std::span<const Val> eta,
                         const SuffSamples& xs) const {
    return evaluate_with_t(tape, eta, t_aggregate(xs));
}

double ParamTuple::value_with_t(std::span<const double> eta, const TValues& tv) const {
    if (static_cast<int>(eta.size()) != S)
        throw DomainError("value: parameter count does not match tuple");
    double acc = tv.offset;
    if (form == NForm::RecipPower) {
        return acc + tv.t[0] / ipow(eta[0], recip_k);
    }
    if (form == NForm::LogPow) {
        if (!(eta[0] > 0.0)) throw DomainError("value: log of non-positive parameter");
        const double l = std::log(eta[0]);
        for (int j = 1; j <= log_k; ++j)
            acc += tv.t[static_cast<std::size_t>(j - 1)] * ipow(l, j);
        return acc;
    }
    for (std::size_t j = 0; j < exponents.size(); ++j) {
        double p = 1.0;
        for (int s = 0; s < S; ++s) {
            const double b =
                shift.empty() ? eta[static_cast<std::size_t>(s)]
                              : eta[static_cast<std::size_t>(s)] - shift[static_cast<std::size_t>(s)];
            p *= ipow(b, exponents[j][static_cast<std::size_t>(s)]);
        }
        for (std::size_t f = 0; f < fixed_slots.size(); ++f)
            p *= ipow(fixed_slots[f], exponents[j][static_cast<std::size_t>(S) + f]);
        acc += tv.t[j] * p;
    }
    return acc;
}

double ParamTuple::value(std::span<const double> eta, const SuffSamples& xs) const {
    return value_with_t(eta, t_aggregate(xs));
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

namespace {

void append_degree_entries(ParamTuple& tup, int k, int S, double scale) {
    auto block = monomials_of_degree(k, S);
    for (auto& alpha : block) {
        const double m = static_cast<double>(multinomial_u64(k, alpha));
        tup.exponents.push_back(std::move(alpha));
        tup.coeffs.push_back(scale * m);
    }
}

}  // namespace

ParamTuple tuple_for(const GSpec& g, int S, int const_slot, double const_value) {
    check_degree_slots(g.degree(), S, "tuple_for");
    ParamTuple tup;
    tup.S = S;
    tup.desc = g.desc();

    switch (g.kind) {
        case GSpec::Kind::Power: {
            if (g.k < 1) throw DomainError("tuple_for: power must be >= 1");
            tup.form = ParamTuple::NForm::Monomials;
            append_degree_entries(tup, g.k, S, 1.0);
            break;
        }
        case GSpec::Kind::Polynomial: {
            tup.form = ParamTuple::NForm::Monomials;
            tup.const_offset = g.coeffs[0];
            for (int k = 1; k < static_cast<int>(g.coeffs.size()); ++k)
                if (g.coeffs[static_cast<std::size_t>(k)] != 0.0)
                    append_degree_entries(tup, k, S, g.coeffs[static_cast<std::size_t>(k)]);
            break;
        }
        case GSpec::Kind::ShiftedPolynomial: {
            tup.form = ParamTuple::NForm::Monomials;
            tup.const_offset = g.coeffs[0];
            if (const_slot >= 0) {
                // Route 2: absorb the center into the constant-statistic slot.
                if (const_slot >= S)
                    throw DomainError("tuple_for: constant slot out of range");
                if (const_value == 0.0)
                    throw DomainError("tuple_for: constant statistic is zero");
                tup.shift.assign(static_cast<std::size_t>(S), 0.0);
                tup.shift[static_cast<std::size_t>(const_slot)] = g.center / const_value;
                for (int k = 1; k < static_cast<int>(g.coeffs.size()); ++k)
                    if (g.coeffs[static_cast<std::size_t>(k)] != 0.0)
                        append_degree_entries(tup, k, S,
                                              g.coeffs[static_cast<std::size_t>(k)]);
            } else {
                // Route 1: the center rides along as an extra constant slot;
                // monomials touching only that slot are plain constants and
                // fold into the offset.
                tup.fixed_slots.push_back(-g.center);
                for (int k = 1; k < static_cast<int>(g.coeffs.size()); ++k) {
                    const double ck = g.coeffs[static_cast<std::size_t>(k)];
                    if (ck == 0.0) continue;
                    for (auto& alpha : monomials_of_degree(k, S + 1)) {
                        const double m = static_cast<double>(multinomial_u64(k, alpha));
                        bool pure_fixed = true;
                        for (int s = 0; s < S; ++s)
                            if (alpha[static_cast<std::size_t>(s)] != 0) pure_fixed = false;
                        if (pure_fixed) {
                            tup.const_offset += ck * m * ipow(-g.center, k);
                        } else {
                            tup.exponents.push_back(std::move(alpha));
                            tup.coeffs.push_back(ck * m);
                        }
                    }
                }
            }
            break;
        }
        case GSpec::Kind::LogPow: {
            if (S != 1)
                throw UnsupportedGError(
                    "no exact tuple for (ln w)^k outside scaling families");
            if (g.k < 1) throw DomainError("tuple_for: log power must be >= 1");
            tup.form = ParamTuple::NForm::LogPow;
            tup.log_k = g.k;
            tup.d_p = static_cast<std::size_t>(g.k);
            tup.desc = g.desc();
            return tup;
        }
        case GSpec::Kind::RecipPower: {
            if (S != 1)
                throw UnsupportedGError(
                    "no exact tuple for w^-k outside scaling families");
            if (g.k < 1) throw DomainError("tuple_for: reciprocal power must be >= 1");
            tup.form = ParamTuple::NForm::RecipPower;
            tup.recip_k = g.k;
            tup.d_p = 1;
            return tup;
        }
        case GSpec::Kind::Abs:
            throw UnsupportedGError("no parameterization tuple for |w|");
    }
    tup.d_p = tup.exponents.size();
    return tup;
}

ParamTuple build_scaling_tuple(const GSpec& g) {
    switch (g.kind) {
        case GSpec::Kind::Power:
        case GSpec::Kind::LogPow:
        case GSpec::Kind::RecipPower:
            return tuple_for(g, 1);
        default:
            throw UnsupportedGError("scaling tuple supports w^k, (ln w)^k, w^-k");
    }
}

ParamTuple build_locscale_power_tuple(int k, int S) {
    return tuple_for(GSpec::power(k), S);
}

ParamTuple build_polynomial_tuple(std::span<const double> c0_to_cK, int S) {
    return tuple_for(GSpec::polynomial(c0_to_cK), S);
}

ParamTuple build_taylor_tuple(const TaylorSpec& ts, int S, int const_slot,
                              double const_value) {
    return tuple_for(GSpec::shifted_polynomial(ts.center, ts.coeffs), S, const_slot,
                     const_value);
}

// ---------------------------------------------------------------------------
// naive direct build
// ---------------------------------------------------------------------------

Val direct_mc_build(Tape& tape, const GSpec& g, std::span<const Val> eta,
                    const SuffSamples& xs, DirectForm form) {
    if (xs.M == 0) throw DomainError("direct build: empty sample set");
    if (eta.size() != xs.S()) throw DomainError("direct build: size mismatch");
    const double inv_m = 1.0 / static_cast<double>(xs.M);

    if (form == DirectForm::Monomial) {
        const int cc = xs.find_const_col();
        const double cv =
            cc >= 0 ? xs.cols[static_cast<std::size_t>(cc)].const_value : 1.0;
        ParamTuple tup = tuple_for(g, static_cast<int>(xs.S()), cc, cv);
        auto ns = tup.n_build(tape, eta);
        double offset_total = tup.const_offset;
        Val acc{};
        auto emit = [&](std::size_t j, double tval) {
            Val term = tape.dot_combine(ns[j], tape.constant(tval));
            acc = acc.valid() ? tape.add(acc, term) : term;
        };
        if (tup.form == ParamTuple::NForm::RecipPower) {
            for (std::size_t i = 0; i < xs.M; ++i)
                emit(0, inv_m / ipow(xs.at(i, 0), tup.recip_k));
        } else if (tup.form == ParamTuple::NForm::LogPow) {
            for (std::size_t i = 0; i < xs.M; ++i) {
                const double x = xs.at(i, 0);
                if (!(x > 0.0))
                    throw DomainError("direct build: log of non-positive statistic");
                const double l = std::log(x);
                for (int j = 1; j <= tup.log_k; ++j)
                    emit(static_cast<std::size_t>(j - 1),
                         static_cast<double>(binom_u64(tup.log_k, j)) *
                             ipow(l, tup.log_k - j) * inv_m);
                offset_total += ipow(l, tup.log_k) * inv_m;
            }
        } else {
            // Per-entry scalar factor from constant columns and coefficients.
            std::vector<double> base(tup.exponents.size());
            for (std::size_t j = 0; j < tup.exponents.size(); ++j) {
                double f = tup.coeffs[j];
                for (int s = 0; s < tup.S; ++s)
                    if (xs.cols[static_cast<std::size_t>(s)].is_const)
                        f *= ipow(xs.cols[static_cast<std::size_t>(s)].const_value,
                                  tup.exponents[j][static_cast<std::size_t>(s)]);
                base[j] = f;
            }
            for (std::size_t i = 0; i < xs.M; ++i) {
                for (std::size_t j = 0; j < tup.exponents.size(); ++j) {
                    double p = 1.0;
                    for (int s = 0; s < tup.S; ++s)
                        if (!xs.cols[static_cast<std::size_t>(s)].is_const)
                            p *= ipow(xs.at(i, static_cast<std::size_t>(s)),
                                      tup.exponents[j][static_cast<std::size_t>(s)]);
                    emit(j, base[j] * p * inv_m);
                }
            }
        }
        if (!acc.valid()) return tape.constant(offset_total);
        if (offset_total != 0.0) acc = tape.add(acc, tape.constant(offset_total));
        return acc;
    }

    // Sum form: per-sample realization then g, the way the estimator is
    // usually written by hand.
    std::vector<Val> gs;
    gs.reserve(xs.M);
    Val center_node{};
    if (g.kind == GSpec::Kind::ShiftedPolynomial) center_node = tape.constant(g.center);
    for (std::size_t i = 0; i < xs.M; ++i) {
        Val w{};
        for (std::size_t s = 0; s < xs.S(); ++s) {
            Val term = tape.dot_combine(eta[s], tape.constant(xs.at(i, s)));
            w = w.valid() ? tape.add(w, term) : term;
        }
        Val gi{};
        switch (g.kind) {
            case GSpec::Kind::Power:
                gi = g.k == 1 ? w : tape.pow_int(w, g.k);
                break;
            case GSpec::Kind::LogPow: {
                Val l = tape.log(w);
                gi = g.k == 1 ? l : tape.pow_int(l, g.k);
                break;
            }
            case GSpec::Kind::RecipPower:
                gi = tape.reciprocal(g.k == 1 ? w : tape.pow_int(w, g.k));
                break;
            case GSpec::Kind::Abs:
                gi = tape.abs(w);
                break;
            case GSpec::Kind::Polynomial:
            case GSpec::Kind::ShiftedPolynomial: {
                Val x = w;
                if (g.kind == GSpec::Kind::ShiftedPolynomial) x = tape.sub(w, center_node);
                const int K = g.degree();
                if (K == 0) {
                    gi = tape.constant(g.coeffs[0]);
                } else {
                    Val acc = tape.constant(g.coeffs[static_cast<std::size_t>(K)]);
                    for (int j = K - 1; j >= 0; --j)
                        acc = tape.add(tape.mul(acc, x),
                                       tape.constant(g.coeffs[static_cast<std::size_t>(j)]));
                    gi = acc;
                }
                break;
            }
        }
        gs.push_back(gi);
    }
    Val total = tape.sum_reduce(gs);
    return tape.mul(total, tape.constant(inv_m));
}

double direct_mc_value(const GSpec& g, std::span<const double> eta,
                       const SuffSamples& xs) {
    if (xs.M == 0) throw DomainError("direct value: empty sample set");
    if (eta.size() != xs.S()) throw DomainError("direct value: size mismatch");
    const double inv_m = 1.0 / static_cast<double>(xs.M);

    // Canonical single-data-column layouts take the affine kernels.
    int data_col = -1;
    bool canonical = true;
    double mu = 0.0;
    for (std::size_t s = 0; s < xs.S(); ++s) {
        if (xs.cols[s].is_const) {
            mu += eta[s] * xs.cols[s].const_value;
        } else if (data_col < 0) {
            data_col = static_cast<int>(s);
        } else {
            canonical = false;
        }
    }
    if (canonical && data_col >= 0) {
        const auto& x = xs.cols[static_cast<std::size_t>(data_col)].data;
        const double sigma = eta[static_cast<std::size_t>(data_col)];
        switch (g.kind) {
            case GSpec::Kind::Power:
                return kernels::sum_affine_pow(x.data(), x.size(), mu, sigma, g.k) * inv_m;
            case GSpec::Kind::LogPow:
                if (g.k == 1)
                    return kernels::sum_log_affine(x.data(), x.size(), mu, sigma) * inv_m;
                break;
            case GSpec::Kind::Polynomial:
                return kernels::sum_poly_centered(x.data(), x.size(), mu, sigma, 0.0,
                                                  g.coeffs.data(), g.degree()) *
                       inv_m;
            case GSpec::Kind::ShiftedPolynomial:
                return kernels::sum_poly_centered(x.data(), x.size(), mu, sigma,
                                                  g.center, g.coeffs.data(),
                                                  g.degree()) *
                       inv_m;
            default:
                break;
        }
    }

    // General path: plain per-sample loop, fixed order.
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.M; ++i) {
        double w = 0.0;
        for (std::size_t s = 0; s < xs.S(); ++s) w += eta[s] * xs.at(i, s);
        switch (g.kind) {
            case GSpec::Kind::Power:
                acc += ipow(w, g.k);
                break;
            case GSpec::Kind::LogPow: {
                if (!(w > 0.0)) throw DomainError("direct value: log of non-positive w");
                acc += ipow(std::log(w), g.k);
                break;
            }
            case GSpec::Kind::RecipPower:
                acc += 1.0 / ipow(w, g.k);
                break;
            case GSpec::Kind::Abs:
                acc += std::fabs(w);
                break;
            case GSpec::Kind::Polynomial:
            case GSpec::Kind::ShiftedPolynomial: {
                const double d =
                    g.kind == GSpec::Kind::ShiftedPolynomial ? w - g.center : w;
                const int K = g.degree();
                double h = g.coeffs[static_cast<std::size_t>(K)];
                for (int j = K - 1; j >= 0; --j)
                    h = h * d + g.coeffs[static_cast<std::size_t>(j)];
                acc += h;
                break;
            }
        }
    }
    if (!std::isfinite(acc)) throw NonFiniteError("direct value: sum not finite");
    return acc * inv_m;
}

}  // namespace mcrepar
