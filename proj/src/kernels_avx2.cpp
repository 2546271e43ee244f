// AVX2 kernel variants. One 4-lane vector register per accumulator, lane j
// holding elements 4i+j, so each vector op performs exactly the lane updates
// of the scalar reference; the lane combine and tail loop are likewise
// identical. This file is compiled with -mavx2 (and project-wide
// -ffp-contract=off, which keeps mul+add sequences from fusing into FMAs the
// scalar reference does not perform).

#include <immintrin.h>

#include <cassert>
#include <cmath>
#include <cstddef>

#include "mcrepar/kernels.hpp"

namespace mcrepar::kernels::avx2 {

namespace {

inline double combine_lanes(__m256d v) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

inline __m256d abs_pd(__m256d v) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    return _mm256_and_pd(v, mask);
}

}  // namespace

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += x[i];
    return combine_lanes(acc) + tail;
}

double sum_abs(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_add_pd(acc, abs_pd(_mm256_loadu_pd(x + i)));
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += std::fabs(x[i]);
    return combine_lanes(acc) + tail;
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d prod =
            _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, prod);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += x[i] * y[i];
    return combine_lanes(acc) + tail;
}

void power_sums(const double* x, std::size_t n, int kmax, double* out) {
    assert(kmax >= 0 && kmax <= kMaxPower);
    __m256d acc[kMaxPower + 1];
    for (int j = 0; j <= kmax; ++j) acc[j] = _mm256_setzero_pd();
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        __m256d p = xv;
        acc[1] = _mm256_add_pd(acc[1], p);
        for (int j = 2; j <= kmax; ++j) {
            p = _mm256_mul_pd(p, xv);
            acc[j] = _mm256_add_pd(acc[j], p);
        }
    }
    double tail[kMaxPower + 1] = {};
    for (std::size_t i = n4; i < n; ++i) {
        double p = x[i];
        tail[1] += p;
        for (int j = 2; j <= kmax; ++j) {
            p *= x[i];
            tail[j] += p;
        }
    }
    out[0] = static_cast<double>(n);
    for (int j = 1; j <= kmax; ++j) out[j] = combine_lanes(acc[j]) + tail[j];
}

void centered_power_sums(const double* x, std::size_t n, double a, int kmax,
                         double* out) {
    assert(kmax >= 0 && kmax <= kMaxPower);
    __m256d acc[kMaxPower + 1];
    for (int j = 0; j <= kmax; ++j) acc[j] = _mm256_setzero_pd();
    const __m256d av = _mm256_set1_pd(a);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), av);
        __m256d p = d;
        acc[1] = _mm256_add_pd(acc[1], p);
        for (int j = 2; j <= kmax; ++j) {
            p = _mm256_mul_pd(p, d);
            acc[j] = _mm256_add_pd(acc[j], p);
        }
    }
    double tail[kMaxPower + 1] = {};
    for (std::size_t i = n4; i < n; ++i) {
        const double d = x[i] - a;
        double p = d;
        tail[1] += p;
        for (int j = 2; j <= kmax; ++j) {
            p *= d;
            tail[j] += p;
        }
    }
    out[0] = static_cast<double>(n);
    for (int j = 1; j <= kmax; ++j) out[j] = combine_lanes(acc[j]) + tail[j];
}

double sum_recip_pow(const double* x, std::size_t n, int k) {
    assert(k >= 1 && k <= kMaxPower);
    __m256d acc = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d r = _mm256_div_pd(one, _mm256_loadu_pd(x + i));
        __m256d p = r;
        for (int j = 2; j <= k; ++j) p = _mm256_mul_pd(p, r);
        acc = _mm256_add_pd(acc, p);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double r = 1.0 / x[i];
        double p = r;
        for (int j = 2; j <= k; ++j) p *= r;
        tail += p;
    }
    return combine_lanes(acc) + tail;
}

double sum_affine_pow(const double* x, std::size_t n, double mu, double sigma,
                      int k) {
    assert(k >= 1 && k <= kMaxPower);
    __m256d acc = _mm256_setzero_pd();
    const __m256d muv = _mm256_set1_pd(mu);
    const __m256d sv = _mm256_set1_pd(sigma);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d w =
            _mm256_add_pd(muv, _mm256_mul_pd(sv, _mm256_loadu_pd(x + i)));
        __m256d p = w;
        for (int j = 2; j <= k; ++j) p = _mm256_mul_pd(p, w);
        acc = _mm256_add_pd(acc, p);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double w = mu + sigma * x[i];
        double p = w;
        for (int j = 2; j <= k; ++j) p *= w;
        tail += p;
    }
    return combine_lanes(acc) + tail;
}

double sum_poly_centered(const double* x, std::size_t n, double mu,
                         double sigma, double a, const double* c, int kc) {
    __m256d acc = _mm256_setzero_pd();
    const __m256d muv = _mm256_set1_pd(mu);
    const __m256d sv = _mm256_set1_pd(sigma);
    const __m256d av = _mm256_set1_pd(a);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d w =
            _mm256_add_pd(muv, _mm256_mul_pd(sv, _mm256_loadu_pd(x + i)));
        const __m256d d = _mm256_sub_pd(w, av);
        __m256d v = _mm256_set1_pd(c[kc]);
        for (int j = kc - 1; j >= 0; --j)
            v = _mm256_add_pd(_mm256_mul_pd(v, d), _mm256_set1_pd(c[j]));
        acc = _mm256_add_pd(acc, v);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double d = (mu + sigma * x[i]) - a;
        double v = c[kc];
        for (int j = kc - 1; j >= 0; --j) v = v * d + c[j];
        tail += v;
    }
    return combine_lanes(acc) + tail;
}

}  // namespace mcrepar::kernels::avx2
