// NEON kernel variants (aarch64). float64x2_t holds two lanes, so each
// 4-lane accumulator is a register pair: `01` carries elements 4i+0,4i+1 and
// `23` carries 4i+2,4i+3. Lane updates, combine order and tail handling match
// the scalar reference exactly.

#include <arm_neon.h>

#include <cassert>
#include <cmath>
#include <cstddef>

#include "mcrepar/kernels.hpp"

namespace mcrepar::kernels::neon {

namespace {

inline double combine_lanes(float64x2_t v01, float64x2_t v23) {
    const double l0 = vgetq_lane_f64(v01, 0);
    const double l1 = vgetq_lane_f64(v01, 1);
    const double l2 = vgetq_lane_f64(v23, 0);
    const double l3 = vgetq_lane_f64(v23, 1);
    return (l0 + l1) + (l2 + l3);
}

}  // namespace

double sum(const double* x, std::size_t n) {
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc01 = vaddq_f64(acc01, vld1q_f64(x + i));
        acc23 = vaddq_f64(acc23, vld1q_f64(x + i + 2));
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += x[i];
    return combine_lanes(acc01, acc23) + tail;
}

double sum_abs(const double* x, std::size_t n) {
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc01 = vaddq_f64(acc01, vabsq_f64(vld1q_f64(x + i)));
        acc23 = vaddq_f64(acc23, vabsq_f64(vld1q_f64(x + i + 2)));
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += std::fabs(x[i]);
    return combine_lanes(acc01, acc23) + tail;
}

double dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        acc23 = vaddq_f64(acc23,
                          vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += x[i] * y[i];
    return combine_lanes(acc01, acc23) + tail;
}

void power_sums(const double* x, std::size_t n, int kmax, double* out) {
    assert(kmax >= 0 && kmax <= kMaxPower);
    float64x2_t acc01[kMaxPower + 1];
    float64x2_t acc23[kMaxPower + 1];
    for (int j = 0; j <= kmax; ++j) {
        acc01[j] = vdupq_n_f64(0.0);
        acc23[j] = vdupq_n_f64(0.0);
    }
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const float64x2_t x01 = vld1q_f64(x + i);
        const float64x2_t x23 = vld1q_f64(x + i + 2);
        float64x2_t p01 = x01;
        float64x2_t p23 = x23;
        acc01[1] = vaddq_f64(acc01[1], p01);
        acc23[1] = vaddq_f64(acc23[1], p23);
        for (int j = 2; j <= kmax; ++j) {
            p01 = vmulq_f64(p01, x01);
            p23 = vmulq_f64(p23, x23);
            acc01[j] = vaddq_f64(acc01[j], p01);
            acc23[j] = vaddq_f64(acc23[j], p23);
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
    for (int j = 1; j <= kmax; ++j)
        out[j] = combine_lanes(acc01[j], acc23[j]) + tail[j];
}

void centered_power_sums(const double* x, std::size_t n, double a, int kmax,
                         double* out) {
    assert(kmax >= 0 && kmax <= kMaxPower);
    float64x2_t acc01[kMaxPower + 1];
    float64x2_t acc23[kMaxPower + 1];
    for (int j = 0; j <= kmax; ++j) {
        acc01[j] = vdupq_n_f64(0.0);
        acc23[j] = vdupq_n_f64(0.0);
    }
    const float64x2_t av = vdupq_n_f64(a);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const float64x2_t d01 = vsubq_f64(vld1q_f64(x + i), av);
        const float64x2_t d23 = vsubq_f64(vld1q_f64(x + i + 2), av);
        float64x2_t p01 = d01;
        float64x2_t p23 = d23;
        acc01[1] = vaddq_f64(acc01[1], p01);
        acc23[1] = vaddq_f64(acc23[1], p23);
        for (int j = 2; j <= kmax; ++j) {
            p01 = vmulq_f64(p01, d01);
            p23 = vmulq_f64(p23, d23);
            acc01[j] = vaddq_f64(acc01[j], p01);
            acc23[j] = vaddq_f64(acc23[j], p23);
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
    for (int j = 1; j <= kmax; ++j)
        out[j] = combine_lanes(acc01[j], acc23[j]) + tail[j];
}

double sum_recip_pow(const double* x, std::size_t n, int k) {
    assert(k >= 1 && k <= kMaxPower);
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    const float64x2_t one = vdupq_n_f64(1.0);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const float64x2_t r01 = vdivq_f64(one, vld1q_f64(x + i));
        const float64x2_t r23 = vdivq_f64(one, vld1q_f64(x + i + 2));
        float64x2_t p01 = r01;
        float64x2_t p23 = r23;
        for (int j = 2; j <= k; ++j) {
            p01 = vmulq_f64(p01, r01);
            p23 = vmulq_f64(p23, r23);
        }
        acc01 = vaddq_f64(acc01, p01);
        acc23 = vaddq_f64(acc23, p23);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double r = 1.0 / x[i];
        double p = r;
        for (int j = 2; j <= k; ++j) p *= r;
        tail += p;
    }
    return combine_lanes(acc01, acc23) + tail;
}

double sum_affine_pow(const double* x, std::size_t n, double mu, double sigma,
                      int k) {
    assert(k >= 1 && k <= kMaxPower);
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    const float64x2_t muv = vdupq_n_f64(mu);
    const float64x2_t sv = vdupq_n_f64(sigma);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const float64x2_t w01 =
            vaddq_f64(muv, vmulq_f64(sv, vld1q_f64(x + i)));
        const float64x2_t w23 =
            vaddq_f64(muv, vmulq_f64(sv, vld1q_f64(x + i + 2)));
        float64x2_t p01 = w01;
        float64x2_t p23 = w23;
        for (int j = 2; j <= k; ++j) {
            p01 = vmulq_f64(p01, w01);
            p23 = vmulq_f64(p23, w23);
        }
        acc01 = vaddq_f64(acc01, p01);
        acc23 = vaddq_f64(acc23, p23);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double w = mu + sigma * x[i];
        double p = w;
        for (int j = 2; j <= k; ++j) p *= w;
        tail += p;
    }
    return combine_lanes(acc01, acc23) + tail;
}

double sum_poly_centered(const double* x, std::size_t n, double mu,
                         double sigma, double a, const double* c, int kc) {
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    const float64x2_t muv = vdupq_n_f64(mu);
    const float64x2_t sv = vdupq_n_f64(sigma);
    const float64x2_t av = vdupq_n_f64(a);
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const float64x2_t d01 =
            vsubq_f64(vaddq_f64(muv, vmulq_f64(sv, vld1q_f64(x + i))), av);
        const float64x2_t d23 =
            vsubq_f64(vaddq_f64(muv, vmulq_f64(sv, vld1q_f64(x + i + 2))), av);
        float64x2_t v01 = vdupq_n_f64(c[kc]);
        float64x2_t v23 = vdupq_n_f64(c[kc]);
        for (int j = kc - 1; j >= 0; --j) {
            const float64x2_t cj = vdupq_n_f64(c[j]);
            v01 = vaddq_f64(vmulq_f64(v01, d01), cj);
            v23 = vaddq_f64(vmulq_f64(v23, d23), cj);
        }
        acc01 = vaddq_f64(acc01, v01);
        acc23 = vaddq_f64(acc23, v23);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double d = (mu + sigma * x[i]) - a;
        double v = c[kc];
        for (int j = kc - 1; j >= 0; --j) v = v * d + c[j];
        tail += v;
    }
    return combine_lanes(acc01, acc23) + tail;
}

}  // namespace mcrepar::kernels::neon
