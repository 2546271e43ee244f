// Scalar reference kernels. These define the canonical reduction schedule:
// four strided lane accumulators over the main body, combined as
// ((l0+l1)+(l2+l3)), plus a sequential tail. SIMD variants must reproduce
// this schedule operation-for-operation.

#include <cassert>
#include <cmath>
#include <cstddef>

#include "mcrepar/kernels.hpp"

namespace mcrepar::kernels::scalar {

double sum(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] += x[i];
        acc[1] += x[i + 1];
        acc[2] += x[i + 2];
        acc[3] += x[i + 3];
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += x[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double sum_abs(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] += std::fabs(x[i]);
        acc[1] += std::fabs(x[i + 1]);
        acc[2] += std::fabs(x[i + 2]);
        acc[3] += std::fabs(x[i + 3]);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += std::fabs(x[i]);
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double dot(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] += x[i] * y[i];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += x[i] * y[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

void power_sums(const double* x, std::size_t n, int kmax, double* out) {
    assert(kmax >= 0 && kmax <= kMaxPower);
    double acc[kMaxPower + 1][4] = {};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        double p[4] = {x[i], x[i + 1], x[i + 2], x[i + 3]};
        for (int lane = 0; lane < 4; ++lane) acc[1][lane] += p[lane];
        for (int j = 2; j <= kmax; ++j) {
            for (int lane = 0; lane < 4; ++lane) {
                p[lane] *= x[i + static_cast<std::size_t>(lane)];
                acc[j][lane] += p[lane];
            }
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
        out[j] = ((acc[j][0] + acc[j][1]) + (acc[j][2] + acc[j][3])) + tail[j];
}

void centered_power_sums(const double* x, std::size_t n, double a, int kmax,
                         double* out) {
    assert(kmax >= 0 && kmax <= kMaxPower);
    double acc[kMaxPower + 1][4] = {};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        double d[4] = {x[i] - a, x[i + 1] - a, x[i + 2] - a, x[i + 3] - a};
        double p[4] = {d[0], d[1], d[2], d[3]};
        for (int lane = 0; lane < 4; ++lane) acc[1][lane] += p[lane];
        for (int j = 2; j <= kmax; ++j) {
            for (int lane = 0; lane < 4; ++lane) {
                p[lane] *= d[lane];
                acc[j][lane] += p[lane];
            }
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
        out[j] = ((acc[j][0] + acc[j][1]) + (acc[j][2] + acc[j][3])) + tail[j];
}

double sum_recip_pow(const double* x, std::size_t n, int k) {
    assert(k >= 1 && k <= kMaxPower);
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        double r[4] = {1.0 / x[i], 1.0 / x[i + 1], 1.0 / x[i + 2],
                       1.0 / x[i + 3]};
        double p[4] = {r[0], r[1], r[2], r[3]};
        for (int j = 2; j <= k; ++j)
            for (int lane = 0; lane < 4; ++lane) p[lane] *= r[lane];
        for (int lane = 0; lane < 4; ++lane) acc[lane] += p[lane];
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double r = 1.0 / x[i];
        double p = r;
        for (int j = 2; j <= k; ++j) p *= r;
        tail += p;
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double sum_affine_pow(const double* x, std::size_t n, double mu, double sigma,
                      int k) {
    assert(k >= 1 && k <= kMaxPower);
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        double w[4];
        for (int lane = 0; lane < 4; ++lane)
            w[lane] = mu + sigma * x[i + static_cast<std::size_t>(lane)];
        double p[4] = {w[0], w[1], w[2], w[3]};
        for (int j = 2; j <= k; ++j)
            for (int lane = 0; lane < 4; ++lane) p[lane] *= w[lane];
        for (int lane = 0; lane < 4; ++lane) acc[lane] += p[lane];
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double w = mu + sigma * x[i];
        double p = w;
        for (int j = 2; j <= k; ++j) p *= w;
        tail += p;
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double sum_poly_centered(const double* x, std::size_t n, double mu,
                         double sigma, double a, const double* c, int kc) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        double d[4];
        for (int lane = 0; lane < 4; ++lane)
            d[lane] = (mu + sigma * x[i + static_cast<std::size_t>(lane)]) - a;
        double v[4] = {c[kc], c[kc], c[kc], c[kc]};
        for (int j = kc - 1; j >= 0; --j)
            for (int lane = 0; lane < 4; ++lane)
                v[lane] = v[lane] * d[lane] + c[j];
        for (int lane = 0; lane < 4; ++lane) acc[lane] += v[lane];
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) {
        const double d = (mu + sigma * x[i]) - a;
        double v = c[kc];
        for (int j = kc - 1; j >= 0; --j) v = v * d + c[j];
        tail += v;
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double sum_log(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] += std::log(x[i]);
        acc[1] += std::log(x[i + 1]);
        acc[2] += std::log(x[i + 2]);
        acc[3] += std::log(x[i + 3]);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += std::log(x[i]);
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double sum_log_affine(const double* x, std::size_t n, double mu,
                      double sigma) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] += std::log(mu + sigma * x[i]);
        acc[1] += std::log(mu + sigma * x[i + 1]);
        acc[2] += std::log(mu + sigma * x[i + 2]);
        acc[3] += std::log(mu + sigma * x[i + 3]);
    }
    double tail = 0.0;
    for (std::size_t i = n4; i < n; ++i) tail += std::log(mu + sigma * x[i]);
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

}  // namespace mcrepar::kernels::scalar
