// Runtime backend selection. A single dispatch table holds the active
// function pointers; Auto probes CPU capabilities once at startup.

#include "mcrepar/kernels.hpp"

namespace mcrepar::kernels {

namespace {

struct DispatchTable {
    double (*sum)(const double*, std::size_t);
    double (*sum_abs)(const double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    void (*power_sums)(const double*, std::size_t, int, double*);
    void (*centered_power_sums)(const double*, std::size_t, double, int,
                                double*);
    double (*sum_recip_pow)(const double*, std::size_t, int);
    double (*sum_affine_pow)(const double*, std::size_t, double, double, int);
    double (*sum_poly_centered)(const double*, std::size_t, double, double,
                                double, const double*, int);
    const char* name;
    Backend id;
};

constexpr DispatchTable kScalarTable = {
    scalar::sum,
    scalar::sum_abs,
    scalar::dot,
    scalar::power_sums,
    scalar::centered_power_sums,
    scalar::sum_recip_pow,
    scalar::sum_affine_pow,
    scalar::sum_poly_centered,
    "scalar",
    Backend::Scalar,
};

#if defined(MCREPAR_HAVE_AVX2)
constexpr DispatchTable kAvx2Table = {
    avx2::sum,
    avx2::sum_abs,
    avx2::dot,
    avx2::power_sums,
    avx2::centered_power_sums,
    avx2::sum_recip_pow,
    avx2::sum_affine_pow,
    avx2::sum_poly_centered,
    "avx2",
    Backend::Avx2,
};

bool cpu_has_avx2() { return __builtin_cpu_supports("avx2") != 0; }
#endif

#if defined(MCREPAR_HAVE_NEON)
constexpr DispatchTable kNeonTable = {
    neon::sum,
    neon::sum_abs,
    neon::dot,
    neon::power_sums,
    neon::centered_power_sums,
    neon::sum_recip_pow,
    neon::sum_affine_pow,
    neon::sum_poly_centered,
    "neon",
    Backend::Neon,
};
#endif

const DispatchTable* pick(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return &kScalarTable;
#if defined(MCREPAR_HAVE_AVX2)
        case Backend::Avx2:
            if (cpu_has_avx2()) return &kAvx2Table;
            return &kScalarTable;
#endif
#if defined(MCREPAR_HAVE_NEON)
        case Backend::Neon:
            return &kNeonTable;
#endif
        case Backend::Auto:
#if defined(MCREPAR_HAVE_AVX2)
            if (cpu_has_avx2()) return &kAvx2Table;
#elif defined(MCREPAR_HAVE_NEON)
            return &kNeonTable;
#endif
            return &kScalarTable;
        default:
            return &kScalarTable;
    }
}

const DispatchTable* g_active = pick(Backend::Auto);

}  // namespace

void set_backend(Backend b) { g_active = pick(b); }
Backend active_backend() { return g_active->id; }
const char* backend_name() { return g_active->name; }

double sum(const double* x, std::size_t n) { return g_active->sum(x, n); }
double sum_abs(const double* x, std::size_t n) {
    return g_active->sum_abs(x, n);
}
double dot(const double* x, const double* y, std::size_t n) {
    return g_active->dot(x, y, n);
}
void power_sums(const double* x, std::size_t n, int kmax, double* out) {
    g_active->power_sums(x, n, kmax, out);
}
void centered_power_sums(const double* x, std::size_t n, double a, int kmax,
                         double* out) {
    g_active->centered_power_sums(x, n, a, kmax, out);
}
double sum_pow(const double* x, std::size_t n, int k) {
    double out[kMaxPower + 1];
    g_active->power_sums(x, n, k, out);
    return out[k];
}
double sum_recip_pow(const double* x, std::size_t n, int k) {
    return g_active->sum_recip_pow(x, n, k);
}
double sum_affine_pow(const double* x, std::size_t n, double mu, double sigma,
                      int k) {
    return g_active->sum_affine_pow(x, n, mu, sigma, k);
}
double sum_poly_centered(const double* x, std::size_t n, double mu,
                         double sigma, double a, const double* c, int kc) {
    return g_active->sum_poly_centered(x, n, mu, sigma, a, c, kc);
}
double sum_log(const double* x, std::size_t n) { return scalar::sum_log(x, n); }
double sum_log_affine(const double* x, std::size_t n, double mu,
                      double sigma) {
    return scalar::sum_log_affine(x, n, mu, sigma);
}

}  // namespace mcrepar::kernels
