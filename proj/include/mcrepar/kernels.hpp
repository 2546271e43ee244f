#pragma once

// Sample-aggregation kernels: the no-grad inner loops that reduce Monte-Carlo
// draws to the handful of scalars a factored estimator consumes. Every kernel
// has a scalar reference implementation and, where the loop is data-parallel,
// an AVX2 (x86-64) or NEON (aarch64) variant selected at runtime.
//
// Reduction contract: all variants accumulate into four strided lanes
// (lane j takes elements 4i+j), combine them as ((l0+l1)+(l2+l3)) and add a
// sequentially-accumulated tail. The scalar reference implements exactly that
// schedule, so SIMD results are bit-identical to scalar, summation order is
// fixed, and dispatch choice never changes a result.

#include <cstddef>

namespace mcrepar::kernels {

enum class Backend { Auto, Scalar, Avx2, Neon };

// Selects the active backend. Auto picks the best variant the CPU supports.
// Requests for an unavailable backend fall back to Scalar.
void set_backend(Backend b);
Backend active_backend();
const char* backend_name();

// --- dispatched entry points -----------------------------------------------

// sum x_i
double sum(const double* x, std::size_t n);
// sum |x_i|
double sum_abs(const double* x, std::size_t n);
// sum x_i y_i
double dot(const double* x, const double* y, std::size_t n);
// out[j] = sum x_i^j for j = 0..kmax (out has kmax+1 slots; out[0] = n)
void power_sums(const double* x, std::size_t n, int kmax, double* out);
// out[j] = sum (x_i - a)^j
void centered_power_sums(const double* x, std::size_t n, double a, int kmax,
                         double* out);
// sum x_i^k, k >= 1
double sum_pow(const double* x, std::size_t n, int k);
// sum x_i^{-k}, k >= 1
double sum_recip_pow(const double* x, std::size_t n, int k);
// sum (mu + sigma x_i)^k
double sum_affine_pow(const double* x, std::size_t n, double mu, double sigma,
                      int k);
// sum_i sum_{j=0..kc} c[j] ((mu + sigma x_i) - a)^j, inner sum by Horner
double sum_poly_centered(const double* x, std::size_t n, double mu,
                         double sigma, double a, const double* c, int kc);

// sum ln x_i. No vector log is provided; all backends run the scalar loop
// (still the canonical 4-lane schedule so results match everywhere).
double sum_log(const double* x, std::size_t n);
// sum ln(mu + sigma x_i)
double sum_log_affine(const double* x, std::size_t n, double mu, double sigma);

// --- per-backend entry points (for equivalence tests) -----------------------

namespace scalar {
double sum(const double* x, std::size_t n);
double sum_abs(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void power_sums(const double* x, std::size_t n, int kmax, double* out);
void centered_power_sums(const double* x, std::size_t n, double a, int kmax,
                         double* out);
double sum_recip_pow(const double* x, std::size_t n, int k);
double sum_affine_pow(const double* x, std::size_t n, double mu, double sigma,
                      int k);
double sum_poly_centered(const double* x, std::size_t n, double mu,
                         double sigma, double a, const double* c, int kc);
double sum_log(const double* x, std::size_t n);
double sum_log_affine(const double* x, std::size_t n, double mu, double sigma);
}  // namespace scalar

#if defined(MCREPAR_HAVE_AVX2)
namespace avx2 {
double sum(const double* x, std::size_t n);
double sum_abs(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void power_sums(const double* x, std::size_t n, int kmax, double* out);
void centered_power_sums(const double* x, std::size_t n, double a, int kmax,
                         double* out);
double sum_recip_pow(const double* x, std::size_t n, int k);
double sum_affine_pow(const double* x, std::size_t n, double mu, double sigma,
                      int k);
double sum_poly_centered(const double* x, std::size_t n, double mu,
                         double sigma, double a, const double* c, int kc);
}  // namespace avx2
#endif

#if defined(MCREPAR_HAVE_NEON)
namespace neon {
double sum(const double* x, std::size_t n);
double sum_abs(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void power_sums(const double* x, std::size_t n, int kmax, double* out);
void centered_power_sums(const double* x, std::size_t n, double a, int kmax,
                         double* out);
double sum_recip_pow(const double* x, std::size_t n, int k);
double sum_affine_pow(const double* x, std::size_t n, double mu, double sigma,
                      int k);
double sum_poly_centered(const double* x, std::size_t n, double mu,
                         double sigma, double a, const double* c, int kc);
}  // namespace neon
#endif

// Highest power accepted by the power-sum kernels.
inline constexpr int kMaxPower = 24;

}  // namespace mcrepar::kernels
