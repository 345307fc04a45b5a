#pragma once

#include <cstddef>

// Vector/matrix primitives used by the CG solver and the optimizer's inner
// loops.  A scalar reference implementation always exists; on x86-64 an AVX2
// variant (own TU, compiled with -mavx2 -mfma) is selected at runtime when the
// CPU supports it, on aarch64 a NEON variant.  The environment variable
// STMC_KERNELS=scalar|avx2|neon forces a backend (unsupported requests fall
// back to scalar).  Selection happens once; two runs of the same binary on the
// same machine always pick the same backend, so outputs stay reproducible.

namespace stmc::kern {

double dot(const double* a, const double* b, std::size_t n);
void   axpy(double a, const double* x, double* y, std::size_t n);  // y += a*x
void   xpay(const double* x, double a, double* y, std::size_t n);  // y = x + a*y
void   scale(double a, double* y, std::size_t n);                  // y *= a
void   csr_spmv(std::size_t rows, const int* rowptr, const int* col,
                const double* val, const double* x, double* y);    // y = A*x

const char* active_backend();

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void   axpy(double a, const double* x, double* y, std::size_t n);
void   xpay(const double* x, double a, double* y, std::size_t n);
void   scale(double a, double* y, std::size_t n);
void   csr_spmv(std::size_t rows, const int* rowptr, const int* col,
                const double* val, const double* x, double* y);
} // namespace scalar

#if defined(STMC_HAVE_AVX2_TU)
namespace avx2 {
bool   supported();
double dot(const double* a, const double* b, std::size_t n);
void   axpy(double a, const double* x, double* y, std::size_t n);
void   xpay(const double* x, double a, double* y, std::size_t n);
void   scale(double a, double* y, std::size_t n);
void   csr_spmv(std::size_t rows, const int* rowptr, const int* col,
                const double* val, const double* x, double* y);
} // namespace avx2
#endif

#if defined(STMC_HAVE_NEON_TU)
namespace neon {
bool   supported();
double dot(const double* a, const double* b, std::size_t n);
void   axpy(double a, const double* x, double* y, std::size_t n);
void   xpay(const double* x, double a, double* y, std::size_t n);
void   scale(double a, double* y, std::size_t n);
void   csr_spmv(std::size_t rows, const int* rowptr, const int* col,
                const double* val, const double* x, double* y);
} // namespace neon
#endif

} // namespace stmc::kern
