#include "stmc/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace stmc::kern {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale(double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

void csr_spmv(std::size_t rows, const int* rowptr, const int* col,
              const double* val, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

} // namespace scalar

namespace {

struct Backend {
  const char* name;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*xpay)(const double*, double, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*csr_spmv)(std::size_t, const int*, const int*, const double*,
                   const double*, double*);
};

constexpr Backend kScalar = {"scalar", scalar::dot,   scalar::axpy,
                             scalar::xpay, scalar::scale, scalar::csr_spmv};

Backend select_backend() {
  const char* req = std::getenv("STMC_KERNELS");
#if defined(STMC_HAVE_AVX2_TU)
  const Backend kAvx2 = {"avx2", avx2::dot,   avx2::axpy,
                         avx2::xpay, avx2::scale, avx2::csr_spmv};
  if (req && std::strcmp(req, "scalar") == 0) return kScalar;
  if (avx2::supported()) return kAvx2;
#elif defined(STMC_HAVE_NEON_TU)
  const Backend kNeon = {"neon", neon::dot,   neon::axpy,
                         neon::xpay, neon::scale, neon::csr_spmv};
  if (req && std::strcmp(req, "scalar") == 0) return kScalar;
  if (neon::supported()) return kNeon;
#else
  (void)req;
#endif
  return kScalar;
}

const Backend& backend() {
  static const Backend b = select_backend();
  return b;
}

} // namespace

double dot(const double* a, const double* b, std::size_t n) {
  return backend().dot(a, b, n);
}
void axpy(double a, const double* x, double* y, std::size_t n) {
  backend().axpy(a, x, y, n);
}
void xpay(const double* x, double a, double* y, std::size_t n) {
  backend().xpay(x, a, y, n);
}
void scale(double a, double* y, std::size_t n) { backend().scale(a, y, n); }
void csr_spmv(std::size_t rows, const int* rowptr, const int* col,
              const double* val, const double* x, double* y) {
  backend().csr_spmv(rows, rowptr, col, val, x, y);
}
const char* active_backend() { return backend().name; }

} // namespace stmc::kern
