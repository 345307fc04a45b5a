#include "stmc/kernels.hpp"

#include <arm_neon.h>

// NEON variants; advsimd is baseline on aarch64, so supported() is constant.

namespace stmc::kern::neon {

bool supported() { return true; }

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), va, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale(double a, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(va, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] *= a;
}

void csr_spmv(std::size_t rows, const int* rowptr, const int* col,
              const double* val, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    float64x2_t acc = vdupq_n_f64(0.0);
    int k = rowptr[r];
    const int hi = rowptr[r + 1];
    for (; k + 2 <= hi; k += 2) {
      float64x2_t xv = {x[col[k]], x[col[k + 1]]};
      acc = vfmaq_f64(acc, vld1q_f64(val + k), xv);
    }
    double s = vaddvq_f64(acc);
    for (; k < hi; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

} // namespace stmc::kern::neon
