#include "stmc/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "stmc/kernels.hpp"

namespace stmc {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.r != b.r ? a.r < b.r : a.c < b.c;
  });
  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.rowptr.assign(rows + 1, 0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < entries.size() && entries[j].r == entries[i].r && entries[j].c == entries[i].c)
      sum += entries[j++].v;
    m.colidx.push_back(entries[i].c);
    m.val.push_back(sum);
    ++m.rowptr[entries[i].r + 1];
    i = j;
  }
  for (int r = 0; r < rows; ++r) m.rowptr[r + 1] += m.rowptr[r];
  return m;
}

void SparseMatrix::mul(const double* x, double* y) const {
  kern::csr_spmv(static_cast<std::size_t>(rows), rowptr.data(), colidx.data(),
                 val.data(), x, y);
}

std::vector<double> SparseMatrix::mul(const std::vector<double>& x) const {
  std::vector<double> y(rows);
  mul(x.data(), y.data());
  return y;
}

std::vector<double> SparseMatrix::mul_transpose(const std::vector<double>& x) const {
  std::vector<double> y(cols, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k) y[colidx[k]] += val[k] * x[r];
  return y;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(rows, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k)
      if (colidx[k] == r) d[r] = val[k];
  return d;
}

double SparseMatrix::entry(int r, int c) const {
  for (int k = rowptr[r]; k < rowptr[r + 1]; ++k)
    if (colidx[k] == c) return val[k];
  return 0.0;
}

double SparseMatrix::asymmetry() const {
  double max_abs = 0.0, max_diff = 0.0;
  for (double v : val) max_abs = std::max(max_abs, std::fabs(v));
  for (int r = 0; r < rows; ++r)
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k)
      max_diff = std::max(max_diff, std::fabs(val[k] - entry(colidx[k], r)));
  return max_abs > 0 ? max_diff / max_abs : 0.0;
}

SparseMatrix lincomb(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
  std::vector<Triplet> t;
  t.reserve(A.val.size() + B.val.size());
  for (int r = 0; r < A.rows; ++r)
    for (int k = A.rowptr[r]; k < A.rowptr[r + 1]; ++k)
      t.push_back({r, A.colidx[k], a * A.val[k]});
  for (int r = 0; r < B.rows; ++r)
    for (int k = B.rowptr[r]; k < B.rowptr[r + 1]; ++k)
      t.push_back({r, B.colidx[k], b * B.val[k]});
  return SparseMatrix::from_triplets(A.rows, A.cols, std::move(t));
}

CgInfo cg_solve(const SparseMatrix& A, const std::vector<double>& b,
                std::vector<double>& x, const CgOptions& opt) {
  const std::size_t n = b.size();
  x.resize(n, 0.0);
  CgInfo info;

  const double bnorm = std::sqrt(kern::dot(b.data(), b.data(), n));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    info.converged = true;
    return info;
  }

  const int cap = opt.max_iter > 0 ? opt.max_iter : 10 * static_cast<int>(n);
  std::vector<double> d = A.diagonal();
  for (double& v : d) v = (v != 0.0) ? 1.0 / v : 1.0;

  std::vector<double> r(n), z(n), p(n), Ap(n);
  A.mul(x.data(), Ap.data());
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  for (std::size_t i = 0; i < n; ++i) z[i] = d[i] * r[i];
  p = z;
  double rz = kern::dot(r.data(), z.data(), n);

  double rel = std::sqrt(kern::dot(r.data(), r.data(), n)) / bnorm;
  if (rel <= opt.tol) {
    info.converged = true;
    info.rel_residual = rel;
    return info;
  }

  for (int k = 1; k <= cap; ++k) {
    A.mul(p.data(), Ap.data());
    const double pAp = kern::dot(p.data(), Ap.data(), n);
    if (pAp <= 0.0)
      throw SolverError("matrix is not positive definite in cg_solve", rel, k);
    const double alpha = rz / pAp;
    kern::axpy(alpha, p.data(), x.data(), n);
    kern::axpy(-alpha, Ap.data(), r.data(), n);
    info.iterations = k;

    rel = std::sqrt(kern::dot(r.data(), r.data(), n)) / bnorm;
    if (rel <= opt.tol) {
      // certify against the true residual (the recurrence may have drifted)
      A.mul(x.data(), Ap.data());
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
      rel = std::sqrt(kern::dot(r.data(), r.data(), n)) / bnorm;
      if (rel <= opt.tol) {
        info.converged = true;
        info.rel_residual = rel;
        return info;
      }
      for (std::size_t i = 0; i < n; ++i) z[i] = d[i] * r[i];
      p = z;
      rz = kern::dot(r.data(), z.data(), n);
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) z[i] = d[i] * r[i];
    const double rz_new = kern::dot(r.data(), z.data(), n);
    kern::xpay(z.data(), rz_new / rz, p.data(), n);
    rz = rz_new;
  }

  info.rel_residual = rel;
  info.converged = false;
  return info;
}

std::vector<double> solve_spd(const SparseMatrix& A, const std::vector<double>& b,
                              double tol) {
  std::vector<double> x(b.size(), 0.0);
  CgOptions opt;
  opt.tol = tol;
  CgInfo info = cg_solve(A, b, x, opt);
  if (!info.converged)
    throw SolverError("cg did not reach tolerance " + std::to_string(tol) +
                          " (residual " + std::to_string(info.rel_residual) + ")",
                      info.rel_residual, info.iterations);
  return x;
}

CholeskySolver::CholeskySolver(const SparseMatrix& A) {
  if (A.rows != A.cols || A.rows < 1)
    throw SolverError("cholesky needs a square nonempty matrix", 0.0, 0);
  n_ = A.rows;
  for (int i = 0; i < n_; ++i)
    for (int k = A.rowptr[i]; k < A.rowptr[i + 1]; ++k)
      bw_ = std::max(bw_, std::abs(i - A.colidx[k]));

  const int w = bw_ + 1;
  band_.assign(static_cast<std::size_t>(n_) * w, 0.0);
  auto at = [&](int i, int j) -> double& {
    return band_[static_cast<std::size_t>(i) * w + (j - i + bw_)];
  };
  for (int i = 0; i < n_; ++i)
    for (int k = A.rowptr[i]; k < A.rowptr[i + 1]; ++k)
      if (A.colidx[k] <= i) at(i, A.colidx[k]) = A.val[k];

  for (int i = 0; i < n_; ++i) {
    const int lo = std::max(0, i - bw_);
    for (int j = lo; j < i; ++j) {
      double s = at(i, j);
      for (int k = std::max(lo, j - bw_); k < j; ++k) s -= at(i, k) * at(j, k);
      at(i, j) = s / at(j, j);
    }
    double diag = at(i, i);
    for (int k = lo; k < i; ++k) diag -= at(i, k) * at(i, k);
    if (!(diag > 0.0))
      throw SolverError("matrix is not positive definite in cholesky at row " +
                            std::to_string(i),
                        diag, i);
    at(i, i) = std::sqrt(diag);
  }

  // transposed copy so both substitutions walk contiguous memory
  trans_.assign(band_.size(), 0.0);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k <= std::min(bw_, n_ - 1 - i); ++k)
      trans_[static_cast<std::size_t>(i) * w + k] = at(i + k, i);
}

void CholeskySolver::solve(const double* b, double* x) const {
  const int w = bw_ + 1;
  // forward substitution L y = b; y occupies x and b may alias it, since b[i]
  // is consumed before x[i] is written
  for (int i = 0; i < n_; ++i) {
    const int lo = std::max(0, i - bw_);
    const double* row = &band_[static_cast<std::size_t>(i) * w];
    const double s = kern::dot(row + (lo - i + bw_), x + lo, static_cast<std::size_t>(i - lo));
    x[i] = (b[i] - s) / row[bw_];
  }
  // back substitution L^T x = y against the transposed rows
  for (int i = n_ - 1; i >= 0; --i) {
    const int len = std::min(bw_, n_ - 1 - i);
    const double* row = &trans_[static_cast<std::size_t>(i) * w];
    const double s = kern::dot(row + 1, x + i + 1, static_cast<std::size_t>(len));
    x[i] = (x[i] - s) / row[0];
  }
}

std::vector<double> CholeskySolver::solve(const std::vector<double>& b) const {
  if (static_cast<int>(b.size()) != n_)
    throw std::invalid_argument("cholesky solve: dimension mismatch");
  std::vector<double> x(b.size());
  solve(b.data(), x.data());
  return x;
}

} // namespace stmc
