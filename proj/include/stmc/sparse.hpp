#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stmc {

struct SolverError : std::runtime_error {
  SolverError(const std::string& msg, double residual_, int iterations_)
      : std::runtime_error(msg), residual(residual_), iterations(iterations_) {}
  double residual;
  int iterations;
};

struct Triplet {
  int r, c;
  double v;
};

// Compressed-row sparse matrix (general rectangular; the symmetric mass and
// stiffness matrices use the same container).
struct SparseMatrix {
  int rows = 0, cols = 0;
  std::vector<int> rowptr;  // size rows+1
  std::vector<int> colidx;
  std::vector<double> val;

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);

  void mul(const double* x, double* y) const;
  std::vector<double> mul(const std::vector<double>& x) const;
  std::vector<double> mul_transpose(const std::vector<double>& x) const;

  std::vector<double> diagonal() const;
  double entry(int r, int c) const;  // 0 when not stored (test helper)

  // max |A_ij - A_ji| / max|A|; 0 for empty matrices
  double asymmetry() const;
};

// a*A + b*B with union sparsity (dimensions must agree)
SparseMatrix lincomb(double a, const SparseMatrix& A, double b, const SparseMatrix& B);

struct CgOptions {
  double tol = 1e-12;  // relative residual ||b - Ax|| / ||b||
  int max_iter = -1;   // -1: 10 * dimension
};

struct CgInfo {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

// Jacobi-preconditioned conjugate gradients; x carries the initial guess on
// entry.  Convergence is certified on the recomputed true residual, not the
// recurrence residual.  Deterministic: fixed iteration order, no parallelism.
CgInfo cg_solve(const SparseMatrix& A, const std::vector<double>& b,
                std::vector<double>& x, const CgOptions& opt = {});

// Zero initial guess; throws SolverError when the iteration cap is exceeded.
std::vector<double> solve_spd(const SparseMatrix& A, const std::vector<double>& b,
                              double tol = 1e-12);

// Direct solver for banded symmetric positive definite matrices.  The lower
// Cholesky factor lives in packed band storage, so a factorization costs
// O(n * bandwidth^2) once and every solve against it O(n * bandwidth).  That
// is the right trade for the time-stepping operators, which are assembled
// once and then solved against hundreds of right-hand sides.  Throws
// SolverError when the matrix is not positive definite.
class CholeskySolver {
 public:
  CholeskySolver() = default;
  explicit CholeskySolver(const SparseMatrix& A);

  bool ready() const { return n_ > 0; }
  int dim() const { return n_; }
  int bandwidth() const { return bw_; }  // half-bandwidth, diagonal excluded

  // b and x may alias; x is resized as needed by the vector overload
  void solve(const double* b, double* x) const;
  std::vector<double> solve(const std::vector<double>& b) const;

 private:
  int n_ = 0;
  int bw_ = 0;
  std::vector<double> band_;   // row-major, bw_+1 slots per row of the factor
  std::vector<double> trans_;  // the transposed factor, also row-major
};

} // namespace stmc
