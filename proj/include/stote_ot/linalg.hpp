#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace stote_ot {

using Complex = std::complex<double>;

// Dense row-major complex matrix. Sizes in this project stay small
// (dimension <= a few hundred), so everything is kept simple and exact:
// no views, no expression templates, value semantics throughout.
class ComplexMatrix {
 public:
  ComplexMatrix() : rows_(0), cols_(0) {}
  ComplexMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix size");
  }

  static ComplexMatrix identity(int n);
  static ComplexMatrix zeros(int rows, int cols) { return ComplexMatrix(rows, cols); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  Complex& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
  const Complex& operator()(int r, int c) const { return a_[static_cast<size_t>(r) * cols_ + c]; }

  Complex* data() { return a_.data(); }
  const Complex* data() const { return a_.data(); }

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(Complex s);

  ComplexMatrix adjoint() const;
  ComplexMatrix transpose() const;
  ComplexMatrix conjugate() const;

  Complex trace() const;
  double frobenius_norm() const;
  double max_abs() const;  // entrywise infinity norm

  // max |M - M*| over entries; 0 for exactly Hermitian input
  double hermiticity_defect() const;

 private:
  int rows_, cols_;
  std::vector<Complex> a_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(Complex s, ComplexMatrix a);
ComplexMatrix operator*(ComplexMatrix a, Complex s);

// Square matrix with M = M* enforced at construction. Inputs may carry
// round-off from solver output, so construction symmetrizes (M + M*)/2;
// defects beyond the tolerance are rejected as genuine errors.
class HermitianMatrix {
 public:
  static constexpr double kHermTol = 1e-12;

  HermitianMatrix() = default;
  explicit HermitianMatrix(const ComplexMatrix& m, double tol = kHermTol);

  int dim() const { return m_.rows(); }
  const ComplexMatrix& mat() const { return m_; }

  const Complex& operator()(int r, int c) const { return m_(r, c); }

 private:
  ComplexMatrix m_;
};

struct BipartiteDims {
  int da = 0;
  int db = 0;
  int total() const { return da * db; }
};

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // columns, unitary
};

// Composite index convention everywhere: |i>_A |k>_B lives at i*db + k.
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix partial_trace_a(const ComplexMatrix& m, BipartiteDims dims);
ComplexMatrix partial_trace_b(const ComplexMatrix& m, BipartiteDims dims);
ComplexMatrix partial_transpose_a(const ComplexMatrix& m, BipartiteDims dims);
ComplexMatrix partial_transpose_b(const ComplexMatrix& m, BipartiteDims dims);

// Partial trace over one slot of an n-partite system (dims per slot,
// slot 0 varying slowest).
ComplexMatrix partial_trace_slot(const ComplexMatrix& m, const std::vector<int>& dims, int slot);

// Lifts an operator acting on the listed slots (in that order; slots must be
// increasing) to the full tensor space.
ComplexMatrix embed_on_slots(const ComplexMatrix& op, const std::vector<int>& dims,
                             const std::vector<int>& slots);

// (AB + BA)/2
ComplexMatrix jordan(const ComplexMatrix& a, const ComplexMatrix& b);
HermitianMatrix jordan(const HermitianMatrix& a, const HermitianMatrix& b);

// Cyclic complex Jacobi iteration; adequate for the dimensions used here.
// Eigenvalues ascending, eigenvectors as matching columns.
EigenDecomposition herm_eig(const HermitianMatrix& m);

// Same, but seeds the rotation with a unitary guess whose columns are close
// to the eigenvectors (cuts sweeps when diagonalizing a slowly moving
// sequence of matrices). Exact for any unitary guess.
EigenDecomposition herm_eig_guided(const HermitianMatrix& m, const ComplexMatrix& guess);

// SWAP on H_d (x) H_d: |ik> -> |ki>
ComplexMatrix swap_operator(int d);

// Unnormalized |Phi+><Phi+| = sum_ij |ii><jj| on H_d (x) H_d
ComplexMatrix max_entangled_projector(int d);
// Unnormalized vector |Phi+> = sum_i |ii>
std::vector<Complex> max_entangled_vector(int d);

// Conjugation helpers
ComplexMatrix conjugate_by(const ComplexMatrix& m, const ComplexMatrix& u);  // u* m u
// Reorders a bipartite operator so the two slots swap places.
ComplexMatrix swap_subsystems(const ComplexMatrix& m, BipartiteDims dims);

double min_eigenvalue(const HermitianMatrix& m);

// <l|M|r>
Complex sandwich(const std::vector<Complex>& l, const ComplexMatrix& m,
                 const std::vector<Complex>& r);
// |v><w|
ComplexMatrix outer(const std::vector<Complex>& v, const std::vector<Complex>& w);

}  // namespace stote_ot
