#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "stote_ot/linalg.hpp"

namespace stote_ot {

// Variable layout of a conic program, in parameter-vector order:
// one isometric real vectorization per Hermitian PSD block, then
// nonnegative scalars, then free scalars.
struct ConeSpec {
  std::vector<int> psd_blocks;
  int nonneg = 0;
  int free_vars = 0;

  int dim() const {
    int n = nonneg + free_vars;
    for (int b : psd_blocks) n += b * b;
    return n;
  }
};

// min c'x  s.t.  A x = b,  x in K   (max when maximize is set)
struct ConicProblem {
  ConeSpec cone;
  std::vector<double> objective;  // length cone.dim()
  std::vector<double> eq_matrix;  // row-major, eq_rhs.size() x cone.dim()
  std::vector<double> eq_rhs;
  bool maximize = false;
  double tol = 1e-8;
  int max_iter = 200000;
};

enum class SolveStatus { kSolved, kMaxIter, kInfeasibleSuspected };

// x is the cone-feasible iterate (PSD blocks exactly PSD); equality violation
// is what primal_residual measures. y holds one multiplier per equality row.
// For maximize problems objective_value approaches the optimum from below and
// dual_value from above; both are stated in the problem's own sense.
struct ConicSolution {
  std::vector<double> x;
  std::vector<double> y;
  double objective_value = 0.0;
  double dual_value = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::kMaxIter;
};

ConicSolution solve(const ConicProblem& p);

// Maximizes the last free scalar of the problem (its objective is ignored).
// Returns the optimal slack and the full solution.
std::pair<double, ConicSolution> feasibility_max_slack(const ConicProblem& p);

// Isometric real vectorization of a Hermitian matrix: row-major upper
// triangle, diagonal entries as-is, off-diagonal as sqrt(2)*Re, sqrt(2)*Im.
// Satisfies dot(svec(A), svec(B)) = Tr[A B].
std::vector<double> svec(const ComplexMatrix& h);
ComplexMatrix smat(const double* v, int n);
ComplexMatrix smat(const std::vector<double>& v, int n);

// Coefficients of the functional H |-> Re Tr[W H] in the svec basis.
std::vector<double> svec_functional(const ComplexMatrix& w);

// U diag(max(lambda, 0)) U*
ComplexMatrix psd_projection(const HermitianMatrix& h);

// Assembles ConicProblems from matrix-shaped variables and constraints.
// All variables must be declared before any constraint row, PSD blocks first.
class SdpBuilder {
 public:
  struct Var {
    int kind = -1;  // 0 psd block, 1 nonneg scalar, 2 free scalar, 3 free hermitian
    int offset = 0; // filled for scalars/free-herm relative to their region
    int dim = 0;
  };

  Var add_psd(int n);
  Var add_nonneg();
  Var add_free();
  Var add_free_herm(int n);

  int add_row(double rhs);                                        // returns row index
  void add_coef(int row, const Var& v, const ComplexMatrix& w);   // += Re Tr[w X_v]
  void add_scalar_coef(int row, const Var& v, double c);
  void obj_coef(const Var& v, const ComplexMatrix& w);
  void obj_scalar_coef(const Var& v, double c);

  // Matrix-valued equality sum_t L_t(X_t) = rhs, one term per variable with
  // its adjoint map: row r gets coefficients Re Tr[adj_t(E_r) X_t] where E_r
  // runs over the orthonormal Hermitian basis of the rhs space. Scalar terms
  // contribute coef_t(E_r) per row. Returns the index of the first of
  // rhs.dim()^2 rows.
  using AdjointMap = std::function<ComplexMatrix(const ComplexMatrix&)>;
  using ScalarCoef = std::function<double(const ComplexMatrix&)>;
  int add_hermitian_constraint(const ComplexMatrix& rhs,
                               const std::vector<std::pair<Var, AdjointMap>>& terms,
                               const std::vector<std::pair<Var, ScalarCoef>>& scalar_terms = {});

  ConicProblem build(bool maximize, double tol, int max_iter) const;

  ComplexMatrix matrix_value(const ConicSolution& s, const Var& v) const;
  double scalar_value(const ConicSolution& s, const Var& v) const;
  // Multiplier of a matrix-valued constraint starting at first_row, as a
  // Hermitian matrix: A'y contributes adj(dual_matrix) for that constraint.
  ComplexMatrix dual_matrix(const ConicSolution& s, int first_row, int dim) const;

 private:
  int param_offset(const Var& v) const;
  void check_sealed();

  ConeSpec cone_;
  bool sealed_ = false;      // no more variables once a row exists
  int psd_param_size_ = 0;
  std::vector<double> rows_; // row-major
  std::vector<double> rhs_;
  std::vector<double> obj_;
};

}  // namespace stote_ot
