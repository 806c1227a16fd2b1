#include "stote_ot/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace stote_ot {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kRelax = 1.6;   // over-relaxation factor
constexpr double kPenalty = 1.0; // ADMM penalty (rho)
constexpr int kCheckEvery = 25;
}  // namespace

std::vector<double> svec(const ComplexMatrix& h) {
  const int n = h.rows();
  std::vector<double> v(static_cast<size_t>(n) * n);
  size_t k = 0;
  for (int r = 0; r < n; ++r) {
    v[k++] = std::real(h(r, r));
    for (int c = r + 1; c < n; ++c) {
      v[k++] = kSqrt2 * std::real(h(r, c));
      v[k++] = kSqrt2 * std::imag(h(r, c));
    }
  }
  return v;
}

ComplexMatrix smat(const double* v, int n) {
  ComplexMatrix h(n, n);
  size_t k = 0;
  for (int r = 0; r < n; ++r) {
    h(r, r) = v[k++];
    for (int c = r + 1; c < n; ++c) {
      const double re = v[k++] / kSqrt2;
      const double im = v[k++] / kSqrt2;
      h(r, c) = Complex(re, im);
      h(c, r) = Complex(re, -im);
    }
  }
  return h;
}

ComplexMatrix smat(const std::vector<double>& v, int n) {
  if (static_cast<int>(v.size()) < n * n) throw std::invalid_argument("smat size mismatch");
  return smat(v.data(), n);
}

std::vector<double> svec_functional(const ComplexMatrix& w) {
  if (!w.is_square()) throw std::invalid_argument("svec_functional needs square w");
  const int n = w.rows();
  std::vector<double> v(static_cast<size_t>(n) * n);
  size_t k = 0;
  for (int r = 0; r < n; ++r) {
    v[k++] = std::real(w(r, r));
    for (int c = r + 1; c < n; ++c) {
      v[k++] = std::real(w(r, c) + w(c, r)) / kSqrt2;
      v[k++] = (std::imag(w(r, c)) - std::imag(w(c, r))) / kSqrt2;
    }
  }
  return v;
}

ComplexMatrix psd_projection(const HermitianMatrix& h) {
  const EigenDecomposition ed = herm_eig(h);
  const int n = h.dim();
  ComplexMatrix p(n, n);
  for (int k = 0; k < n; ++k) {
    const double lam = ed.eigenvalues[k];
    if (lam <= 0.0) continue;
    for (int r = 0; r < n; ++r) {
      const Complex vr = ed.eigenvectors(r, k);
      for (int c = 0; c < n; ++c) p(r, c) += lam * vr * std::conj(ed.eigenvectors(c, k));
    }
  }
  return p;
}

// ---- SdpBuilder ----------------------------------------------------------

SdpBuilder::Var SdpBuilder::add_psd(int n) {
  if (sealed_) throw std::logic_error("variable added after constraints");
  if (cone_.nonneg > 0 || cone_.free_vars > 0)
    throw std::logic_error("PSD blocks must be declared before scalar variables");
  Var v{0, psd_param_size_, n};
  cone_.psd_blocks.push_back(n);
  psd_param_size_ += n * n;
  return v;
}

SdpBuilder::Var SdpBuilder::add_nonneg() {
  if (sealed_) throw std::logic_error("variable added after constraints");
  Var v{1, cone_.nonneg, 1};
  cone_.nonneg += 1;
  return v;
}

SdpBuilder::Var SdpBuilder::add_free() {
  if (sealed_) throw std::logic_error("variable added after constraints");
  Var v{2, cone_.free_vars, 1};
  cone_.free_vars += 1;
  return v;
}

SdpBuilder::Var SdpBuilder::add_free_herm(int n) {
  if (sealed_) throw std::logic_error("variable added after constraints");
  Var v{3, cone_.free_vars, n};
  cone_.free_vars += n * n;
  return v;
}

int SdpBuilder::param_offset(const Var& v) const {
  switch (v.kind) {
    case 0: return v.offset;
    case 1: return psd_param_size_ + v.offset;
    case 2:
    case 3: return psd_param_size_ + cone_.nonneg + v.offset;
    default: throw std::logic_error("unbound variable");
  }
}

void SdpBuilder::check_sealed() {
  if (!sealed_) {
    sealed_ = true;
    obj_.assign(cone_.dim(), 0.0);
  }
}

int SdpBuilder::add_row(double rhs) {
  check_sealed();
  const int row = static_cast<int>(rhs_.size());
  rhs_.push_back(rhs);
  rows_.resize(rows_.size() + cone_.dim(), 0.0);
  return row;
}

void SdpBuilder::add_coef(int row, const Var& v, const ComplexMatrix& w) {
  check_sealed();
  if (v.kind != 0 && v.kind != 3) throw std::logic_error("matrix coefficient on scalar variable");
  if (w.rows() != v.dim) throw std::invalid_argument("coefficient dim mismatch");
  const std::vector<double> coef = svec_functional(w);
  double* r = rows_.data() + static_cast<size_t>(row) * cone_.dim() + param_offset(v);
  for (size_t i = 0; i < coef.size(); ++i) r[i] += coef[i];
}

void SdpBuilder::add_scalar_coef(int row, const Var& v, double c) {
  check_sealed();
  if (v.kind != 1 && v.kind != 2) throw std::logic_error("scalar coefficient on matrix variable");
  rows_[static_cast<size_t>(row) * cone_.dim() + param_offset(v)] += c;
}

void SdpBuilder::obj_coef(const Var& v, const ComplexMatrix& w) {
  check_sealed();
  if (v.kind != 0 && v.kind != 3) throw std::logic_error("matrix coefficient on scalar variable");
  if (w.rows() != v.dim) throw std::invalid_argument("objective dim mismatch");
  const std::vector<double> coef = svec_functional(w);
  double* r = obj_.data() + param_offset(v);
  for (size_t i = 0; i < coef.size(); ++i) r[i] += coef[i];
}

void SdpBuilder::obj_scalar_coef(const Var& v, double c) {
  check_sealed();
  if (v.kind != 1 && v.kind != 2) throw std::logic_error("scalar coefficient on matrix variable");
  obj_[param_offset(v)] += c;
}

int SdpBuilder::add_hermitian_constraint(const ComplexMatrix& rhs,
                                         const std::vector<std::pair<Var, AdjointMap>>& terms,
                                         const std::vector<std::pair<Var, ScalarCoef>>& scalar_terms) {
  const int k = rhs.rows();
  const std::vector<double> rv = svec(rhs);
  int first = -1;
  size_t idx = 0;
  auto emit = [&](const ComplexMatrix& e, double rhs_val) {
    const int row = add_row(rhs_val);
    if (first < 0) first = row;
    for (const auto& [var, adj] : terms) add_coef(row, var, adj(e));
    for (const auto& [var, coef] : scalar_terms) add_scalar_coef(row, var, coef(e));
  };
  for (int r = 0; r < k; ++r)
    for (int c = r; c < k; ++c) {
      if (r == c) {
        ComplexMatrix e(k, k);
        e(r, r) = 1.0;
        emit(e, rv[idx++]);
      } else {
        ComplexMatrix ere(k, k), eim(k, k);
        ere(r, c) = 1.0 / kSqrt2;
        ere(c, r) = 1.0 / kSqrt2;
        eim(r, c) = Complex(0.0, 1.0 / kSqrt2);
        eim(c, r) = Complex(0.0, -1.0 / kSqrt2);
        emit(ere, rv[idx++]);
        emit(eim, rv[idx++]);
      }
    }
  return first;
}

ConicProblem SdpBuilder::build(bool maximize, double tol, int max_iter) const {
  ConicProblem p;
  p.cone = cone_;
  p.objective = obj_.empty() ? std::vector<double>(cone_.dim(), 0.0) : obj_;
  p.eq_matrix = rows_;
  p.eq_rhs = rhs_;
  p.maximize = maximize;
  p.tol = tol;
  p.max_iter = max_iter;
  return p;
}

ComplexMatrix SdpBuilder::matrix_value(const ConicSolution& s, const Var& v) const {
  if (v.kind != 0 && v.kind != 3) throw std::logic_error("matrix_value on scalar variable");
  return smat(s.x.data() + param_offset(v), v.dim);
}

double SdpBuilder::scalar_value(const ConicSolution& s, const Var& v) const {
  if (v.kind != 1 && v.kind != 2) throw std::logic_error("scalar_value on matrix variable");
  return s.x[param_offset(v)];
}

ComplexMatrix SdpBuilder::dual_matrix(const ConicSolution& s, int first_row, int dim) const {
  return smat(s.y.data() + first_row, dim);
}

// ---- ADMM solver ---------------------------------------------------------

namespace {

// Cholesky of G + delta*I with iterative refinement against the exact G;
// for the consistent normal systems that arise here the refined solution
// matches the pseudo-inverse solve up to a null-space component that A' kills.
class NormalSolver {
 public:
  NormalSolver(std::vector<double> g, int m) : g_(std::move(g)), m_(m) {
    double maxdiag = 1.0;
    for (int i = 0; i < m_; ++i) maxdiag = std::max(maxdiag, g_[idx(i, i)]);
    double delta = 1e-9 * maxdiag;
    for (int attempt = 0; attempt < 8; ++attempt) {
      if (factor(delta)) return;
      delta *= 100.0;
    }
    throw std::runtime_error("normal-equation factorization failed");
  }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    std::vector<double> lam = chol_solve(rhs);
    std::vector<double> r(m_);
    for (int pass = 0; pass < 3; ++pass) {
      mult(lam, r);
      for (int i = 0; i < m_; ++i) r[i] = rhs[i] - r[i];
      const std::vector<double> d = chol_solve(r);
      for (int i = 0; i < m_; ++i) lam[i] += d[i];
    }
    return lam;
  }

 private:
  size_t idx(int r, int c) const { return static_cast<size_t>(r) * m_ + c; }

  bool factor(double delta) {
    l_ = g_;
    for (int i = 0; i < m_; ++i) l_[idx(i, i)] += delta;
    for (int c = 0; c < m_; ++c) {
      double d = l_[idx(c, c)];
      for (int k = 0; k < c; ++k) d -= l_[idx(c, k)] * l_[idx(c, k)];
      if (d <= 0.0) return false;
      const double lc = std::sqrt(d);
      l_[idx(c, c)] = lc;
      for (int r = c + 1; r < m_; ++r) {
        double s = l_[idx(r, c)];
        for (int k = 0; k < c; ++k) s -= l_[idx(r, k)] * l_[idx(c, k)];
        l_[idx(r, c)] = s / lc;
      }
    }
    return true;
  }

  std::vector<double> chol_solve(const std::vector<double>& rhs) const {
    std::vector<double> v(rhs);
    for (int r = 0; r < m_; ++r) {
      double s = v[r];
      for (int k = 0; k < r; ++k) s -= l_[idx(r, k)] * v[k];
      v[r] = s / l_[idx(r, r)];
    }
    for (int r = m_ - 1; r >= 0; --r) {
      double s = v[r];
      for (int k = r + 1; k < m_; ++k) s -= l_[idx(k, r)] * v[k];
      v[r] = s / l_[idx(r, r)];
    }
    return v;
  }

  void mult(const std::vector<double>& v, std::vector<double>& out) const {
    for (int r = 0; r < m_; ++r) {
      double s = 0.0;
      const double* row = g_.data() + idx(r, 0);
      for (int c = 0; c < m_; ++c) s += row[c] * v[c];
      out[r] = s;
    }
  }

  std::vector<double> g_;  // exact normal matrix
  std::vector<double> l_;  // Cholesky factor of g + delta*I
  int m_;
};

struct Scaling {
  std::vector<double> row;  // e: left scaling of A
  std::vector<double> col;  // f: right scaling of A, uniform per PSD block
};

// Ruiz equilibration; PSD blocks get a single scalar per block so the cone
// is preserved under x = F xbar.
Scaling ruiz_equilibrate(std::vector<double>& a, int m, int n, const ConeSpec& cone) {
  Scaling sc{std::vector<double>(m, 1.0), std::vector<double>(n, 1.0)};
  std::vector<int> group(n);
  int g = 0, j = 0;
  for (int b : cone.psd_blocks) {
    for (int k = 0; k < b * b; ++k) group[j++] = g;
    ++g;
  }
  for (int k = 0; k < cone.nonneg + cone.free_vars; ++k) group[j++] = g++;
  const int ngroups = g;

  std::vector<double> gmax(ngroups);
  for (int pass = 0; pass < 10; ++pass) {
    for (int r = 0; r < m; ++r) {
      double s = 0.0;
      double* row = a.data() + static_cast<size_t>(r) * n;
      for (int c = 0; c < n; ++c) s = std::max(s, std::abs(row[c]));
      if (s < 1e-12 || !(s < 1e12)) continue;
      const double d = 1.0 / std::sqrt(s);
      for (int c = 0; c < n; ++c) row[c] *= d;
      sc.row[r] *= d;
    }
    std::fill(gmax.begin(), gmax.end(), 0.0);
    for (int r = 0; r < m; ++r) {
      const double* row = a.data() + static_cast<size_t>(r) * n;
      for (int c = 0; c < n; ++c) gmax[group[c]] = std::max(gmax[group[c]], std::abs(row[c]));
    }
    std::vector<double> cd(n, 1.0);
    for (int c = 0; c < n; ++c) {
      const double s = gmax[group[c]];
      if (s < 1e-12 || !(s < 1e12)) continue;
      cd[c] = 1.0 / std::sqrt(s);
    }
    for (int r = 0; r < m; ++r) {
      double* row = a.data() + static_cast<size_t>(r) * n;
      for (int c = 0; c < n; ++c) row[c] *= cd[c];
    }
    for (int c = 0; c < n; ++c) sc.col[c] *= cd[c];
  }
  return sc;
}

class ConeProjector {
 public:
  explicit ConeProjector(const ConeSpec& cone) : cone_(cone), basis_(cone.psd_blocks.size()) {}

  void project(const std::vector<double>& v, std::vector<double>& out) {
    size_t off = 0;
    for (size_t b = 0; b < cone_.psd_blocks.size(); ++b) {
      const int n = cone_.psd_blocks[b];
      const ComplexMatrix h = smat(v.data() + off, n);
      EigenDecomposition ed = basis_[b].rows() == n
                                  ? herm_eig_guided(HermitianMatrix(h), basis_[b])
                                  : herm_eig(HermitianMatrix(h));
      ComplexMatrix p(n, n);
      for (int k = 0; k < n; ++k) {
        const double lam = ed.eigenvalues[k];
        if (lam <= 0.0) continue;
        for (int r = 0; r < n; ++r) {
          const Complex vr = lam * ed.eigenvectors(r, k);
          p(r, r) += vr * std::conj(ed.eigenvectors(r, k));
          for (int c = r + 1; c < n; ++c) {
            const Complex t = vr * std::conj(ed.eigenvectors(c, k));
            p(r, c) += t;
            p(c, r) += std::conj(t);
          }
        }
      }
      basis_[b] = std::move(ed.eigenvectors);
      const std::vector<double> sv = svec(p);
      std::copy(sv.begin(), sv.end(), out.begin() + off);
      off += static_cast<size_t>(n) * n;
    }
    for (int k = 0; k < cone_.nonneg; ++k, ++off) out[off] = std::max(0.0, v[off]);
    for (int k = 0; k < cone_.free_vars; ++k, ++off) out[off] = v[off];
  }

 private:
  ConeSpec cone_;
  std::vector<ComplexMatrix> basis_;
};

}  // namespace

ConicSolution solve(const ConicProblem& p) {
  const int n = p.cone.dim();
  const int m = static_cast<int>(p.eq_rhs.size());
  if (static_cast<int>(p.objective.size()) != n)
    throw std::invalid_argument("objective length does not match cone dim");
  if (p.eq_matrix.size() != static_cast<size_t>(m) * n)
    throw std::invalid_argument("eq_matrix shape mismatch");

  std::vector<double> a = p.eq_matrix;
  const Scaling sc = ruiz_equilibrate(a, m, n, p.cone);

  std::vector<double> cbar(n), bbar(m);
  const double sense = p.maximize ? -1.0 : 1.0;
  for (int j = 0; j < n; ++j) cbar[j] = sense * p.objective[j] * sc.col[j];
  for (int i = 0; i < m; ++i) bbar[i] = p.eq_rhs[i] * sc.row[i];

  // normal matrix A A'
  std::vector<double> gram(static_cast<size_t>(m) * m);
  for (int r = 0; r < m; ++r) {
    const double* ar = a.data() + static_cast<size_t>(r) * n;
    for (int c = r; c < m; ++c) {
      const double* ac = a.data() + static_cast<size_t>(c) * n;
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += ar[j] * ac[j];
      gram[static_cast<size_t>(r) * m + c] = s;
      gram[static_cast<size_t>(c) * m + r] = s;
    }
  }
  NormalSolver normal(std::move(gram), m);
  ConeProjector projector(p.cone);

  std::vector<double> z(n, 0.0), u(n, 0.0), x(n), w(n), v(n), rhs(m), lam(m);
  ConicSolution sol;
  sol.x.assign(n, 0.0);
  sol.y.assign(m, 0.0);

  double best_pres = std::numeric_limits<double>::infinity();
  int pres_best_iter = 0;
  int iter = 0;
  bool converged = false;

  auto evaluate = [&]() {
    // primal residual: A (F z) - b in the original row scaling
    double pres = 0.0;
    for (int i = 0; i < m; ++i) {
      const double* ar = a.data() + static_cast<size_t>(i) * n;
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += ar[j] * z[j];
      const double d = s / sc.row[i] - p.eq_rhs[i];
      pres += d * d;
    }
    pres = std::sqrt(pres);
    // dual residual: (cbar + A'lam + u) unscaled; A'lam = w - x
    double dres = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = (cbar[j] + (w[j] - x[j]) + kPenalty * u[j]) / sc.col[j];
      dres += d * d;
    }
    dres = std::sqrt(dres);
    double obj = 0.0, dual = 0.0;
    for (int j = 0; j < n; ++j) obj += cbar[j] * z[j];
    for (int i = 0; i < m; ++i) dual -= bbar[i] * lam[i];
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = std::abs(obj - dual);
    sol.objective_value = sense * obj;
    sol.dual_value = sense * dual;
    return std::max({pres, dres, sol.gap});
  };

  for (iter = 0; iter < p.max_iter; ++iter) {
    for (int j = 0; j < n; ++j) w[j] = z[j] - u[j] - cbar[j] / kPenalty;
    for (int i = 0; i < m; ++i) {
      const double* ar = a.data() + static_cast<size_t>(i) * n;
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += ar[j] * w[j];
      rhs[i] = s - bbar[i];
    }
    lam = normal.solve(rhs);
    x = w;
    for (int i = 0; i < m; ++i) {
      const double li = lam[i];
      if (li == 0.0) continue;
      const double* ar = a.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) x[j] -= ar[j] * li;
    }
    for (int j = 0; j < n; ++j) v[j] = kRelax * x[j] + (1.0 - kRelax) * z[j] + u[j];
    projector.project(v, z);
    for (int j = 0; j < n; ++j) u[j] = v[j] - z[j];

    if (iter % kCheckEvery == kCheckEvery - 1 || iter == p.max_iter - 1) {
      const double comb = evaluate();
      if (!std::isfinite(comb)) {
        sol.status = SolveStatus::kInfeasibleSuspected;
        iter++;
        break;
      }
      if (comb <= p.tol) {
        converged = true;
        iter++;
        break;
      }
      // infeasibility heuristic keyed on the primal residual alone: when the
      // problem is infeasible it converges to the positive distance between
      // the affine set and the cone, while a feasible problem keeps shrinking
      // it even if the gap stalls (the dual optimum may be unattained)
      const double pres = sol.primal_residual;
      if (pres < best_pres * (1.0 - 1e-3)) {
        best_pres = pres;
        pres_best_iter = iter;
      } else if (iter - pres_best_iter >= 10000 && pres > 1e3 * p.tol) {
        sol.status = SolveStatus::kInfeasibleSuspected;
        iter++;
        break;
      }
    }
  }

  if (converged) sol.status = SolveStatus::kSolved;
  else if (sol.status != SolveStatus::kInfeasibleSuspected) {
    evaluate();
    sol.status = SolveStatus::kMaxIter;
  }
  sol.iterations = iter;
  for (int j = 0; j < n; ++j) sol.x[j] = z[j] * sc.col[j];
  for (int i = 0; i < m; ++i) sol.y[i] = -sense * lam[i] * sc.row[i];
  return sol;
}

std::pair<double, ConicSolution> feasibility_max_slack(const ConicProblem& p) {
  if (p.cone.free_vars < 1) throw std::invalid_argument("max_slack needs a free slack variable");
  ConicProblem q = p;
  q.objective.assign(p.cone.dim(), 0.0);
  q.objective.back() = 1.0;
  q.maximize = true;
  ConicSolution sol = solve(q);
  return {sol.x.back(), std::move(sol)};
}

}  // namespace stote_ot
