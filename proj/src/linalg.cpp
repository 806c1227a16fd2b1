#include "stote_ot/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stote_ot {

ComplexMatrix ComplexMatrix::identity(int n) {
  ComplexMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("shape mismatch in +");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("shape mismatch in -");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
  for (auto& v : a_) v *= s;
  return *this;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix m(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(c, r) = std::conj((*this)(r, c));
  return m;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix m(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(c, r) = (*this)(r, c);
  return m;
}

ComplexMatrix ComplexMatrix::conjugate() const {
  ComplexMatrix m(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(r, c) = std::conj((*this)(r, c));
  return m;
}

Complex ComplexMatrix::trace() const {
  if (!is_square()) throw std::invalid_argument("trace of non-square matrix");
  Complex t = 0.0;
  for (int i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

double ComplexMatrix::max_abs() const {
  double s = 0.0;
  for (const auto& v : a_) s = std::max(s, std::abs(v));
  return s;
}

double ComplexMatrix::hermiticity_defect() const {
  if (!is_square()) throw std::invalid_argument("hermiticity defect of non-square matrix");
  double s = 0.0;
  for (int r = 0; r < rows_; ++r)
    for (int c = r; c < cols_; ++c)
      s = std::max(s, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
  return s;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("shape mismatch in *");
  ComplexMatrix m(a.rows(), b.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int k = 0; k < a.cols(); ++k) {
      const Complex arv = a(r, k);
      if (arv == Complex(0.0)) continue;
      for (int c = 0; c < b.cols(); ++c) m(r, c) += arv * b(k, c);
    }
  return m;
}

ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }

HermitianMatrix::HermitianMatrix(const ComplexMatrix& m, double tol) {
  if (!m.is_square()) throw std::invalid_argument("HermitianMatrix needs a square matrix");
  if (m.hermiticity_defect() > tol)
    throw std::invalid_argument("matrix is not Hermitian (defect " +
                                std::to_string(m.hermiticity_defect()) + ")");
  const int n = m.rows();
  m_ = ComplexMatrix(n, n);
  for (int r = 0; r < n; ++r) {
    m_(r, r) = std::real(m(r, r));
    for (int c = r + 1; c < n; ++c) {
      const Complex v = 0.5 * (m(r, c) + std::conj(m(c, r)));
      m_(r, c) = v;
      m_(c, r) = std::conj(v);
    }
  }
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix m(a.rows() * b.rows(), a.cols() * b.cols());
  for (int ra = 0; ra < a.rows(); ++ra)
    for (int ca = 0; ca < a.cols(); ++ca) {
      const Complex av = a(ra, ca);
      if (av == Complex(0.0)) continue;
      for (int rb = 0; rb < b.rows(); ++rb)
        for (int cb = 0; cb < b.cols(); ++cb)
          m(ra * b.rows() + rb, ca * b.cols() + cb) = av * b(rb, cb);
    }
  return m;
}

static void check_bipartite(const ComplexMatrix& m, BipartiteDims dims) {
  if (dims.da <= 0 || dims.db <= 0 || !m.is_square() || m.rows() != dims.total())
    throw std::invalid_argument("operator size does not match bipartite dims");
}

ComplexMatrix partial_trace_a(const ComplexMatrix& m, BipartiteDims dims) {
  check_bipartite(m, dims);
  ComplexMatrix out(dims.db, dims.db);
  for (int k = 0; k < dims.db; ++k)
    for (int l = 0; l < dims.db; ++l) {
      Complex s = 0.0;
      for (int i = 0; i < dims.da; ++i) s += m(i * dims.db + k, i * dims.db + l);
      out(k, l) = s;
    }
  return out;
}

ComplexMatrix partial_trace_b(const ComplexMatrix& m, BipartiteDims dims) {
  check_bipartite(m, dims);
  ComplexMatrix out(dims.da, dims.da);
  for (int i = 0; i < dims.da; ++i)
    for (int j = 0; j < dims.da; ++j) {
      Complex s = 0.0;
      for (int k = 0; k < dims.db; ++k) s += m(i * dims.db + k, j * dims.db + k);
      out(i, j) = s;
    }
  return out;
}

ComplexMatrix partial_transpose_a(const ComplexMatrix& m, BipartiteDims dims) {
  check_bipartite(m, dims);
  ComplexMatrix out(m.rows(), m.cols());
  for (int i = 0; i < dims.da; ++i)
    for (int j = 0; j < dims.da; ++j)
      for (int k = 0; k < dims.db; ++k)
        for (int l = 0; l < dims.db; ++l)
          out(j * dims.db + k, i * dims.db + l) = m(i * dims.db + k, j * dims.db + l);
  return out;
}

ComplexMatrix partial_transpose_b(const ComplexMatrix& m, BipartiteDims dims) {
  check_bipartite(m, dims);
  ComplexMatrix out(m.rows(), m.cols());
  for (int i = 0; i < dims.da; ++i)
    for (int j = 0; j < dims.da; ++j)
      for (int k = 0; k < dims.db; ++k)
        for (int l = 0; l < dims.db; ++l)
          out(i * dims.db + l, j * dims.db + k) = m(i * dims.db + k, j * dims.db + l);
  return out;
}

ComplexMatrix partial_trace_slot(const ComplexMatrix& m, const std::vector<int>& dims, int slot) {
  const int n = static_cast<int>(dims.size());
  if (slot < 0 || slot >= n) throw std::invalid_argument("slot out of range");
  int left = 1, right = 1;
  for (int s = 0; s < slot; ++s) left *= dims[s];
  for (int s = slot + 1; s < n; ++s) right *= dims[s];
  const int d = dims[slot];
  if (m.rows() != left * d * right || !m.is_square())
    throw std::invalid_argument("operator size does not match slot dims");
  ComplexMatrix out(left * right, left * right);
  for (int l1 = 0; l1 < left; ++l1)
    for (int r1 = 0; r1 < right; ++r1)
      for (int l2 = 0; l2 < left; ++l2)
        for (int r2 = 0; r2 < right; ++r2) {
          Complex s = 0.0;
          for (int k = 0; k < d; ++k)
            s += m((l1 * d + k) * right + r1, (l2 * d + k) * right + r2);
          out(l1 * right + r1, l2 * right + r2) = s;
        }
  return out;
}

ComplexMatrix embed_on_slots(const ComplexMatrix& op, const std::vector<int>& dims,
                             const std::vector<int>& slots) {
  const int n = static_cast<int>(dims.size());
  int total = 1;
  for (int d : dims) total *= d;
  int opdim = 1;
  for (size_t s = 0; s + 1 < slots.size(); ++s)
    if (slots[s] >= slots[s + 1]) throw std::invalid_argument("slots must be increasing");
  for (int s : slots) {
    if (s < 0 || s >= n) throw std::invalid_argument("slot out of range");
    opdim *= dims[s];
  }
  if (op.rows() != opdim || !op.is_square())
    throw std::invalid_argument("operator size does not match selected slots");

  std::vector<int> digits_x(n), digits_y(n);
  ComplexMatrix out(total, total);
  for (int x = 0; x < total; ++x) {
    int rx = x;
    for (int s = n - 1; s >= 0; --s) { digits_x[s] = rx % dims[s]; rx /= dims[s]; }
    for (int y = 0; y < total; ++y) {
      int ry = y;
      for (int s = n - 1; s >= 0; --s) { digits_y[s] = ry % dims[s]; ry /= dims[s]; }
      bool diag = true;
      for (int s = 0; s < n && diag; ++s) {
        bool on = std::find(slots.begin(), slots.end(), s) != slots.end();
        if (!on && digits_x[s] != digits_y[s]) diag = false;
      }
      if (!diag) continue;
      int orow = 0, ocol = 0;
      for (int s : slots) { orow = orow * dims[s] + digits_x[s]; ocol = ocol * dims[s] + digits_y[s]; }
      out(x, y) = op(orow, ocol);
    }
  }
  return out;
}

ComplexMatrix jordan(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix p = a * b;
  ComplexMatrix q = b * a;
  p += q;
  p *= Complex(0.5);
  return p;
}

HermitianMatrix jordan(const HermitianMatrix& a, const HermitianMatrix& b) {
  // For Hermitian a, b: ba = (ab)*, so (ab + (ab)*)/2 is exactly Hermitian.
  ComplexMatrix p = a.mat() * b.mat();
  ComplexMatrix q = p.adjoint();
  p += q;
  p *= Complex(0.5);
  return HermitianMatrix(p);
}

namespace {

double offdiag_frobenius(const ComplexMatrix& a) {
  double s = 0.0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c)
      if (r != c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

// One cyclic Jacobi pass set: diagonalizes Hermitian a in place, accumulating
// the rotations into v (v must enter unitary). Convergence target:
// off-diagonal Frobenius norm below 1e-13 * ||a||_F.
void jacobi_core(ComplexMatrix& a, ComplexMatrix& v) {
  const int n = a.rows();
  const double norm = a.frobenius_norm();
  if (norm == 0.0) return;
  const double target = 1e-13 * norm;
  const int max_sweeps = 128;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (offdiag_frobenius(a) <= target) return;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double r = std::abs(apq);
        if (r == 0.0) continue;
        const Complex phase = apq / r;  // e^{i phi}
        const double app = std::real(a(p, p));
        const double aqq = std::real(a(q, q));
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0.0 ? -1.0 : 1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;

        // a <- U* a U with U = [[c, -s e^{i phi}], [s e^{-i phi}, c]] in the (p,q) plane
        for (int m = 0; m < n; ++m) {
          if (m == p || m == q) continue;
          const Complex amp = a(m, p);
          const Complex amq = a(m, q);
          a(m, p) = c * amp + s * std::conj(phase) * amq;
          a(m, q) = -s * phase * amp + c * amq;
          a(p, m) = std::conj(a(m, p));
          a(q, m) = std::conj(a(m, q));
        }
        a(p, p) = c * c * app + s * s * aqq + 2.0 * c * s * r;
        a(q, q) = s * s * app + c * c * aqq - 2.0 * c * s * r;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (int m = 0; m < n; ++m) {
          const Complex vmp = v(m, p);
          const Complex vmq = v(m, q);
          v(m, p) = c * vmp + s * std::conj(phase) * vmq;
          v(m, q) = -s * phase * vmp + c * vmq;
        }
      }
  }
  if (offdiag_frobenius(a) > target)
    throw std::runtime_error("jacobi eigensolver failed to converge");
}

EigenDecomposition sort_and_pack(const ComplexMatrix& a, const ComplexMatrix& v) {
  const int n = a.rows();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = std::real(a(i, i));
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return ev[x] < ev[y]; });
  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = ComplexMatrix(n, n);
  for (int c = 0; c < n; ++c) {
    out.eigenvalues[c] = ev[order[c]];
    for (int r = 0; r < n; ++r) out.eigenvectors(r, c) = v(r, order[c]);
  }
  return out;
}

}  // namespace

EigenDecomposition herm_eig(const HermitianMatrix& m) {
  ComplexMatrix a = m.mat();
  ComplexMatrix v = ComplexMatrix::identity(a.rows());
  jacobi_core(a, v);
  return sort_and_pack(a, v);
}

EigenDecomposition herm_eig_guided(const HermitianMatrix& m, const ComplexMatrix& guess) {
  if (guess.rows() != m.dim() || guess.cols() != m.dim()) return herm_eig(m);
  ComplexMatrix a = guess.adjoint() * m.mat() * guess;
  // round-off from the basis change; re-pin exact hermiticity
  for (int r = 0; r < a.rows(); ++r) {
    a(r, r) = std::real(a(r, r));
    for (int c = r + 1; c < a.cols(); ++c) {
      const Complex w = 0.5 * (a(r, c) + std::conj(a(c, r)));
      a(r, c) = w;
      a(c, r) = std::conj(w);
    }
  }
  ComplexMatrix v = guess;
  jacobi_core(a, v);
  return sort_and_pack(a, v);
}

ComplexMatrix swap_operator(int d) {
  ComplexMatrix s(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) s(i * d + k, k * d + i) = 1.0;
  return s;
}

ComplexMatrix max_entangled_projector(int d) {
  ComplexMatrix m(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i * d + i, j * d + j) = 1.0;
  return m;
}

std::vector<Complex> max_entangled_vector(int d) {
  std::vector<Complex> v(static_cast<size_t>(d) * d);
  for (int i = 0; i < d; ++i) v[static_cast<size_t>(i) * d + i] = 1.0;
  return v;
}

ComplexMatrix conjugate_by(const ComplexMatrix& m, const ComplexMatrix& u) {
  return u.adjoint() * m * u;
}

ComplexMatrix swap_subsystems(const ComplexMatrix& m, BipartiteDims dims) {
  check_bipartite(m, dims);
  ComplexMatrix out(m.rows(), m.cols());
  for (int i = 0; i < dims.da; ++i)
    for (int k = 0; k < dims.db; ++k)
      for (int j = 0; j < dims.da; ++j)
        for (int l = 0; l < dims.db; ++l)
          out(k * dims.da + i, l * dims.da + j) = m(i * dims.db + k, j * dims.db + l);
  return out;
}

double min_eigenvalue(const HermitianMatrix& m) {
  return herm_eig(m).eigenvalues.front();
}

Complex sandwich(const std::vector<Complex>& l, const ComplexMatrix& m,
                 const std::vector<Complex>& r) {
  if (static_cast<int>(l.size()) != m.rows() || static_cast<int>(r.size()) != m.cols())
    throw std::invalid_argument("sandwich size mismatch");
  Complex s = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    if (l[i] == Complex(0.0)) continue;
    Complex row = 0.0;
    for (int j = 0; j < m.cols(); ++j) row += m(i, j) * r[j];
    s += std::conj(l[i]) * row;
  }
  return s;
}

ComplexMatrix outer(const std::vector<Complex>& v, const std::vector<Complex>& w) {
  ComplexMatrix m(static_cast<int>(v.size()), static_cast<int>(w.size()));
  for (size_t r = 0; r < v.size(); ++r)
    for (size_t c = 0; c < w.size(); ++c)
      m(static_cast<int>(r), static_cast<int>(c)) = v[r] * std::conj(w[c]);
  return m;
}

}  // namespace stote_ot
