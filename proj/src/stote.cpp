#include "stote_ot/stote.hpp"

#include <cmath>
#include <stdexcept>

#include "stote_ot/conic.hpp"

namespace stote_ot {

namespace {

double max_deviation_from_identity(const ComplexMatrix& m) {
  double dev = 0.0;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      const Complex want = r == c ? Complex(1.0) : Complex(0.0);
      dev = std::max(dev, std::abs(m(r, c) - want));
    }
  return dev;
}

}  // namespace

ValidationReport validate_density(const HermitianMatrix& m) {
  ValidationReport rep;
  const double tr_dev = std::abs(std::real(m.mat().trace()) - 1.0);
  if (tr_dev > 1e-10) rep.fail("trace-one", tr_dev);
  const double lam = min_eigenvalue(m);
  if (lam < -1e-10) rep.fail("positive-semidefinite", lam);
  return rep;
}

ValidationReport validate_jamiolkowski(const HermitianMatrix& m, BipartiteDims dims) {
  ValidationReport rep;
  if (m.dim() != dims.total()) {
    rep.fail("dimension", m.dim() - dims.total());
    return rep;
  }
  const double tp_dev = max_deviation_from_identity(partial_trace_b(m.mat(), dims));
  if (tp_dev > 1e-8) rep.fail("trace-preserving", tp_dev);
  const HermitianMatrix choi(partial_transpose_a(m.mat(), dims));
  const double lam = min_eigenvalue(choi);
  if (lam < -1e-8) rep.fail("completely-positive", lam);
  return rep;
}

DensityMatrix::DensityMatrix(const HermitianMatrix& m) : matrix(m) {
  const ValidationReport rep = validate_density(m);
  if (!rep.ok)
    throw std::invalid_argument("not a density matrix: " + rep.violations.front().invariant);
}

JamiolkowskiMatrix::JamiolkowskiMatrix(const HermitianMatrix& m, BipartiteDims d)
    : matrix(m), dims(d) {
  const ValidationReport rep = validate_jamiolkowski(m, d);
  if (!rep.ok)
    throw std::invalid_argument("not a channel: " + rep.violations.front().invariant);
}

ChoiMatrix::ChoiMatrix(const HermitianMatrix& m, BipartiteDims d) : matrix(m), dims(d) {
  if (m.dim() != d.total()) throw std::invalid_argument("Choi dimension mismatch");
  const double tp_dev = max_deviation_from_identity(partial_trace_b(m.mat(), d));
  if (tp_dev > 1e-8) throw std::invalid_argument("Choi matrix not trace-preserving");
  if (min_eigenvalue(m) < -1e-8) throw std::invalid_argument("Choi matrix not PSD");
}

ChoiMatrix choi_from_jamiolkowski(const JamiolkowskiMatrix& j) {
  return ChoiMatrix(HermitianMatrix(partial_transpose_a(j.matrix.mat(), j.dims)), j.dims);
}

JamiolkowskiMatrix jamiolkowski_from_choi(const ChoiMatrix& c) {
  return JamiolkowskiMatrix(HermitianMatrix(partial_transpose_a(c.matrix.mat(), c.dims)), c.dims);
}

Stote::Stote(const HermitianMatrix& m, BipartiteDims d) : matrix(m), dims(d) {
  if (m.dim() != d.total()) throw std::invalid_argument("stote dimension mismatch");
  const double tr_dev = std::abs(std::real(m.mat().trace()) - 1.0);
  if (tr_dev > 1e-8) throw std::invalid_argument("stote trace deviates from one");
}

HermitianMatrix channel_apply(const JamiolkowskiMatrix& j, const HermitianMatrix& x) {
  return HermitianMatrix(channel_apply_raw(j.matrix.mat(), j.dims, x.mat()), 1e-9);
}

ComplexMatrix channel_apply_raw(const ComplexMatrix& j, BipartiteDims dims,
                                const ComplexMatrix& x) {
  if (x.rows() != dims.da || !x.is_square())
    throw std::invalid_argument("channel input has wrong dimension");
  return partial_trace_a(tensor(x, ComplexMatrix::identity(dims.db)) * j, dims);
}

Stote make_stote(const DensityMatrix& rho, const JamiolkowskiMatrix& j) {
  if (rho.dim() != j.dims.da) throw std::invalid_argument("state does not match channel input");
  const HermitianMatrix lift(tensor(rho.matrix.mat(), ComplexMatrix::identity(j.dims.db)));
  return Stote(jordan(lift, j.matrix), j.dims);
}

namespace {

struct RotatedOmega {
  HermitianMatrix rho;        // Tr_B omega, original basis
  std::vector<double> p;      // ascending eigenvalues of rho
  ComplexMatrix u_lift;       // U (x) 1
  HermitianMatrix omega_rot;  // (U (x) 1)* omega (U (x) 1), re-symmetrized
};

RotatedOmega rotate_to_marginal_eigenbasis(const HermitianMatrix& omega, BipartiteDims dims) {
  if (omega.dim() != dims.total()) throw std::invalid_argument("omega dimension mismatch");
  const HermitianMatrix rho(partial_trace_b(omega.mat(), dims));
  const double tr_dev = std::abs(std::real(rho.mat().trace()) - 1.0);
  if (tr_dev > 1e-8) throw std::invalid_argument("marginal of omega is not normalized");
  const EigenDecomposition ed = herm_eig(rho);
  if (ed.eigenvalues.front() < -1e-10)
    throw std::invalid_argument("marginal of omega is not positive semidefinite");
  RotatedOmega out{rho, ed.eigenvalues, tensor(ed.eigenvectors, ComplexMatrix::identity(dims.db)),
                   HermitianMatrix{}};
  out.omega_rot = HermitianMatrix(conjugate_by(omega.mat(), out.u_lift), 1e-9);
  return out;
}

StoteInversion finish_inversion(const RotatedOmega& ro, BipartiteDims dims,
                                const ComplexMatrix& j_rot, bool used_sdp, double slack) {
  StoteInversion inv{ro.rho, HermitianMatrix(ro.u_lift * j_rot * ro.u_lift.adjoint(), 1e-9),
                     ValidationReport{}, used_sdp, slack};
  inv.report = validate_jamiolkowski(inv.j, dims);
  return inv;
}

}  // namespace

StoteInversion invert_stote(const HermitianMatrix& omega, BipartiteDims dims, double sdp_tol,
                            int sdp_max_iter) {
  RotatedOmega ro = rotate_to_marginal_eigenbasis(omega, dims);
  if (ro.p.front() <= kFaithfulEps) return invert_stote_sdp(omega, dims, sdp_tol, sdp_max_iter);

  ComplexMatrix j_rot(dims.total(), dims.total());
  for (int i = 0; i < dims.da; ++i)
    for (int k = 0; k < dims.db; ++k)
      for (int jj = 0; jj < dims.da; ++jj)
        for (int l = 0; l < dims.db; ++l)
          j_rot(i * dims.db + k, jj * dims.db + l) =
              2.0 / (ro.p[i] + ro.p[jj]) * ro.omega_rot(i * dims.db + k, jj * dims.db + l);

  const double lam = min_eigenvalue(HermitianMatrix(partial_transpose_a(j_rot, dims)));
  return finish_inversion(ro, dims, j_rot, false, lam);
}

StoteInversion invert_stote_sdp(const HermitianMatrix& omega, BipartiteDims dims, double sdp_tol,
                                int sdp_max_iter) {
  RotatedOmega ro = rotate_to_marginal_eigenbasis(omega, dims);
  const int n = dims.total();
  const int db = dims.db;

  // Variables: Z PSD and slack x, with J^{T_A} = Z + x*1, so J = T_A(Z) + x*1.
  SdpBuilder sb;
  const SdpBuilder::Var z = sb.add_psd(n);
  const SdpBuilder::Var x = sb.add_free();

  // Determined entries: <ik|J|jl> = 2/(p_i+p_j) <ik|omega|jl> where p_i+p_j > 0.
  // Re J_rc = Re Tr[|c><r| J] and T_A moves the functional onto Z.
  auto pin = [&](int r, int c, Complex w, double rhs_val) {
    // functional Re Tr[w_mat J] with w_mat = w |c><r|, pulled back through T_A
    const int i = r / db, k = r % db, jj = c / db, l = c % db;
    ComplexMatrix wmat(n, n);
    wmat(i * db + l, jj * db + k) = w;  // T_A(|c><r|) scaled by w
    const int row = sb.add_row(rhs_val);
    sb.add_coef(row, z, wmat);
    if (r == c) sb.add_scalar_coef(row, x, std::real(w));  // x*1 contribution
  };

  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c) {
      const int i = r / db, jj = c / db;
      if (ro.p[i] + ro.p[jj] <= kFaithfulEps) continue;
      const Complex val = 2.0 / (ro.p[i] + ro.p[jj]) * ro.omega_rot(r, c);
      pin(r, c, Complex(1.0), std::real(val));
      if (r != c) pin(r, c, Complex(0.0, -1.0), std::imag(val));
    }

  // Tr_B J = 1: (Tr_B Z)^T + x*db*1 = 1
  sb.add_hermitian_constraint(
      ComplexMatrix::identity(dims.da),
      {{z, [&](const ComplexMatrix& e) {
          return tensor(e.transpose(), ComplexMatrix::identity(db));
        }}},
      {{x, [&](const ComplexMatrix& e) { return db * std::real(e.trace()); }}});

  ConicProblem prob = sb.build(true, sdp_tol, sdp_max_iter);
  auto [slack, sol] = feasibility_max_slack(prob);

  ComplexMatrix zstar = sb.matrix_value(sol, z);
  ComplexMatrix c_rot = zstar;
  for (int i = 0; i < n; ++i) c_rot(i, i) += slack;
  const ComplexMatrix j_rot = partial_transpose_a(c_rot, dims);

  StoteInversion inv = finish_inversion(ro, dims, j_rot, true, slack);
  if (sol.status != SolveStatus::kSolved)
    inv.report.fail(sol.status == SolveStatus::kMaxIter ? "sdp-max-iter" : "sdp-infeasible",
                    sol.primal_residual);
  return inv;
}

HermitianMatrix integral_inverse(const HermitianMatrix& omega, const DensityMatrix& rho) {
  const BipartiteDims dims{rho.dim(), omega.dim() / rho.dim()};
  if (dims.total() != omega.dim()) throw std::invalid_argument("omega dimension mismatch");
  const EigenDecomposition ed = herm_eig(rho.matrix);
  if (ed.eigenvalues.front() <= kFaithfulEps)
    throw std::invalid_argument("integral inverse needs a faithful state");
  const ComplexMatrix lift = tensor(ed.eigenvectors, ComplexMatrix::identity(dims.db));
  const HermitianMatrix om(conjugate_by(omega.mat(), lift), 1e-9);
  ComplexMatrix j(omega.dim(), omega.dim());
  for (int r = 0; r < omega.dim(); ++r)
    for (int c = 0; c < omega.dim(); ++c)
      j(r, c) = 2.0 / (ed.eigenvalues[r / dims.db] + ed.eigenvalues[c / dims.db]) * om(r, c);
  return HermitianMatrix(lift * j * lift.adjoint(), 1e-9);
}

JamiolkowskiMatrix compose(const JamiolkowskiMatrix& j1, const JamiolkowskiMatrix& j2) {
  if (j1.dims.db != j2.dims.da) throw std::invalid_argument("chain dimensions do not match");
  const std::vector<int> dims{j1.dims.da, j1.dims.db, j2.dims.db};
  const ComplexMatrix x = tensor(j1.matrix.mat(), ComplexMatrix::identity(j2.dims.db));
  const ComplexMatrix y = tensor(ComplexMatrix::identity(j1.dims.da), j2.matrix.mat());
  const ComplexMatrix q = jordan(x, y);
  return JamiolkowskiMatrix(HermitianMatrix(partial_trace_slot(q, dims, 1), 1e-9),
                            BipartiteDims{j1.dims.da, j2.dims.db});
}

MultiStote multi_time_stote(const DensityMatrix& rho,
                            const std::vector<JamiolkowskiMatrix>& chain) {
  if (chain.empty()) throw std::invalid_argument("empty chain");
  if (rho.dim() != chain.front().dims.da)
    throw std::invalid_argument("state does not match first channel");
  MultiStote out{make_stote(rho, chain.front()).matrix,
                 {chain.front().dims.da, chain.front().dims.db}};
  for (size_t k = 1; k < chain.size(); ++k) {
    if (chain[k].dims.da != out.dims.back())
      throw std::invalid_argument("chain dimensions do not match");
    out.dims.push_back(chain[k].dims.db);
    const int slot = static_cast<int>(out.dims.size()) - 2;
    const ComplexMatrix lifted =
        tensor(out.matrix.mat(), ComplexMatrix::identity(chain[k].dims.db));
    const ComplexMatrix jk = embed_on_slots(chain[k].matrix.mat(), out.dims, {slot, slot + 1});
    out.matrix = HermitianMatrix(jordan(lifted, jk), 1e-9);
  }
  return out;
}

}  // namespace stote_ot
