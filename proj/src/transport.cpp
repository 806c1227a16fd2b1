#include "stote_ot/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "stote_ot/rng.hpp"

namespace stote_ot {
namespace {

Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  Complex s = 0.0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) s += a(r, c) * b(c, r);
  return s;
}

ComplexMatrix lift_to_a(const ComplexMatrix& m, int db) {
  return tensor(m, ComplexMatrix::identity(db));
}

// (K * (rho (x) 1))^{T_A}: what the cost pairs with in Choi variables.
ComplexMatrix choi_objective(const CostMatrix& k, const DensityMatrix& rho) {
  const ComplexMatrix lift = lift_to_a(rho.matrix.mat(), k.dims.db);
  return partial_transpose_a(jordan(k.matrix.mat(), lift), k.dims);
}

struct CouplingRows {
  int tp_row = 0;
  int marg_row = 0;
};

// Tr_B C = 1, Tr_A[(rho^T (x) 1) C] = sigma for an already-added PSD var C.
CouplingRows add_coupling_rows(SdpBuilder& sb, SdpBuilder::Var c,
                               const ComplexMatrix& rho_t,
                               const ComplexMatrix& sigma_mat, BipartiteDims dims) {
  CouplingRows rows;
  const int db = dims.db;
  rows.tp_row = sb.add_hermitian_constraint(
      ComplexMatrix::identity(dims.da),
      {{c, [db](const ComplexMatrix& e) { return tensor(e, ComplexMatrix::identity(db)); }}});
  rows.marg_row = sb.add_hermitian_constraint(
      sigma_mat, {{c, [rho_t](const ComplexMatrix& e) { return tensor(rho_t, e); }}});
  return rows;
}

// Reorders (A1 B1)(A2 B2) tensor-of-problems layout into the joint problem's
// (A1 A2)(B1 B2) layout. Permutation similarity, so spectra are untouched.
ComplexMatrix regroup_pairs(const ComplexMatrix& m, BipartiteDims d1, BipartiteDims d2) {
  const int n = d1.total() * d2.total();
  std::vector<int> to(n);
  for (int a1 = 0; a1 < d1.da; ++a1)
    for (int b1 = 0; b1 < d1.db; ++b1)
      for (int a2 = 0; a2 < d2.da; ++a2)
        for (int b2 = 0; b2 < d2.db; ++b2) {
          const int src = ((a1 * d1.db + b1) * d2.da + a2) * d2.db + b2;
          const int dst = ((a1 * d2.da + a2) * d1.db + b1) * d2.db + b2;
          to[src] = dst;
        }
  ComplexMatrix out(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out(to[r], to[c]) = m(r, c);
  return out;
}

void check_distribution(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("empty distribution");
  double s = 0.0;
  for (double v : p) {
    if (v < -1e-12) throw std::invalid_argument("negative probability");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-8)
    throw std::invalid_argument("distribution does not sum to one");
}

}  // namespace

CostMatrix unitary_invariant_K(int d, bool normalized) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  ComplexMatrix s = swap_operator(d);
  ComplexMatrix m = ComplexMatrix::identity(d * d);
  if (normalized) {
    s *= Complex(1.0 / d);
    m -= s;
  } else {
    m *= Complex(static_cast<double>(d));
    m -= s;
  }
  return {HermitianMatrix(m), {d, d}, normalized};
}

double cost_of_plan(const CostMatrix& k, const DensityMatrix& rho,
                    const JamiolkowskiMatrix& j) {
  if (k.dims.da != rho.dim() || k.dims.da != j.dims.da || k.dims.db != j.dims.db)
    throw std::invalid_argument("cost matrix dimensions do not match the plan");
  const ComplexMatrix q = jordan(lift_to_a(rho.matrix.mat(), k.dims.db), j.matrix.mat());
  return std::real(trace_product(k.matrix.mat(), q));
}

TransportResult transport_cost(const CostMatrix& k, const DensityMatrix& rho,
                               const DensityMatrix& sigma, double tol, int max_iter) {
  if (k.dims.da != rho.dim() || k.dims.db != sigma.dim())
    throw std::invalid_argument("cost matrix dimensions do not match the states");
  const int da = k.dims.da;
  const int db = k.dims.db;
  const ComplexMatrix w = choi_objective(k, rho);
  const ComplexMatrix rho_t = rho.matrix.mat().transpose();

  const EigenDecomposition re = herm_eig(rho.matrix);
  const EigenDecomposition se = herm_eig(sigma.matrix);
  int ks = 0;
  for (double lam : se.eigenvalues)
    if (lam > 1e-12) ++ks;

  TransportResult r;
  if (ks < db) {
    // Rank-deficient target: the marginal pins each source-supported diagonal
    // block of C into the target's range, and PSD then zeroes every row of C
    // through supp(rho) (x) null(sigma). Restricting the variable to the face
    // supp(rho) (x) supp(sigma) + null(rho) (x) B keeps the value exactly and
    // restores a strictly feasible interior point, which the full problem
    // lacks (its dual optimum may be unattained, stalling the gap).
    const ComplexMatrix frame = tensor(re.eigenvectors, se.eigenvectors);
    const ComplexMatrix w_rot = conjugate_by(w, frame);

    std::vector<int> sig_keep;
    double mass = 0.0;
    double pmin_pos = 1.0;
    for (int s = 0; s < db; ++s) {
      if (se.eigenvalues[s] <= 1e-12) continue;
      sig_keep.push_back(s);
      mass += se.eigenvalues[s];
    }
    std::vector<int> kept;
    for (int a = 0; a < da; ++a) {
      const bool supported = re.eigenvalues[a] > 1e-12;
      if (supported) pmin_pos = std::min(pmin_pos, re.eigenvalues[a]);
      for (int s = 0; s < db; ++s) {
        const bool sig_supported = se.eigenvalues[s] > 1e-12;
        if (!supported || sig_supported) kept.push_back(a * db + s);
      }
    }
    const int nred = static_cast<int>(kept.size());
    const int ksz = static_cast<int>(sig_keep.size());

    auto sub = [&kept, nred](const ComplexMatrix& m) {
      ComplexMatrix out(nred, nred);
      for (int i = 0; i < nred; ++i)
        for (int j = 0; j < nred; ++j) out(i, j) = m(kept[i], kept[j]);
      return out;
    };

    ComplexMatrix rho_diag(da, da);
    for (int a = 0; a < da; ++a) rho_diag(a, a) = std::max(re.eigenvalues[a], 0.0);
    ComplexMatrix sig_red(ksz, ksz);
    for (int i = 0; i < ksz; ++i) sig_red(i, i) = se.eigenvalues[sig_keep[i]] / mass;

    SdpBuilder sb;
    const SdpBuilder::Var c = sb.add_psd(nred);
    const int tp_row = sb.add_hermitian_constraint(
        ComplexMatrix::identity(da), {{c, [&](const ComplexMatrix& e) {
          return sub(tensor(e, ComplexMatrix::identity(db)));
        }}});
    const int marg_row = sb.add_hermitian_constraint(
        sig_red, {{c, [&](const ComplexMatrix& f) {
          ComplexMatrix fe(db, db);
          for (int i = 0; i < ksz; ++i)
            for (int j = 0; j < ksz; ++j) fe(sig_keep[i], sig_keep[j]) = f(i, j);
          return sub(tensor(rho_diag, fe));
        }}});
    sb.obj_coef(c, sub(w_rot));
    const ConicSolution sol = solve(sb.build(false, tol, max_iter));

    const ComplexMatrix c_red = sb.matrix_value(sol, c);
    ComplexMatrix c_rot(k.dims.total(), k.dims.total());
    for (int i = 0; i < nred; ++i)
      for (int j = 0; j < nred; ++j) c_rot(kept[i], kept[j]) = c_red(i, j);
    const ComplexMatrix c_full = frame * c_rot * frame.adjoint();

    const ComplexMatrix y1_rot = sb.dual_matrix(sol, tp_row, da);
    const ComplexMatrix y1 =
        re.eigenvectors * y1_rot * re.eigenvectors.adjoint();
    const ComplexMatrix y2_red = sb.dual_matrix(sol, marg_row, ksz);
    // complete Y2 on the null range with a value negative enough to keep the
    // pair dual feasible wherever the source weights it; the dual objective
    // never sees that block
    const double t = 2.0 * (1.0 + w.max_abs() * db + y1_rot.max_abs()) / pmin_pos;
    ComplexMatrix y2_rot(db, db);
    for (int s = 0; s < db; ++s) y2_rot(s, s) = -t;
    for (int i = 0; i < ksz; ++i)
      for (int j = 0; j < ksz; ++j) y2_rot(sig_keep[i], sig_keep[j]) = y2_red(i, j);
    const ComplexMatrix y2 =
        se.eigenvectors * y2_rot * se.eigenvectors.adjoint();

    r.value = sol.objective_value;
    r.optimal_j = HermitianMatrix(partial_transpose_a(c_full, k.dims), 1e-9);
    r.dual_y1 = HermitianMatrix(y1, 1e-9);
    r.dual_y2 = HermitianMatrix(y2, 1e-8);
    r.dual_value = sol.dual_value;
    r.gap = std::abs(sol.objective_value - sol.dual_value);
    r.iterations = sol.iterations;
    r.status = sol.status;
    return r;
  }

  SdpBuilder sb;
  const SdpBuilder::Var c = sb.add_psd(k.dims.total());
  const CouplingRows rows = add_coupling_rows(sb, c, rho_t, sigma.matrix.mat(), k.dims);
  sb.obj_coef(c, w);
  const ConicSolution sol = solve(sb.build(false, tol, max_iter));

  r.value = sol.objective_value;
  r.optimal_j = HermitianMatrix(
      partial_transpose_a(sb.matrix_value(sol, c), k.dims));
  r.dual_y1 = HermitianMatrix(sb.dual_matrix(sol, rows.tp_row, da));
  r.dual_y2 = HermitianMatrix(sb.dual_matrix(sol, rows.marg_row, db));
  r.dual_value = sol.dual_value;
  r.gap = std::abs(sol.objective_value - sol.dual_value);
  r.iterations = sol.iterations;
  r.status = sol.status;
  return r;
}

DualBound dual_bound(const CostMatrix& k, const DensityMatrix& rho,
                     const DensityMatrix& sigma, double tol, int max_iter) {
  if (k.dims.da != rho.dim() || k.dims.db != sigma.dim())
    throw std::invalid_argument("cost matrix dimensions do not match the states");
  const BipartiteDims dims = k.dims;
  const ComplexMatrix w = choi_objective(k, rho);
  const ComplexMatrix rho_t = rho.matrix.mat().transpose();
  const ComplexMatrix ida = ComplexMatrix::identity(dims.da);
  const ComplexMatrix idb = ComplexMatrix::identity(dims.db);

  SdpBuilder sb;
  const SdpBuilder::Var z = sb.add_psd(dims.total());
  const SdpBuilder::Var y1 = sb.add_free_herm(dims.da);
  const SdpBuilder::Var y2 = sb.add_free_herm(dims.db);
  const ComplexMatrix lift_rho_t = tensor(rho_t, idb);
  sb.add_hermitian_constraint(
      w, {{z, [](const ComplexMatrix& e) { return e; }},
          {y1, [dims](const ComplexMatrix& e) { return partial_trace_b(e, dims); }},
          {y2, [dims, lift_rho_t](const ComplexMatrix& e) {
             return partial_trace_a(lift_rho_t * e, dims);
           }}});
  sb.obj_coef(y1, ida);
  sb.obj_coef(y2, sigma.matrix.mat());
  const ConicSolution sol = solve(sb.build(true, tol, max_iter));

  ComplexMatrix y1m = sb.matrix_value(sol, y1);
  const ComplexMatrix y2m = sb.matrix_value(sol, y2);
  // Shift Y1 by the exact worst-case defect so the pair is truly feasible
  // and the reported value is a certified lower bound.
  const ComplexMatrix resid = w - tensor(y1m, idb) - tensor(rho_t, y2m);
  const double defect = min_eigenvalue(HermitianMatrix(resid, 1e-8));
  if (defect < 0.0) {
    ComplexMatrix shift = ida;
    shift *= Complex(defect);
    y1m += shift;
  }
  DualBound b;
  b.value = std::real(y1m.trace()) +
            std::real(trace_product(sigma.matrix.mat(), y2m));
  b.y1 = HermitianMatrix(y1m);
  b.y2 = HermitianMatrix(y2m);
  b.status = sol.status;
  return b;
}

bool is_zero_cost_identity(const CostMatrix& k) {
  if (k.dims.da != k.dims.db)
    throw std::invalid_argument("identity-cost test needs equal slot dimensions");
  const ComplexMatrix m =
      partial_trace_b(jordan(k.matrix.mat(), swap_operator(k.dims.da)), k.dims);
  return m.frobenius_norm() < 1e-10;
}

double UiCostForms::spread() const {
  const double lo =
      std::min({stote_form, vector_form, coefficient_form, real_sum_form, kraus_form});
  const double hi =
      std::max({stote_form, vector_form, coefficient_form, real_sum_form, kraus_form});
  return hi - lo;
}

UiCostForms ui_cost_forms(const DensityMatrix& rho, const JamiolkowskiMatrix& j) {
  const int d = rho.dim();
  if (j.dims.da != d || j.dims.db != d)
    throw std::invalid_argument("channel dimensions do not match the state");
  const BipartiteDims dims{d, d};
  const EigenDecomposition ed = herm_eig(rho.matrix);

  // Everything below is evaluated in the eigenbasis of rho. A channel frame
  // change conjugates the Choi matrix by conj(U) (x) U.
  const ComplexMatrix frame = tensor(ed.eigenvectors.conjugate(), ed.eigenvectors);
  const ComplexMatrix c_rot =
      conjugate_by(partial_transpose_a(j.matrix.mat(), dims), frame);
  const ComplexMatrix j_rot = partial_transpose_a(c_rot, dims);

  ComplexMatrix dmat(d, d);
  std::vector<Complex> rho_vec(static_cast<size_t>(d) * d, 0.0);
  double mass = 0.0;
  for (int i = 0; i < d; ++i) mass += std::max(ed.eigenvalues[i], 0.0);
  for (int i = 0; i < d; ++i) {
    const double p = std::max(ed.eigenvalues[i], 0.0) / mass;
    dmat(i, i) = p;
    rho_vec[static_cast<size_t>(i) * d + i] = p;
  }

  UiCostForms f;
  const ComplexMatrix q = jordan(lift_to_a(dmat, d), c_rot);
  f.stote_form = 1.0 - std::real(trace_product(max_entangled_projector(d), q)) / d;
  f.vector_form =
      1.0 - std::real(sandwich(rho_vec, c_rot, max_entangled_vector(d))) / d;

  Complex weighted = 0.0;
  double split = 0.0;
  for (int i = 0; i < d; ++i)
    for (int l = 0; l < d; ++l) {
      const Complex elem = j_rot(l * d + i, i * d + l);  // <i| E(|i><l|) |l>
      weighted += 0.5 * (dmat(i, i).real() + dmat(l, l).real()) * elem;
      split += dmat(i, i).real() * elem.real();
    }
  f.coefficient_form = 1.0 - std::real(weighted) / d;
  f.real_sum_form = 1.0 - split / d;

  const ChoiMatrix cm{HermitianMatrix(c_rot, 1e-8), dims};
  f.kraus_form = kraus_cost(DensityMatrix{HermitianMatrix(dmat)}, kraus_from_choi(cm), d);
  return f;
}

KrausSet kraus_from_choi(const ChoiMatrix& c) {
  const EigenDecomposition ed = herm_eig(c.matrix);
  const int da = c.dims.da;
  const int db = c.dims.db;
  KrausSet ks;
  for (int k = 0; k < c.matrix.dim(); ++k) {
    if (ed.eigenvalues[k] <= 1e-12) continue;
    const double w = std::sqrt(ed.eigenvalues[k]);
    ComplexMatrix e(db, da);
    for (int i = 0; i < da; ++i)
      for (int s = 0; s < db; ++s) e(s, i) = w * ed.eigenvectors(i * db + s, k);
    ks.operators.push_back(std::move(e));
  }
  return ks;
}

double kraus_cost(const DensityMatrix& rho, const KrausSet& kraus, int d) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  double total = 0.0;
  for (const ComplexMatrix& e : kraus.operators) {
    if (e.rows() != rho.dim() || e.cols() != rho.dim())
      throw std::invalid_argument("kraus operator does not match the state");
    total += std::real(std::conj(e.trace()) * trace_product(e, rho.matrix.mat()));
  }
  return 1.0 - total / d;
}

CommutingResult commuting_cost(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("spectra sizes differ");
  check_distribution(p);
  check_distribution(q);
  const int d = static_cast<int>(p.size());

  // Kept mass per site; where p_i vanishes the choice is free and s_i = 1
  // maximizes the coherence block.
  std::vector<double> s(d);
  for (int i = 0; i < d; ++i) s[i] = p[i] > 1e-15 ? std::min(1.0, q[i] / p[i]) : 1.0;

  double n_sum = 0.0, m_sum = 0.0;
  for (int i = 0; i < d; ++i) {
    n_sum += p[i] * std::sqrt(s[i]);
    m_sum += std::sqrt(s[i]);
  }
  const double value = (d - n_sum * m_sum) / d;

  // Off-diagonal mass moves proportionally to the receiving deficit; this
  // reproduces q exactly because r_i = 0 whenever s_i < 1.
  std::vector<double> r(d);
  double moved = 0.0;
  for (int i = 0; i < d; ++i) {
    r[i] = std::max(0.0, q[i] - p[i] * s[i]);
    moved += r[i];
  }
  ClassicalPlan plan;
  plan.d = d;
  plan.p = p;
  plan.q = q;
  plan.conditional.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    plan.conditional[static_cast<size_t>(i) * d + i] = s[i];
    const double leftover = 1.0 - s[i];
    if (leftover <= 0.0 || moved <= 1e-15) continue;
    for (int jj = 0; jj < d; ++jj)
      if (jj != i) plan.conditional[static_cast<size_t>(jj) * d + i] = leftover * r[jj] / moved;
  }

  ComplexMatrix cm(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int jj = 0; jj < d; ++jj) cm(i * d + i, jj * d + jj) = std::sqrt(s[i] * s[jj]);
  for (int i = 0; i < d; ++i)
    for (int jj = 0; jj < d; ++jj)
      if (jj != i) cm(i * d + jj, i * d + jj) = plan.p_given(jj, i);

  ChoiMatrix choi{HermitianMatrix(cm), {d, d}};
  return {value, std::move(plan), std::move(choi)};
}

double classical_restricted_cost(const std::vector<double>& p,
                                 const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("spectra sizes differ");
  check_distribution(p);
  check_distribution(q);
  const int d = static_cast<int>(p.size());
  double tv = 0.0;
  for (int i = 0; i < d; ++i) tv += std::abs(p[i] - q[i]);
  tv *= 0.5;
  return 1.0 - 1.0 / d + tv / d;
}

PureStateCost pure_state_cost(double alpha, int d) {
  if (d < 2) throw std::invalid_argument("dimension must be at least 2");
  if (alpha < -1e-12 || alpha > 1.0 + 1e-12)
    throw std::invalid_argument("overlap must lie in [0, 1]");
  alpha = std::clamp(alpha, 0.0, 1.0);
  const double beta = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
  ComplexMatrix u = ComplexMatrix::identity(d);
  u(0, 0) = alpha;
  u(0, 1) = -beta;
  u(1, 0) = beta;
  u(1, 1) = alpha;
  return {(1.0 - alpha) * (d + 2.0 * alpha), std::move(u)};
}

JamiolkowskiMatrix unitary_channel(const ComplexMatrix& u) {
  if (!u.is_square()) throw std::invalid_argument("unitary must be square");
  const int d = u.rows();
  ComplexMatrix defect = u.adjoint() * u;
  defect -= ComplexMatrix::identity(d);
  if (defect.max_abs() > 1e-8) throw std::invalid_argument("matrix is not unitary");
  const ComplexMatrix ub = tensor(ComplexMatrix::identity(d), u);
  return {HermitianMatrix(ub * swap_operator(d) * ub.adjoint(), 1e-10), {d, d}};
}

double unitary_restricted_cost(const DensityMatrix& rho, const DensityMatrix& sigma,
                               uint64_t seed) {
  const int d = rho.dim();
  if (sigma.dim() != d) throw std::invalid_argument("state dimensions differ");
  const EigenDecomposition er = herm_eig(rho.matrix);
  const EigenDecomposition es = herm_eig(sigma.matrix);
  for (int i = 0; i < d; ++i)
    if (std::abs(er.eigenvalues[i] - es.eigenvalues[i]) > 1e-8)
      throw std::invalid_argument("states are not isospectral");

  // U rho U* = sigma exactly when U = W P V* with P unitary inside each
  // degenerate eigenspace. Maximize f(P) = Re(conj(Tr[M P]) Tr[D M P]).
  std::vector<std::pair<int, int>> blocks;
  int begin = 0;
  for (int i = 1; i < d; ++i)
    if (er.eigenvalues[i] - er.eigenvalues[i - 1] > 1e-8) {
      blocks.push_back({begin, i});
      begin = i;
    }
  blocks.push_back({begin, d});

  const ComplexMatrix m = er.eigenvectors.adjoint() * es.eigenvectors;
  ComplexMatrix dm(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) dm(r, c) = er.eigenvalues[r] * m(r, c);

  const auto f_of = [&](const ComplexMatrix& pm) {
    return std::real(std::conj(trace_product(m, pm)) * trace_product(dm, pm));
  };
  const auto retract = [&](ComplexMatrix pm) {
    for (const auto& [lo, hi] : blocks) {
      const int w = hi - lo;
      if (w == 1) {
        const Complex z = pm(lo, lo);
        const double az = std::abs(z);
        pm(lo, lo) = az > 1e-14 ? z / az : Complex(1.0);
        continue;
      }
      ComplexMatrix blk(w, w);
      for (int r = 0; r < w; ++r)
        for (int c = 0; c < w; ++c) blk(r, c) = pm(lo + r, lo + c);
      const EigenDecomposition eh = herm_eig(HermitianMatrix(blk.adjoint() * blk, 1e-9));
      ComplexMatrix isqrt(w, w);
      for (int k = 0; k < w; ++k) {
        const double coeff = 1.0 / std::sqrt(std::max(eh.eigenvalues[k], 1e-14));
        for (int r = 0; r < w; ++r)
          for (int c = 0; c < w; ++c)
            isqrt(r, c) += coeff * eh.eigenvectors(r, k) * std::conj(eh.eigenvectors(c, k));
      }
      blk = blk * isqrt;
      for (int r = 0; r < w; ++r)
        for (int c = 0; c < w; ++c) pm(lo + r, lo + c) = blk(r, c);
    }
    return pm;
  };

  double best = -1e300;
  for (int start = 0; start < 32; ++start) {
    ComplexMatrix pm = ComplexMatrix::identity(d);
    if (start > 0) {
      CounterRng rng(seed, 9100 + static_cast<uint64_t>(start));
      for (const auto& [lo, hi] : blocks) {
        const int w = hi - lo;
        const ComplexMatrix uu = random_unitary(rng, w);
        for (int r = 0; r < w; ++r) {
          // random_unitary fixes column phases, so restore that freedom
          const double ang = 2.0 * 3.14159265358979323846 * rng.uniform();
          const Complex ph(std::cos(ang), std::sin(ang));
          for (int c = 0; c < w; ++c) pm(lo + c, lo + r) = uu(c, r) * ph;
        }
      }
    }
    double f = f_of(pm);
    double eta = 0.5;
    int flat = 0;
    for (int it = 0; it < 300 && flat < 12; ++it) {
      const Complex a = trace_product(m, pm);
      const Complex b = trace_product(dm, pm);
      ComplexMatrix g(d, d);
      for (const auto& [lo, hi] : blocks)
        for (int r = lo; r < hi; ++r)
          for (int c = lo; c < hi; ++c)
            g(r, c) = b * std::conj(m(c, r)) + a * std::conj(dm(c, r));
      if (g.frobenius_norm() < 1e-13) break;
      bool accepted = false;
      for (int bt = 0; bt < 30 && !accepted; ++bt) {
        ComplexMatrix step = g;
        step *= Complex(eta);
        step += pm;
        const ComplexMatrix cand = retract(step);
        const double fc = f_of(cand);
        if (fc > f + 1e-15) {
          flat = fc - f < 1e-13 ? flat + 1 : 0;
          pm = cand;
          f = fc;
          eta = std::min(eta * 1.3, 4.0);
          accepted = true;
        } else {
          eta *= 0.5;
        }
      }
      if (!accepted) break;
    }
    best = std::max(best, f);
  }
  return d - best;
}

PinchingCheck pinching_bound_check(const DensityMatrix& rho, const DensityMatrix& sigma,
                                   double tol, int max_iter) {
  const int d = rho.dim();
  if (sigma.dim() != d) throw std::invalid_argument("state dimensions differ");
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      if (r != c && std::abs(rho.matrix(r, c)) > 1e-10)
        throw std::invalid_argument("rho must be diagonal in the computational basis");
  const CostMatrix k = unitary_invariant_K(d, true);
  ComplexMatrix pin(d, d);
  for (int i = 0; i < d; ++i) pin(i, i) = std::real(sigma.matrix(i, i));
  PinchingCheck out;
  out.lhs = transport_cost(k, rho, sigma, tol, max_iter).value;
  out.rhs = transport_cost(k, rho, DensityMatrix{HermitianMatrix(pin)}, tol, max_iter).value;
  out.holds = out.lhs >= out.rhs - 1e-6;
  return out;
}

namespace {

// Common frame for the support-reduced programs: rho diagonalized, sigma
// rotated along, both repackaged as states.
struct SupportFrame {
  DensityMatrix rho;
  DensityMatrix sigma;
  std::vector<Complex> rho_vec;  // sum_i p_i |ii>
};

SupportFrame eigenframe(const DensityMatrix& rho, const DensityMatrix& sigma) {
  const int n = rho.dim();
  const EigenDecomposition ed = herm_eig(rho.matrix);
  ComplexMatrix dmat(n, n);
  std::vector<Complex> rho_vec(static_cast<size_t>(n) * n, 0.0);
  double mass = 0.0;
  for (int i = 0; i < n; ++i) mass += std::max(ed.eigenvalues[i], 0.0);
  for (int i = 0; i < n; ++i) {
    const double p = std::max(ed.eigenvalues[i], 0.0) / mass;
    dmat(i, i) = p;
    rho_vec[static_cast<size_t>(i) * n + i] = p;
  }
  return {DensityMatrix{HermitianMatrix(dmat)},
          DensityMatrix{HermitianMatrix(
              conjugate_by(sigma.matrix.mat(), ed.eigenvectors), 1e-10)},
          std::move(rho_vec)};
}

}  // namespace

double embedded_cost(const DensityMatrix& rho, const DensityMatrix& sigma, int d,
                     double tol, int max_iter) {
  const int n = rho.dim();
  if (sigma.dim() != n) throw std::invalid_argument("state dimensions differ");
  if (d < n) throw std::invalid_argument("embedding dimension is smaller than the support");
  SupportFrame fr = eigenframe(rho, sigma);

  SdpBuilder sb;
  const SdpBuilder::Var c = sb.add_psd(n * n);
  // [[u, t], [t, 1]] >= 0 encodes t <= sqrt(u) for the complement term.
  const SdpBuilder::Var bb = sb.add_psd(2);
  add_coupling_rows(sb, c, fr.rho.matrix.mat().transpose(), fr.sigma.matrix.mat(),
                    {n, n});

  std::vector<Complex> phi = max_entangled_vector(n);
  ComplexMatrix e00(2, 2), e11(2, 2), wim(2, 2), wre(2, 2);
  e00(0, 0) = 1.0;
  e11(1, 1) = 1.0;
  wim(1, 0) = Complex(0.0, -1.0);  // Re Tr[wim B] = Im B(0,1)
  wre(0, 1) = 0.5;
  wre(1, 0) = 0.5;  // Re Tr[wre B] = Re B(0,1)

  const int link = sb.add_row(0.0);  // B(0,0) - <rho|C|rho> = 0
  sb.add_coef(link, bb, e00);
  sb.add_coef(link, c, Complex(-1.0) * outer(fr.rho_vec, fr.rho_vec));
  const int corner = sb.add_row(1.0);
  sb.add_coef(corner, bb, e11);
  const int imrow = sb.add_row(0.0);
  sb.add_coef(imrow, bb, wim);

  sb.obj_coef(c, outer(phi, fr.rho_vec));
  sb.obj_coef(bb, Complex(static_cast<double>(d - n)) * wre);
  const ConicSolution sol = solve(sb.build(true, tol, max_iter));
  return 1.0 - sol.objective_value / d;
}

double k_infinity(const DensityMatrix& rho, const DensityMatrix& sigma,
                  double tol, int max_iter) {
  const int n = rho.dim();
  if (sigma.dim() != n) throw std::invalid_argument("state dimensions differ");
  SupportFrame fr = eigenframe(rho, sigma);
  SdpBuilder sb;
  const SdpBuilder::Var c = sb.add_psd(n * n);
  add_coupling_rows(sb, c, fr.rho.matrix.mat().transpose(), fr.sigma.matrix.mat(),
                    {n, n});
  sb.obj_coef(c, outer(fr.rho_vec, fr.rho_vec));
  const ConicSolution sol = solve(sb.build(true, tol, max_iter));
  return 1.0 - std::sqrt(std::max(0.0, sol.objective_value));
}

double symmetry_gap(const CostMatrix& k, const DensityMatrix& rho,
                    const DensityMatrix& sigma, double tol, int max_iter) {
  if (k.dims.da != k.dims.db)
    throw std::invalid_argument("symmetry gap needs equal slot dimensions");
  const double forward = transport_cost(k, rho, sigma, tol, max_iter).value;
  const double backward = transport_cost(k, sigma, rho, tol, max_iter).value;
  return forward - backward;
}

bool in_dual_choi_cone(const CostMatrix& k, double tol, int max_iter) {
  const BipartiteDims dims = k.dims;
  SdpBuilder sb;
  const SdpBuilder::Var z = sb.add_psd(dims.total());
  const SdpBuilder::Var a = sb.add_free_herm(dims.da);
  const SdpBuilder::Var x = sb.add_free();
  sb.add_hermitian_constraint(
      partial_transpose_a(k.matrix.mat(), dims),
      {{z, [](const ComplexMatrix& e) { return e; }},
       {a, [dims](const ComplexMatrix& e) { return partial_trace_b(e, dims); }}},
      {{x, [](const ComplexMatrix& e) { return std::real(e.trace()); }}});
  const int traceless = sb.add_row(0.0);
  sb.add_coef(traceless, a, ComplexMatrix::identity(dims.da));
  const auto [slack, sol] = feasibility_max_slack(sb.build(true, tol, max_iter));
  (void)sol;
  return slack >= -1e-6;
}

CostMatrix jdual_izero_generate(const HermitianMatrix& omega) {
  const int n = omega.dim();
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (d * d != n)
    throw std::invalid_argument("omega must live on a d x d bipartite space");
  if (min_eigenvalue(omega) < -1e-9)
    throw std::invalid_argument("omega must be positive semidefinite");
  const std::vector<Complex> phi = max_entangled_vector(d);
  if (std::abs(sandwich(phi, omega.mat(), phi)) >= 1e-10)
    throw std::invalid_argument("omega must annihilate the maximally entangled vector");
  const BipartiteDims dims{d, d};
  const ComplexMatrix ta = partial_transpose_a(omega.mat(), dims);
  const ComplexMatrix g = partial_trace_b(jordan(swap_operator(d), ta), dims);
  ComplexMatrix k = ta;
  k -= tensor(g, ComplexMatrix::identity(d));
  return {HermitianMatrix(k, 1e-10), dims, false};
}

std::optional<DualConeCounterexample> stote_dual_falsify(const CostMatrix& k,
                                                         int samples, uint64_t seed,
                                                         double tol, int max_iter) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  CounterRng rng(seed, 41);
  const int db = k.dims.db;
  for (int s = 0; s < samples; ++s) {
    const DensityMatrix rho{random_density(rng, k.dims.da, 0.1)};
    SdpBuilder sb;
    const SdpBuilder::Var c = sb.add_psd(k.dims.total());
    sb.add_hermitian_constraint(
        ComplexMatrix::identity(k.dims.da),
        {{c, [db](const ComplexMatrix& e) { return tensor(e, ComplexMatrix::identity(db)); }}});
    sb.obj_coef(c, choi_objective(k, rho));
    const ConicSolution sol = solve(sb.build(false, tol, max_iter));
    if (sol.status != SolveStatus::kSolved) continue;
    if (sol.objective_value < -1e-7) {
      DualConeCounterexample ce;
      ce.rho = rho.matrix;
      ce.j = HermitianMatrix(partial_transpose_a(sb.matrix_value(sol, c), k.dims));
      ce.value = sol.objective_value;
      ce.sample = s;
      return ce;
    }
  }
  return std::nullopt;
}

TriangleReport triangle_witness_search(const CostMatrix& k_ab, const CostMatrix& k_bc,
                                       const CostMatrix& k_ac, int samples,
                                       uint64_t seed, double tol, int max_iter) {
  const int d = k_ab.dims.da;
  for (const CostMatrix* k : {&k_ab, &k_bc, &k_ac})
    if (k->dims.da != d || k->dims.db != d)
      throw std::invalid_argument("triangle search needs one common dimension");
  if (samples < 1) throw std::invalid_argument("need at least one sample");

  const std::vector<int> dims3{d, d, d};
  const ComplexMatrix id = ComplexMatrix::identity(d);
  ComplexMatrix k_prime = tensor(k_ab.matrix.mat(), id);
  k_prime += tensor(id, k_bc.matrix.mat());
  k_prime -= embed_on_slots(k_ac.matrix.mat(), dims3, {0, 2});

  CounterRng rng(seed, 31);
  TriangleReport rep;
  rep.samples = samples;
  rep.min_form_value = 1e300;
  rep.min_direct_slack = 1e300;
  for (int s = 0; s < samples; ++s) {
    const DensityMatrix rho{random_density(rng, d, 0.1)};
    const JamiolkowskiMatrix jab{HermitianMatrix(random_jamiolkowski_mat(rng, d, d), 1e-9),
                                 {d, d}};
    const JamiolkowskiMatrix jbc{HermitianMatrix(random_jamiolkowski_mat(rng, d, d), 1e-9),
                                 {d, d}};
    const MultiStote q3 = multi_time_stote(rho, {jab, jbc});
    rep.min_form_value =
        std::min(rep.min_form_value, std::real(trace_product(k_prime, q3.matrix.mat())));

    if (s % 10 != 0) continue;
    const DensityMatrix sigma{channel_apply(jab, rho.matrix)};
    const DensityMatrix tau{channel_apply(jbc, sigma.matrix)};
    const TransportResult leg1 = transport_cost(k_ab, rho, sigma, tol, max_iter);
    const TransportResult leg2 = transport_cost(k_bc, sigma, tau, tol, max_iter);
    const TransportResult leg3 = transport_cost(k_ac, rho, tau, tol, max_iter);
    if (leg1.status != SolveStatus::kSolved || leg2.status != SolveStatus::kSolved ||
        leg3.status != SolveStatus::kSolved)
      continue;
    rep.min_direct_slack =
        std::min(rep.min_direct_slack, leg1.value + leg2.value - leg3.value);
    ++rep.triples;
  }
  if (rep.triples == 0) rep.min_direct_slack = 0.0;
  rep.form_violation = rep.min_form_value < -1e-7;
  rep.direct_violation = rep.min_direct_slack < -1e-5;
  return rep;
}

PropertyReport property_checks(const CostMatrix& k, const DensityMatrix& rho,
                               const Ensemble& ensemble, uint64_t seed,
                               double tol, int max_iter) {
  if (ensemble.weights.size() != ensemble.components.size() || ensemble.weights.empty())
    throw std::invalid_argument("ensemble weights and components must align");
  check_distribution(ensemble.weights);
  const int db = k.dims.db;
  ComplexMatrix mix(db, db);
  for (size_t i = 0; i < ensemble.weights.size(); ++i) {
    if (ensemble.components[i].dim() != db)
      throw std::invalid_argument("ensemble component dimension mismatch");
    ComplexMatrix term = ensemble.components[i].matrix.mat();
    term *= Complex(ensemble.weights[i]);
    mix += term;
  }
  mix *= Complex(1.0 / std::real(mix.trace()));
  PropertyReport rep;
  const double lhs = transport_cost(k, rho, DensityMatrix{HermitianMatrix(mix)},
                                    tol, max_iter).value;
  double rhs = 0.0;
  for (size_t i = 0; i < ensemble.weights.size(); ++i)
    rhs += ensemble.weights[i] *
           transport_cost(k, rho, ensemble.components[i], tol, max_iter).value;
  rep.subadditivity_slack = lhs - rhs;

  // Both tensor bounds on one seeded pair of problems with K1 = K2 = k.
  CounterRng rng(seed, 23);
  const DensityMatrix r1{random_density(rng, k.dims.da)};
  const DensityMatrix s1{random_density(rng, db)};
  const DensityMatrix r2{random_density(rng, k.dims.da)};
  const DensityMatrix s2{random_density(rng, db)};
  const double c1 = transport_cost(k, r1, s1, tol, max_iter).value;
  const double c2 = transport_cost(k, r2, s2, tol, max_iter).value;
  const DensityMatrix r12{HermitianMatrix(tensor(r1.matrix.mat(), r2.matrix.mat()))};
  const DensityMatrix s12{HermitianMatrix(tensor(s1.matrix.mat(), s2.matrix.mat()))};
  const BipartiteDims big{k.dims.da * k.dims.da, db * db};

  const CostMatrix k_prod{
      HermitianMatrix(regroup_pairs(tensor(k.matrix.mat(), k.matrix.mat()), k.dims, k.dims)),
      big, false};
  rep.tensor_product_slack =
      transport_cost(k_prod, r12, s12, tol, max_iter).value - c1 * c2;

  const ComplexMatrix id_pair = ComplexMatrix::identity(k.dims.total());
  ComplexMatrix ksum = tensor(k.matrix.mat(), id_pair);
  ksum += tensor(id_pair, k.matrix.mat());
  const CostMatrix k_sum{HermitianMatrix(regroup_pairs(ksum, k.dims, k.dims)), big, false};
  rep.tensor_sum_slack =
      transport_cost(k_sum, r12, s12, tol, max_iter).value - (c1 + c2);

  rep.ok = rep.subadditivity_slack <= 1e-5 && rep.tensor_product_slack <= 1e-5 &&
           rep.tensor_sum_slack <= 1e-5;
  return rep;
}

}  // namespace stote_ot
