#include "stote_ot/transport.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "stote_ot/rng.hpp"

using namespace stote_ot;

namespace {

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix d = a;
  d -= b;
  return d.max_abs();
}

DensityMatrix qubit_diag(double p) {
  ComplexMatrix m(2, 2);
  m(0, 0) = p;
  m(1, 1) = 1.0 - p;
  return DensityMatrix(HermitianMatrix(m));
}

DensityMatrix plus_state() {
  ComplexMatrix m(2, 2);
  m(0, 0) = m(0, 1) = m(1, 0) = m(1, 1) = 0.5;
  return DensityMatrix(HermitianMatrix(m));
}

DensityMatrix diag_state(const std::vector<double>& p) {
  const int d = static_cast<int>(p.size());
  ComplexMatrix m(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = p[i];
  return DensityMatrix(HermitianMatrix(m));
}

// basis state |0><0| and the alpha-overlap pure state alpha|0> + sqrt(1-a^2)|1>
DensityMatrix basis_state(int d) {
  ComplexMatrix m(d, d);
  m(0, 0) = 1.0;
  return DensityMatrix(HermitianMatrix(m));
}

DensityMatrix alpha_state(double alpha, int d) {
  const double beta = std::sqrt(1.0 - alpha * alpha);
  ComplexMatrix m(d, d);
  m(0, 0) = alpha * alpha;
  m(0, 1) = alpha * beta;
  m(1, 0) = alpha * beta;
  m(1, 1) = beta * beta;
  return DensityMatrix(HermitianMatrix(m));
}

JamiolkowskiMatrix identity_channel(int d) {
  return JamiolkowskiMatrix(HermitianMatrix(swap_operator(d)), {d, d});
}

JamiolkowskiMatrix replacement_channel(const DensityMatrix& sigma, int da) {
  return JamiolkowskiMatrix(
      HermitianMatrix(tensor(ComplexMatrix::identity(da), sigma.matrix.mat())),
      {da, sigma.dim()});
}

JamiolkowskiMatrix random_channel(CounterRng& rng, int d) {
  return JamiolkowskiMatrix(HermitianMatrix(random_jamiolkowski_mat(rng, d, d), 1e-9),
                            {d, d});
}

std::vector<double> random_distribution(CounterRng& rng, int d) {
  std::vector<double> p(d);
  double s = 0.0;
  for (double& v : p) {
    v = rng.uniform_pos();
    s += v;
  }
  for (double& v : p) v /= s;
  return p;
}

// Oracle: Tr[K ((rho (x) 1) J + J (rho (x) 1)) / 2] by raw index loops, no
// library tensor/jordan helpers involved.
double oracle_plan_cost(const ComplexMatrix& k, const ComplexMatrix& rho,
                        const ComplexMatrix& j, int da, int db) {
  const int n = da * db;
  ComplexMatrix lift(n, n);
  for (int a = 0; a < da; ++a)
    for (int c = 0; c < da; ++c)
      for (int b = 0; b < db; ++b) lift(a * db + b, c * db + b) = rho(a, c);
  Complex total = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      Complex q = 0.0;
      for (int m = 0; m < n; ++m)
        q += 0.5 * (lift(r, m) * j(m, c) + j(r, m) * lift(m, c));
      total += k(c, r) * q;
    }
  return std::real(total);
}

// Oracle for the unitary-invariant cost: 1 - Tr[S ((rho (x) 1) * J)]/d with
// the swap trace evaluated entrywise.
double oracle_ui_cost(const ComplexMatrix& rho, const ComplexMatrix& j, int d) {
  const int n = d * d;
  ComplexMatrix lift(n, n);
  for (int a = 0; a < d; ++a)
    for (int c = 0; c < d; ++c)
      for (int b = 0; b < d; ++b) lift(a * d + b, c * d + b) = rho(a, c);
  Complex x = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      // <ab|S Q|ab> = <ba|Q|ab>
      Complex q = 0.0;
      for (int m = 0; m < n; ++m)
        q += 0.5 * (lift(b * d + a, m) * j(m, a * d + b) +
                    j(b * d + a, m) * lift(m, a * d + b));
      x += q;
    }
  return 1.0 - std::real(x) / d;
}

// Independent regrouping of a tensor-of-problems operator from slot order
// (A1 B1 A2 B2) to (A1 A2 B1 B2), written against the flat index directly.
ComplexMatrix oracle_regroup(const ComplexMatrix& m, int da, int db) {
  const int n = da * db * da * db;
  std::vector<int> dst(n);
  for (int r = 0; r < n; ++r) {
    const int b2 = r % db;
    const int a2 = (r / db) % da;
    const int b1 = (r / (db * da)) % db;
    const int a1 = r / (db * da * db);
    dst[r] = ((a1 * da + a2) * db + b1) * db + b2;
  }
  ComplexMatrix out(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out(dst[r], dst[c]) = m(r, c);
  return out;
}

Complex one_sided_cost(const CostMatrix& k, const DensityMatrix& rho,
                       const JamiolkowskiMatrix& j) {
  const ComplexMatrix lift =
      tensor(rho.matrix.mat(), ComplexMatrix::identity(j.dims.db));
  return (k.matrix.mat() * (lift * j.matrix.mat())).trace();
}

}  // namespace

TEST_CASE("unitary-invariant cost operator: entries, symmetry, zero identity cost") {
  const CostMatrix k0 = unitary_invariant_K(2, false);
  CHECK(k0.dims.da == 2);
  CHECK_FALSE(k0.normalized);
  ComplexMatrix expect = ComplexMatrix::identity(4);
  expect *= Complex(2.0);
  expect -= swap_operator(2);
  CHECK(max_abs_diff(k0.matrix.mat(), expect) < 1e-15);

  const CostMatrix kn = unitary_invariant_K(3, true);
  ComplexMatrix scaled = kn.matrix.mat();
  scaled *= Complex(3.0);
  CHECK(max_abs_diff(scaled, unitary_invariant_K(3, false).matrix.mat()) < 1e-12);

  CounterRng rng(7, 1);
  for (int t = 0; t < 5; ++t) {
    const ComplexMatrix u = random_unitary(rng, 3);
    const ComplexMatrix uu = tensor(u, u);
    const ComplexMatrix k = unitary_invariant_K(3, false).matrix.mat();
    CHECK(max_abs_diff(uu * k, k * uu) < 1e-10);
  }

  CHECK(is_zero_cost_identity(k0));
  CHECK(is_zero_cost_identity(unitary_invariant_K(3, true)));
  const CostMatrix ident{HermitianMatrix(ComplexMatrix::identity(4)), {2, 2}, false};
  CHECK_FALSE(is_zero_cost_identity(ident));
}

TEST_CASE("plan cost on reference channels matches the raw-index oracle") {
  CounterRng rng(11, 2);
  for (int d : {2, 3}) {
    const CostMatrix k0 = unitary_invariant_K(d, false);
    for (int t = 0; t < 5; ++t) {
      const DensityMatrix rho{random_density(rng, d)};

      // identity channel is free
      CHECK(std::abs(cost_of_plan(k0, rho, identity_channel(d))) < 1e-10);

      // replacement costs d - Tr[rho sigma]
      const DensityMatrix sigma{random_density(rng, d)};
      const double repl = cost_of_plan(k0, rho, replacement_channel(sigma, d));
      double overlap = 0.0;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          overlap += std::real(rho.matrix(r, c) * sigma.matrix(c, r));
      CHECK(std::abs(repl - (d - overlap)) < 1e-10);

      // unitary channel costs d - Re(conj(Tr U) Tr[rho U])
      const ComplexMatrix u = random_unitary(rng, d);
      const double uc = cost_of_plan(k0, rho, unitary_channel(u));
      Complex tru = u.trace(), trru = 0.0;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) trru += rho.matrix(r, c) * u(c, r);
      CHECK(std::abs(uc - (d - std::real(std::conj(tru) * trru))) < 1e-10);

      // arbitrary channel against the oracle
      const JamiolkowskiMatrix j = random_channel(rng, d);
      CHECK(std::abs(cost_of_plan(k0, rho, j) -
                     oracle_plan_cost(k0.matrix.mat(), rho.matrix.mat(),
                                      j.matrix.mat(), d, d)) < 1e-10);
    }
  }
  CHECK_THROWS_AS(cost_of_plan(unitary_invariant_K(2, false),
                               DensityMatrix{random_density(rng, 3)},
                               identity_channel(3)),
                  std::invalid_argument);
}

TEST_CASE("transport SDP: equal states cost nothing and the plan is feasible") {
  CounterRng rng(13, 3);
  for (int d : {2, 3}) {
    const CostMatrix k = unitary_invariant_K(d, true);
    const DensityMatrix rho{random_density(rng, d)};
    const TransportResult r = transport_cost(k, rho, rho);
    CHECK(r.status == SolveStatus::kSolved);
    CHECK(std::abs(r.value) < 1e-6);
    CHECK(r.gap < 1e-5);

    const JamiolkowskiMatrix opt{HermitianMatrix(r.optimal_j.mat(), 1e-6), {d, d}};
    CHECK(max_abs_diff(channel_apply(opt, rho.matrix).mat(), rho.matrix.mat()) < 1e-6);
    CHECK(std::abs(cost_of_plan(k, rho, opt) - r.value) < 1e-6);
  }
}

TEST_CASE("transport SDP reproduces the pure-state closed form") {
  const double alpha = 1.0 / std::sqrt(2.0);
  const TransportResult r = transport_cost(unitary_invariant_K(2, false),
                                           basis_state(2), alpha_state(alpha, 2));
  CHECK(r.status == SolveStatus::kSolved);
  CHECK(std::abs(r.value - 1.0) < 1e-4);

  const double a3 = 0.6;
  const TransportResult r3 = transport_cost(unitary_invariant_K(3, false),
                                            basis_state(3), alpha_state(a3, 3));
  CHECK(std::abs(r3.value - (1.0 - a3) * (3.0 + 2.0 * a3)) < 1e-4);

  // normalized flag divides by d
  const TransportResult rn = transport_cost(unitary_invariant_K(2, true),
                                            basis_state(2), alpha_state(alpha, 2));
  CHECK(std::abs(rn.value - 0.5) < 1e-4);
}

TEST_CASE("transport SDP matches the commuting closed form") {
  const CommutingResult frozen = commuting_cost({1.0, 0.0}, {0.5, 0.5});
  CHECK(std::abs(frozen.value - 0.39644660940672627) < 1e-12);

  const CostMatrix k2 = unitary_invariant_K(2, true);
  const TransportResult r = transport_cost(k2, diag_state({1.0, 0.0}),
                                           diag_state({0.5, 0.5}));
  CHECK(std::abs(r.value - frozen.value) < 1e-5);
  const DualBound db = dual_bound(k2, diag_state({1.0, 0.0}), diag_state({0.5, 0.5}));
  CHECK(db.value <= r.value + 1e-7);
  CHECK(std::abs(db.value - frozen.value) < 1e-5);

  CounterRng rng(17, 4);
  const std::vector<double> p = random_distribution(rng, 3);
  const std::vector<double> q = random_distribution(rng, 3);
  const CommutingResult cr = commuting_cost(p, q);
  const TransportResult rt =
      transport_cost(unitary_invariant_K(3, true), diag_state(p), diag_state(q));
  CHECK(std::abs(rt.value - cr.value) < 1e-5);
}

TEST_CASE("dual bound is a certified under-estimate") {
  CounterRng rng(19, 5);
  for (int d : {2, 3}) {
    const CostMatrix k = unitary_invariant_K(d, true);
    const DensityMatrix rho{random_density(rng, d)};
    const DensityMatrix sigma{random_density(rng, d)};
    const TransportResult pr = transport_cost(k, rho, sigma);
    const DualBound db = dual_bound(k, rho, sigma);
    CHECK(pr.status == SolveStatus::kSolved);
    CHECK(db.value <= pr.value + 1e-7);
    CHECK(db.value >= pr.value - 1e-4);
    CHECK(pr.gap < 1e-5);

    // re-verify feasibility of the shifted pair: W - Y1 (x) 1 - rho^T (x) Y2 >= 0
    const ComplexMatrix lift =
        tensor(rho.matrix.mat(), ComplexMatrix::identity(d));
    const ComplexMatrix w =
        partial_transpose_a(jordan(k.matrix.mat(), lift), k.dims);
    ComplexMatrix resid = w;
    resid -= tensor(db.y1.mat(), ComplexMatrix::identity(d));
    resid -= tensor(rho.matrix.mat().transpose(), db.y2.mat());
    CHECK(min_eigenvalue(HermitianMatrix(resid, 1e-8)) > -1e-8);
  }
}

TEST_CASE("five cost forms agree with each other and with the definition") {
  CounterRng rng(23, 6);
  for (int d : {2, 3}) {
    for (int t = 0; t < 20; ++t) {
      const DensityMatrix rho{random_density(rng, d)};
      const JamiolkowskiMatrix j = random_channel(rng, d);
      const UiCostForms f = ui_cost_forms(rho, j);
      CHECK(f.spread() < 1e-10);
      CHECK(std::abs(f.stote_form -
                     oracle_ui_cost(rho.matrix.mat(), j.matrix.mat(), d)) < 1e-10);
    }
    const DensityMatrix rho{random_density(rng, d)};
    const UiCostForms id_forms = ui_cost_forms(rho, identity_channel(d));
    CHECK(std::abs(id_forms.stote_form) < 1e-12);
    CHECK(id_forms.spread() < 1e-12);

    const DensityMatrix sigma{random_density(rng, d)};
    const UiCostForms rep = ui_cost_forms(rho, replacement_channel(sigma, d));
    double overlap = 0.0;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        overlap += std::real(rho.matrix(r, c) * sigma.matrix(c, r));
    CHECK(std::abs(rep.kraus_form - (1.0 - overlap / d)) < 1e-10);
  }
}

TEST_CASE("kraus operators reproduce the channel and their cost is remix-invariant") {
  CounterRng rng(29, 7);
  const int d = 3;
  const JamiolkowskiMatrix j = random_channel(rng, d);
  const KrausSet ks = kraus_from_choi(choi_from_jamiolkowski(j));

  ComplexMatrix complete(d, d);
  for (const ComplexMatrix& e : ks.operators) complete += e.adjoint() * e;
  CHECK(max_abs_diff(complete, ComplexMatrix::identity(d)) < 1e-8);

  const HermitianMatrix x = random_hermitian(rng, d);
  ComplexMatrix applied(d, d);
  for (const ComplexMatrix& e : ks.operators) applied += e * x.mat() * e.adjoint();
  CHECK(max_abs_diff(applied, channel_apply(j, x).mat()) < 1e-9);

  const DensityMatrix rho{random_density(rng, d)};
  const double base = kraus_cost(rho, ks, d);
  const int m = static_cast<int>(ks.operators.size());
  const ComplexMatrix v = random_unitary(rng, m);
  KrausSet mixed;
  for (int r = 0; r < m; ++r) {
    ComplexMatrix f(d, d);
    for (int c = 0; c < m; ++c) {
      ComplexMatrix term = ks.operators[c];
      term *= v(r, c);
      f += term;
    }
    mixed.operators.push_back(std::move(f));
  }
  CHECK(std::abs(kraus_cost(rho, mixed, d) - base) < 1e-10);

  // identity channel: a single operator acting as the identity map
  const KrausSet id_ks = kraus_from_choi(choi_from_jamiolkowski(identity_channel(d)));
  CHECK(id_ks.operators.size() == 1);
  const ComplexMatrix& e0 = id_ks.operators.front();
  CHECK(max_abs_diff(e0 * x.mat() * e0.adjoint(), x.mat()) < 1e-10);
}

TEST_CASE("commuting cost: formula, plan admissibility, and achievability") {
  CHECK(std::abs(commuting_cost({1.0, 0.0}, {0.0, 1.0}).value - 1.0) < 1e-14);
  CHECK(std::abs(commuting_cost({0.3, 0.7}, {0.3, 0.7}).value) < 1e-14);

  CounterRng rng(31, 8);
  for (int d : {2, 3, 4}) {
    for (int t = 0; t < 5; ++t) {
      const std::vector<double> p = random_distribution(rng, d);
      const std::vector<double> q = random_distribution(rng, d);
      const CommutingResult cr = commuting_cost(p, q);

      // direct re-evaluation of (1/d)(d - sum_ij p_i sqrt(s_i s_j))
      double direct = 0.0;
      std::vector<double> s(d);
      for (int i = 0; i < d; ++i)
        s[i] = p[i] > 1e-15 ? std::min(1.0, q[i] / p[i]) : 1.0;
      for (int i = 0; i < d; ++i)
        for (int jj = 0; jj < d; ++jj) direct += p[i] * std::sqrt(s[i] * s[jj]);
      CHECK(std::abs(cr.value - (d - direct) / d) < 1e-13);
      CHECK(cr.value >= -1e-15);

      for (int i = 0; i < d; ++i) {
        double col = 0.0;
        for (int jj = 0; jj < d; ++jj) {
          CHECK(cr.plan.p_given(jj, i) >= -1e-15);
          col += cr.plan.p_given(jj, i);
        }
        CHECK(std::abs(col - 1.0) < 1e-12);
      }
      for (int jj = 0; jj < d; ++jj) {
        double out = 0.0;
        for (int i = 0; i < d; ++i) out += cr.plan.p_given(jj, i) * p[i];
        CHECK(std::abs(out - q[jj]) < 1e-10);
      }

      const EigenDecomposition ed = herm_eig(cr.choi.matrix);
      int rank = 0;
      for (double lam : ed.eigenvalues)
        if (lam > 1e-9) ++rank;
      CHECK(rank <= d * d - d + 1);

      const JamiolkowskiMatrix jplan = jamiolkowski_from_choi(cr.choi);
      CHECK(std::abs(cost_of_plan(unitary_invariant_K(d, true), diag_state(p), jplan) -
                     cr.value) < 1e-11);
    }
  }
  CHECK_THROWS_AS(commuting_cost({0.5, 0.6}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(commuting_cost({1.0}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("classical restriction never beats the quantum plan") {
  CHECK(std::abs(classical_restricted_cost({0.5, 0.5}, {0.5, 0.5}) - 0.5) < 1e-15);
  CHECK(std::abs(classical_restricted_cost({1.0, 0.0}, {0.0, 1.0}) - 1.0) < 1e-15);
  CHECK(std::abs(classical_restricted_cost({1.0, 0.0}, {0.5, 0.5}) - 0.75) < 1e-15);

  CounterRng rng(37, 9);
  for (int t = 0; t < 10; ++t) {
    const int d = 2 + t % 3;
    const std::vector<double> p = random_distribution(rng, d);
    const std::vector<double> q = random_distribution(rng, d);
    CHECK(classical_restricted_cost(p, q) >= commuting_cost(p, q).value - 1e-12);
  }
}

TEST_CASE("pure state closed form and the rotation achieving it") {
  for (int d : {2, 3, 4}) {
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const PureStateCost pc = pure_state_cost(alpha, d);
      CHECK(std::abs(pc.value - (1.0 - alpha) * (d + 2.0 * alpha)) < 1e-14);
      CHECK(max_abs_diff(pc.optimal_u.adjoint() * pc.optimal_u,
                         ComplexMatrix::identity(d)) < 1e-12);
      CHECK(std::abs(pc.optimal_u(0, 0) - Complex(alpha)) < 1e-14);
      // the rotation's channel attains the value on |0><0|
      CHECK(std::abs(cost_of_plan(unitary_invariant_K(d, false), basis_state(d),
                                  unitary_channel(pc.optimal_u)) -
                     pc.value) < 1e-10);
    }
  }
  CHECK(std::abs(pure_state_cost(1.0, 5).value) < 1e-15);
  CHECK_THROWS_AS(pure_state_cost(1.5, 2), std::invalid_argument);
  CHECK_THROWS_AS(pure_state_cost(0.5, 1), std::invalid_argument);
}

TEST_CASE("unitary channel construction validates and conjugates") {
  CounterRng rng(41, 10);
  const ComplexMatrix u = random_unitary(rng, 3);
  const JamiolkowskiMatrix j = unitary_channel(u);
  const HermitianMatrix x = random_hermitian(rng, 3);
  CHECK(max_abs_diff(channel_apply(j, x).mat(), u * x.mat() * u.adjoint()) < 1e-10);

  ComplexMatrix bad = u;
  bad(0, 0) += 0.1;
  CHECK_THROWS_AS(unitary_channel(bad), std::invalid_argument);
}

TEST_CASE("unitary-restricted search: exact cases and dominance") {
  CounterRng rng(43, 11);

  const DensityMatrix rho{random_density(rng, 3)};
  CHECK(unitary_restricted_cost(rho, rho) < 1e-9);

  // pure isospectral pair: matches the closed form
  const double alpha = 0.4;
  const int d = 4;
  const double expect = (1.0 - alpha) * (d + 2.0 * alpha);
  CHECK(std::abs(unitary_restricted_cost(basis_state(d), alpha_state(alpha, d)) -
                 expect) < 1e-4);

  // mixed isospectral qubits: between the SDP and the generating rotation
  const DensityMatrix r2{random_density(rng, 2)};
  const ComplexMatrix v = random_unitary(rng, 2);
  const DensityMatrix s2{HermitianMatrix(v * r2.matrix.mat() * v.adjoint(), 1e-10)};
  const double ur = unitary_restricted_cost(r2, s2);
  const double sdp = transport_cost(unitary_invariant_K(2, false), r2, s2).value;
  CHECK(ur >= sdp - 1e-5);
  Complex trv = v.trace(), trrv = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) trrv += r2.matrix(r, c) * v(c, r);
  CHECK(ur <= 2.0 - std::real(std::conj(trv) * trrv) + 1e-9);

  CHECK_THROWS_AS(unitary_restricted_cost(basis_state(2), qubit_diag(0.7)),
                  std::invalid_argument);
}

TEST_CASE("pinching lower bound holds and is tight on diagonal targets") {
  CounterRng rng(47, 12);
  for (int d : {2, 3}) {
    const DensityMatrix rho = diag_state(random_distribution(rng, d));
    const DensityMatrix sigma{random_density(rng, d)};
    const PinchingCheck pc = pinching_bound_check(rho, sigma);
    CHECK(pc.holds);
    CHECK(pc.lhs >= pc.rhs - 1e-6);
  }
  const DensityMatrix rho = diag_state({0.6, 0.4});
  const DensityMatrix sigma = diag_state({0.2, 0.8});
  const PinchingCheck pc = pinching_bound_check(rho, sigma);
  CHECK(std::abs(pc.lhs - pc.rhs) < 2e-6);

  CHECK_THROWS_AS(pinching_bound_check(plus_state(), sigma), std::invalid_argument);
}

TEST_CASE("embedded cost: reduction, pure pairs, and the commuting closed form") {
  CounterRng rng(53, 13);
  const DensityMatrix rho{random_density(rng, 2)};
  const DensityMatrix sigma{random_density(rng, 2)};
  const double base = transport_cost(unitary_invariant_K(2, true), rho, sigma).value;
  CHECK(std::abs(embedded_cost(rho, sigma, 2) - base) < 1e-5);

  const double alpha = 0.3;
  CHECK(std::abs(embedded_cost(basis_state(2), alpha_state(alpha, 2), 5) -
                 (1.0 - alpha) * (5.0 + 2.0 * alpha) / 5.0) < 1e-4);

  // commuting pair: (1/d)(d - N(M + d - n)) with N = sum p_i sqrt(s_i),
  // M = sum sqrt(s_j)
  const std::vector<double> p{0.8, 0.2};
  const std::vector<double> q{0.5, 0.5};
  std::vector<double> s(2);
  for (int i = 0; i < 2; ++i) s[i] = std::min(1.0, q[i] / p[i]);
  const double nsum = p[0] * std::sqrt(s[0]) + p[1] * std::sqrt(s[1]);
  const double msum = std::sqrt(s[0]) + std::sqrt(s[1]);
  for (int d : {2, 4, 6}) {
    const double closed = (d - nsum * (msum + d - 2)) / d;
    CHECK(std::abs(embedded_cost(diag_state(p), diag_state(q), d) - closed) < 1e-5);
  }

  CHECK_THROWS_AS(embedded_cost(rho, sigma, 1), std::invalid_argument);
}

TEST_CASE("k-infinity limit: closed form, frozen value, and embedding trend") {
  CounterRng rng(59, 14);
  const DensityMatrix rho{random_density(rng, 2)};
  CHECK(k_infinity(rho, rho) < 1e-6);

  const double frozen = k_infinity(diag_state({1.0, 0.0}), diag_state({0.5, 0.5}));
  CHECK(std::abs(frozen - (1.0 - 1.0 / std::sqrt(2.0))) < 1e-6);

  for (int t = 0; t < 3; ++t) {
    const std::vector<double> p = random_distribution(rng, 2);
    const std::vector<double> q = random_distribution(rng, 2);
    double expect = 1.0;
    for (int i = 0; i < 2; ++i)
      expect -= p[i] * std::sqrt(p[i] > 1e-15 ? std::min(1.0, q[i] / p[i]) : 1.0);
    CHECK(std::abs(k_infinity(diag_state(p), diag_state(q)) - expect) < 1e-5);
  }

  const DensityMatrix a = diag_state({0.9, 0.1});
  const DensityMatrix b = diag_state({0.4, 0.6});
  const double kinf = k_infinity(a, b);
  const double k8 = embedded_cost(a, b, 8);
  const double k32 = embedded_cost(a, b, 32);
  CHECK(k8 >= k32 - 1e-6);
  CHECK(k32 >= kinf - 1e-6);
  CHECK(k32 - kinf < 0.02);
}

TEST_CASE("symmetry gap and the discontinuity probe") {
  const CostMatrix k = unitary_invariant_K(2, true);
  const DensityMatrix rho = basis_state(2);
  CHECK(std::abs(symmetry_gap(k, rho, rho)) < 2e-6);

  // sigma = (1-p)|0><0| + p 1/2 at p = 0.5
  const DensityMatrix sigma = qubit_diag(0.75);
  CHECK(std::abs(symmetry_gap(k, rho, sigma)) > 1e-4);

  // rho(eps) = (1-eps)|0><0| + eps 1/2 against |+><+|: full-rank input forces
  // the replacement coupling, value 3/4; the pure endpoint drops to 1/2
  const double eps = 0.01;
  const DensityMatrix rho_eps = qubit_diag(1.0 - eps / 2.0);
  CHECK(std::abs(transport_cost(k, rho_eps, plus_state()).value - 0.75) < 1e-5);
  CHECK(std::abs(transport_cost(k, rho, plus_state()).value - 0.5) < 1e-4);
}

TEST_CASE("dual cone membership: identity, the invariant cost, and a negative") {
  const CostMatrix ident{HermitianMatrix(ComplexMatrix::identity(4)), {2, 2}, false};
  CHECK(in_dual_choi_cone(ident));
  CHECK(in_dual_choi_cone(unitary_invariant_K(2, false)));
  ComplexMatrix neg = ComplexMatrix::identity(4);
  neg *= Complex(-1.0);
  const CostMatrix minus{HermitianMatrix(neg), {2, 2}, false};
  CHECK_FALSE(in_dual_choi_cone(minus));
}

TEST_CASE("zero-cost generator produces dual-cone costs that vanish on identity") {
  const int d = 2;
  // singlet-like vector orthogonal to sum_i |ii>
  std::vector<Complex> w(4, 0.0);
  w[1] = 1.0 / std::sqrt(2.0);
  w[2] = -1.0 / std::sqrt(2.0);
  const CostMatrix k = jdual_izero_generate(HermitianMatrix(outer(w, w)));
  CHECK(is_zero_cost_identity(k));
  CHECK(in_dual_choi_cone(k));

  CounterRng rng(61, 15);
  for (int t = 0; t < 10; ++t) {
    const DensityMatrix rho{random_density(rng, d)};
    CHECK(std::abs(cost_of_plan(k, rho, identity_channel(d))) < 1e-10);
  }

  // a second omega: random PSD orthogonalized against the entangled vector
  std::vector<Complex> v(4);
  for (auto& z : v) z = rng.complex_normal();
  const Complex ip = (v[0] + v[3]) / 2.0;  // <phi|v>/<phi|phi> with phi = |00>+|11>
  v[0] -= ip;
  v[3] -= ip;
  const CostMatrix k2 = jdual_izero_generate(HermitianMatrix(outer(v, v)));
  CHECK(is_zero_cost_identity(k2));
  CHECK(in_dual_choi_cone(k2));

  // omega = 0 gives K = 0
  const CostMatrix kz = jdual_izero_generate(HermitianMatrix(ComplexMatrix(4, 4)));
  CHECK(kz.matrix.mat().max_abs() < 1e-15);

  CHECK_THROWS_AS(jdual_izero_generate(HermitianMatrix(max_entangled_projector(2))),
                  std::invalid_argument);
  ComplexMatrix negm = ComplexMatrix::identity(4);
  negm *= Complex(-1.0);
  CHECK_THROWS_AS(jdual_izero_generate(HermitianMatrix(negm)), std::invalid_argument);
}

TEST_CASE("dual falsifier finds negative-cost channels exactly when they exist") {
  CHECK_FALSE(stote_dual_falsify(unitary_invariant_K(2, false), 5, 0).has_value());

  ComplexMatrix neg = ComplexMatrix::identity(4);
  neg *= Complex(-1.0);
  const auto ce = stote_dual_falsify(CostMatrix{HermitianMatrix(neg), {2, 2}, false}, 5, 0);
  REQUIRE(ce.has_value());
  CHECK(ce->sample == 0);
  CHECK(ce->value < -1e-7);
  // the witness plan is trace-preserving
  CHECK(max_abs_diff(partial_trace_b(ce->j.mat(), {2, 2}),
                     ComplexMatrix::identity(2)) < 1e-5);

  ComplexMatrix flipped = swap_operator(2);
  ComplexMatrix two = ComplexMatrix::identity(4);
  two *= Complex(2.0);
  flipped -= two;
  const auto ce2 =
      stote_dual_falsify(CostMatrix{HermitianMatrix(flipped), {2, 2}, false}, 5, 0);
  REQUIRE(ce2.has_value());
  CHECK(ce2->value < -1e-7);
}

TEST_CASE("triangle witness search: trivial, forced, and exploratory runs") {
  const int d = 2;
  const CostMatrix zero{HermitianMatrix(ComplexMatrix(4, 4)), {2, 2}, false};
  const TriangleReport trivial = triangle_witness_search(zero, zero, zero, 12, 0);
  CHECK(trivial.samples == 12);
  CHECK(trivial.triples == 2);
  CHECK(std::abs(trivial.min_form_value) < 1e-12);
  CHECK_FALSE(trivial.form_violation);
  CHECK_FALSE(trivial.direct_violation);

  CostMatrix big = unitary_invariant_K(d, true);
  ComplexMatrix scaled = big.matrix.mat();
  scaled *= Complex(3.0);
  const CostMatrix kac{HermitianMatrix(scaled), {d, d}, false};
  const TriangleReport forced = triangle_witness_search(zero, zero, kac, 11, 0);
  CHECK(forced.direct_violation);
  CHECK(forced.min_direct_slack < -1e-5);

  const CostMatrix kt = unitary_invariant_K(d, true);
  const TriangleReport rep = triangle_witness_search(kt, kt, kt, 30, 1);
  CHECK(rep.samples == 30);
  CHECK(rep.triples == 3);
  CHECK(rep.min_form_value > -1.0);
  CHECK(rep.min_form_value < 10.0);
}

TEST_CASE("property checks: mixing in the second argument and tensor bounds") {
  const CostMatrix k = unitary_invariant_K(2, true);
  Ensemble mix;
  mix.weights = {0.5, 0.5};
  mix.components.push_back(basis_state(2));
  mix.components.push_back(diag_state({0.0, 1.0}));
  const DensityMatrix rho = qubit_diag(0.5);
  const PropertyReport rep = property_checks(k, rho, mix, 0);
  CHECK(rep.ok);
  CHECK(rep.subadditivity_slack <= -0.5);  // lhs is 0, each branch costs 3/4
  CHECK(rep.tensor_product_slack <= 1e-5);
  CHECK(rep.tensor_sum_slack <= 1e-5);

  Ensemble single;
  single.weights = {1.0};
  single.components.push_back(diag_state({0.3, 0.7}));
  const PropertyReport eq = property_checks(k, rho, single, 0);
  CHECK(std::abs(eq.subadditivity_slack) < 2e-6);

  Ensemble broken;
  broken.weights = {0.5};
  broken.components.push_back(basis_state(2));
  broken.components.push_back(basis_state(2));
  CHECK_THROWS_AS(property_checks(k, rho, broken, 0), std::invalid_argument);
}

TEST_CASE("tensor-product plans obey the exact composition identities") {
  CounterRng rng(67, 16);
  const int d = 2;
  const CostMatrix k = unitary_invariant_K(d, true);
  const DensityMatrix r1{random_density(rng, d)};
  const DensityMatrix r2{random_density(rng, d)};
  const JamiolkowskiMatrix j1 = random_channel(rng, d);
  const JamiolkowskiMatrix j2 = random_channel(rng, d);

  const ComplexMatrix j12m = oracle_regroup(tensor(j1.matrix.mat(), j2.matrix.mat()), d, d);
  const JamiolkowskiMatrix j12{HermitianMatrix(j12m, 1e-9), {d * d, d * d}};
  const DensityMatrix r12{HermitianMatrix(tensor(r1.matrix.mat(), r2.matrix.mat()))};

  const double c1 = cost_of_plan(k, r1, j1);
  const double c2 = cost_of_plan(k, r2, j2);

  // sum cost splits exactly
  const ComplexMatrix id4 = ComplexMatrix::identity(d * d);
  ComplexMatrix ksum = tensor(k.matrix.mat(), id4);
  ksum += tensor(id4, k.matrix.mat());
  const CostMatrix k_sum{HermitianMatrix(oracle_regroup(ksum, d, d)), {d * d, d * d}, false};
  CHECK(std::abs(cost_of_plan(k_sum, r12, j12) - (c1 + c2)) < 1e-10);

  // product cost carries the imaginary cross term of the one-sided traces
  const CostMatrix k_prod{
      HermitianMatrix(oracle_regroup(tensor(k.matrix.mat(), k.matrix.mat()), d, d)),
      {d * d, d * d}, false};
  const Complex t1 = one_sided_cost(k, r1, j1);
  const Complex t2 = one_sided_cost(k, r2, j2);
  CHECK(std::abs(cost_of_plan(k_prod, r12, j12) - std::real(t1 * t2)) < 1e-10);
  CHECK(std::abs(std::real(t1) - c1) < 1e-12);
}
