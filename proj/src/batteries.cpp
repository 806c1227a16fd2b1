#include "stote_ot/batteries.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "stote_ot/linalg.hpp"
#include "stote_ot/stote.hpp"

namespace stote_ot {

namespace {

constexpr int kDefaultMaxIter = 200000;

PropertyResult finish(std::string name, int samples, double worst, double limit) {
  PropertyResult r;
  r.name = std::move(name);
  r.samples = samples;
  r.worst = worst;
  r.limit = limit;
  r.pass = worst <= limit;
  return r;
}

JamiolkowskiMatrix random_channel(CounterRng& rng, int da, int db) {
  return JamiolkowskiMatrix(
      HermitianMatrix(random_jamiolkowski_mat(rng, da, db), 1e-9), {da, db});
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

double frobenius_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix d = a;
  d -= b;
  return d.frobenius_norm();
}

// (A1 B1)(A2 B2) tensor-of-problems layout to the joint (A1 A2)(B1 B2) one.
ComplexMatrix regroup_to_joint(const ComplexMatrix& m, BipartiteDims d1,
                               BipartiteDims d2) {
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

// Two-time object of a depolarising evolution of |0><0| at p = 1/2, read
// backwards. Its recovered map is trace-preserving but not completely
// positive, so the inversion must flag it.
HermitianMatrix depolarised_reverse() {
  const double p = 0.5;
  ComplexMatrix q(4, 4);
  q(0, 0) = 2.0 - p;
  q(1, 1) = p;
  q(1, 2) = 1.0 - p;
  q(2, 1) = 1.0 - p;
  q *= Complex(0.5);
  return HermitianMatrix(swap_subsystems(q, {2, 2}));
}

}  // namespace

double unitary_invariance_slack(CounterRng& rng, int d, double tol, int max_iter) {
  const DensityMatrix rho{random_density(rng, d)};
  const DensityMatrix sigma{random_density(rng, d)};
  const ComplexMatrix u = random_unitary(rng, d);
  const CostMatrix k = unitary_invariant_K(d, true);
  const double base = transport_cost(k, rho, sigma, tol, max_iter).value;
  const DensityMatrix rho_u{
      HermitianMatrix(conjugate_by(rho.matrix.mat(), u.adjoint()), 1e-9)};
  const DensityMatrix sigma_u{
      HermitianMatrix(conjugate_by(sigma.matrix.mat(), u.adjoint()), 1e-9)};
  const double moved = transport_cost(k, rho_u, sigma_u, tol, max_iter).value;
  return std::abs(moved - base);
}

SuiteReport run_core_suite(uint64_t seed, double tol) {
  SuiteReport rep;
  rep.suite = "core";

  {
    CounterRng rng(seed, 101);
    double worst = 0.0;
    const int samples = 16;
    for (int i = 0; i < samples; ++i) {
      const int d = 2 + i % 2;
      const DensityMatrix rho{random_density(rng, d)};
      const JamiolkowskiMatrix j = random_channel(rng, d, d);
      const Stote q = make_stote(rho, j);
      const StoteInversion inv = invert_stote(q.matrix, q.dims);
      worst = std::max(worst, frobenius_diff(inv.j.mat(), j.matrix.mat()));
    }
    rep.properties.push_back(finish("stote inversion roundtrip", samples, worst, 1e-8));
  }

  {
    const StoteInversion inv = invert_stote(depolarised_reverse(), {2, 2});
    // worst is the completion slack; a genuine two-time state would have it
    // nonnegative, this one must certify failure
    rep.properties.push_back(
        finish("non-reversible reverse object is rejected", 1, inv.slack, -1e-6));
  }

  {
    CounterRng rng(seed, 103);
    double worst = 0.0;
    const int samples = 12;
    for (int i = 0; i < samples; ++i) {
      const int d = 2 + i % 2;
      const DensityMatrix rho{random_density(rng, d)};
      const JamiolkowskiMatrix j = random_channel(rng, d, d);
      worst = std::max(worst, ui_cost_forms(rho, j).spread());
    }
    rep.properties.push_back(finish("five cost forms agree", samples, worst, 1e-10));
  }

  {
    CounterRng rng(seed, 105);
    double worst = 0.0;
    const int samples = 9;
    for (int i = 0; i < samples; ++i) {
      const int d = 2 + i % 3;
      const std::vector<double> p = random_distribution(rng, d);
      const std::vector<double> q = random_distribution(rng, d);
      const CommutingResult cr = commuting_cost(p, q);
      ComplexMatrix rho(d, d);
      for (int a = 0; a < d; ++a) rho(a, a) = p[a];
      const double replay = cost_of_plan(unitary_invariant_K(d, true),
                                         DensityMatrix{HermitianMatrix(rho)},
                                         jamiolkowski_from_choi(cr.choi));
      worst = std::max(worst, std::abs(replay - cr.value));
    }
    rep.properties.push_back(
        finish("commuting plan reproduces its closed form", samples, worst, 1e-10));
  }

  {
    CounterRng rng(seed, 107);
    double worst = 0.0;
    const int samples = 8;
    for (int i = 0; i < samples; ++i) {
      const int d = 2 + i % 2;
      const DensityMatrix rho{random_density(rng, d)};
      const JamiolkowskiMatrix j = random_channel(rng, d, d);
      const KrausSet ks = kraus_from_choi(choi_from_jamiolkowski(j));
      const HermitianMatrix direct = channel_apply(j, rho.matrix);
      ComplexMatrix rebuilt(d, d);
      for (const ComplexMatrix& e : ks.operators) rebuilt += e * rho.matrix.mat() * e.adjoint();
      worst = std::max(worst, frobenius_diff(rebuilt, direct.mat()));
    }
    rep.properties.push_back(
        finish("kraus factors rebuild the channel", samples, worst, 1e-8));
  }

  {
    CounterRng rng(seed, 109);
    double worst = 0.0;
    const int samples = 6;
    const CostMatrix k2 = unitary_invariant_K(2, true);
    for (int i = 0; i < samples; ++i) {
      const DensityMatrix r1{random_density(rng, 2)};
      const DensityMatrix r2{random_density(rng, 2)};
      const JamiolkowskiMatrix j1 = random_channel(rng, 2, 2);
      const JamiolkowskiMatrix j2 = random_channel(rng, 2, 2);
      const double c1 = cost_of_plan(k2, r1, j1);
      const double c2 = cost_of_plan(k2, r2, j2);
      // joint problem on the regrouped (A1 A2)(B1 B2) space
      const BipartiteDims dd{2, 2};
      const BipartiteDims big{4, 4};
      ComplexMatrix k_sum =
          regroup_to_joint(tensor(k2.matrix.mat(), ComplexMatrix::identity(4)), dd, dd);
      k_sum += regroup_to_joint(tensor(ComplexMatrix::identity(4), k2.matrix.mat()), dd, dd);
      const DensityMatrix rr{HermitianMatrix(tensor(r1.matrix.mat(), r2.matrix.mat()))};
      const JamiolkowskiMatrix jj(
          HermitianMatrix(regroup_to_joint(tensor(j1.matrix.mat(), j2.matrix.mat()), dd, dd),
                          1e-9),
          big);
      const double joint =
          cost_of_plan(CostMatrix{HermitianMatrix(k_sum, 1e-9), big, true}, rr, jj);
      worst = std::max(worst, std::abs(joint - (c1 + c2)));
    }
    rep.properties.push_back(
        finish("tensor plans add their costs exactly", samples, worst, 1e-9));
  }

  {
    CounterRng rng(seed, 111);
    double worst = 0.0;
    const int samples = 10;
    const CostMatrix k0 = unitary_invariant_K(2, false);
    // a dual-cone generator from a random Phi-orthogonal omega
    std::vector<Complex> v(4);
    for (Complex& x : v) x = rng.complex_normal();
    const Complex ip = Complex(0.5) * (v[0] + v[3]);
    v[0] -= ip;
    v[3] -= ip;
    const CostMatrix kgen = jdual_izero_generate(HermitianMatrix(outer(v, v), 1e-12));
    const ComplexMatrix s = swap_operator(2);
    const JamiolkowskiMatrix ident(HermitianMatrix(s), {2, 2});
    for (int i = 0; i < samples; ++i) {
      const DensityMatrix rho{random_density(rng, 2)};
      worst = std::max(worst, std::abs(cost_of_plan(k0, rho, ident)));
      worst = std::max(worst, std::abs(cost_of_plan(kgen, rho, ident)));
    }
    rep.properties.push_back(finish("identity plans cost nothing", samples, worst, 1e-10));
  }

  (void)tol;
  for (const PropertyResult& p : rep.properties) rep.ok = rep.ok && p.pass;
  return rep;
}

SuiteReport run_sdp_suite(uint64_t seed, double tol) {
  SuiteReport rep;
  rep.suite = "sdp";
  double worst_gap = 0.0;
  int gap_samples = 0;
  auto track = [&](const TransportResult& r) {
    worst_gap = std::max(worst_gap, r.gap);
    ++gap_samples;
    return r.value;
  };

  {
    double worst = 0.0;
    int samples = 0;
    for (const auto& [d, alpha] : {std::pair<int, double>{2, 0.0},
                                   {2, 0.5},
                                   {2, 1.0 / std::sqrt(2.0)},
                                   {3, 0.6}}) {
      ComplexMatrix rho(d, d);
      rho(0, 0) = 1.0;
      std::vector<Complex> psi(d);
      psi[0] = alpha;
      psi[1] = std::sqrt(1.0 - alpha * alpha);
      const DensityMatrix sigma{HermitianMatrix(outer(psi, psi))};
      const double got = track(transport_cost(unitary_invariant_K(d, false),
                                              DensityMatrix{HermitianMatrix(rho)}, sigma,
                                              tol, kDefaultMaxIter));
      worst = std::max(worst, std::abs(got - pure_state_cost(alpha, d).value));
      ++samples;
    }
    rep.properties.push_back(finish("pure-state closed form", samples, worst, 1e-4));
  }

  {
    CounterRng rng(seed, 201);
    double worst = 0.0;
    int samples = 0;
    for (int d = 2; d <= 3; ++d) {
      for (int i = 0; i < 2; ++i) {
        const std::vector<double> p = random_distribution(rng, d);
        const std::vector<double> q = random_distribution(rng, d);
        ComplexMatrix rm(d, d), sm(d, d);
        for (int a = 0; a < d; ++a) {
          rm(a, a) = p[a];
          sm(a, a) = q[a];
        }
        const double got = track(transport_cost(unitary_invariant_K(d, true),
                                                DensityMatrix{HermitianMatrix(rm)},
                                                DensityMatrix{HermitianMatrix(sm)}, tol,
                                                kDefaultMaxIter));
        worst = std::max(worst, std::abs(got - commuting_cost(p, q).value));
        ++samples;
      }
    }
    rep.properties.push_back(finish("commuting closed form", samples, worst, 1e-5));
  }

  {
    CounterRng rng(seed, 203);
    double worst = 0.0;
    const int samples = 3;
    for (int i = 0; i < samples; ++i) {
      const int d = 2 + i % 2;
      const DensityMatrix rho{random_density(rng, d)};
      worst = std::max(worst, std::abs(track(transport_cost(
                                  unitary_invariant_K(d, true), rho, rho, tol,
                                  kDefaultMaxIter))));
    }
    rep.properties.push_back(finish("identical states cost nothing", samples, worst, 1e-6));
  }

  {
    CounterRng rng(seed, 205);
    double worst = -1.0;
    const int samples = 4;
    for (int i = 0; i < samples; ++i) {
      const DensityMatrix rho{random_density(rng, 2)};
      const DensityMatrix sigma{random_density(rng, 2)};
      const CostMatrix k = unitary_invariant_K(2, true);
      const double primal = track(transport_cost(k, rho, sigma, tol, kDefaultMaxIter));
      const DualBound b = dual_bound(k, rho, sigma, tol, kDefaultMaxIter);
      worst = std::max(worst, b.value - primal);
    }
    rep.properties.push_back(
        finish("dual certificate stays below the primal", samples, worst, 1e-7));
  }

  {
    CounterRng rng(seed, 207);
    double worst = 0.0;
    const int samples = 4;
    for (int i = 0; i < samples; ++i) {
      const int d = 2 + i % 2;
      worst = std::max(worst, unitary_invariance_slack(rng, d, tol, kDefaultMaxIter));
      gap_samples += 2;
    }
    rep.properties.push_back(
        finish("unitary invariance of the optimal cost", samples, worst, 1e-5));
  }

  rep.properties.push_back(finish("duality gap closes", gap_samples, worst_gap, 1e-5));
  for (const PropertyResult& p : rep.properties) rep.ok = rep.ok && p.pass;
  return rep;
}

SuiteReport run_limits_suite(uint64_t seed, double tol) {
  SuiteReport rep;
  rep.suite = "limits";
  CounterRng rng(seed, 301);
  const int samples = 3;
  double gap8 = 0.0, gap32 = 0.0, gap128 = 0.0, mono = -1.0;
  for (int i = 0; i < samples; ++i) {
    const DensityMatrix rho{random_density(rng, 2)};
    const DensityMatrix sigma{random_density(rng, 2)};
    const double kinf = k_infinity(rho, sigma, tol, kDefaultMaxIter);
    const double k8 = embedded_cost(rho, sigma, 8, tol, kDefaultMaxIter);
    const double k32 = embedded_cost(rho, sigma, 32, tol, kDefaultMaxIter);
    const double k128 = embedded_cost(rho, sigma, 128, tol, kDefaultMaxIter);
    gap8 = std::max(gap8, k8 - kinf);
    gap32 = std::max(gap32, k32 - kinf);
    gap128 = std::max(gap128, k128 - kinf);
    mono = std::max(mono, std::max(k32 - k8, k128 - k32));
  }
  rep.properties.push_back(finish("embedding gap at 4x support", samples, gap8, 0.5));
  rep.properties.push_back(finish("embedding gap at 16x support", samples, gap32, 0.1));
  rep.properties.push_back(finish("embedding gap at 64x support", samples, gap128, 0.01));
  rep.properties.push_back(
      finish("embedding cost shrinks with dimension", samples, mono, 1e-6));

  {
    CounterRng crng(seed, 303);
    double worst = 0.0;
    const int csamples = 4;
    for (int i = 0; i < csamples; ++i) {
      const std::vector<double> p = random_distribution(crng, 2);
      const std::vector<double> q = random_distribution(crng, 2);
      ComplexMatrix rm(2, 2), sm(2, 2);
      for (int a = 0; a < 2; ++a) {
        rm(a, a) = p[a];
        sm(a, a) = q[a];
      }
      const double kinf = k_infinity(DensityMatrix{HermitianMatrix(rm)},
                                     DensityMatrix{HermitianMatrix(sm)}, tol,
                                     kDefaultMaxIter);
      double closed = 1.0;
      for (int a = 0; a < 2; ++a)
        closed -= p[a] * std::sqrt(std::min(1.0, q[a] / p[a]));
      worst = std::max(worst, std::abs(kinf - closed));
    }
    rep.properties.push_back(
        finish("limit matches the commuting closed form", csamples, worst, 1e-5));
  }

  for (const PropertyResult& p : rep.properties) rep.ok = rep.ok && p.pass;
  return rep;
}

}  // namespace stote_ot
