#pragma once

#include <cmath>
#include <cstdint>

#include "stote_ot/linalg.hpp"

namespace stote_ot {

// Counter-based generator: output is a pure function of (seed, stream, counter),
// so parallel workers draw from disjoint streams without shared state and a
// run is reproducible from the seed alone.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed, uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))), ctr_(0) {}

  uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++ctr_); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double normal() {
    const double u = uniform_pos();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
  }

  Complex complex_normal() { return Complex(normal(), normal()); }

 private:
  // splitmix64 finalizer
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  uint64_t key_;
  uint64_t ctr_;
};

// Ginibre matrix: i.i.d. standard complex Gaussian entries.
inline ComplexMatrix random_ginibre(CounterRng& rng, int rows, int cols) {
  ComplexMatrix g(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g(r, c) = rng.complex_normal();
  return g;
}

inline HermitianMatrix random_hermitian(CounterRng& rng, int n) {
  ComplexMatrix g = random_ginibre(rng, n, n);
  ComplexMatrix h = g.adjoint();
  h += g;
  h *= Complex(0.5);
  return HermitianMatrix(h);
}

// Haar-ish unitary: Gram-Schmidt on a Ginibre matrix with positive diagonal
// phase fix; deterministic given the rng state.
inline ComplexMatrix random_unitary(CounterRng& rng, int n) {
  ComplexMatrix g = random_ginibre(rng, n, n);
  ComplexMatrix q(n, n);
  for (int c = 0; c < n; ++c) {
    std::vector<Complex> v(n);
    for (int r = 0; r < n; ++r) v[r] = g(r, c);
    for (int prev = 0; prev < c; ++prev) {
      Complex ip = 0.0;
      for (int r = 0; r < n; ++r) ip += std::conj(q(r, prev)) * v[r];
      for (int r = 0; r < n; ++r) v[r] -= ip * q(r, prev);
    }
    double nrm = 0.0;
    for (int r = 0; r < n; ++r) nrm += std::norm(v[r]);
    nrm = std::sqrt(nrm);
    Complex phase = v[c] == Complex(0.0) ? Complex(1.0) : v[c] / std::abs(v[c]);
    for (int r = 0; r < n; ++r) q(r, c) = v[r] / (nrm * phase);
  }
  return q;
}

// Random Choi matrix of a channel: PSD with Tr_B C = 1, obtained by
// normalizing a Wishart matrix with its own B-marginal.
inline ComplexMatrix random_choi_mat(CounterRng& rng, int da, int db) {
  const int n = da * db;
  ComplexMatrix g = random_ginibre(rng, n, n);
  ComplexMatrix m = g * g.adjoint();
  const EigenDecomposition ed = herm_eig(HermitianMatrix(partial_trace_b(m, {da, db})));
  ComplexMatrix wi(da, da);  // (Tr_B m)^{-1/2}
  for (int k = 0; k < da; ++k) {
    const double s = 1.0 / std::sqrt(ed.eigenvalues[k]);
    for (int r = 0; r < da; ++r)
      for (int c = 0; c < da; ++c)
        wi(r, c) += s * ed.eigenvectors(r, k) * std::conj(ed.eigenvectors(c, k));
  }
  const ComplexMatrix lift = tensor(wi, ComplexMatrix::identity(db));
  return lift * m * lift;
}

// Jamiolkowski matrix of a random channel.
inline ComplexMatrix random_jamiolkowski_mat(CounterRng& rng, int da, int db) {
  return partial_transpose_a(random_choi_mat(rng, da, db), {da, db});
}

// Wishart state mixed toward the maximally mixed state; smallest eigenvalue
// is bounded below by mix/n, so the result is always faithful.
inline HermitianMatrix random_density(CounterRng& rng, int n, double mix = 0.15) {
  ComplexMatrix g = random_ginibre(rng, n, n);
  ComplexMatrix w = g * g.adjoint();
  const double tr = std::real(w.trace());
  w *= Complex((1.0 - mix) / tr);
  ComplexMatrix id = ComplexMatrix::identity(n);
  id *= Complex(mix / n);
  w += id;
  return HermitianMatrix(w);
}

}  // namespace stote_ot
