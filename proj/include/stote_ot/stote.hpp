#pragma once

#include <string>
#include <vector>

#include "stote_ot/linalg.hpp"

namespace stote_ot {

struct ValidationReport {
  struct Item {
    std::string invariant;
    double magnitude = 0.0;
  };
  bool ok = true;
  std::vector<Item> violations;

  void fail(std::string invariant, double magnitude) {
    ok = false;
    violations.push_back({std::move(invariant), magnitude});
  }
};

// Unit-trace PSD matrix. Construction enforces trace within 1e-10 and
// smallest eigenvalue above -1e-10.
struct DensityMatrix {
  explicit DensityMatrix(const HermitianMatrix& m);
  HermitianMatrix matrix;
  int dim() const { return matrix.dim(); }
};

// Channel in time-symmetric form: Tr_B J = 1 and J^{T_A} PSD (both to 1e-8).
// Subsystem A is the input.
struct JamiolkowskiMatrix {
  JamiolkowskiMatrix(const HermitianMatrix& m, BipartiteDims d);
  HermitianMatrix matrix;
  BipartiteDims dims;
};

// Same channel with the partial transpose already applied: C PSD, Tr_B C = 1.
struct ChoiMatrix {
  ChoiMatrix(const HermitianMatrix& m, BipartiteDims d);
  HermitianMatrix matrix;
  BipartiteDims dims;
};

ChoiMatrix choi_from_jamiolkowski(const JamiolkowskiMatrix& j);
JamiolkowskiMatrix jamiolkowski_from_choi(const ChoiMatrix& c);

// Two-time state (rho (x) 1) * J: Hermitian, unit trace, marginals are the
// input state and its image. Not PSD in general.
struct Stote {
  Stote(const HermitianMatrix& m, BipartiteDims d);
  HermitianMatrix matrix;
  BipartiteDims dims;
};

struct MultiStote {
  HermitianMatrix matrix;
  std::vector<int> dims;  // one entry per time slot
};

ValidationReport validate_density(const HermitianMatrix& m);
ValidationReport validate_jamiolkowski(const HermitianMatrix& m, BipartiteDims dims);

// An input marginal eigenvalue below this is treated as zero: the direct
// entrywise inversion is ill-posed there and the completion SDP takes over.
inline constexpr double kFaithfulEps = 1e-9;

// Tr_A[(x (x) 1) J]
HermitianMatrix channel_apply(const JamiolkowskiMatrix& j, const HermitianMatrix& x);
ComplexMatrix channel_apply_raw(const ComplexMatrix& j, BipartiteDims dims,
                                const ComplexMatrix& x);

Stote make_stote(const DensityMatrix& rho, const JamiolkowskiMatrix& j);

struct StoteInversion {
  HermitianMatrix rho;       // Tr_B omega
  HermitianMatrix j;         // recovered two-point object
  ValidationReport report;   // JamiolkowskiMatrix invariants of j
  bool used_sdp = false;
  // Largest x with J^{T_A} >= x*1 over all admissible completions; for the
  // direct path simply the smallest eigenvalue of J^{T_A}. Nonnegative
  // exactly when omega is a genuine two-time state.
  double slack = 0.0;
};

// Entrywise inversion of omega = (rho (x) 1) * J in the eigenbasis of
// rho = Tr_B omega, weights 2/(p_i + p_j). Faithful rho inverts directly;
// otherwise the undetermined block is completed by SDP. Throws on a
// marginal that is not a state.
StoteInversion invert_stote(const HermitianMatrix& omega, BipartiteDims dims,
                            double sdp_tol = 1e-8, int sdp_max_iter = 200000);

// Completion SDP regardless of faithfulness: pins the determined entries,
// enforces Tr_B J = 1 and maximizes x subject to J^{T_A} >= x*1.
StoteInversion invert_stote_sdp(const HermitianMatrix& omega, BipartiteDims dims,
                                double sdp_tol = 1e-8, int sdp_max_iter = 200000);

// int_0^inf exp(-t rho/2) omega exp(-t rho/2) dt, evaluated in rho's
// eigenbasis where it reduces to the same 2/(p_i + p_j) weights. Requires
// faithful rho. Positive map: PSD input gives PSD output.
HermitianMatrix integral_inverse(const HermitianMatrix& omega, const DensityMatrix& rho);

// Link composition Tr_mid[(J1 (x) 1) * (1 (x) J2)] for chained channels.
JamiolkowskiMatrix compose(const JamiolkowskiMatrix& j1, const JamiolkowskiMatrix& j2);

// Left-associated chain ((rho * J1) * J2) * ... over n+1 time slots.
MultiStote multi_time_stote(const DensityMatrix& rho,
                            const std::vector<JamiolkowskiMatrix>& chain);

}  // namespace stote_ot
