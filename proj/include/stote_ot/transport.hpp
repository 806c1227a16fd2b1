#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stote_ot/conic.hpp"
#include "stote_ot/stote.hpp"

namespace stote_ot {

// Hermitian cost observable on the two-time space A (x) B.
struct CostMatrix {
  HermitianMatrix matrix;
  BipartiteDims dims;
  bool normalized = false;
};

// d*1 - S, or 1 - S/d when normalized. Invariant under U (x) U conjugation.
CostMatrix unitary_invariant_K(int d, bool normalized);

// Re Tr[K (rho * J)]. The trace is real up to rounding because both factors
// are Hermitian.
double cost_of_plan(const CostMatrix& k, const DensityMatrix& rho,
                    const JamiolkowskiMatrix& j);

struct TransportResult {
  double value = 0.0;
  HermitianMatrix optimal_j;  // cone-feasible solver iterate, marginals to tol
  HermitianMatrix dual_y1;    // multiplier of Tr_B C = 1
  HermitianMatrix dual_y2;    // multiplier of the output marginal
  double dual_value = 0.0;
  double gap = 0.0;           // |value - dual_value|
  int iterations = 0;
  SolveStatus status = SolveStatus::kMaxIter;
};

// min Tr[K (rho * J)] over channels J with Tr_A[(rho (x) 1) J] = sigma,
// solved as an SDP in Choi variables: min Tr[(K * (rho (x) 1))^{T_A} C]
// subject to C >= 0, Tr_B C = 1, Tr_A[(rho^T (x) 1) C] = sigma.
TransportResult transport_cost(const CostMatrix& k, const DensityMatrix& rho,
                               const DensityMatrix& sigma, double tol = 1e-8,
                               int max_iter = 200000);

struct DualBound {
  double value = 0.0;  // certified: never above the true optimum
  HermitianMatrix y1;
  HermitianMatrix y2;
  SolveStatus status = SolveStatus::kMaxIter;
};

// Independent lower bound: max Tr[Y1] + Tr[sigma Y2] subject to
// Y1 (x) 1 + rho^T (x) Y2 <= (K * (rho (x) 1))^{T_A}, solved as its own SDP.
// The returned pair is shifted by the exact worst-case feasibility defect, so
// the bound holds regardless of solver tolerance.
DualBound dual_bound(const CostMatrix& k, const DensityMatrix& rho,
                     const DensityMatrix& sigma, double tol = 1e-8,
                     int max_iter = 200000);

// True iff Tr[K (rho * S)] = 0 for every state rho, i.e. the identity channel
// is free. Equivalent to Tr_B[K * S] = 0.
bool is_zero_cost_identity(const CostMatrix& k);

// The same unitary-invariant cost 1 - Tr[S (rho * J)]/d computed five ways.
// All fields agree to rounding for a valid channel.
struct UiCostForms {
  double stote_form = 0.0;        // entangled-sandwich of (rho * C)
  double vector_form = 0.0;       // Re <rho| C |Phi>
  double coefficient_form = 0.0;  // eigenweighted channel matrix elements
  double real_sum_form = 0.0;     // same with the weights split per index
  double kraus_form = 0.0;        // sum over Kraus traces
  double spread() const;          // max pairwise deviation
};
UiCostForms ui_cost_forms(const DensityMatrix& rho, const JamiolkowskiMatrix& j);

struct KrausSet {
  std::vector<ComplexMatrix> operators;  // db x da each
};

// Eigendecomposition Kraus operators: C = sum_k |v_k><v_k| maps to
// E_k(s, i) = v_k[i*db + s]. Eigenvalues below 1e-12 are dropped.
KrausSet kraus_from_choi(const ChoiMatrix& c);

// 1 - (1/d) sum_k Re(conj(Tr E_k) Tr[E_k rho]). Invariant under isometric
// remixing of the set.
double kraus_cost(const DensityMatrix& rho, const KrausSet& kraus, int d);

// Stochastic coupling: column i holds the distribution p(j|i) over j.
struct ClassicalPlan {
  int d = 0;
  std::vector<double> conditional;  // row-major, (j, i) entry is p(j|i)
  std::vector<double> p, q;
  double p_given(int j, int i) const { return conditional[j * d + i]; }
};

struct CommutingResult {
  double value = 0.0;
  ClassicalPlan plan;
  ChoiMatrix choi;
};

// Closed form for commuting states with spectra p, q under 1 - S/d:
// value = (1/d) (d - sum_ij p_i sqrt(s_i s_j)), s_i = min(1, q_i/p_i)
// (s_i = 1 where p_i = 0). The returned Choi matrix achieves it exactly.
CommutingResult commuting_cost(const std::vector<double>& p,
                               const std::vector<double>& q);

// Best cost under 1 - S/d over channels whose Choi matrix is diagonal in the
// product basis: 1 - 1/d + TV(p, q)/d.
double classical_restricted_cost(const std::vector<double>& p,
                                 const std::vector<double>& q);

struct PureStateCost {
  double value = 0.0;  // for the unnormalized cost d*1 - S
  ComplexMatrix optimal_u;
};

// Cost between pure states with overlap alpha = |<psi|phi>| under d*1 - S:
// (1 - alpha)(d + 2 alpha), achieved by a rotation in the joint plane.
PureStateCost pure_state_cost(double alpha, int d);

// (1 (x) u) S (1 (x) u*): the channel x -> u x u*.
JamiolkowskiMatrix unitary_channel(const ComplexMatrix& u);

// min over unitary plans d - Re(Tr[U*] Tr[rho U]) subject to U rho U* = sigma.
// Requires isospectral inputs (eigenvalues match to 1e-8). The feasible set
// is parametrized as W P V* with P block-unitary on degenerate eigenspaces;
// maximized by seeded multistart projected ascent.
double unitary_restricted_cost(const DensityMatrix& rho, const DensityMatrix& sigma,
                               uint64_t seed = 0);

struct PinchingCheck {
  double lhs = 0.0;  // cost(rho, sigma)
  double rhs = 0.0;  // cost(rho, diag(sigma))
  bool holds = false;
};

// Verifies cost(rho, sigma) >= cost(rho, pinch(sigma)) - 1e-6 under 1 - S/d,
// pinching in the computational basis. rho must be diagonal in that basis.
PinchingCheck pinching_bound_check(const DensityMatrix& rho, const DensityMatrix& sigma,
                                   double tol = 1e-8, int max_iter = 200000);

// Cost under 1 - S_d/d of rho, sigma embedded into dimension d >= n. The
// orthogonal complement enters only through its dimension, so the SDP stays
// on the joint support: maximize Re <rho|C|Phi> + (d - n) t with
// [[u, t], [t, 1]] >= 0 and u = <rho|C|rho> linking the blocks.
double embedded_cost(const DensityMatrix& rho, const DensityMatrix& sigma, int d,
                     double tol = 1e-8, int max_iter = 200000);

// Limit of embedded_cost as d grows: 1 - sqrt(max <rho|C|rho>) over
// admissible couplings.
double k_infinity(const DensityMatrix& rho, const DensityMatrix& sigma,
                  double tol = 1e-8, int max_iter = 200000);

// transport_cost(k, rho, sigma) - transport_cost(k, sigma, rho).
double symmetry_gap(const CostMatrix& k, const DensityMatrix& rho,
                    const DensityMatrix& sigma, double tol = 1e-8,
                    int max_iter = 200000);

// True iff K^{T_A} = omega + A (x) 1 for some omega >= 0 and traceless
// Hermitian A, decided by maximizing the slack x with omega >= x*1.
// Membership guarantees nonnegative transport cost for every state pair.
bool in_dual_choi_cone(const CostMatrix& k, double tol = 1e-8,
                       int max_iter = 200000);

// From omega >= 0 with <Phi|omega|Phi> = 0, builds
// K = omega^{T_A} - Tr_B[S * omega^{T_A}] (x) 1, which lies in the dual cone
// and gives the identity channel cost zero.
CostMatrix jdual_izero_generate(const HermitianMatrix& omega);

struct DualConeCounterexample {
  HermitianMatrix rho;
  HermitianMatrix j;
  double value = 0.0;
  int sample = 0;
};

// Searches for a state rho and channel J with Tr[K (rho * J)] < -1e-7 by
// minimizing over all channels (no output constraint) for seeded random
// states. Empty result means no violation was found, not a proof.
std::optional<DualConeCounterexample> stote_dual_falsify(const CostMatrix& k,
                                                         int samples, uint64_t seed,
                                                         double tol = 1e-8,
                                                         int max_iter = 200000);

struct TriangleReport {
  double min_form_value = 0.0;    // most negative Tr[K' Q3] over samples
  double min_direct_slack = 0.0;  // most negative cost(AB) + cost(BC) - cost(AC)
  int samples = 0;
  int triples = 0;
  bool form_violation = false;    // min_form_value < -1e-7
  bool direct_violation = false;  // min_direct_slack < -1e-5
};

// Triangle-inequality probe. For seeded random (rho, J_AB, J_BC) evaluates
// K' = K_AB (x) 1 + 1 (x) K_BC - embed(K_AC on slots {0,2}) against the
// three-time state; a negative value witnesses that K' leaves the dual cone.
// Every tenth sample also compares the three transport costs directly.
TriangleReport triangle_witness_search(const CostMatrix& k_ab, const CostMatrix& k_bc,
                                       const CostMatrix& k_ac, int samples,
                                       uint64_t seed, double tol = 1e-8,
                                       int max_iter = 200000);

struct Ensemble {
  std::vector<double> weights;
  std::vector<DensityMatrix> components;
};

struct PropertyReport {
  // Each slack is lhs - rhs of an inequality that should be <= 0.
  double subadditivity_slack = 0.0;   // cost(rho, mix) - sum_x w_x cost(rho, comp_x)
  double tensor_product_slack = 0.0;  // cost under K (x) K minus the product
  double tensor_sum_slack = 0.0;      // cost under K (x) 1 + 1 (x) K minus the sum
  bool ok = false;                    // all slacks <= 1e-5
};

// Checks mixing subadditivity in the second argument on the given ensemble,
// and both tensor inequalities on a seeded random pair of problems with
// K1 = K2 = k.
PropertyReport property_checks(const CostMatrix& k, const DensityMatrix& rho,
                               const Ensemble& ensemble, uint64_t seed,
                               double tol = 1e-8, int max_iter = 200000);

}  // namespace stote_ot
