#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stote_ot/rng.hpp"
#include "stote_ot/transport.hpp"

namespace stote_ot {

// One verified property: pass iff worst <= limit.
struct PropertyResult {
  std::string name;
  int samples = 0;
  double worst = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::vector<PropertyResult> properties;
  bool ok = true;
};

// Analytic identities that need no SDP solves: inversion roundtrip, the five
// cost forms, commuting and Kraus reconstructions, tensor composition, the
// zero-cost law, and rejection of a non-reversible reverse object.
SuiteReport run_core_suite(uint64_t seed, double tol);

// Solver-backed checks: closed forms versus the SDP, duality certificates,
// unitary invariance of the optimal cost.
SuiteReport run_sdp_suite(uint64_t seed, double tol);

// Embedding dimension sweep against the infinite-dimensional limit.
SuiteReport run_limits_suite(uint64_t seed, double tol);

// |cost(U rho U*, U sigma U*) - cost(rho, sigma)| under the invariant cost
// for one seeded draw; the value must not move.
double unitary_invariance_slack(CounterRng& rng, int d, double tol, int max_iter);

}  // namespace stote_ot
