#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stote_ot/batteries.hpp"
#include "stote_ot/matrix_io.hpp"
#include "stote_ot/stote.hpp"
#include "stote_ot/transport.hpp"

namespace {

using nlohmann::json;
using namespace stote_ot;

std::string num17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kSolved: return "solved";
    case SolveStatus::kMaxIter: return "max-iter";
    default: return "infeasible-suspected";
  }
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << text;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number in list: " + item);
    vals.push_back(v);
  }
  if (vals.empty()) throw std::invalid_argument("empty number list");
  return vals;
}

DensityMatrix basis_density(int d) {
  ComplexMatrix m(d, d);
  m(0, 0) = 1.0;
  return DensityMatrix{HermitianMatrix(m)};
}

DensityMatrix alpha_density(double alpha, int d) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0,1]");
  if (d < 2) throw std::invalid_argument("alpha state needs dimension at least 2");
  std::vector<Complex> psi(d);
  psi[0] = alpha;
  psi[1] = std::sqrt(1.0 - alpha * alpha);
  return DensityMatrix{HermitianMatrix(outer(psi, psi))};
}

DensityMatrix depolarized_density(double p, int d) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("mixing weight must lie in [0,1]");
  ComplexMatrix m(d, d);
  m(0, 0) = 1.0 - p;
  for (int i = 0; i < d; ++i) m(i, i) += p / d;
  return DensityMatrix{HermitianMatrix(m)};
}

DensityMatrix diag_density(const std::vector<double>& p) {
  const int d = static_cast<int>(p.size());
  ComplexMatrix m(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = p[i];
  return DensityMatrix{HermitianMatrix(m)};
}

// Shared state sources: two files, two --diag lists, or one scenario flag
// that builds the canonical pair.
struct StateFlags {
  std::vector<std::string> diag;
  double pure_alpha = -1.0;
  double depolarized = -1.0;
  int dim = 2;
};

void add_state_flags(CLI::App* cmd, StateFlags& sf) {
  cmd->add_option("--diag", sf.diag,
                  "diagonal state from probabilities p1,p2,... (repeat for the second state)");
  cmd->add_option("--pure-alpha", sf.pure_alpha,
                  "state pair |0><0| and the pure state with overlap alpha");
  cmd->add_option("--depolarized", sf.depolarized,
                  "state pair |0><0| and its mixture with weight p toward 1/d");
  cmd->add_option("--dim", sf.dim, "dimension for constructed states")->default_val(2);
}

std::pair<DensityMatrix, DensityMatrix> resolve_states(const std::vector<std::string>& files,
                                                       const StateFlags& sf) {
  std::vector<DensityMatrix> states;
  for (const std::string& f : files)
    states.push_back(DensityMatrix{HermitianMatrix(require_hermitian(load_matrix_file(f)))});
  for (const std::string& d : sf.diag) states.push_back(diag_density(parse_doubles(d)));
  if (sf.pure_alpha >= 0.0) {
    states.push_back(basis_density(sf.dim));
    states.push_back(alpha_density(sf.pure_alpha, sf.dim));
  }
  if (sf.depolarized >= 0.0) {
    states.push_back(basis_density(sf.dim));
    states.push_back(depolarized_density(sf.depolarized, sf.dim));
  }
  if (states.size() != 2)
    throw std::invalid_argument("exactly two states are required (files or constructor flags)");
  return {states[0], states[1]};
}

BipartiteDims infer_dims(const MatrixFile& f, const std::vector<int>& flag) {
  if (flag.size() == 2) {
    BipartiteDims d{flag[0], flag[1]};
    if (d.da < 1 || d.db < 1 || d.total() != f.matrix.rows())
      throw std::invalid_argument("--dims do not factor the matrix dimension");
    return d;
  }
  if (f.dims) return *f.dims;
  const int r = static_cast<int>(std::lround(std::sqrt(double(f.matrix.rows()))));
  if (r * r != f.matrix.rows())
    throw std::invalid_argument("matrix dimension is not a square; pass --dims");
  return {r, r};
}

json matrix_json(const ComplexMatrix& m, std::optional<BipartiteDims> dims = std::nullopt) {
  return json::parse(emit_matrix_file(m, dims));
}

struct CommonFlags {
  double tol = 1e-8;
  int max_iter = 200000;
  std::uint64_t seed = 0;
  std::string output = "-";
};

void add_common_flags(CLI::App* cmd, CommonFlags& cf) {
  cmd->add_option("--tol", cf.tol, "solver tolerance")->default_val(1e-8);
  cmd->add_option("--max-iter", cf.max_iter, "solver iteration cap")->default_val(200000);
  cmd->add_option("--seed", cf.seed, "random seed")->default_val(0);
  cmd->add_option("--output", cf.output, "output path, - for stdout")->default_val("-");
}

int run_cost(const std::vector<std::string>& positionals, bool ui, bool normalized,
             const StateFlags& sf, const CommonFlags& cf) {
  std::vector<std::string> state_files = positionals;
  CostMatrix k = unitary_invariant_K(1, normalized);
  bool have_k = false;
  if (!ui) {
    if (positionals.empty())
      throw std::invalid_argument("pass a cost matrix file or --ui");
    const MatrixFile f = load_matrix_file(positionals.front());
    k = CostMatrix{require_hermitian(f), infer_dims(f, {}), normalized};
    state_files.erase(state_files.begin());
    have_k = true;
  }
  auto [rho, sigma] = resolve_states(state_files, sf);
  if (!have_k) k = unitary_invariant_K(rho.dim(), normalized);

  const TransportResult r = transport_cost(k, rho, sigma, cf.tol, cf.max_iter);
  json out;
  out["value"] = r.value;
  out["dual_value"] = r.dual_value;
  out["gap"] = r.gap;
  out["iterations"] = r.iterations;
  out["status"] = status_name(r.status);
  out["optimal_J"] = matrix_json(r.optimal_j.mat(), k.dims);
  write_output(out.dump(2) + "\n", cf.output);
  return r.status == SolveStatus::kSolved ? 0 : 3;
}

int run_invert(const std::string& file, const std::vector<int>& dims_flag,
               const CommonFlags& cf) {
  const MatrixFile f = load_matrix_file(file);
  const BipartiteDims dims = infer_dims(f, dims_flag);
  const StoteInversion inv = invert_stote(require_hermitian(f), dims, cf.tol, cf.max_iter);
  json out;
  out["rho"] = matrix_json(inv.rho.mat());
  out["J"] = matrix_json(inv.j.mat(), dims);
  out["is_valid_stote"] = inv.report.ok;
  out["slack_x"] = inv.slack;
  json viol = json::array();
  for (const auto& v : inv.report.violations)
    viol.push_back({{"invariant", v.invariant}, {"magnitude", v.magnitude}});
  out["violation_report"] = viol;
  write_output(out.dump(2) + "\n", cf.output);
  return 0;
}

void parallel_rows(int n, int jobs, const std::function<std::string(int)>& f,
                   std::vector<std::string>& rows) {
  rows.assign(n, {});
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        rows[i] = f(i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        failed.store(true);
        if (error.empty()) error = e.what();
      }
    }
  };
  const int t = std::max(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (int i = 1; i < t; ++i) pool.emplace_back(work);
  work();
  for (std::thread& th : pool) th.join();
  if (failed.load()) throw std::invalid_argument(error);
}

int run_sweep(const std::string& kind, int d, int grid, double p_rho,
              const std::vector<double>& range, const StateFlags& sf, int jobs,
              const CommonFlags& cf) {
  if (grid < 2) throw std::invalid_argument("grid must be at least 2");
  if (range.size() != 2 || range[0] < 0.0 || range[1] > 1.0 || range[0] > range[1])
    throw std::invalid_argument("range must be a pair within [0,1]");
  if (p_rho < 0.0 || p_rho > 1.0) throw std::invalid_argument("p-rho must lie in [0,1]");
  auto at = [&](int i) { return range[0] + (range[1] - range[0]) * i / (grid - 1); };

  std::string header;
  std::vector<std::string> rows;
  if (kind == "symmetry-gap") {
    header = "index,p_sigma,forward,backward,difference,dual_gap";
    const CostMatrix k = unitary_invariant_K(d, true);
    const DensityMatrix rho = depolarized_density(p_rho, d);
    parallel_rows(grid, jobs, [&](int i) {
      const DensityMatrix sigma = depolarized_density(at(i), d);
      const TransportResult f = transport_cost(k, rho, sigma, cf.tol, cf.max_iter);
      const TransportResult b = transport_cost(k, sigma, rho, cf.tol, cf.max_iter);
      return std::to_string(i) + "," + num17(at(i)) + "," + num17(f.value) + "," +
             num17(b.value) + "," + num17(f.value - b.value) + "," +
             num17(std::max(f.gap, b.gap));
    }, rows);
  } else if (kind == "unitary-vs-optimal") {
    header = "index,alpha,optimal_cost,unitary_cost,dual_gap";
    const CostMatrix k = unitary_invariant_K(d, false);
    auto mixed = [&](const DensityMatrix& pure) {
      ComplexMatrix m = pure.matrix.mat();
      m *= Complex(p_rho);
      ComplexMatrix id = ComplexMatrix::identity(d);
      id *= Complex((1.0 - p_rho) / d);
      m += id;
      return DensityMatrix{HermitianMatrix(m)};
    };
    const DensityMatrix rho = mixed(basis_density(d));
    parallel_rows(grid, jobs, [&](int i) {
      const DensityMatrix sigma = mixed(alpha_density(at(i), d));
      const TransportResult f = transport_cost(k, rho, sigma, cf.tol, cf.max_iter);
      const double uc = unitary_restricted_cost(rho, sigma, cf.seed);
      return std::to_string(i) + "," + num17(at(i)) + "," + num17(f.value) + "," +
             num17(uc) + "," + num17(f.gap);
    }, rows);
  } else if (kind == "embed-limit") {
    header = "index,embed_dim,embedded_cost,k_infinity,gap_to_limit";
    std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
    if (sf.diag.size() == 2) {
      p = parse_doubles(sf.diag[0]);
      q = parse_doubles(sf.diag[1]);
    } else if (!sf.diag.empty()) {
      throw std::invalid_argument("embed-limit needs two --diag lists or none");
    }
    if (p.size() != q.size()) throw std::invalid_argument("state dimensions differ");
    const DensityMatrix rho = diag_density(p);
    const DensityMatrix sigma = diag_density(q);
    const int n = rho.dim();
    const double kinf = k_infinity(rho, sigma, cf.tol, cf.max_iter);
    parallel_rows(grid, jobs, [&](int i) {
      const int dim = n << i;
      const double ec = embedded_cost(rho, sigma, dim, cf.tol, cf.max_iter);
      return std::to_string(i) + "," + std::to_string(dim) + "," + num17(ec) + "," +
             num17(kinf) + "," + num17(ec - kinf);
    }, rows);
  } else {
    throw std::invalid_argument("unknown sweep kind: " + kind);
  }

  std::string csv = header + "\n";
  for (const std::string& r : rows) csv += r + "\n";
  write_output(csv, cf.output);
  return 0;
}

int run_verify(const std::string& suite, const CommonFlags& cf) {
  SuiteReport rep;
  if (suite == "core")
    rep = run_core_suite(cf.seed, cf.tol);
  else if (suite == "sdp")
    rep = run_sdp_suite(cf.seed, cf.tol);
  else if (suite == "limits")
    rep = run_limits_suite(cf.seed, cf.tol);
  else
    throw std::invalid_argument("unknown suite: " + suite);

  for (const PropertyResult& p : rep.properties)
    std::fprintf(stderr, "[%s] %-42s samples=%-3d worst=%-12.3g limit=%.3g\n",
                 p.pass ? "PASS" : "FAIL", p.name.c_str(), p.samples, p.worst, p.limit);
  std::fprintf(stderr, "suite %s: %s\n", rep.suite.c_str(), rep.ok ? "pass" : "FAIL");

  json out;
  out["suite"] = rep.suite;
  out["ok"] = rep.ok;
  json props = json::array();
  for (const PropertyResult& p : rep.properties)
    props.push_back({{"name", p.name},
                     {"samples", p.samples},
                     {"worst", p.worst},
                     {"limit", p.limit},
                     {"pass", p.pass}});
  out["properties"] = props;
  write_output(out.dump(2) + "\n", cf.output);
  return rep.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal transport costs between quantum states over two-time plans"};
  app.name("stote-ot");
  app.require_subcommand(1);

  CLI::App* cost = app.add_subcommand(
      "cost", "solve the transport problem for a cost matrix and two states");
  std::vector<std::string> cost_files;
  bool ui = false, normalized = false;
  StateFlags cost_sf;
  CommonFlags cost_cf;
  cost->add_option("files", cost_files,
                   "cost matrix file (unless --ui) followed by up to two state files");
  cost->add_flag("--ui", ui, "use the unitary-invariant cost for the state dimension");
  cost->add_flag("--normalized", normalized, "scale the cost to [0,1] (1 - S/d form)");
  add_state_flags(cost, cost_sf);
  add_common_flags(cost, cost_cf);

  CLI::App* invert = app.add_subcommand(
      "invert", "recover the state and channel from a two-time object");
  std::string invert_file;
  std::vector<int> invert_dims;
  CommonFlags invert_cf;
  invert->add_option("omega-file", invert_file, "two-time object to invert")->required();
  invert->add_option("--dims", invert_dims, "subsystem dimensions dA dB")->expected(2);
  add_common_flags(invert, invert_cf);

  CLI::App* sweep = app.add_subcommand("sweep", "grid evaluation emitting CSV");
  std::string sweep_kind;
  int sweep_d = 2, sweep_grid = 11, sweep_jobs = 0;
  double sweep_prho = -1.0;
  std::vector<double> sweep_range{0.0, 1.0};
  StateFlags sweep_sf;
  CommonFlags sweep_cf;
  sweep->add_option("kind", sweep_kind, "symmetry-gap | unitary-vs-optimal | embed-limit")
      ->required();
  sweep->add_option("--d", sweep_d, "state dimension")->default_val(2);
  sweep->add_option("--grid", sweep_grid, "number of grid points")->default_val(11);
  sweep->add_option("--p-rho", sweep_prho,
                    "purity weight of the fixed state (kind-dependent default)");
  sweep->add_option("--range", sweep_range, "swept parameter range inside [0,1]")
      ->expected(2);
  sweep->add_option("--jobs", sweep_jobs, "worker threads (default: logical cores)");
  add_state_flags(sweep, sweep_sf);
  add_common_flags(sweep, sweep_cf);

  CLI::App* verify = app.add_subcommand("verify", "run an invariant battery");
  std::string verify_suite;
  CommonFlags verify_cf;
  verify->add_option("--suite", verify_suite, "core | sdp | limits")->required();
  add_common_flags(verify, verify_cf);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cost->parsed()) return run_cost(cost_files, ui, normalized, cost_sf, cost_cf);
    if (invert->parsed()) return run_invert(invert_file, invert_dims, invert_cf);
    if (sweep->parsed()) {
      if (sweep_prho < 0.0) sweep_prho = sweep_kind == "unitary-vs-optimal" ? 1.0 : 0.0;
      const int jobs = sweep_jobs > 0
                           ? sweep_jobs
                           : std::max(1u, std::thread::hardware_concurrency());
      return run_sweep(sweep_kind, sweep_d, sweep_grid, sweep_prho, sweep_range,
                       sweep_sf, jobs, sweep_cf);
    }
    if (verify->parsed()) return run_verify(verify_suite, verify_cf);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
