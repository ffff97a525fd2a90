#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace icpa::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::size_t trials = 0;
  /// Summary on success, the first failing instance on failure.
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  std::uint64_t seed = 0;
  /// Test hook: names of checks whose library result is corrupted before the
  /// comparison, so the suite can be shown to catch the fault.
  std::set<std::string> faults;
  /// Run only these checks (all when empty).
  std::set<std::string> only;
};

/// Names of every check in suite order.
std::vector<std::string> check_names();

std::vector<CheckResult> run_suite(const Options& options = {});

// Individual checks. Each compares a library routine against the brute-force
// oracle on randomly drawn instances.
CheckResult check_sorted_match(std::uint64_t seed, std::size_t trials = 500, bool fault = false);
CheckResult check_front(std::uint64_t seed, std::size_t trials = 20, bool fault = false);
CheckResult check_min_witness(std::uint64_t seed, std::size_t trials = 100, bool fault = false);
CheckResult check_constrained_witness(std::uint64_t seed, std::size_t trials = 100,
                                      bool fault = false);
CheckResult check_huf_exact(bool fault = false);
CheckResult check_huf_monte_carlo(std::uint64_t seed, std::size_t fronts = 20,
                                  std::size_t resolution = 200, bool fault = false);
CheckResult check_pmtl_contract(std::uint64_t seed, std::size_t trials = 200, bool fault = false);

struct GradientAudit {
  double norm_error = 0.0;
  double max_error = 0.0;
  std::size_t parameters = 0;
  double loss = 0.0;
};

/// Full phase-1 objective (weighted edge losses, β times the gated sliced
/// loss and the gate regularizer) on a micro two-source graph, analytic
/// gradient against central differences over every model and gate parameter.
/// The gated sorted matching jumps where two projections tie, so the step is
/// kept small enough that a perturbation rarely crosses one.
GradientAudit gradient_audit(std::uint64_t seed, double beta = 1.0, double step = 1e-6);
CheckResult check_gradients(std::uint64_t seed, std::size_t seeds = 10, bool fault = false);

}  // namespace icpa::verify
