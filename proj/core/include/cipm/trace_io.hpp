#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cipm/config.hpp"
#include "cipm/driver.hpp"
#include "cipm/types.hpp"

namespace cipm {

/// One CSV row per iteration under the fixed header
///   iter,eta_hat,r_dual_norm,r_primal_norm,alpha,delta,rel_err
/// Numbers print as %.17g so doubles round-trip and equal runs give
/// equal bytes. rel_err is ||x_k - x*|| / ||x*|| against the reference
/// when one is supplied; otherwise the column stays empty.
std::string trace_csv(const Trace& trace,
                      const std::optional<Vector>& reference = {});

/// Optional non-core fields for the run summary.
struct SummaryExtras {
  std::optional<std::uint64_t> seed;
  std::optional<Vector> x_true;
  std::optional<Vector> reference;
  std::vector<std::pair<std::string, double>> scalars;
};

/// One JSON object: status, iteration count, final gap and residual
/// norms, solution and per-agent objectives, a config echo, the extras
/// above, informational wall-clock timing, and exchange counts. The
/// final rel_err appears whenever a reference is supplied.
std::string summary_json(const Solution& sol, const Trace& trace,
                         const SolverConfig& cfg,
                         const SummaryExtras& extras = {});

/// Throws ParseError when the path cannot be opened for writing.
void write_file(const std::string& path, const std::string& content);

} // namespace cipm
