#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cipm/families.hpp"
#include "cipm/iterate.hpp"
#include "cipm/types.hpp"

namespace cipm {

/// Deterministic draws on top of mt19937_64. The raw generator is pinned
/// by the standard; the mappings here replace the <random> distributions,
/// whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller, one spare cached.
  double gaussian();

  /// Uniform integer on [0, bound), bias-free by rejection.
  std::uint64_t integer(std::uint64_t bound);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Synthetic robust-regression generator settings. Row counts are per
/// agent; design entries and true coefficients are uniform on the given
/// ranges, measurement noise is N(0, noise_sigma^2).
struct RlsConfig {
  Index n_agents = 10;
  Index rows_per_agent = 20;
  Index p = 10;
  double half_width = 1.0;
  double noise_sigma = 1.0;
  double design_lo = 0.0;
  double design_hi = 1.0;
  double coeff_lo = 0.0;
  double coeff_hi = 20.0;
  std::uint64_t seed = 1;

  void validate() const; // throws InvalidConfigError
};

/// One synthetic draw, kept stacked so the design can be rescaled and the
/// responses rebuilt from the same noise realization.
struct RlsInstance {
  Matrix A;      // (n_agents * rows_per_agent) x p
  Vector y;      // A * x_true + noise
  Vector x_true; // p
  Vector noise;
  Index n_agents = 1;
  double half_width = 1.0;

  /// Contiguous equal row blocks, one per agent.
  std::vector<HuberData> parts() const;
  std::vector<FamilyInstance> family_agents() const;
};

/// Draw order is pinned: x_true coordinates, then design entries row by
/// row across the stacked matrix, then noise entries. Identical seeds
/// give identical instances.
RlsInstance synth_rls(const RlsConfig& cfg);

/// 2-norm condition number sigma_max / sigma_min.
double condition_number(const Matrix& A);

/// Rescales the singular values log-linearly between sigma_max and
/// sigma_max / kappa_target, keeping sigma_max and the singular vectors.
/// Passing the current condition number reproduces A up to roundoff.
/// Throws InvalidInputError when A is column-rank-deficient, has fewer
/// rows than columns, or kappa_target < 1.
Matrix set_condition_number(const Matrix& A, double kappa_target);

/// Same instance with the design rescaled to the target condition number
/// and y rebuilt as A' x_true + noise.
RlsInstance with_condition(const RlsInstance& inst, double kappa_target);

struct LabeledData {
  Matrix phi; // rows x features
  Vector y;   // entries in {0, 1}
};

/// Strict reader for a radar-returns table: exactly 351 comma-separated
/// rows of 34 numeric features plus a 'g'/'b' class label. Labels map
/// g -> 1, b -> 0 and the last row is dropped, giving 350 rows. Any
/// deviation throws ParseError carrying the offending line number.
LabeledData load_ionosphere(const std::string& path);

/// Contiguous equal shards in row order. Throws InvalidInputError when
/// the row count does not divide evenly.
std::vector<LabeledData> partition_rows(const LabeledData& data,
                                        Index n_agents);

/// Fisher-Yates row permutation driven by its own seed.
LabeledData shuffle_rows(const LabeledData& data, std::uint64_t seed);

/// One classifier subproblem per shard; every part carries the shard
/// count so the ridge term sums to rho * ||x||^2 across agents.
std::vector<LogisticData> logistic_parts(
    const std::vector<LabeledData>& shards, double rho);

/// Writes a deterministic stand-in file with the exact shape
/// load_ionosphere expects: 351 rows, a binary first feature, an all-zero
/// second feature, 32 features in [-1, 1], and labels drawn from a
/// planted linear model. Rows replay one 35-row measurement panel with
/// per-copy feature jitter of 5e-5, so contiguous equal shards see
/// matched data and a consensus radius well below the jitterless row
/// scale stays attainable.
void write_synthetic_ionosphere(const std::string& path,
                                std::uint64_t seed);

/// Strictly feasible random iterate for direction-equivalence checks:
/// shared x with coordinates in [-1, 1), each x_i displaced from x by
/// well under the ball radius, auxiliaries from the family hook, duals
/// in [0.5, 2), v in [-1, 1), and delta set from the surrogate gap at
/// the drawn point. Throws FeasibilityError if a family hook fails to
/// produce a strictly feasible block.
Iterate random_interior_iterate(const RelaxedProblem& prob, Rng& rng);

/// Largest gradient norm of f over the vertices of the axis-aligned box
/// [lo, hi]. Exact box maximum when the gradient is affine in x (the
/// norm is then convex, so it peaks at a vertex); a vertex-sampled
/// surrogate otherwise. Dimension is capped at 30.
double max_gradient_norm(const ConsensusObjective& f, const Vector& lo,
                         const Vector& hi);

/// A consensus problem as named in a problem-spec file.
struct ProblemSpec {
  Index p = 0;
  double epsilon = 0.0;
  std::vector<FamilyInstance> agents;
};

/// Reads a problem-spec JSON file:
///   { "p": int, "epsilon": num, "agents": [ ... ] }
/// where each agent is one of
///   { "family": "quadratic",  "P": [[..]], "q": [..] }
///   { "family": "huber-rls",  "A": [[..]], "y": [..], "half_width": num }
///   { "family": "logreg",     "phi": [[..]], "y": [..], "rho": num }
/// plus an optional "eq": { "A": [[..]], "b": [..] } block over the
/// agent's stacked variable. Logistic agents receive the file's agent
/// count as their regularizer split. Malformed JSON or fields throw
/// ParseError; inconsistent dimensions throw DimensionError.
ProblemSpec load_problem_spec(const std::string& path);

} // namespace cipm
