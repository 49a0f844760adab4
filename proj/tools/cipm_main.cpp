#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"

#include "cipm/driver.hpp"
#include "cipm/errors.hpp"
#include "cipm/experiments.hpp"
#include "cipm/oracle.hpp"
#include "cipm/trace_io.hpp"

namespace {

using namespace cipm;

int status_exit_code(Status s) {
  switch (s) {
    case Status::Converged: return 0;
    case Status::MaxIterations: return 2;
    case Status::LineSearchFailure: return 3;
    case Status::SingularSystem: return 4;
  }
  return 1;
}

struct CommonOpts {
  SolverConfig cfg;
  std::uint64_t seed = 1;
  std::string transport = "sequential";
  std::string out_prefix;
  bool oracle = false;
};

void add_solver_flags(CLI::App* sub, CommonOpts& o, bool seed_required) {
  sub->add_option("--epsilon", o.cfg.epsilon, "Coupling ball radius");
  sub->add_option("--mu", o.cfg.mu, "Perturbation aggressiveness");
  sub->add_option("--beta", o.cfg.beta, "Backtracking shrink factor");
  sub->add_option("--alpha-ls", o.cfg.alpha_ls, "Sufficient-decrease slope");
  sub->add_option("--eps-feas", o.cfg.eps_feas,
                  "Residual-norm tolerance, primal and dual");
  sub->add_option("--eps-d", o.cfg.eps_d, "Surrogate-gap tolerance");
  sub->add_option("--max-iter", o.cfg.max_iter, "Iteration cap");
  auto* seed = sub->add_option("--seed", o.seed, "RNG seed");
  if (seed_required) seed->required();
  sub->add_option("--transport", o.transport, "Leaf transport")
      ->check(CLI::IsMember({"sequential", "queue"}));
  sub->add_option("--out", o.out_prefix,
                  "Output prefix for <prefix>_trace.csv and "
                  "<prefix>_summary.json");
  sub->add_flag("--oracle", o.oracle,
                "Also compute the unrelaxed optimum and fill rel_err");
}

TransportKind transport_kind(const std::string& name) {
  return name == "queue" ? TransportKind::Queue : TransportKind::Sequential;
}

RelaxedProblem build_problem(const std::vector<FamilyInstance>& agents,
                             double epsilon) {
  std::vector<LocalSubproblem> sps;
  sps.reserve(agents.size());
  for (const FamilyInstance& fi : agents) sps.push_back(fi.make_subproblem());
  return assemble_relaxed_problem(std::move(sps), epsilon);
}

/// Solves, prints the outcome, writes the trace pair, and maps the final
/// status onto the documented exit codes.
int run_and_write(const RelaxedProblem& prob, const CommonOpts& o,
                  const std::optional<Vector>& reference,
                  SummaryExtras extras, const std::string& default_prefix) {
  const SolveResult res =
      solve_distributed(prob, o.cfg, transport_kind(o.transport));

  std::cout << "status: " << to_string(res.solution.status) << " after "
            << res.solution.iterations << " iterations, averaged objective "
            << res.solution.objective_avg << "\n";
  if (reference) {
    extras.reference = reference;
    std::cout << "rel_err vs unrelaxed optimum: "
              << (res.solution.x - *reference).norm() / reference->norm()
              << "\n";
  }

  const std::string prefix =
      o.out_prefix.empty() ? default_prefix : o.out_prefix;
  write_file(prefix + "_trace.csv", trace_csv(res.trace, reference));
  write_file(prefix + "_summary.json",
             summary_json(res.solution, res.trace, o.cfg, extras));
  std::cout << "wrote " << prefix << "_trace.csv and " << prefix
            << "_summary.json\n";
  return status_exit_code(res.solution.status);
}

int cmd_rls(const CommonOpts& o, const std::optional<double>& cond) {
  RlsConfig rc;
  rc.seed = o.seed;
  RlsInstance inst = synth_rls(rc);
  if (cond) inst = with_condition(inst, *cond);
  const double kappa = condition_number(inst.A);
  std::cout << "synthetic robust regression: " << inst.n_agents
            << " agents, " << inst.A.rows() << "x" << inst.A.cols()
            << " stacked design, condition number " << kappa << "\n";

  const RelaxedProblem prob =
      build_problem(inst.family_agents(), o.cfg.epsilon);
  std::optional<Vector> reference;
  if (o.oracle) reference = unrelaxed_optimum(inst.family_agents());

  SummaryExtras extras;
  extras.seed = o.seed;
  extras.x_true = inst.x_true;
  extras.scalars.emplace_back("condition_number", kappa);
  return run_and_write(prob, o, reference, std::move(extras), "rls");
}

int cmd_logreg(const CommonOpts& o, const std::string& data_path,
               const std::optional<std::uint64_t>& shuffle_seed,
               Index n_agents, double rho) {
  LabeledData data = load_ionosphere(data_path);
  const auto positives = static_cast<long>(data.y.sum());
  std::cout << "loaded " << data.phi.rows() << "x" << data.phi.cols()
            << " classifier data: " << positives << " positive / "
            << data.phi.rows() - positives << " negative labels\n";
  if (shuffle_seed) data = shuffle_rows(data, *shuffle_seed);

  const std::vector<LogisticData> parts =
      logistic_parts(partition_rows(data, n_agents), rho);
  std::vector<FamilyInstance> agents;
  for (const LogisticData& part : parts) {
    FamilyInstance fi;
    fi.family = "logreg";
    fi.logistic = part;
    agents.push_back(std::move(fi));
  }

  const RelaxedProblem prob = build_problem(agents, o.cfg.epsilon);
  std::optional<Vector> reference;
  if (o.oracle) reference = logistic_optimum(parts);

  SummaryExtras extras;
  if (shuffle_seed) extras.seed = *shuffle_seed;
  extras.scalars.emplace_back("positive_labels",
                              static_cast<double>(positives));
  extras.scalars.emplace_back("rho", rho);
  return run_and_write(prob, o, reference, std::move(extras), "logreg");
}

std::vector<FamilyInstance> synth_quadratics(std::uint64_t seed,
                                             Index n_agents, Index p) {
  Rng rng(seed);
  std::vector<FamilyInstance> agents;
  for (Index i = 0; i < n_agents; ++i) {
    Matrix B(p, p);
    for (Index r = 0; r < p; ++r)
      for (Index c = 0; c < p; ++c) B(r, c) = rng.uniform(-1.0, 1.0);
    QuadraticData data;
    data.P = B.transpose() * B + Matrix::Identity(p, p);
    data.q.resize(p);
    for (Index j = 0; j < p; ++j) data.q(j) = rng.uniform(-1.0, 1.0);
    FamilyInstance fi;
    fi.family = "quadratic";
    fi.quadratic = std::move(data);
    agents.push_back(std::move(fi));
  }
  return agents;
}

int cmd_quadratic(const CommonOpts& o, const std::string& spec_path) {
  std::vector<FamilyInstance> agents;
  double epsilon = o.cfg.epsilon;
  if (spec_path.empty()) {
    agents = synth_quadratics(o.seed, 5, 8);
  } else {
    ProblemSpec spec = load_problem_spec(spec_path);
    agents = std::move(spec.agents);
    epsilon = spec.epsilon;
    std::cout << "loaded " << agents.size() << " agents (p = " << spec.p
              << ", epsilon = " << epsilon << ") from " << spec_path << "\n";
  }

  CommonOpts opts = o;
  opts.cfg.epsilon = epsilon;
  const RelaxedProblem prob = build_problem(agents, epsilon);

  // Both engines on the same instance: the runs must agree row by row.
  const SolveResult dist =
      solve_distributed(prob, opts.cfg, transport_kind(opts.transport));
  const SolveResult cent = solve_centralized(prob, opts.cfg);
  bool agree = dist.solution.status == cent.solution.status &&
               dist.trace.rows.size() == cent.trace.rows.size();
  if (agree) {
    for (std::size_t k = 0; k < dist.trace.rows.size(); ++k) {
      const IterationRecord& a = dist.trace.rows[k];
      const IterationRecord& b = cent.trace.rows[k];
      agree = agree && a.trials == b.trials;
      agree = agree && std::abs(a.alpha - b.alpha) <= 1e-9 * b.alpha;
      // The two eliminations produce directions matching to 1e-8
      // relative, so the iterates accumulate differences at that scale.
      agree = agree && (a.x - b.x).norm() <=
                           1e-7 * std::max(1.0, b.x.norm());
    }
  }
  std::cout << (agree ? "[PASS]" : "[FAIL]")
            << " message-passing and single-process runs agree ("
            << dist.trace.rows.size() << " iterations, status "
            << to_string(dist.solution.status) << ")\n";

  std::optional<Vector> reference;
  bool uniform_quadratic = !agents.empty();
  for (const FamilyInstance& fi : agents)
    uniform_quadratic = uniform_quadratic && fi.family == "quadratic" &&
                        fi.A.rows() == 0;
  if (uniform_quadratic) reference = unrelaxed_optimum(agents);

  SummaryExtras extras;
  extras.seed = o.seed;
  if (reference) {
    extras.reference = reference;
    std::cout << "rel_err vs unrelaxed optimum: "
              << (dist.solution.x - *reference).norm() / reference->norm()
              << "\n";
  }
  const std::string prefix =
      opts.out_prefix.empty() ? "quadratic" : opts.out_prefix;
  write_file(prefix + "_trace.csv", trace_csv(dist.trace, reference));
  write_file(prefix + "_summary.json",
             summary_json(dist.solution, dist.trace, opts.cfg, extras));
  std::cout << "wrote " << prefix << "_trace.csv and " << prefix
            << "_summary.json\n";

  const int code = status_exit_code(dist.solution.status);
  if (code != 0) return code;
  return agree ? 0 : 5;
}

double stacked_direction_diff(const RelaxedProblem& prob,
                              const Direction& got, const Direction& want) {
  std::vector<double> g, w;
  auto push = [](std::vector<double>& out, const Vector& v) {
    out.insert(out.end(), v.data(), v.data() + v.size());
  };
  push(g, got.dx);
  push(w, want.dx);
  for (std::size_t i = 0; i < got.agents.size(); ++i) {
    push(g, got.agents[i].dx_i);
    push(w, want.agents[i].dx_i);
    push(g, got.agents[i].dt_i);
    push(w, want.agents[i].dt_i);
    push(g, got.agents[i].dz);
    push(w, want.agents[i].dz);
    push(g, got.agents[i].dv);
    push(w, want.agents[i].dv);
    g.push_back(got.agents[i].dlambda);
    w.push_back(want.agents[i].dlambda);
  }
  (void)prob;
  const auto gv = Eigen::Map<const Vector>(g.data(),
                                           static_cast<Index>(g.size()));
  const auto wv = Eigen::Map<const Vector>(w.data(),
                                           static_cast<Index>(w.size()));
  return (gv - wv).norm() / std::max(wv.norm(), 1e-30);
}

std::vector<FamilyInstance> synth_family(const std::string& family,
                                         std::uint64_t seed, Index n_agents,
                                         Index p) {
  if (family == "quadratic") return synth_quadratics(seed, n_agents, p);
  Rng rng(seed);
  std::vector<FamilyInstance> agents;
  for (Index i = 0; i < n_agents; ++i) {
    const Index rows = p + 3;
    Matrix A(rows, p);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < p; ++c) A(r, c) = rng.uniform(-1.0, 1.0);
    Vector y(rows);
    FamilyInstance fi;
    fi.family = family;
    if (family == "huber-rls") {
      for (Index r = 0; r < rows; ++r) y(r) = rng.uniform(-2.0, 2.0);
      fi.huber = HuberData{std::move(A), std::move(y), 1.0};
    } else {
      for (Index r = 0; r < rows; ++r)
        y(r) = rng.uniform() < 0.5 ? 0.0 : 1.0;
      fi.logistic = LogisticData{std::move(A), std::move(y), 1.0, n_agents};
    }
    agents.push_back(std::move(fi));
  }
  return agents;
}

int cmd_verify(std::uint64_t seed) {
  int failures = 0;
  auto report = [&failures](bool ok, const std::string& label) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << label << "\n";
    if (!ok) ++failures;
  };

  Rng rng(seed);
  for (const std::string family : {"quadratic", "huber-rls", "logreg"}) {
    for (const Index n_agents : {Index{1}, Index{3}}) {
      for (const Index p : {Index{2}, Index{6}}) {
        const auto agents =
            synth_family(family, rng.integer(1u << 30), n_agents, p);
        const RelaxedProblem prob = build_problem(agents, 1e-2);
        double worst = 0.0;
        for (int rep = 0; rep < 2; ++rep) {
          const Iterate it = random_interior_iterate(prob, rng);
          worst = std::max(
              worst, stacked_direction_diff(
                         prob, message_passing_direction(prob, it),
                         dense_kkt_direction(prob, it)));
        }
        report(worst <= 1e-8,
               "direction match " + family + " N=" +
                   std::to_string(n_agents) + " p=" + std::to_string(p) +
                   " (rel diff " + std::to_string(worst) + ")");
      }
    }
  }

  // Relaxation bounds on a quadratic batch: suboptimality against
  // eps * L / N and squared distance against 2 eps L / (N m).
  const Index n_agents = 5, p = 4;
  const auto agents = synth_quadratics(seed + 17, n_agents, p);
  const Vector x_star = unrelaxed_optimum(agents);
  std::vector<ConsensusObjective> objectives;
  Matrix p_sum = Matrix::Zero(p, p);
  for (const FamilyInstance& fi : agents) {
    objectives.push_back(fi.make_objective());
    p_sum += fi.quadratic->P;
  }
  const double modulus =
      Eigen::SelfAdjointEigenSolver<Matrix>(
          p_sum / static_cast<double>(n_agents))
          .eigenvalues()
          .minCoeff();

  for (const double eps : {1e-1, 1e-2, 1e-3}) {
    SolverConfig cfg;
    cfg.epsilon = eps;
    cfg.eps_d = 1e-9;
    cfg.eps_feas = 1e-10;
    const RelaxedProblem prob = build_problem(agents, eps);
    const SolveResult res = solve_centralized(prob, cfg);
    if (res.solution.status != Status::Converged) {
      report(false, "relaxed solve converges at epsilon " +
                        std::to_string(eps));
      continue;
    }
    Vector lo(p), hi(p);
    for (Index j = 0; j < p; ++j) {
      lo(j) = std::min(res.solution.x(j), x_star(j)) - 1e-6;
      hi(j) = std::max(res.solution.x(j), x_star(j)) + 1e-6;
    }
    double lipschitz = 0.0;
    for (const ConsensusObjective& f : objectives)
      lipschitz += max_gradient_norm(f, lo, hi);

    const double gap = averaged_objective(objectives, res.solution.x) -
                       averaged_objective(objectives, x_star);
    const double n = static_cast<double>(n_agents);
    report(gap <= eps * lipschitz / n + 1e-9,
           "suboptimality bound at epsilon " + std::to_string(eps));
    report((res.solution.x - x_star).squaredNorm() <=
               2.0 * eps * lipschitz / (n * modulus) + 1e-9,
           "distance bound at epsilon " + std::to_string(eps));
  }

  std::cout << (failures == 0 ? "all checks passed"
                              : std::to_string(failures) + " checks failed")
            << "\n";
  return failures == 0 ? 0 : 5;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Consensus optimizer: relaxed coupling, interior-point steps, and "
      "exact message-passing directions over a star of agents"};
  app.require_subcommand(1);

  CommonOpts rls_opts;
  std::optional<double> cond;
  auto* rls = app.add_subcommand(
      "rls", "Synthetic robust regression benchmark");
  add_solver_flags(rls, rls_opts, true);
  rls->add_option("--cond", cond,
                  "Rescale the stacked design to this condition number");

  CommonOpts logreg_opts;
  std::string data_path;
  std::optional<std::uint64_t> shuffle_seed;
  Index logreg_agents = 10;
  double rho = 1.0;
  auto* logreg =
      app.add_subcommand("logreg", "Binary classification benchmark");
  add_solver_flags(logreg, logreg_opts, false);
  logreg->add_option("--data", data_path, "Radar-returns CSV path")
      ->required();
  logreg->add_option("--shuffle", shuffle_seed,
                     "Permute rows with this seed before sharding");
  logreg->add_option("--agents", logreg_agents, "Shard count");
  logreg->add_option("--rho", rho, "Ridge weight shared across agents");

  CommonOpts quad_opts;
  std::string spec_path;
  auto* quad = app.add_subcommand(
      "quadratic", "Self-check: both engines on one quadratic instance");
  add_solver_flags(quad, quad_opts, false);
  quad->add_option("--spec", spec_path, "Problem-spec JSON path");

  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand(
      "verify", "Direction-equivalence and relaxation-bound suites");
  verify->add_option("--seed", verify_seed, "RNG seed");

  int code = 0;
  rls->callback([&] { code = cmd_rls(rls_opts, cond); });
  logreg->callback([&] {
    code = cmd_logreg(logreg_opts, data_path, shuffle_seed, logreg_agents,
                      rho);
  });
  quad->callback([&] { code = cmd_quadratic(quad_opts, spec_path); });
  verify->callback([&] { code = cmd_verify(verify_seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const cipm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}
