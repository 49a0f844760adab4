#include "cipm/trace_io.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "cipm/errors.hpp"

namespace cipm {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

std::string trace_csv(const Trace& trace,
                      const std::optional<Vector>& reference) {
  std::string out = "iter,eta_hat,r_dual_norm,r_primal_norm,alpha,delta,rel_err\n";
  for (const IterationRecord& row : trace.rows) {
    out += std::to_string(row.iter);
    out += ',';
    out += fmt(row.eta_hat);
    out += ',';
    out += fmt(row.r_dual_norm);
    out += ',';
    out += fmt(row.r_primal_norm);
    out += ',';
    out += fmt(row.alpha);
    out += ',';
    out += fmt(row.delta);
    out += ',';
    if (reference)
      out += fmt((row.x - *reference).norm() / reference->norm());
    out += '\n';
  }
  return out;
}

std::string summary_json(const Solution& sol, const Trace& trace,
                         const SolverConfig& cfg,
                         const SummaryExtras& extras) {
  nlohmann::ordered_json j;
  j["status"] = to_string(sol.status);
  j["iterations"] = sol.iterations;
  if (!trace.rows.empty()) {
    const IterationRecord& last = trace.rows.back();
    j["eta_hat"] = last.eta_hat;
    j["r_dual_norm"] = last.r_dual_norm;
    j["r_primal_norm"] = last.r_primal_norm;
  }
  j["objective_avg"] = sol.objective_avg;
  j["objective_sum"] = sol.objective_sum;
  j["x"] = std::vector<double>(sol.x.data(), sol.x.data() + sol.x.size());
  j["agent_objectives"] = sol.agent_objectives;

  nlohmann::ordered_json c;
  c["epsilon"] = cfg.epsilon;
  c["mu"] = cfg.mu;
  c["beta"] = cfg.beta;
  c["alpha_ls"] = cfg.alpha_ls;
  c["eps_feas"] = cfg.eps_feas;
  c["eps_d"] = cfg.eps_d;
  c["max_iter"] = cfg.max_iter;
  c["min_step"] = cfg.min_step;
  j["config"] = std::move(c);

  if (extras.seed) j["seed"] = *extras.seed;
  if (extras.x_true)
    j["x_true"] = std::vector<double>(
        extras.x_true->data(), extras.x_true->data() + extras.x_true->size());
  if (extras.reference) {
    j["reference"] = std::vector<double>(
        extras.reference->data(),
        extras.reference->data() + extras.reference->size());
    j["rel_err"] = (sol.x - *extras.reference).norm() /
                   extras.reference->norm();
  }
  for (const auto& [name, value] : extras.scalars) j[name] = value;

  j["wall_sec"] = trace.wall_sec;
  nlohmann::ordered_json ex;
  ex["setup"] = trace.setup_exchanges;
  ex["loop"] = trace.loop_exchanges;
  ex["teardown"] = trace.teardown_exchanges;
  j["exchanges"] = std::move(ex);
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << content;
  if (!out.good()) throw ParseError("failed writing '" + path + "'");
}

} // namespace cipm
