#include "cipm/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/SVD>

#include "json.hpp"

#include "cipm/errors.hpp"

namespace cipm {

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::integer(std::uint64_t bound) {
  if (bound == 0) throw InvalidInputError("integer bound must be positive");
  constexpr std::uint64_t top = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t rem = (top % bound + 1) % bound;
  std::uint64_t r = 0;
  do {
    r = gen_();
  } while (rem != 0 && r > top - rem);
  return r % bound;
}

void RlsConfig::validate() const {
  if (n_agents <= 0 || rows_per_agent <= 0 || p <= 0)
    throw InvalidConfigError("agent, row, and feature counts must be positive");
  if (half_width <= 0.0)
    throw InvalidConfigError("half_width must be positive");
  if (!(noise_sigma >= 0.0))
    throw InvalidConfigError("noise_sigma must be non-negative");
  if (!(design_hi > design_lo) || !(coeff_hi > coeff_lo))
    throw InvalidConfigError("entry ranges must be non-degenerate");
}

std::vector<HuberData> RlsInstance::parts() const {
  if (n_agents <= 0 || A.rows() % n_agents != 0)
    throw InvalidInputError(
        "stacked rows do not split evenly across agents");
  const Index block = A.rows() / n_agents;
  std::vector<HuberData> out;
  out.reserve(static_cast<std::size_t>(n_agents));
  for (Index i = 0; i < n_agents; ++i)
    out.push_back({A.middleRows(i * block, block),
                   y.segment(i * block, block), half_width});
  return out;
}

std::vector<FamilyInstance> RlsInstance::family_agents() const {
  std::vector<FamilyInstance> out;
  for (HuberData& part : parts()) {
    FamilyInstance fi;
    fi.family = "huber-rls";
    fi.huber = std::move(part);
    out.push_back(std::move(fi));
  }
  return out;
}

RlsInstance synth_rls(const RlsConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const Index rows = cfg.n_agents * cfg.rows_per_agent;

  RlsInstance inst;
  inst.n_agents = cfg.n_agents;
  inst.half_width = cfg.half_width;
  inst.x_true.resize(cfg.p);
  for (Index j = 0; j < cfg.p; ++j)
    inst.x_true(j) = rng.uniform(cfg.coeff_lo, cfg.coeff_hi);
  inst.A.resize(rows, cfg.p);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cfg.p; ++c)
      inst.A(r, c) = rng.uniform(cfg.design_lo, cfg.design_hi);
  inst.noise.resize(rows);
  for (Index r = 0; r < rows; ++r)
    inst.noise(r) = cfg.noise_sigma * rng.gaussian();
  inst.y = inst.A * inst.x_true + inst.noise;
  return inst;
}

double condition_number(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) throw InvalidInputError("empty matrix");
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

Matrix set_condition_number(const Matrix& A, double kappa_target) {
  if (!(kappa_target >= 1.0))
    throw InvalidInputError("condition target must be at least 1");
  if (A.rows() < A.cols())
    throw InvalidInputError(
        "stacked design needs at least as many rows as columns");
  Eigen::JacobiSVD<Matrix> svd(A,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double s_max = s(0);
  const double s_min = s(s.size() - 1);
  if (s_min <= s_max * 1e-12 || s_max <= 0.0)
    throw InvalidInputError("stacked design is column-rank deficient");

  const double kappa0 = s_max / s_min;
  Vector scaled(s.size());
  if (kappa0 == 1.0) {
    if (kappa_target != 1.0)
      throw InvalidInputError(
          "all singular values coincide; no spread to interpolate");
    scaled = s;
  } else {
    // t runs 0 at sigma_max to 1 at sigma_min on the current log scale;
    // the new spectrum replaces the base of that scale with the target.
    const double log_kappa0 = std::log(kappa0);
    for (Index k = 0; k < s.size(); ++k) {
      const double t = std::log(s_max / s(k)) / log_kappa0;
      scaled(k) = s_max * std::pow(kappa_target, -t);
    }
  }
  return svd.matrixU() * scaled.asDiagonal() * svd.matrixV().transpose();
}

RlsInstance with_condition(const RlsInstance& inst, double kappa_target) {
  RlsInstance out = inst;
  out.A = set_condition_number(inst.A, kappa_target);
  out.y = out.A * out.x_true + out.noise;
  return out;
}

namespace {

constexpr Index kSurveyRows = 351;
constexpr Index kSurveyKeep = 350;
constexpr Index kSurveyFeatures = 34;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_feature(const std::string& field, long line_no, Index column) {
  const std::string text = trim(field);
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ParseError("line " + std::to_string(line_no) + ": field " +
                         std::to_string(column + 1) + " ('" + field +
                         "') is not numeric",
                     line_no);
  return value;
}

} // namespace

LabeledData load_ionosphere(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::string line;
  long line_no = 0;
  long last_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    last_line = line_no;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (static_cast<Index>(fields.size()) != kSurveyFeatures + 1)
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(kSurveyFeatures + 1) +
                           " comma-separated fields, found " +
                           std::to_string(fields.size()),
                       line_no);

    std::vector<double> feats(static_cast<std::size_t>(kSurveyFeatures));
    for (Index c = 0; c < kSurveyFeatures; ++c)
      feats[static_cast<std::size_t>(c)] =
          parse_feature(fields[static_cast<std::size_t>(c)], line_no, c);

    const std::string label =
        trim(fields[static_cast<std::size_t>(kSurveyFeatures)]);
    if (label == "g")
      labels.push_back(1.0);
    else if (label == "b")
      labels.push_back(0.0);
    else
      throw ParseError("line " + std::to_string(line_no) +
                           ": unknown class label '" + label + "'",
                       line_no);
    rows.push_back(std::move(feats));
  }

  if (static_cast<Index>(rows.size()) != kSurveyRows)
    throw ParseError("expected " + std::to_string(kSurveyRows) +
                         " data rows, found " + std::to_string(rows.size()),
                     last_line);

  LabeledData out;
  out.phi.resize(kSurveyKeep, kSurveyFeatures);
  out.y.resize(kSurveyKeep);
  for (Index r = 0; r < kSurveyKeep; ++r) {
    for (Index c = 0; c < kSurveyFeatures; ++c)
      out.phi(r, c) = rows[static_cast<std::size_t>(r)]
                          [static_cast<std::size_t>(c)];
    out.y(r) = labels[static_cast<std::size_t>(r)];
  }
  return out;
}

std::vector<LabeledData> partition_rows(const LabeledData& data,
                                        Index n_agents) {
  if (n_agents <= 0)
    throw InvalidInputError("agent count must be positive");
  const Index rows = data.phi.rows();
  if (data.y.size() != rows)
    throw DimensionError("labels do not match the feature rows");
  if (rows % n_agents != 0)
    throw InvalidInputError(
        std::to_string(rows) + " rows do not split evenly across " +
        std::to_string(n_agents) + " agents; truncate the data first");
  const Index block = rows / n_agents;
  std::vector<LabeledData> out;
  out.reserve(static_cast<std::size_t>(n_agents));
  for (Index i = 0; i < n_agents; ++i)
    out.push_back({data.phi.middleRows(i * block, block),
                   data.y.segment(i * block, block)});
  return out;
}

LabeledData shuffle_rows(const LabeledData& data, std::uint64_t seed) {
  const Index rows = data.phi.rows();
  if (data.y.size() != rows)
    throw DimensionError("labels do not match the feature rows");
  std::vector<Index> perm(static_cast<std::size_t>(rows));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (Index i = rows - 1; i > 0; --i) {
    const auto j = static_cast<Index>(
        rng.integer(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }
  LabeledData out;
  out.phi.resize(rows, data.phi.cols());
  out.y.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    out.phi.row(r) = data.phi.row(perm[static_cast<std::size_t>(r)]);
    out.y(r) = data.y(perm[static_cast<std::size_t>(r)]);
  }
  return out;
}

std::vector<LogisticData> logistic_parts(
    const std::vector<LabeledData>& shards, double rho) {
  if (shards.empty())
    throw InvalidInputError("need at least one shard");
  std::vector<LogisticData> out;
  out.reserve(shards.size());
  for (const LabeledData& shard : shards)
    out.push_back({shard.phi, shard.y, rho,
                   static_cast<Index>(shards.size())});
  return out;
}

void write_synthetic_ionosphere(const std::string& path,
                                std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");

  Rng rng(seed);
  const Index free_features = kSurveyFeatures - 2;
  const Index panel_rows = 35;
  Vector w(free_features);
  for (Index j = 0; j < free_features; ++j) w(j) = 0.45 * rng.gaussian();

  // One measurement panel, replayed once per agent with feature jitter
  // far below the default relaxation radius. Contiguous shards of the
  // file are then statistically matched, which is what keeps a tight
  // consensus radius meaningful for this row count: with n_i = 35
  // sketches of an unrelated population the per-shard optima scatter at
  // unit scale and no sub-1e-3 consensus target exists to agree on.
  std::vector<int> pulse(static_cast<std::size_t>(panel_rows));
  std::vector<char> label(static_cast<std::size_t>(panel_rows));
  Matrix panel(panel_rows, free_features);
  for (Index r = 0; r < panel_rows; ++r) {
    pulse[static_cast<std::size_t>(r)] = rng.uniform() < 0.85 ? 1 : 0;
    for (Index j = 0; j < free_features; ++j)
      panel(r, j) = rng.uniform(-1.0, 1.0);
    const double z = panel.row(r).dot(w) +
                     1.1 * pulse[static_cast<std::size_t>(r)] - 0.4;
    label[static_cast<std::size_t>(r)] =
        rng.uniform() < sigmoid(z) ? 'g' : 'b';
  }

  char buf[32];
  const double jitter = 5e-5;
  for (Index r = 0; r < kSurveyRows; ++r) {
    const Index b = r % panel_rows;
    out << pulse[static_cast<std::size_t>(b)] << ",0";
    for (Index j = 0; j < free_features; ++j) {
      const double v = std::clamp(
          panel(b, j) + jitter * rng.uniform(-1.0, 1.0), -1.0, 1.0);
      std::snprintf(buf, sizeof(buf), "%.5f", v);
      out << ',' << buf;
    }
    out << ',' << label[static_cast<std::size_t>(b)] << '\n';
  }
}

Iterate random_interior_iterate(const RelaxedProblem& prob, Rng& rng) {
  const Index p = prob.p;
  Iterate it;
  it.x.resize(p);
  for (Index j = 0; j < p; ++j) it.x(j) = rng.uniform(-1.0, 1.0);

  double eta = 0.0;
  it.agents.resize(static_cast<std::size_t>(prob.agent_count()));
  for (Index i = 0; i < prob.agent_count(); ++i) {
    const LocalSubproblem& sp = prob.agents[static_cast<std::size_t>(i)];
    AgentState& st = it.agents[static_cast<std::size_t>(i)];

    Vector dir(p);
    for (Index j = 0; j < p; ++j) dir(j) = rng.gaussian();
    const double norm = dir.norm();
    const double radius = prob.epsilon * rng.uniform(0.05, 0.8);
    st.x_i = norm > 0.0 ? Vector(it.x + (radius / norm) * dir) : it.x;

    if (sp.extra_dim > 0) {
      st.t_i = sp.initial_extra(st.x_i);
    } else {
      st.t_i.resize(0);
    }
    st.z.resize(sp.ineq_count);
    for (Index j = 0; j < sp.ineq_count; ++j)
      st.z(j) = rng.uniform(0.5, 2.0);
    st.lambda = rng.uniform(0.5, 2.0);
    st.v.resize(sp.eq_count);
    for (Index j = 0; j < sp.eq_count; ++j) st.v(j) = rng.uniform(-1.0, 1.0);

    if (sp.ineq_count > 0) {
      const Vector g = sp.ineq_value(st.stacked());
      if (!(g.array() < 0.0).all())
        throw FeasibilityError(
            "family hook produced a non-interior auxiliary block");
      eta -= st.z.dot(g);
    }
    const double s = it.ball_slack(i, prob.epsilon);
    if (!(s < 0.0))
      throw FeasibilityError("drawn point left the coupling ball");
    eta -= st.lambda * s;
  }
  it.delta = 10.0 * static_cast<double>(prob.total_ineq_count()) / eta;
  it.iteration = 0;
  return it;
}

double max_gradient_norm(const ConsensusObjective& f, const Vector& lo,
                         const Vector& hi) {
  const Index p = lo.size();
  if (hi.size() != p) throw DimensionError("box bounds disagree on size");
  if (p <= 0 || p > 30)
    throw InvalidInputError("vertex enumeration supports 1..30 dimensions");
  for (Index j = 0; j < p; ++j)
    if (!(hi(j) >= lo(j)))
      throw InvalidInputError("box bounds are inverted");

  double best = 0.0;
  Vector x(p);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p); ++mask) {
    for (Index j = 0; j < p; ++j)
      x(j) = (mask >> j) & 1 ? hi(j) : lo(j);
    best = std::max(best, f.gradient(x).norm());
  }
  return best;
}

namespace {

using nlohmann::json;

Matrix parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty())
    throw ParseError("'" + name + "' must be a non-empty array of rows");
  Matrix out;
  Index cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.empty())
      throw ParseError("'" + name + "' row " + std::to_string(r) +
                       " must be a non-empty array");
    if (r == 0) {
      cols = static_cast<Index>(row.size());
      out.resize(static_cast<Index>(j.size()), cols);
    }
    if (static_cast<Index>(row.size()) != cols)
      throw ParseError("'" + name + "' rows have uneven lengths");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c].is_number())
        throw ParseError("'" + name + "' contains a non-numeric entry");
      out(static_cast<Index>(r), static_cast<Index>(c)) =
          row[c].get<double>();
    }
  }
  return out;
}

Vector parse_vector(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty())
    throw ParseError("'" + name + "' must be a non-empty numeric array");
  Vector out(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number())
      throw ParseError("'" + name + "' contains a non-numeric entry");
    out(static_cast<Index>(k)) = j[k].get<double>();
  }
  return out;
}

} // namespace

ProblemSpec load_problem_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what());
  }

  ProblemSpec spec;
  try {
    if (!root.is_object())
      throw ParseError("top level of '" + path + "' must be an object");
    if (!root.contains("p") || !root["p"].is_number_integer())
      throw ParseError("'p' must be an integer");
    spec.p = root["p"].get<Index>();
    if (!root.contains("epsilon") || !root["epsilon"].is_number())
      throw ParseError("'epsilon' must be a number");
    spec.epsilon = root["epsilon"].get<double>();
    if (spec.p <= 0 || !(spec.epsilon > 0.0))
      throw InvalidInputError("'p' and 'epsilon' must be positive");

    if (!root.contains("agents") || !root["agents"].is_array() ||
        root["agents"].empty())
      throw ParseError("'agents' must be a non-empty array");
    const json& agents = root["agents"];

    for (std::size_t k = 0; k < agents.size(); ++k) {
      const json& a = agents[k];
      const std::string where = "agent " + std::to_string(k);
      if (!a.is_object() || !a.contains("family") ||
          !a["family"].is_string())
        throw ParseError(where + " needs a string 'family' tag");

      FamilyInstance fi;
      fi.family = a["family"].get<std::string>();
      if (fi.family == "quadratic") {
        fi.quadratic = QuadraticData{parse_matrix(a.at("P"), where + ".P"),
                                     parse_vector(a.at("q"), where + ".q")};
      } else if (fi.family == "huber-rls") {
        fi.huber = HuberData{parse_matrix(a.at("A"), where + ".A"),
                             parse_vector(a.at("y"), where + ".y"),
                             a.value("half_width", 1.0)};
      } else if (fi.family == "logreg") {
        fi.logistic =
            LogisticData{parse_matrix(a.at("phi"), where + ".phi"),
                         parse_vector(a.at("y"), where + ".y"),
                         a.value("rho", 1.0),
                         static_cast<Index>(agents.size())};
      } else {
        throw ParseError(where + " has unknown family '" + fi.family +
                         "'");
      }
      if (a.contains("eq")) {
        const json& eq = a.at("eq");
        if (!eq.is_object())
          throw ParseError(where + ".eq must be an object");
        fi.A = parse_matrix(eq.at("A"), where + ".eq.A");
        fi.b = parse_vector(eq.at("b"), where + ".eq.b");
      }

      if (fi.p() != spec.p)
        throw DimensionError(where + " has dimension " +
                             std::to_string(fi.p()) + ", file declares " +
                             std::to_string(spec.p));
      (void)fi.make_subproblem();
      spec.agents.push_back(std::move(fi));
    }
  } catch (const json::exception& e) {
    throw ParseError("malformed problem spec '" + path + "': " + e.what());
  }
  return spec;
}

} // namespace cipm
