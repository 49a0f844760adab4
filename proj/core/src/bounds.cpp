#include "cipm/bounds.hpp"

#include "cipm/errors.hpp"

namespace cipm {

namespace {

double checked_lipschitz_total(const BoundInputs& in) {
  if (in.lipschitz.size() == 0)
    throw InvalidInputError("bounds: no Lipschitz constants");
  if (!(in.epsilon >= 0.0))
    throw InvalidInputError("bounds: epsilon must be >= 0");
  double total = 0.0;
  for (Index i = 0; i < in.lipschitz.size(); ++i) {
    if (!(in.lipschitz[i] > 0.0))
      throw InvalidInputError("bounds: L_" + std::to_string(i) +
                              " must be positive");
    total += in.lipschitz[i];
  }
  return total;
}

} // namespace

double suboptimality_bound(const BoundInputs& in) {
  const double total = checked_lipschitz_total(in);
  return in.epsilon * total / static_cast<double>(in.agent_count());
}

double distance_bound(const BoundInputs& in) {
  const double total = checked_lipschitz_total(in);
  if (!in.modulus || !(*in.modulus > 0.0))
    throw InvalidInputError("bounds: positive strong-convexity modulus required");
  return 2.0 * in.epsilon * total /
         (static_cast<double>(in.agent_count()) * *in.modulus);
}

double epsilon_for_tolerance(double lipschitz_total, Index agent_count,
                             double tolerance) {
  if (!(lipschitz_total > 0.0))
    throw InvalidInputError("bounds: total Lipschitz constant must be positive");
  if (agent_count <= 0)
    throw InvalidInputError("bounds: agent count must be positive");
  if (!(tolerance > 0.0))
    throw InvalidInputError("bounds: tolerance must be positive");
  return static_cast<double>(agent_count) * tolerance / lipschitz_total;
}

} // namespace cipm
