#include "policylab/action.hpp"

#include <stdexcept>

namespace policylab {

bool ActionSpec::contains(std::span<const double> values) const {
  if (values.size() != bounds.size()) return false;
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    if (!bounds[d].contains(values[d])) return false;
  }
  return true;
}

ActionSpec ActionSpec::uniform(ActionKind kind, int arity, double lo, double hi) {
  ActionSpec spec;
  spec.kind = kind;
  spec.bounds.assign(static_cast<std::size_t>(arity), Interval{lo, hi});
  return spec;
}

bool PrincipalAction::in_bounds() const {
  if (values.size() != bounds.size()) return false;
  for (std::size_t d = 0; d < values.size(); ++d) {
    if (!bounds[d].contains(values[d])) return false;
  }
  return true;
}

PrincipalAction make_action(const ActionSpec& spec, std::vector<double> values) {
  if (static_cast<int>(values.size()) != spec.arity()) {
    throw std::invalid_argument("action arity mismatch: expected " +
                                std::to_string(spec.arity()) + ", got " +
                                std::to_string(values.size()));
  }
  PrincipalAction a;
  a.kind = spec.kind;
  a.values = std::move(values);
  a.bounds = spec.bounds;
  return a;
}

std::string to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::TaxRates: return "tax_rates";
    case ActionKind::Incentives: return "incentives";
    case ActionKind::CerIncentiveRow: return "cer_incentive_row";
  }
  return "unknown";
}

}  // namespace policylab
