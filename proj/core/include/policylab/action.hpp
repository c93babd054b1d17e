#pragma once

#include <span>
#include <string>
#include <vector>

namespace policylab {

enum class ActionKind { TaxRates, Incentives, CerIncentiveRow };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

// Static description of a principal action space: kind plus per-dimension
// closed bounds.
struct ActionSpec {
  ActionKind kind = ActionKind::Incentives;
  std::vector<Interval> bounds;

  int arity() const { return static_cast<int>(bounds.size()); }
  bool contains(std::span<const double> values) const;
  static ActionSpec uniform(ActionKind kind, int arity, double lo, double hi);
};

// The principal's per-step commitment: a bounded real vector.
struct PrincipalAction {
  ActionKind kind = ActionKind::Incentives;
  std::vector<double> values;
  std::vector<Interval> bounds;

  int arity() const { return static_cast<int>(values.size()); }
  bool in_bounds() const;
};

PrincipalAction make_action(const ActionSpec& spec, std::vector<double> values);

std::string to_string(ActionKind kind);

}  // namespace policylab
