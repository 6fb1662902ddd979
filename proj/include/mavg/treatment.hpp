#pragma once

#include <string>
#include <string_view>

namespace mavg {

struct TreatmentRule {
  enum class Kind { kAlways, kThreshold };
  Kind kind = Kind::kAlways;
  double cd4_count_below = 350.0;
  double cd4_percent_below = 0.15;
  double zscore_below = -2.0;
  bool persistence = true;

  static TreatmentRule always() { return {}; }
  static TreatmentRule threshold(bool persistence = true) {
    TreatmentRule r;
    r.kind = Kind::kThreshold;
    r.persistence = persistence;
    return r;
  }
  std::string describe() const;
};

/// Parses "always" or "threshold" (case-insensitive).
TreatmentRule parse_rule(std::string_view name, bool persistence = true);

/// Treatment decision from the current confounders and the previous treatment.
int apply_rule(const TreatmentRule& rule, double l1, double l2, double l3, int a_prev);

}  // namespace mavg
