#include "mavg/treatment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "mavg/error.hpp"

namespace mavg {

std::string TreatmentRule::describe() const {
  if (kind == Kind::kAlways) return "always";
  std::ostringstream s;
  s << "threshold(L1<" << cd4_count_below << " or L2<" << cd4_percent_below << " or L3<" << zscore_below
    << (persistence ? "; persistent" : "; not persistent") << ")";
  return s.str();
}

TreatmentRule parse_rule(std::string_view name, bool persistence) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "always") return TreatmentRule::always();
  if (lower == "threshold" || lower == "dynamic") return TreatmentRule::threshold(persistence);
  throw Error(ErrorCode::kInvalidArgument, "unknown treatment rule '" + std::string(name) + "'");
}

int apply_rule(const TreatmentRule& rule, double l1, double l2, double l3, int a_prev) {
  if (rule.kind == TreatmentRule::Kind::kAlways) return 1;
  require(std::isfinite(l1) && std::isfinite(l2) && std::isfinite(l3), ErrorCode::kInvalidArgument,
          "apply_rule: non-finite confounders");
  if (rule.persistence && a_prev == 1) return 1;
  return (l1 < rule.cd4_count_below || l2 < rule.cd4_percent_below || l3 < rule.zscore_below) ? 1 : 0;
}

}  // namespace mavg
