#include "forge/quality.hpp"

namespace forge {

std::string_view to_string(Verdict v) { return v == Verdict::Pass ? "Pass" : "Fail"; }

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::Pending: return "Pending";
    case Decision::Keep: return "Keep";
    case Decision::Discard: return "Discard";
  }
  return "?";
}

std::string_view to_string(DecidedBy d) { return d == DecidedBy::Auto ? "Auto" : "Human"; }

std::optional<Verdict> parse_verdict(std::string_view t) {
  if (t == "Pass") return Verdict::Pass;
  if (t == "Fail") return Verdict::Fail;
  return std::nullopt;
}

std::optional<Decision> parse_decision(std::string_view t) {
  if (t == "Pending") return Decision::Pending;
  if (t == "Keep") return Decision::Keep;
  if (t == "Discard") return Decision::Discard;
  return std::nullopt;
}

std::optional<DecidedBy> parse_decided_by(std::string_view t) {
  if (t == "Auto") return DecidedBy::Auto;
  if (t == "Human") return DecidedBy::Human;
  return std::nullopt;
}

QualityReport make_report(double missing, double cloud, const Thresholds& t, bool low_conf) {
  QualityReport r;
  r.missing_fraction = missing;
  r.cloud_fraction = cloud;
  r.score = missing + cloud;
  r.thresholds_used = t;
  r.verdict = (missing <= t.missing_max && cloud <= t.cloud_max) ? Verdict::Pass : Verdict::Fail;
  r.cloud_low_confidence = low_conf;
  return r;
}

}  // namespace forge
