#pragma once

#include <optional>
#include <string_view>

namespace forge {

enum class Verdict { Pass, Fail };
enum class Decision { Pending, Keep, Discard };
enum class DecidedBy { Auto, Human };

std::string_view to_string(Verdict v);
std::string_view to_string(Decision d);
std::string_view to_string(DecidedBy d);
std::optional<Verdict> parse_verdict(std::string_view t);
std::optional<Decision> parse_decision(std::string_view t);
std::optional<DecidedBy> parse_decided_by(std::string_view t);

struct Thresholds {
  double missing_max = 0.05;
  double cloud_max = 0.30;

  bool operator==(const Thresholds&) const = default;
};

/// Pass iff missing_fraction <= missing_max and cloud_fraction <= cloud_max;
/// score = missing_fraction + cloud_fraction.
struct QualityReport {
  double missing_fraction = 0.0;
  double cloud_fraction = 0.0;
  double score = 0.0;
  Verdict verdict = Verdict::Pass;
  Thresholds thresholds_used;
  /// Cloud estimate came from the brightness fallback (no QA60 band).
  bool cloud_low_confidence = false;

  bool operator==(const QualityReport&) const = default;
};

QualityReport make_report(double missing_fraction, double cloud_fraction, const Thresholds& t,
                          bool cloud_low_confidence = false);

}  // namespace forge
