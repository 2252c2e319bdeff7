#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include "mteval/core.hpp"
#include "mteval/error.hpp"

// Scalar score transformations: per-segment DA label aggregation for the
// first fine-tuning stage, the affine DA<->MQM rescaling used in the second
// stage, output rescaling to the final ESA / negative-MQM scales, and MQM
// score derivation from error spans.

namespace mteval {

struct SeverityWeights {
  double minor = 1.0;
  double major = 5.0;
  double critical = 5.0;  // GEMBA-style schemes use larger values; configurable

  double weight(Severity s) const {
    switch (s) {
      case Severity::Minor: return minor;
      case Severity::Major: return major;
      case Severity::Critical: return critical;
    }
    return minor;
  }

  void validate() const {
    if (minor < 0 || major < 0 || critical < 0) throw OutOfRange("severity weights must be >= 0");
    if (!(minor <= major && major <= critical))
      throw OutOfRange("severity weights must satisfy minor <= major <= critical");
  }
};

/// Affine map between the DA [0,100] scale and the MQM [0,25] scale, plus the
/// clip bounds applied at each pipeline stage. The map and its inverse
/// compose to the identity on [0,100].
struct ScaleMap {
  double da_slope = -0.25;     // mqm = da_intercept + da_slope * da
  double da_intercept = 25.0;  // 100 -> 0, 0 -> 25
  double stage1_clip_lo = -1.0;
  double stage1_clip_hi = 1.0;
  double esa_clip_lo = 0.0;
  double esa_clip_hi = 100.0;

  double da_to_mqm(double da) const { return da_intercept + da_slope * da; }
  double mqm_to_esa(double mqm) const {
    return std::clamp((mqm - da_intercept) / da_slope, esa_clip_lo, esa_clip_hi);
  }
};

inline const ScaleMap& default_scale_map() {
  static const ScaleMap map{};
  return map;
}

/// Stage-1 training label: the per-rater z-scores of one segment aggregated
/// (mean), negated, and clipped to [-1, 1].
inline double aggregate_stage1_label(std::span<const double> z_scores,
                                     const ScaleMap& map = default_scale_map()) {
  if (z_scores.empty()) throw EmptyRatings("no z-scores for segment");
  const double mean =
      std::accumulate(z_scores.begin(), z_scores.end(), 0.0) / static_cast<double>(z_scores.size());
  return std::clamp(-mean, map.stage1_clip_lo, map.stage1_clip_hi);
}

/// Rescales a raw DA score in [0,100] onto the MQM [0,25] scale
/// (monotone decreasing: 100 -> 0, 0 -> 25).
inline double da_to_mqm_scale(double da, const ScaleMap& map = default_scale_map()) {
  if (da < 0.0 || da > 100.0)
    throw OutOfRange("DA score " + std::to_string(da) + " outside [0, 100]");
  return map.da_to_mqm(da);
}

/// Rescales a raw model output (lower-is-better, MQM scale, uncapped) to the
/// final evaluation scale: negated MQM (unbounded below) or ESA in [0,100].
/// Both results are higher-is-better.
inline QualityScore rescale_output(double raw, ScoreType score_type,
                                   const ScaleMap& map = default_scale_map()) {
  if (raw < 0.0) throw NegativeRaw("raw model output " + std::to_string(raw) + " is negative");
  if (score_type == ScoreType::MQM)
    return QualityScore{-raw, ScoreType::MQM, Orientation::HigherBetter};
  return QualityScore{map.mqm_to_esa(raw), ScoreType::ESA, Orientation::HigherBetter};
}

/// MQM score of a segment: the severity-weighted sum over its error spans.
/// Source-error spans (e.g. omissions) count; "no-error" spans never reach
/// here since parsers emit no span for them.
inline double mqm_score_from_spans(std::span<const ErrorSpan> spans,
                                   const SeverityWeights& w = SeverityWeights{}) {
  double total = 0.0;
  for (const auto& s : spans) total += w.weight(s.severity);
  return total;
}

}  // namespace mteval
