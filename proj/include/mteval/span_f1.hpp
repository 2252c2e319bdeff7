#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mteval/core.hpp"
#include "mteval/error.hpp"
#include "mteval/utf8.hpp"

// Severity-weighted character-level F1 of predicted error spans against gold
// spans. Spans reduce to per-character severity labels; matched characters
// with the wrong severity earn partial credit.

namespace mteval {

/// Per-character severity labels over a hypothesis, overlaps resolved to the
/// maximum severity.
struct CharLabeling {
  std::vector<std::optional<Severity>> labels;

  size_t size() const { return labels.size(); }
  size_t labeled_count() const {
    size_t n = 0;
    for (const auto& l : labels)
      if (l) ++n;
    return n;
  }
};

/// Reduces spans to a per-character labeling of text. Source-error spans are
/// skipped (they are not part of the character-F1 task); all remaining spans
/// must carry offsets within the text.
inline CharLabeling label_characters(std::string_view text, std::span<const ErrorSpan> spans) {
  CharLabeling out;
  out.labels.assign(utf8::length(text), std::nullopt);
  for (const auto& s : spans) {
    if (s.is_source_error) continue;
    if (!s.offsets) throw OffsetsOutOfRange("span '" + s.span + "' has unresolved offsets");
    if (s.offsets->begin > s.offsets->end || s.offsets->end > out.labels.size())
      throw OffsetsOutOfRange("span offsets [" + std::to_string(s.offsets->begin) + ", " +
                              std::to_string(s.offsets->end) + ") exceed text length " +
                              std::to_string(out.labels.size()));
    for (size_t i = s.offsets->begin; i < s.offsets->end; ++i)
      out.labels[i] = out.labels[i] ? max_severity(*out.labels[i], s.severity) : s.severity;
  }
  return out;
}

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {

struct F1Pools {
  double matched = 0.0;  // severity-weighted matches
  size_t pred = 0;
  size_t gold = 0;
};

inline F1Pools pool_segment(const CharLabeling& pred, const CharLabeling& gold,
                            double partial_credit) {
  if (pred.size() != gold.size())
    throw LengthMismatch("labelings cover " + std::to_string(pred.size()) + " vs " +
                         std::to_string(gold.size()) + " characters");
  F1Pools p;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred.labels[i]) ++p.pred;
    if (gold.labels[i]) ++p.gold;
    if (pred.labels[i] && gold.labels[i])
      p.matched += (*pred.labels[i] == *gold.labels[i]) ? 1.0 : partial_credit;
  }
  return p;
}

inline PRF prf_from_pools(const F1Pools& p) {
  if (p.pred == 0 && p.gold == 0) return PRF{1.0, 1.0, 1.0};
  if (p.pred == 0 || p.gold == 0) return PRF{0.0, 0.0, 0.0};
  PRF out;
  out.precision = p.matched / static_cast<double>(p.pred);
  out.recall = p.matched / static_cast<double>(p.gold);
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

}  // namespace detail

/// Character F1 of one segment. A character labeled on both sides counts 1
/// when the severities agree, else partial_credit. Both labelings empty is a
/// perfect segment; exactly one empty scores zero.
inline PRF segment_char_f1(const CharLabeling& pred, const CharLabeling& gold,
                           double partial_credit = 0.5) {
  return detail::prf_from_pools(detail::pool_segment(pred, gold, partial_credit));
}

/// Micro-averaged corpus F1: weighted matches and label counts pool across
/// segments before computing P/R/F1, so characters contribute in proportion
/// to span length. Segments empty on both sides add nothing to the pools.
inline PRF corpus_char_f1(std::span<const std::pair<CharLabeling, CharLabeling>> segments,
                          double partial_credit = 0.5) {
  if (segments.empty()) throw EmptyCorpus("no segments to score");
  detail::F1Pools total;
  for (const auto& [pred, gold] : segments) {
    const auto p = detail::pool_segment(pred, gold, partial_credit);
    total.matched += p.matched;
    total.pred += p.pred;
    total.gold += p.gold;
  }
  return detail::prf_from_pools(total);
}

/// Macro alternative: the unweighted mean of per-segment P/R/F1 (both-empty
/// segments count as perfect).
inline PRF corpus_char_f1_macro(std::span<const std::pair<CharLabeling, CharLabeling>> segments,
                                double partial_credit = 0.5) {
  if (segments.empty()) throw EmptyCorpus("no segments to score");
  PRF mean;
  for (const auto& [pred, gold] : segments) {
    const PRF s = segment_char_f1(pred, gold, partial_credit);
    mean.precision += s.precision;
    mean.recall += s.recall;
    mean.f1 += s.f1;
  }
  const double n = static_cast<double>(segments.size());
  return PRF{mean.precision / n, mean.recall / n, mean.f1 / n};
}

}  // namespace mteval
