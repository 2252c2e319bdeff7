#pragma once

#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mteval/core.hpp"
#include "mteval/error.hpp"
#include "mteval/utf8.hpp"

// Span machinery for generative error annotation: expanding non-unique spans
// with just enough surrounding context to identify them, parsing model JSON
// responses, and resolving predicted spans back to character offsets.

namespace mteval {

/// How context grows around a span: word-delimited expansion looks for the
/// previous/next space character and includes through the adjacent word;
/// character expansion adds one character per side per iteration (used for
/// languages written without spaces, zh and ja by default).
struct ContextExpansionPolicy {
  enum class Unit { Word, Character };
  std::set<std::string> character_unit_languages{"zh", "ja"};

  Unit unit_for(const LangTag& lang) const {
    return character_unit_languages.count(lang.language) ? Unit::Character : Unit::Word;
  }
};

/// Number of (possibly overlapping) occurrences of needle in text, in code
/// point units. Overlapping counting never declares unique what a
/// left-to-right scanner would find twice.
inline size_t count_occurrences(std::string_view text, std::string_view needle) {
  if (needle.empty()) throw EmptyNeedle("occurrence counting needs a nonempty needle");
  const std::u32string t = utf8::decode(text);
  const std::u32string n = utf8::decode(needle);
  size_t count = 0;
  for (size_t pos = t.find(n); pos != std::u32string::npos; pos = t.find(n, pos + 1)) ++count;
  return count;
}

/// A disambiguating context: the substring and its [begin, end) offsets.
struct SpanContext {
  std::string text;
  size_t begin = 0;
  size_t end = 0;
  bool operator==(const SpanContext&) const = default;
};

namespace detail {

inline size_t count_in(const std::u32string& t, const std::u32string& n) {
  size_t count = 0;
  for (size_t pos = t.find(n); pos != std::u32string::npos; pos = t.find(n, pos + 1)) ++count;
  return count;
}

inline bool is_space(char32_t c) { return c == U' '; }

// One word-unit step left from cs: past the previous space character and
// through the adjacent word, whitespace kept exactly as found.
inline size_t word_step_left(const std::u32string& t, size_t cs) {
  size_t i = cs;
  while (i > 0 && !is_space(t[i - 1])) --i;  // finish the current word
  if (i == 0) return 0;
  while (i > 0 && is_space(t[i - 1])) --i;   // the separating whitespace
  while (i > 0 && !is_space(t[i - 1])) --i;  // the adjacent word
  return i;
}

// One word-unit step right from ce, mirror of word_step_left.
inline size_t word_step_right(const std::u32string& t, size_t ce) {
  size_t i = ce;
  while (i < t.size() && !is_space(t[i])) ++i;
  if (i == t.size()) return i;
  while (i < t.size() && is_space(t[i])) ++i;
  while (i < t.size() && !is_space(t[i])) ++i;
  return i;
}

// True if the span occurs starting anywhere in [from, start). Such an
// occurrence always fits inside the context (it ends before the span does),
// so admitting it would break first-occurrence localization.
inline bool earlier_occurrence_in(const std::u32string& t, const std::u32string& span, size_t from,
                                  size_t start) {
  for (size_t p = from; p < start; ++p)
    if (t.compare(p, span.size(), span) == 0) return true;
  return false;
}

}  // namespace detail

/// For the span occurrence at text[start:end): nullopt if the span is unique
/// in text; otherwise the smallest expansion (one unit per side per
/// iteration, sides saturating at text boundaries) that occurs exactly once
/// in text. A left step that would put an earlier occurrence of the span
/// inside the context is rejected, so the span's first in-context occurrence
/// is always the original one and locate_span round-trips exactly. Throws
/// ContextExhausted when no such context exists.
inline std::optional<SpanContext> make_unique_context(std::string_view text, size_t start,
                                                      size_t end,
                                                      ContextExpansionPolicy::Unit unit) {
  const std::u32string t = utf8::decode(text);
  if (start >= end || end > t.size())
    throw SpanNotInText("invalid span offsets [" + std::to_string(start) + ", " +
                        std::to_string(end) + ") for text of length " + std::to_string(t.size()));
  const std::u32string span = t.substr(start, end - start);
  if (detail::count_in(t, span) == 1) return std::nullopt;

  size_t cs = start, ce = end;
  bool left_open = cs > 0, right_open = ce < t.size();
  while (left_open || right_open) {
    bool stepped = false;
    if (left_open) {
      const size_t next = unit == ContextExpansionPolicy::Unit::Character
                              ? cs - 1
                              : detail::word_step_left(t, cs);
      if (next >= cs) {
        left_open = false;
      } else if (detail::earlier_occurrence_in(t, span, next, start)) {
        left_open = false;
      } else {
        cs = next;
        stepped = true;
        if (cs == 0) left_open = false;
      }
    }
    if (right_open) {
      const size_t next = unit == ContextExpansionPolicy::Unit::Character
                              ? ce + 1
                              : detail::word_step_right(t, ce);
      if (next <= ce) {
        right_open = false;
      } else {
        ce = next;
        stepped = true;
        if (ce == t.size()) right_open = false;
      }
    }
    if (!stepped) break;
    const std::u32string ctx = t.substr(cs, ce - cs);
    if (detail::count_in(t, ctx) == 1)
      return SpanContext{utf8::encode(ctx), cs, ce};
  }
  throw ContextExhausted("no unique context identifies the occurrence at [" +
                         std::to_string(start) + ", " + std::to_string(end) + ")");
}

/// Training-data preparation: spans whose text is unique in their segment
/// text (hypothesis, or source for source errors) are returned unchanged;
/// the rest gain span_with_context. All spans must carry offsets.
inline std::vector<ErrorSpan> annotate_training_spans(const Segment& seg,
                                                      std::vector<ErrorSpan> spans,
                                                      const ContextExpansionPolicy& policy = {}) {
  for (auto& s : spans) {
    if (!s.offsets) throw SpanNotInText("gold span '" + s.span + "' has no offsets");
    const std::optional<std::string>& text = s.is_source_error ? seg.source : seg.hypothesis;
    if (!text)
      throw SpanNotInText(s.is_source_error ? "source error span but segment has no source"
                                            : "segment has no hypothesis");
    if (!resolve_offsets_check(*text, s))
      throw SpanNotInText("span '" + s.span + "' does not match text at its offsets");
    const LangTag& lang = s.is_source_error ? seg.src_lang : seg.tgt_lang;
    auto ctx = make_unique_context(*text, s.offsets->begin, s.offsets->end, policy.unit_for(lang));
    if (ctx) s.span_with_context = ctx->text;
  }
  return spans;
}

// ---------------------------------------------------------------------------
// Model response parsing

enum class ParseStrictness { Strict, Lenient };

namespace detail {

inline ErrorSpan span_from_object_strict(const nlohmann::json& obj,
                                         const std::set<std::string>* extra_categories) {
  static const std::set<std::string> kKeys{"span", "severity", "category", "span_with_context",
                                           "is_source_error"};
  for (const auto& [key, value] : obj.items())
    if (!kKeys.count(key)) throw SchemaError("unexpected key '" + key + "'");
  ErrorSpan s;
  if (!obj.contains("span") || !obj.at("span").is_string())
    throw SchemaError("missing string key 'span'");
  s.span = obj.at("span").get<std::string>();
  if (!obj.contains("severity") || !obj.at("severity").is_string())
    throw SchemaError("missing string key 'severity'");
  const auto sev = severity_from_string(obj.at("severity").get<std::string>());
  if (!sev) throw UnknownSeverity("severity '" + obj.at("severity").get<std::string>() + "'");
  s.severity = *sev;
  if (!obj.contains("category") || !obj.at("category").is_string())
    throw SchemaError("missing string key 'category'");
  s.category = normalize_category(obj.at("category").get<std::string>(), /*lenient=*/false,
                                  extra_categories);
  if (obj.contains("span_with_context")) {
    if (!obj.at("span_with_context").is_string())
      throw SchemaError("span_with_context must be a string");
    s.span_with_context = obj.at("span_with_context").get<std::string>();
    if (s.span_with_context->find(s.span) == std::string::npos)
      throw SchemaError("span is not a substring of span_with_context");
  }
  if (obj.contains("is_source_error")) {
    if (!obj.at("is_source_error").is_boolean())
      throw SchemaError("is_source_error must be a boolean");
    s.is_source_error = obj.at("is_source_error").get<bool>();
  }
  return s;
}

inline ErrorSpan span_from_object_lenient(const nlohmann::json& obj) {
  ErrorSpan s;
  if (obj.contains("span") && obj.at("span").is_string()) s.span = obj.at("span").get<std::string>();
  s.severity = Severity::Minor;
  if (obj.contains("severity") && obj.at("severity").is_string())
    if (auto sev = severity_from_string(lowercase(obj.at("severity").get<std::string>())))
      s.severity = *sev;
  s.category = ErrorCategory{"other"};
  if (obj.contains("category") && obj.at("category").is_string())
    s.category = normalize_category(obj.at("category").get<std::string>(), /*lenient=*/true);
  if (obj.contains("span_with_context") && obj.at("span_with_context").is_string()) {
    std::string ctx = obj.at("span_with_context").get<std::string>();
    // A context that does not contain the span cannot localize it; drop it.
    if (ctx.find(s.span) != std::string::npos) s.span_with_context = std::move(ctx);
  }
  if (obj.contains("is_source_error") && obj.at("is_source_error").is_boolean())
    s.is_source_error = obj.at("is_source_error").get<bool>();
  return s;
}

// First complete JSON array found in the text, scanning '[' positions left
// to right. Uses stream extraction, which stops after one JSON value and
// tolerates trailing text.
inline std::optional<nlohmann::json> extract_json_array(std::string_view text) {
  for (size_t pos = text.find('['); pos != std::string_view::npos; pos = text.find('[', pos + 1)) {
    std::istringstream in{std::string(text.substr(pos))};
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error&) {
      continue;
    }
    if (j.is_array()) return j;
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses a model response into error spans. The response protocol is a JSON
/// array of objects with keys span, severity, category, optional
/// span_with_context, optional is_source_error. Strict mode rejects any
/// deviation (extra_categories widens the accepted vocabulary). Lenient mode
/// tolerates leading/trailing text around the array, coerces unknown
/// severities to minor and unknown categories to "other", and skips
/// non-object elements; it fails only when no JSON array can be parsed at
/// all (the fallback-chain trigger).
inline std::vector<ErrorSpan> parse_span_response(
    std::string_view response, ParseStrictness strictness,
    const std::set<std::string>* extra_categories = nullptr) {
  nlohmann::json root;
  if (strictness == ParseStrictness::Strict) {
    try {
      root = nlohmann::json::parse(response);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseFailure(e.what());
    }
    if (!root.is_array()) throw SchemaError("response is not a JSON array");
  } else {
    auto arr = detail::extract_json_array(response);
    if (!arr) throw ParseFailure("no JSON array found in response");
    root = std::move(*arr);
  }
  std::vector<ErrorSpan> spans;
  for (const auto& el : root) {
    if (strictness == ParseStrictness::Strict) {
      if (!el.is_object()) throw SchemaError("array element is not an object");
      spans.push_back(detail::span_from_object_strict(el, extra_categories));
    } else {
      if (!el.is_object()) continue;
      spans.push_back(detail::span_from_object_lenient(el));
    }
  }
  return spans;
}

// ---------------------------------------------------------------------------
// Localization

/// Resolves a predicted span to [begin, end) code point offsets in text.
/// With a context: the first occurrence of the context anchors the search,
/// and the first occurrence of the span inside it wins. Without: the first
/// occurrence of the span in text.
inline CharRange locate_span(std::string_view text, const ErrorSpan& span) {
  if (span.span.empty()) throw EmptyNeedle("cannot locate an empty span");
  const std::u32string t = utf8::decode(text);
  const std::u32string s = utf8::decode(span.span);
  if (span.span_with_context) {
    const std::u32string ctx = utf8::decode(*span.span_with_context);
    const size_t base = t.find(ctx);
    if (base == std::u32string::npos)
      throw ContextNotFound("context '" + *span.span_with_context + "' not found in text");
    const size_t rel = ctx.find(s);
    if (rel == std::u32string::npos)
      throw SpanNotInContext("span '" + span.span + "' not found in its context");
    return CharRange{base + rel, base + rel + s.size()};
  }
  const size_t pos = t.find(s);
  if (pos == std::u32string::npos)
    throw SpanNotFound("span '" + span.span + "' not found in text");
  return CharRange{pos, pos + s.size()};
}

// ---------------------------------------------------------------------------
// Corpus statistics

struct UniquenessStats {
  size_t total_spans = 0;
  size_t non_unique_spans = 0;
  size_t total_span_chars = 0;
  size_t non_unique_span_chars = 0;

  double span_fraction() const {
    return total_spans ? static_cast<double>(non_unique_spans) / static_cast<double>(total_spans)
                       : 0.0;
  }
  double char_fraction() const {
    return total_span_chars ? static_cast<double>(non_unique_span_chars) /
                                  static_cast<double>(total_span_chars)
                            : 0.0;
  }
};

/// Fraction of error spans that are not unique in their segment text, and
/// the fraction of error-span characters falling in non-unique spans
/// (non-unique spans tend to be short, so the second number is smaller).
inline UniquenessStats span_uniqueness_stats(
    std::span<const std::pair<std::string, std::vector<ErrorSpan>>> corpus) {
  UniquenessStats stats;
  for (const auto& [text, spans] : corpus) {
    const std::u32string t = utf8::decode(text);
    for (const auto& s : spans) {
      if (s.span.empty()) continue;
      const std::u32string n = utf8::decode(s.span);
      ++stats.total_spans;
      stats.total_span_chars += n.size();
      if (detail::count_in(t, n) > 1) {
        ++stats.non_unique_spans;
        stats.non_unique_span_chars += n.size();
      }
    }
  }
  return stats;
}

}  // namespace mteval
