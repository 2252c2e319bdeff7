#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "mteval/error.hpp"
#include "mteval/utf8.hpp"

// Shared domain types: segments, error spans, severities, quality scores.
// Everything here is an immutable value object; instances are safe to copy
// and share across threads.

namespace mteval {

// ---------------------------------------------------------------------------
// Language tags

struct LangTag {
  std::string language;                 // lowercase ISO-639 code, e.g. "en"
  std::optional<std::string> region;    // uppercase region code, e.g. "GB"

  /// Parses "en", "en-GB" or "en_GB"; normalizes case.
  static LangTag parse(std::string_view s) {
    LangTag tag;
    const size_t sep = s.find_first_of("-_");
    std::string_view lang = (sep == std::string_view::npos) ? s : s.substr(0, sep);
    for (char c : lang)
      tag.language.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (sep != std::string_view::npos) {
      std::string reg;
      for (char c : s.substr(sep + 1))
        reg.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      if (!reg.empty()) tag.region = std::move(reg);
    }
    tag.validate();
    return tag;
  }

  void validate() const {
    if (language.empty()) throw Error("empty language code");
    for (char c : language)
      if (!std::isalpha(static_cast<unsigned char>(c)))
        throw Error("language code must be ASCII letters: '" + language + "'");
    if (region && region->empty()) throw Error("empty region code");
  }

  /// Locale string, e.g. "ar_EG".
  std::string str() const { return region ? language + "_" + *region : language; }

  bool operator==(const LangTag&) const = default;
};

// ---------------------------------------------------------------------------
// Severities

enum class Severity { Minor = 0, Major = 1, Critical = 2 };

constexpr std::array<Severity, 3> kAllSeverities{Severity::Minor, Severity::Major,
                                                 Severity::Critical};

inline std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Minor: return "minor";
    case Severity::Major: return "major";
    case Severity::Critical: return "critical";
  }
  return "minor";
}

inline std::optional<Severity> severity_from_string(std::string_view s) {
  if (s == "minor") return Severity::Minor;
  if (s == "major") return Severity::Major;
  if (s == "critical") return Severity::Critical;
  return std::nullopt;
}

inline Severity max_severity(Severity a, Severity b) { return a < b ? b : a; }

// ---------------------------------------------------------------------------
// Error categories

/// Slash-separated lowercase MQM category path, e.g. "accuracy/mistranslation".
struct ErrorCategory {
  std::string path = "other";

  bool operator==(const ErrorCategory&) const = default;
  bool operator<(const ErrorCategory& o) const { return path < o.path; }
};

/// The closed category vocabulary: MQM categories plus "other" and "no-error".
inline const std::set<std::string>& category_vocabulary() {
  static const std::set<std::string> vocab{
      "accuracy/addition",
      "accuracy/mistranslation",
      "accuracy/omission",
      "accuracy/untranslated text",
      "fluency/character encoding",
      "fluency/grammar",
      "fluency/inconsistency",
      "fluency/punctuation",
      "fluency/register",
      "fluency/spelling",
      "style/awkward",
      "terminology/inappropriate for context",
      "terminology/inconsistent use",
      "non-translation",
      "other",
      "no-error",
  };
  return vocab;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Maps a raw category string into the vocabulary. Lenient mode coerces
/// unknown categories to "other" (optionally extended via `extra`); strict
/// mode throws UnknownCategory.
inline ErrorCategory normalize_category(std::string_view raw, bool lenient,
                                        const std::set<std::string>* extra = nullptr) {
  const std::string lc = lowercase(raw);
  if (category_vocabulary().count(lc) || (extra && extra->count(lc))) return ErrorCategory{lc};
  if (lenient) return ErrorCategory{"other"};
  throw UnknownCategory("unknown error category: '" + std::string(raw) + "'");
}

// ---------------------------------------------------------------------------
// Error spans

/// Half-open character range [begin, end) in code point units.
struct CharRange {
  size_t begin = 0;
  size_t end = 0;
  bool operator==(const CharRange&) const = default;
  size_t size() const { return end - begin; }
};

struct ErrorSpan {
  std::string span;
  Severity severity = Severity::Minor;
  ErrorCategory category;
  bool is_source_error = false;
  std::optional<std::string> span_with_context;
  std::optional<CharRange> offsets;

  bool operator==(const ErrorSpan&) const = default;
};

// ---------------------------------------------------------------------------
// Quality scores

enum class ScoreType { MQM, ESA };
enum class Orientation { LowerBetter, HigherBetter };

inline std::string_view to_string(ScoreType t) { return t == ScoreType::MQM ? "MQM" : "ESA"; }
inline std::string_view to_string(Orientation o) {
  return o == Orientation::LowerBetter ? "lower_better" : "higher_better";
}

inline std::optional<ScoreType> score_type_from_string(std::string_view s) {
  if (s == "MQM" || s == "mqm") return ScoreType::MQM;
  if (s == "ESA" || s == "esa") return ScoreType::ESA;
  return std::nullopt;
}

inline std::optional<Orientation> orientation_from_string(std::string_view s) {
  if (s == "lower_better") return Orientation::LowerBetter;
  if (s == "higher_better") return Orientation::HigherBetter;
  return std::nullopt;
}

struct QualityScore {
  double value = 0.0;
  ScoreType score_type = ScoreType::MQM;
  Orientation orientation = Orientation::LowerBetter;

  bool operator==(const QualityScore&) const = default;

  void validate() const {
    if (score_type == ScoreType::ESA && orientation == Orientation::HigherBetter &&
        (value < 0.0 || value > 100.0))
      throw OutOfRange("ESA score outside [0, 100]");
    // MQM lower-is-better scores are uncapped above but never negative.
    if (score_type == ScoreType::MQM && orientation == Orientation::LowerBetter && value < 0.0)
      throw OutOfRange("MQM score below 0");
  }
};

// ---------------------------------------------------------------------------
// Segments

struct Segment {
  std::string doc_id;
  std::string seg_id;
  std::optional<std::string> source;
  std::optional<std::string> reference;
  std::optional<std::string> hypothesis;  // required; optional only so absence is detectable
  LangTag src_lang;
  LangTag tgt_lang;

  bool operator==(const Segment&) const = default;
};

/// Checks the segment invariants: a hypothesis exists (it may be empty text --
/// empty translations occur in WMT data) and at least one of source/reference
/// is present.
inline const Segment& validate_segment(const Segment& seg) {
  if (!seg.hypothesis) throw MissingHypothesis("segment " + seg.doc_id + ":" + seg.seg_id);
  if (!seg.source && !seg.reference)
    throw NoSourceOrReference("segment " + seg.doc_id + ":" + seg.seg_id);
  return seg;
}

/// True iff text[offsets.begin:offsets.end) equals span.span, in code point
/// units. Requires span.offsets.
inline bool resolve_offsets_check(std::string_view text, const ErrorSpan& span) {
  if (!span.offsets) throw OffsetsOutOfRange("span has no offsets");
  const std::u32string t = utf8::decode(text);
  if (span.offsets->begin > span.offsets->end || span.offsets->end > t.size())
    throw OffsetsOutOfRange("offsets [" + std::to_string(span.offsets->begin) + ", " +
                            std::to_string(span.offsets->end) + ") exceed text length " +
                            std::to_string(t.size()));
  return t.compare(span.offsets->begin, span.offsets->size(), utf8::decode(span.span)) == 0;
}

}  // namespace mteval
