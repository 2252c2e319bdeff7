#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mteval/core.hpp"
#include "mteval/error.hpp"
#include "mteval/json_io.hpp"

// Parsers for WMT-style score exports: MQM annotation TSVs (error spans
// marked with <v>...</v> in the target text) and DA rating TSVs, plus the
// per-rater z-normalization and dataset filters applied before training.

namespace mteval {

struct RatingRecord {
  std::string system;
  std::string doc_id;
  std::string seg_id;
  std::string rater;
  double raw_score = 0.0;
  std::optional<double> z_score;
  std::optional<int> year;
  std::optional<LangTag> src_lang;
  std::optional<LangTag> tgt_lang;
};

namespace detail {

inline std::vector<std::string> split_tsv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

inline double parse_number(const std::string& s, size_t lineno) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw MalformedLine("line " + std::to_string(lineno) + ": not a number: '" + s + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MQM TSV

struct MqmParseResult {
  std::vector<SegmentRecord> records;
  size_t neutral_spans_dropped = 0;
  size_t categories_coerced = 0;
};

/// Splits a <v>-marked target into the clean text and the spans it marks.
/// Offsets are code point indices into the clean text.
inline std::pair<std::string, std::vector<ErrorSpan>> strip_span_markers(const std::string& target,
                                                                         size_t lineno = 0) {
  static constexpr std::string_view kOpen = "<v>";
  static constexpr std::string_view kClose = "</v>";
  std::string clean;
  std::vector<ErrorSpan> spans;
  size_t cp = 0;  // code points appended to clean so far
  bool open = false;
  size_t span_begin = 0;
  std::string span_text;
  const auto err = [&](const char* what) {
    throw UnbalancedMarkers("line " + std::to_string(lineno) + ": " + what + " in '" + target +
                            "'");
  };
  for (size_t i = 0; i < target.size();) {
    if (target.compare(i, kOpen.size(), kOpen) == 0) {
      if (open) err("nested <v>");
      open = true;
      span_begin = cp;
      span_text.clear();
      i += kOpen.size();
    } else if (target.compare(i, kClose.size(), kClose) == 0) {
      if (!open) err("</v> without <v>");
      open = false;
      ErrorSpan s;
      s.span = span_text;
      s.offsets = CharRange{span_begin, cp};
      spans.push_back(std::move(s));
      i += kClose.size();
    } else {
      const char c = target[i];
      clean.push_back(c);
      if (open) span_text.push_back(c);
      if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++cp;
      ++i;
    }
  }
  if (open) err("unclosed <v>");
  return {std::move(clean), std::move(spans)};
}

/// Parses an MQM export (columns: system, doc_id, seg_id, rater, source,
/// target, category, severity; optional header). Lines sharing
/// (system, doc_id, seg_id, rater) merge into one record. Severities are
/// lowercased; "neutral" spans are dropped with a counter; unknown categories
/// coerce to "other".
inline MqmParseResult parse_mqm_tsv(std::istream& in, const LangTag& src_lang,
                                    const LangTag& tgt_lang) {
  MqmParseResult result;
  std::map<std::array<std::string, 4>, size_t> index;  // key -> position in records
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = detail::split_tsv(line);
    if (lineno == 1 && !cols.empty() && cols[0] == "system") continue;  // header
    if (cols.size() != 8)
      throw MalformedLine("line " + std::to_string(lineno) + ": expected 8 tab-separated columns, got " +
                          std::to_string(cols.size()));
    const std::string& system = cols[0];
    const std::string& doc_id = cols[1];
    const std::string& seg_id = cols[2];
    const std::string& rater = cols[3];
    const std::string& source = cols[4];
    const std::string& target = cols[5];
    const std::string category = lowercase(cols[6]);
    const std::string severity = lowercase(cols[7]);

    auto [clean, spans] = strip_span_markers(target, lineno);

    const std::array<std::string, 4> key{system, doc_id, seg_id, rater};
    auto it = index.find(key);
    if (it == index.end()) {
      SegmentRecord rec;
      rec.segment.doc_id = doc_id;
      rec.segment.seg_id = seg_id;
      rec.segment.source = source;
      rec.segment.hypothesis = clean;
      rec.segment.src_lang = src_lang;
      rec.segment.tgt_lang = tgt_lang;
      rec.system = system;
      rec.rater = rater;
      it = index.emplace(key, result.records.size()).first;
      result.records.push_back(std::move(rec));
    } else if (result.records[it->second].segment.hypothesis != clean) {
      throw MalformedLine("line " + std::to_string(lineno) +
                          ": marker-stripped target disagrees with earlier line for the same "
                          "(system, doc, seg, rater)");
    }
    SegmentRecord& rec = result.records[it->second];

    if (severity == "neutral") {
      result.neutral_spans_dropped += spans.size();
      continue;
    }
    if (severity == "no-error" || severity == "no error") continue;
    const auto sev = severity_from_string(severity);
    if (!sev)
      throw MalformedLine("line " + std::to_string(lineno) + ": unknown severity '" + severity +
                          "'");
    ErrorCategory cat = normalize_category(category, /*lenient=*/true);
    if (cat.path == "other" && category != "other") ++result.categories_coerced;
    for (auto& s : spans) {
      s.severity = *sev;
      s.category = cat;
      rec.spans.push_back(std::move(s));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// DA TSV

/// Parses DA ratings (columns: system, doc, seg, rater, raw_score, optional
/// z_score; optional header).
inline std::vector<RatingRecord> parse_da_tsv(std::istream& in) {
  std::vector<RatingRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = detail::split_tsv(line);
    if (lineno == 1 && !cols.empty() && cols[0] == "system") continue;
    if (cols.size() != 5 && cols.size() != 6)
      throw MalformedLine("line " + std::to_string(lineno) +
                          ": expected 5 or 6 tab-separated columns, got " +
                          std::to_string(cols.size()));
    RatingRecord r;
    r.system = cols[0];
    r.doc_id = cols[1];
    r.seg_id = cols[2];
    r.rater = cols[3];
    r.raw_score = detail::parse_number(cols[4], lineno);
    if (cols.size() == 6 && !cols[5].empty()) r.z_score = detail::parse_number(cols[5], lineno);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// z-normalization

struct ZScoreResult {
  std::vector<RatingRecord> records;  // input order, degenerate raters removed
  size_t degenerate_raters = 0;
  size_t dropped_records = 0;
};

/// Fills z_score per rater over all of that rater's records: z = (x - mean)
/// / sd with the population standard deviation. Raters with fewer than two
/// distinct raw scores are degenerate; their records are excluded.
inline ZScoreResult zscore_per_rater(const std::vector<RatingRecord>& records) {
  struct Stats {
    double sum = 0, sumsq = 0;
    size_t n = 0;
    double first = 0;
    bool constant = true;
  };
  std::map<std::string, Stats> by_rater;
  for (const auto& r : records) {
    auto& s = by_rater[r.rater];
    if (s.n == 0) s.first = r.raw_score;
    else if (r.raw_score != s.first) s.constant = false;
    s.sum += r.raw_score;
    s.sumsq += r.raw_score * r.raw_score;
    ++s.n;
  }
  struct Norm {
    double mean, sd;
    bool ok;
  };
  std::map<std::string, Norm> norms;
  ZScoreResult result;
  for (const auto& [rater, s] : by_rater) {
    const double mean = s.sum / static_cast<double>(s.n);
    const double var = std::max(0.0, s.sumsq / static_cast<double>(s.n) - mean * mean);
    const bool ok = s.n >= 2 && !s.constant;
    if (!ok) ++result.degenerate_raters;
    norms[rater] = Norm{mean, std::sqrt(var), ok};
  }
  for (const auto& r : records) {
    const Norm& n = norms.at(r.rater);
    if (!n.ok) {
      ++result.dropped_records;
      continue;
    }
    RatingRecord out = r;
    out.z_score = (r.raw_score - n.mean) / n.sd;
    result.records.push_back(std::move(out));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Dataset filters

struct DatasetFilter {
  enum class Direction { Any, IntoEnglish, OutOfEnglish };
  struct Rule {
    int year = 0;
    Direction direction = Direction::Any;
  };
  std::vector<Rule> exclusions;

  /// The metricx25 preset: the into-English subset of WMT21 is omitted (low
  /// rating quality).
  static DatasetFilter metricx25() {
    return DatasetFilter{{Rule{2021, Direction::IntoEnglish}}};
  }

  bool excludes(const RatingRecord& r) const {
    for (const auto& rule : exclusions) {
      if (!r.year || *r.year != rule.year) continue;
      switch (rule.direction) {
        case Direction::Any: return true;
        case Direction::IntoEnglish:
          if (r.tgt_lang && r.tgt_lang->language == "en") return true;
          break;
        case Direction::OutOfEnglish:
          if (r.src_lang && r.src_lang->language == "en") return true;
          break;
      }
    }
    return false;
  }
};

struct FilterResult {
  std::vector<RatingRecord> kept;
  size_t removed = 0;
};

inline FilterResult apply_filters(const std::vector<RatingRecord>& records,
                                  const DatasetFilter& filter) {
  FilterResult result;
  for (const auto& r : records) {
    if (filter.excludes(r)) ++result.removed;
    else result.kept.push_back(r);
  }
  return result;
}

}  // namespace mteval
