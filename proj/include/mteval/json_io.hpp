#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mteval/core.hpp"
#include "mteval/error.hpp"

// Canonical on-disk record: one JSON object per line with keys doc_id,
// seg_id, source, reference, hypothesis, src_lang, tgt_lang, spans, score.
// Writers may add "system"/"rater"; readers ignore unknown keys.

namespace mteval {

using json = nlohmann::json;

/// A canonical JSONL row: the segment plus its annotations.
struct SegmentRecord {
  Segment segment;
  std::vector<ErrorSpan> spans;
  std::optional<QualityScore> score;
  std::optional<std::string> system;
  std::optional<std::string> rater;
};

inline json to_json(const ErrorSpan& s) {
  json j{{"span", s.span},
         {"severity", std::string(to_string(s.severity))},
         {"category", s.category.path},
         {"is_source_error", s.is_source_error}};
  if (s.span_with_context) j["span_with_context"] = *s.span_with_context;
  if (s.offsets) j["offsets"] = json::array({s.offsets->begin, s.offsets->end});
  return j;
}

inline ErrorSpan error_span_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("error span must be a JSON object");
  ErrorSpan s;
  if (!j.contains("span") || !j.at("span").is_string())
    throw SchemaError("error span missing string key 'span'");
  s.span = j.at("span").get<std::string>();
  const auto sev = severity_from_string(j.value("severity", "minor"));
  if (!sev) throw UnknownSeverity("severity '" + j.value("severity", "") + "'");
  s.severity = *sev;
  s.category = ErrorCategory{j.value("category", "other")};
  s.is_source_error = j.value("is_source_error", false);
  if (j.contains("span_with_context") && !j.at("span_with_context").is_null())
    s.span_with_context = j.at("span_with_context").get<std::string>();
  if (j.contains("offsets") && !j.at("offsets").is_null()) {
    const auto& o = j.at("offsets");
    if (!o.is_array() || o.size() != 2) throw SchemaError("offsets must be a [begin, end] array");
    s.offsets = CharRange{o.at(0).get<size_t>(), o.at(1).get<size_t>()};
  }
  return s;
}

inline json to_json(const QualityScore& q) {
  return json{{"value", q.value},
              {"score_type", std::string(to_string(q.score_type))},
              {"orientation", std::string(to_string(q.orientation))}};
}

inline QualityScore quality_score_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("score must be a JSON object");
  QualityScore q;
  q.value = j.at("value").get<double>();
  const auto t = score_type_from_string(j.value("score_type", ""));
  if (!t) throw SchemaError("unknown score_type '" + j.value("score_type", "") + "'");
  q.score_type = *t;
  const auto o = orientation_from_string(j.value("orientation", ""));
  if (!o) throw SchemaError("unknown orientation '" + j.value("orientation", "") + "'");
  q.orientation = *o;
  return q;
}

inline json to_json(const SegmentRecord& r) {
  const Segment& seg = r.segment;
  json j{{"doc_id", seg.doc_id},
         {"seg_id", seg.seg_id},
         {"source", seg.source ? json(*seg.source) : json(nullptr)},
         {"reference", seg.reference ? json(*seg.reference) : json(nullptr)},
         {"hypothesis", seg.hypothesis ? json(*seg.hypothesis) : json(nullptr)},
         {"src_lang", seg.src_lang.str()},
         {"tgt_lang", seg.tgt_lang.str()}};
  json spans = json::array();
  for (const auto& s : r.spans) spans.push_back(to_json(s));
  j["spans"] = std::move(spans);
  j["score"] = r.score ? to_json(*r.score) : json(nullptr);
  if (r.system) j["system"] = *r.system;
  if (r.rater) j["rater"] = *r.rater;
  return j;
}

inline SegmentRecord segment_record_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("segment record must be a JSON object");
  SegmentRecord r;
  Segment& seg = r.segment;
  seg.doc_id = j.value("doc_id", "");
  seg.seg_id = j.value("seg_id", "");
  const auto opt_str = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
  };
  seg.source = opt_str("source");
  seg.reference = opt_str("reference");
  seg.hypothesis = opt_str("hypothesis");
  if (!j.contains("src_lang") || !j.contains("tgt_lang"))
    throw SchemaError("segment record missing src_lang/tgt_lang");
  seg.src_lang = LangTag::parse(j.at("src_lang").get<std::string>());
  seg.tgt_lang = LangTag::parse(j.at("tgt_lang").get<std::string>());
  if (j.contains("spans") && !j.at("spans").is_null())
    for (const auto& s : j.at("spans")) r.spans.push_back(error_span_from_json(s));
  if (j.contains("score") && !j.at("score").is_null())
    r.score = quality_score_from_json(j.at("score"));
  r.system = opt_str("system");
  r.rater = opt_str("rater");
  return r;
}

/// Reads JSONL, one parsed object per non-empty line. Throws ParseFailure
/// with the 1-based line number on invalid JSON.
inline std::vector<json> read_jsonl(std::istream& in) {
  std::vector<json> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseFailure("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<SegmentRecord> read_segment_records(std::istream& in) {
  std::vector<SegmentRecord> out;
  for (const auto& j : read_jsonl(in)) out.push_back(segment_record_from_json(j));
  return out;
}

inline void write_jsonl(std::ostream& out, const std::vector<json>& rows) {
  for (const auto& j : rows) out << j.dump() << '\n';
}

}  // namespace mteval
