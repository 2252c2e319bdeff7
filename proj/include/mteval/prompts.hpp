#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "mteval/core.hpp"
#include "mteval/error.hpp"

// Model-input rendering: the score-prediction input format (segments fenced
// in triple backticks, blocks separated by blank lines, optional score-type
// line) and the span-annotation prompt, with language/locale display names.

namespace mteval {

enum class PromptMode { SrcOnly, RefOnly, SrcAndRef };

inline std::string_view to_string(PromptMode m) {
  switch (m) {
    case PromptMode::SrcOnly: return "src_only";
    case PromptMode::RefOnly: return "ref_only";
    case PromptMode::SrcAndRef: return "src_and_ref";
  }
  return "src_and_ref";
}

inline std::optional<PromptMode> prompt_mode_from_string(std::string_view s) {
  if (s == "src_only" || s == "src-only") return PromptMode::SrcOnly;
  if (s == "ref_only" || s == "ref-only") return PromptMode::RefOnly;
  if (s == "src_and_ref" || s == "src-and-ref") return PromptMode::SrcAndRef;
  return std::nullopt;
}

/// Language display names plus, for languages with multiple major dialects,
/// region display names. Lookups are total: an unknown (language, region)
/// combination falls back to language-only rendering.
struct DialectTable {
  std::map<std::string, std::string> names;                           // code -> display name
  std::map<std::string, std::map<std::string, std::string>> dialects; // lang -> region -> country

  static const DialectTable& defaults();

  /// Full override from a JSON object {"names": {...}, "dialects": {...}}.
  static DialectTable from_json(const nlohmann::json& j) {
    DialectTable t;
    for (const auto& [k, v] : j.at("names").items()) t.names[k] = v.get<std::string>();
    if (j.contains("dialects"))
      for (const auto& [lang, regions] : j.at("dialects").items())
        for (const auto& [region, country] : regions.items())
          t.dialects[lang][region] = country.get<std::string>();
    return t;
  }
};

inline const DialectTable& DialectTable::defaults() {
  static const DialectTable table = [] {
    DialectTable t;
    t.names = {
        {"ar", "Arabic"},     {"bg", "Bulgarian"}, {"bn", "Bengali"},   {"cs", "Czech"},
        {"da", "Danish"},     {"de", "German"},    {"el", "Greek"},     {"en", "English"},
        {"es", "Spanish"},    {"et", "Estonian"},  {"fa", "Farsi"},     {"fi", "Finnish"},
        {"fr", "French"},     {"gu", "Gujarati"},  {"he", "Hebrew"},    {"hi", "Hindi"},
        {"hr", "Croatian"},   {"hu", "Hungarian"}, {"id", "Indonesian"},{"is", "Icelandic"},
        {"it", "Italian"},    {"ja", "Japanese"},  {"kk", "Kazakh"},    {"km", "Khmer"},
        {"ko", "Korean"},     {"lt", "Lithuanian"},{"lv", "Latvian"},   {"mr", "Marathi"},
        {"nl", "Dutch"},      {"no", "Norwegian"}, {"pl", "Polish"},    {"ps", "Pashto"},
        {"pt", "Portuguese"}, {"ro", "Romanian"},  {"ru", "Russian"},   {"sk", "Slovak"},
        {"sl", "Slovenian"},  {"sr", "Serbian"},   {"sv", "Swedish"},   {"ta", "Tamil"},
        {"th", "Thai"},       {"tr", "Turkish"},   {"uk", "Ukrainian"}, {"ur", "Urdu"},
        {"vi", "Vietnamese"}, {"zh", "Chinese"},   {"zu", "Zulu"},
    };
    t.dialects = {
        {"ar", {{"EG", "Egypt"}, {"SA", "Saudi Arabia"}, {"MA", "Morocco"}, {"AE", "United Arab Emirates"}}},
        {"en", {{"GB", "United Kingdom"}, {"US", "United States"}, {"AU", "Australia"}, {"CA", "Canada"}, {"IN", "India"}}},
        {"es", {{"ES", "Spain"}, {"MX", "Mexico"}, {"AR", "Argentina"}, {"CO", "Colombia"}}},
        {"fr", {{"FR", "France"}, {"CA", "Canada"}, {"BE", "Belgium"}, {"CH", "Switzerland"}}},
        {"pt", {{"BR", "Brazil"}, {"PT", "Portugal"}}},
        {"zh", {{"CN", "China"}, {"TW", "Taiwan"}, {"HK", "Hong Kong"}}},
    };
    return t;
  }();
  return table;
}

/// "Language" or "Language (Country)". The country appears only when the tag
/// carries a region and the language is in the multi-dialect table.
inline std::string render_language(const LangTag& tag, const DialectTable& table = DialectTable::defaults()) {
  const auto name = table.names.find(tag.language);
  if (name == table.names.end())
    throw UnknownLanguageCode("no display name for language '" + tag.language + "'");
  if (tag.region) {
    const auto dialect = table.dialects.find(tag.language);
    if (dialect != table.dialects.end()) {
      const auto country = dialect->second.find(*tag.region);
      if (country != dialect->second.end())
        return name->second + " (" + country->second + ")";
    }
  }
  return name->second;
}

struct PromptRecord {
  std::string doc_id;
  std::string seg_id;
  PromptMode mode = PromptMode::SrcAndRef;
  std::optional<ScoreType> score_type;
  std::string text;
};

inline nlohmann::json to_json(const PromptRecord& r) {
  nlohmann::json j{{"doc_id", r.doc_id},
                   {"seg_id", r.seg_id},
                   {"mode", std::string(to_string(r.mode))},
                   {"text", r.text}};
  if (r.score_type) j["score_type"] = std::string(to_string(*r.score_type));
  return j;
}

namespace detail {

inline std::string fenced_block(const std::string& lang, const char* role, const std::string& text) {
  return lang + " " + role + ":\n```" + text + "```";
}

inline const std::string& require_field(const std::optional<std::string>& field, const char* name) {
  if (!field) throw MissingField(std::string("segment has no ") + name);
  return *field;
}

}  // namespace detail

/// Renders the score-prediction input: source/reference/translation blocks
/// (present per mode) fenced in triple backticks and separated by blank
/// lines, then "Score type: MQM|ESA". Stage-1 inputs carry no score type;
/// pass nullopt to omit the line. Reference-only inputs exist only in stage 1
/// and therefore reject a score type.
inline std::string render_score_prompt(const Segment& seg, PromptMode mode,
                                         std::optional<ScoreType> score_type,
                                         const DialectTable& table = DialectTable::defaults()) {
  if (mode == PromptMode::RefOnly && score_type)
    throw InvalidPromptMode("ref_only is a stage-1 mode; stage-1 inputs have no score type");
  const std::string src_lang = render_language(seg.src_lang, table);
  const std::string tgt_lang = render_language(seg.tgt_lang, table);
  std::string out;
  if (mode == PromptMode::SrcOnly || mode == PromptMode::SrcAndRef)
    out += detail::fenced_block(src_lang, "source", detail::require_field(seg.source, "source")) +
           "\n\n";
  if (mode == PromptMode::RefOnly || mode == PromptMode::SrcAndRef)
    out += detail::fenced_block(tgt_lang, "reference",
                                detail::require_field(seg.reference, "reference")) +
           "\n\n";
  out += detail::fenced_block(tgt_lang, "translation",
                              detail::require_field(seg.hypothesis, "hypothesis"));
  if (score_type) out += "\n\nScore type: " + std::string(to_string(*score_type));
  return out;
}

/// Renders the span-annotation prompt: the fixed annotator preamble (error
/// categories, severity definitions, strict-JSON instruction), then source /
/// optional reference / machine translation blocks on consecutive lines.
/// Text inside the fences is never escaped.
inline std::string render_span_prompt(const Segment& seg, bool with_reference,
                                             const DialectTable& table = DialectTable::defaults()) {
  static const std::string kPreamble =
      "You are an annotator for the quality of machine translation. Your task is to identify "
      "errors and assess the quality of the translation.\n"
      "Based on the source segment, human-generated reference translation, and machine "
      "translation surrounded with triple backticks, identify error types in the translation and "
      "classify them. The categories of errors are: accuracy (addition, mistranslation, omission, "
      "untranslated text), fluency (character encoding, grammar, inconsistency, punctuation, "
      "register, spelling), style (awkward), terminology (inappropriate for context, inconsistent "
      "use), non-translation, other, or no-error.\n"
      "Each error is classified as one of three severities: critical, major, and minor. Critical "
      "errors inhibit comprehension of the text. Major errors disrupt the flow, but what the text "
      "is trying to say is still understandable. Minor errors are technically errors, but do not "
      "disrupt the flow or hinder comprehension.\n"
      "\n"
      "Make sure your response is a strict and valid json object that could be parsed with "
      "json.loads() in python.\n"
      "\n";
  const std::string src_lang = render_language(seg.src_lang, table);
  const std::string tgt_lang = render_language(seg.tgt_lang, table);
  std::string out = kPreamble;
  out += detail::fenced_block(src_lang, "source", detail::require_field(seg.source, "source"));
  out += "\n";
  if (with_reference) {
    out += detail::fenced_block(tgt_lang, "reference",
                                detail::require_field(seg.reference, "reference"));
    out += "\n";
  }
  out += detail::fenced_block(tgt_lang, "machine translation",
                              detail::require_field(seg.hypothesis, "hypothesis"));
  return out;
}

enum class DatasetKind { MqmAnnotated, DaRated, EsaRated };

/// Score type indicated in the input per dataset kind: MQM data uses "MQM";
/// DA and ESA data use "ESA" (same scale, similar distributions).
inline ScoreType score_type_for_dataset(DatasetKind kind) {
  return kind == DatasetKind::MqmAnnotated ? ScoreType::MQM : ScoreType::ESA;
}

}  // namespace mteval
