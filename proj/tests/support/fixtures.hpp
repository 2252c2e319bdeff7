#pragma once

// Shared test fixtures: the running example segment (a German translation
// with non-unique "im") and golden-file helpers.

#include <fstream>
#include <sstream>
#include <string>

#include "mteval/core.hpp"

namespace testsupport {

// Source and machine translation of the worked example. "im" occurs four
// times in the MT (Timer, nützlich im Büro, Zimmerpflanzen, im Urlaub);
// "ihn" and "mit" are unique.
inline const std::string kExampleSource =
    "I have not made use of the timer, preferring to turn them on and off myself. I can see this "
    "feature as useful in an office setting with houseplants or if on vacation";
inline const std::string kExampleMt =
    "Ich benutze den Timer nicht, sondern schalte ihn lieber selbst ein und aus. Ich sehe diese "
    "Funktion als nützlich im Büro mit Zimmerpflanzen oder im Urlaub.";

// Code point offsets of the gold spans in kExampleMt.
inline constexpr size_t kImBegin = 113, kImEnd = 115;      // the one inside "nützlich im Büro"
inline constexpr size_t kIhnBegin = 45, kIhnEnd = 48;
inline constexpr size_t kMitBegin = 121, kMitEnd = 124;
inline const std::string kImContext = "nützlich im Büro";
inline constexpr size_t kImContextBegin = 104, kImContextEnd = 120;

inline mteval::Segment example_segment() {
  mteval::Segment seg;
  seg.doc_id = "doc1";
  seg.seg_id = "1";
  seg.source = kExampleSource;
  seg.hypothesis = kExampleMt;
  seg.src_lang = mteval::LangTag::parse("en");
  seg.tgt_lang = mteval::LangTag::parse("de");
  return seg;
}

inline std::vector<mteval::ErrorSpan> example_gold_spans() {
  std::vector<mteval::ErrorSpan> spans(3);
  spans[0].span = "im";
  spans[0].offsets = mteval::CharRange{kImBegin, kImEnd};
  spans[1].span = "ihn";
  spans[1].offsets = mteval::CharRange{kIhnBegin, kIhnEnd};
  spans[2].span = "mit";
  spans[2].offsets = mteval::CharRange{kMitBegin, kMitEnd};
  for (auto& s : spans) {
    s.severity = mteval::Severity::Minor;
    s.category = mteval::ErrorCategory{"accuracy/mistranslation"};
  }
  return spans;
}

inline std::string read_file(const std::string& name) {
  std::ifstream in(std::string(MTEVAL_TEST_DATA_DIR) + "/" + name, std::ios::binary);
  if (!in) throw std::runtime_error("missing test data file: " + name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string normalize_newlines(std::string s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i)
    if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') continue;
    else out.push_back(s[i]);
  return out;
}

}  // namespace testsupport
