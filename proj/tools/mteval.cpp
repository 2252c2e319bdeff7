// mteval: command-line toolkit for MT evaluation pipelines -- WMT ingestion,
// prompt rendering, synthetic data, inference with fallback, span parsing
// and localization, character F1, score rescaling, and meta-evaluation.
//
// Subcommands exchange JSONL on files or stdin/stdout ("-"), so they compose
// into pipelines. Every run logs its resolved configuration to stderr.
// Exit codes: 0 success, 1 usage, 2 data error, 3 transport error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mteval/core.hpp"
#include "mteval/infer.hpp"
#include "mteval/ingest.hpp"
#include "mteval/json_io.hpp"
#include "mteval/meta_eval.hpp"
#include "mteval/prompts.hpp"
#include "mteval/scores.hpp"
#include "mteval/span_annotate.hpp"
#include "mteval/span_f1.hpp"
#include "mteval/synth.hpp"

namespace {

using mteval::json;

struct Input {
  std::ifstream file;
  std::istream* stream = nullptr;

  explicit Input(const std::string& path) {
    if (path == "-") {
      stream = &std::cin;
    } else {
      file.open(path);
      if (!file) throw mteval::Error("cannot open input file: " + path);
      stream = &file;
    }
  }
  std::istream& get() { return *stream; }
};

struct Output {
  std::ofstream file;
  std::ostream* stream = nullptr;

  explicit Output(const std::string& path) {
    if (path == "-") {
      stream = &std::cout;
    } else {
      file.open(path);
      if (!file) throw mteval::Error("cannot open output file: " + path);
      stream = &file;
    }
  }
  std::ostream& get() { return *stream; }
};

void log_config(const std::string& command, const json& config) {
  std::cerr << json{{"command", command}, {"config", config}}.dump() << '\n';
}

mteval::DialectTable load_dialect_table(const std::string& path) {
  if (path.empty()) return mteval::DialectTable::defaults();
  std::ifstream in(path);
  if (!in) throw mteval::Error("cannot open dialect table: " + path);
  json j;
  in >> j;
  return mteval::DialectTable::from_json(j);
}

mteval::ContextExpansionPolicy make_policy(const std::string& char_langs_csv) {
  mteval::ContextExpansionPolicy policy;
  if (char_langs_csv.empty()) return policy;
  policy.character_unit_languages.clear();
  std::stringstream ss(char_langs_csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) policy.character_unit_languages.insert(item);
  return policy;
}

mteval::SeverityWeights weights_from_flags(double minor, double major, double critical) {
  mteval::SeverityWeights w{minor, major, critical};
  w.validate();
  return w;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& format, const std::string& input, const std::string& output,
               const std::string& src_lang, const std::string& tgt_lang, int year,
               const std::string& filter_preset, bool emit_score, double w_minor, double w_major,
               double w_critical) {
  log_config("ingest", {{"format", format},
                        {"input", input},
                        {"output", output},
                        {"src_lang", src_lang},
                        {"tgt_lang", tgt_lang},
                        {"year", year},
                        {"filter_preset", filter_preset},
                        {"emit_score", emit_score}});
  Input in(input);
  Output out(output);
  if (format == "mqm-tsv") {
    if (src_lang.empty() || tgt_lang.empty())
      throw mteval::Error("--src-lang and --tgt-lang are required for mqm-tsv ingest");
    auto result = mteval::parse_mqm_tsv(in.get(), mteval::LangTag::parse(src_lang),
                                        mteval::LangTag::parse(tgt_lang));
    const auto weights = weights_from_flags(w_minor, w_major, w_critical);
    for (auto& rec : result.records) {
      mteval::validate_segment(rec.segment);
      if (emit_score)
        rec.score = mteval::QualityScore{mteval::mqm_score_from_spans(rec.spans, weights),
                                         mteval::ScoreType::MQM, mteval::Orientation::LowerBetter};
      out.get() << mteval::to_json(rec).dump() << '\n';
    }
    std::cerr << json{{"records", result.records.size()},
                      {"neutral_spans_dropped", result.neutral_spans_dropped},
                      {"categories_coerced", result.categories_coerced}}
                     .dump()
              << '\n';
    return 0;
  }
  if (format == "da-tsv") {
    auto records = mteval::parse_da_tsv(in.get());
    for (auto& r : records) {
      if (year > 0) r.year = year;
      if (!src_lang.empty()) r.src_lang = mteval::LangTag::parse(src_lang);
      if (!tgt_lang.empty()) r.tgt_lang = mteval::LangTag::parse(tgt_lang);
    }
    size_t removed = 0;
    if (filter_preset == "metricx25") {
      auto filtered = mteval::apply_filters(records, mteval::DatasetFilter::metricx25());
      removed = filtered.removed;
      records = std::move(filtered.kept);
    } else if (filter_preset != "none") {
      throw mteval::Error("unknown filter preset: " + filter_preset);
    }
    for (const auto& r : records) {
      json j{{"system", r.system},
             {"doc_id", r.doc_id},
             {"seg_id", r.seg_id},
             {"rater", r.rater},
             {"raw_score", r.raw_score}};
      if (r.z_score) j["z_score"] = *r.z_score;
      if (r.year) j["year"] = *r.year;
      if (r.src_lang) j["src_lang"] = r.src_lang->str();
      if (r.tgt_lang) j["tgt_lang"] = r.tgt_lang->str();
      out.get() << j.dump() << '\n';
    }
    std::cerr << json{{"records", records.size()}, {"removed_by_filter", removed}}.dump() << '\n';
    return 0;
  }
  throw mteval::Error("unknown ingest format: " + format);
}

mteval::RatingRecord rating_from_json(const json& j) {
  mteval::RatingRecord r;
  r.system = j.value("system", "");
  r.doc_id = j.value("doc_id", "");
  r.seg_id = j.value("seg_id", "");
  r.rater = j.value("rater", "");
  r.raw_score = j.value("raw_score", 0.0);
  if (j.contains("z_score") && !j.at("z_score").is_null()) r.z_score = j.at("z_score").get<double>();
  if (j.contains("year") && !j.at("year").is_null()) r.year = j.at("year").get<int>();
  if (j.contains("src_lang")) r.src_lang = mteval::LangTag::parse(j.at("src_lang").get<std::string>());
  if (j.contains("tgt_lang")) r.tgt_lang = mteval::LangTag::parse(j.at("tgt_lang").get<std::string>());
  return r;
}

int cmd_prompts(const std::string& task, const std::string& mode_str,
                const std::string& score_type_str, bool with_reference,
                const std::string& dialect_table_path, const std::string& input,
                const std::string& output) {
  log_config("prompts", {{"task", task},
                         {"mode", mode_str},
                         {"score_type", score_type_str},
                         {"with_reference", with_reference},
                         {"dialect_table", dialect_table_path},
                         {"input", input},
                         {"output", output}});
  const auto table = load_dialect_table(dialect_table_path);
  Input in(input);
  Output out(output);
  std::optional<mteval::ScoreType> score_type;
  if (!score_type_str.empty() && score_type_str != "none") {
    score_type = mteval::score_type_from_string(score_type_str);
    if (!score_type) throw mteval::Error("unknown score type: " + score_type_str);
  }
  for (const auto& rec : mteval::read_segment_records(in.get())) {
    mteval::validate_segment(rec.segment);
    json j;
    if (task == "score") {
      const auto mode = mteval::prompt_mode_from_string(mode_str);
      if (!mode) throw mteval::Error("unknown prompt mode: " + mode_str);
      mteval::PromptRecord prompt;
      prompt.doc_id = rec.segment.doc_id;
      prompt.seg_id = rec.segment.seg_id;
      prompt.mode = *mode;
      prompt.score_type = score_type;
      prompt.text = mteval::render_score_prompt(rec.segment, *mode, score_type, table);
      j = mteval::to_json(prompt);
    } else if (task == "spans") {
      j["doc_id"] = rec.segment.doc_id;
      j["seg_id"] = rec.segment.seg_id;
      j["with_reference"] = with_reference;
      j["text"] = mteval::render_span_prompt(rec.segment, with_reference, table);
    } else {
      throw mteval::Error("unknown prompt task: " + task);
    }
    j["task"] = task;
    out.get() << j.dump() << '\n';
  }
  return 0;
}

int cmd_synth(const std::string& categories_csv, const std::string& weights_csv, uint64_t seed,
              const std::string& score_type, const std::string& input, const std::string& output) {
  log_config("synth", {{"categories", categories_csv},
                       {"weights", weights_csv},
                       {"seed", seed},
                       {"score_type", score_type},
                       {"input", input},
                       {"output", output}});
  mteval::SynthOptions opts;
  opts.seed = seed;
  opts.categories.clear();
  opts.weights.clear();
  {
    std::stringstream ss(categories_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "under") opts.categories.push_back(mteval::SynthCategory::Undertranslation);
      else if (item == "over") opts.categories.push_back(mteval::SynthCategory::Overtranslation);
      else if (item == "unrelated") opts.categories.push_back(mteval::SynthCategory::Unrelated);
      else if (item == "punct") opts.categories.push_back(mteval::SynthCategory::MissingPunct);
      else throw mteval::Error("unknown synth category: " + item);
    }
  }
  if (weights_csv.empty()) {
    opts.weights.assign(opts.categories.size(), 1.0);
  } else {
    std::stringstream ss(weights_csv);
    std::string item;
    while (std::getline(ss, item, ',')) opts.weights.push_back(std::stod(item));
  }
  Input in(input);
  Output out(output);
  std::vector<mteval::Segment> segments;
  for (const auto& rec : mteval::read_segment_records(in.get())) segments.push_back(rec.segment);
  const auto result = mteval::synth_mixture(segments, opts);
  const auto emit = [&](const mteval::SyntheticExample& ex, mteval::ScoreType type) {
    mteval::SegmentRecord rec;
    rec.segment = ex.segment;
    rec.score = mteval::QualityScore{ex.score, type, mteval::Orientation::LowerBetter};
    json j = mteval::to_json(rec);
    j["synth_category"] = std::string(mteval::to_string(ex.category));
    out.get() << j.dump() << '\n';
  };
  for (const auto& ex : result.examples) {
    if (score_type == "mqm" || score_type == "both") emit(ex, mteval::ScoreType::MQM);
    if (score_type == "esa" || score_type == "both") emit(ex, mteval::ScoreType::ESA);
  }
  std::cerr << json{{"examples", result.examples.size()}, {"skipped", result.skipped}}.dump()
            << '\n';
  return 0;
}

mteval::Validator validator_for_task(const std::string& task) {
  if (task == "score") {
    return [](const std::string& response) {
      try {
        size_t pos = 0;
        const std::string trimmed = response.substr(response.find_first_not_of(" \t\n\r"));
        std::stod(trimmed, &pos);
        return trimmed.find_first_not_of(" \t\n\r", pos) == std::string::npos;
      } catch (const std::exception&) {
        return false;
      }
    };
  }
  if (task == "spans") {
    return [](const std::string& response) {
      try {
        mteval::parse_span_response(response, mteval::ParseStrictness::Lenient);
        return true;
      } catch (const mteval::Error&) {
        return false;
      }
    };
  }
  throw mteval::Error("unknown infer task: " + task);
}

int cmd_infer(const std::string& task, const std::string& config_path, int max_in_flight,
              bool resample_first, const std::string& input, const std::string& output) {
  log_config("infer", {{"task", task},
                       {"config", config_path},
                       {"max_in_flight", max_in_flight},
                       {"resample_first", resample_first},
                       {"input", input},
                       {"output", output}});
  std::ifstream cfg_in(config_path);
  if (!cfg_in) throw mteval::Error("cannot open endpoint config: " + config_path);
  json cfg_json;
  cfg_in >> cfg_json;
  const auto chain = mteval::chain_from_json(cfg_json);
  const int parallelism = max_in_flight > 0 ? max_in_flight : chain.endpoints.front().max_in_flight;

  Input in(input);
  Output out(output);
  std::vector<json> rows = mteval::read_jsonl(in.get());
  std::vector<std::string> prompts;
  prompts.reserve(rows.size());
  for (const auto& r : rows) prompts.push_back(r.at("text").get<std::string>());

  const auto results =
      mteval::run_batch(prompts, chain, validator_for_task(task), parallelism, resample_first);
  size_t failures = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    json j{{"doc_id", rows[i].value("doc_id", "")},
           {"seg_id", rows[i].value("seg_id", "")}};
    if (results[i].ok) {
      j["model"] = results[i].model_id;
      j["response"] = results[i].response;
    } else {
      j["error"] = results[i].error;
      ++failures;
    }
    out.get() << j.dump() << '\n';
  }
  std::cerr << json{{"prompts", prompts.size()}, {"failures", failures}}.dump() << '\n';
  if (failures > 0) throw mteval::AllEndpointsFailed(std::to_string(failures) + " prompts failed");
  return 0;
}

int cmd_parse_spans(bool strict, const std::string& extra_categories_csv, const std::string& input,
                    const std::string& output) {
  log_config("parse-spans", {{"strict", strict},
                             {"extra_categories", extra_categories_csv},
                             {"input", input},
                             {"output", output}});
  Input in(input);
  Output out(output);
  std::set<std::string> extra_categories;
  {
    std::stringstream ss(extra_categories_csv);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) extra_categories.insert(mteval::lowercase(item));
  }
  const auto mode = strict ? mteval::ParseStrictness::Strict : mteval::ParseStrictness::Lenient;
  for (const auto& row : mteval::read_jsonl(in.get())) {
    const auto spans = mteval::parse_span_response(row.at("response").get<std::string>(), mode,
                                                   &extra_categories);
    json spans_json = json::array();
    for (const auto& s : spans) spans_json.push_back(mteval::to_json(s));
    out.get() << json{{"doc_id", row.value("doc_id", "")},
                      {"seg_id", row.value("seg_id", "")},
                      {"spans", spans_json}}
                     .dump()
              << '\n';
  }
  return 0;
}

int cmd_locate(bool lenient, bool drop_missing, bool relocate, const std::string& input,
               const std::string& output) {
  log_config("locate", {{"lenient", lenient},
                        {"drop_missing", drop_missing},
                        {"relocate", relocate},
                        {"input", input},
                        {"output", output}});
  Input in(input);
  Output out(output);
  size_t context_fallbacks = 0, dropped = 0;
  for (auto rec : mteval::read_segment_records(in.get())) {
    mteval::validate_segment(rec.segment);
    std::vector<mteval::ErrorSpan> located;
    for (auto span : rec.spans) {
      // Already-resolved offsets are authoritative (a bare re-search could
      // move a gold span to an earlier occurrence).
      if (span.offsets && !relocate) {
        located.push_back(std::move(span));
        continue;
      }
      const auto& text = span.is_source_error ? rec.segment.source : rec.segment.hypothesis;
      if (!text) throw mteval::SpanNotInText("source error span but segment has no source");
      try {
        span.offsets = mteval::locate_span(*text, span);
      } catch (const mteval::ContextNotFound&) {
        if (!lenient) throw;
        // Hallucinated context: retry with the bare span.
        mteval::ErrorSpan bare = span;
        bare.span_with_context.reset();
        try {
          span.offsets = mteval::locate_span(*text, bare);
          ++context_fallbacks;
        } catch (const mteval::SpanNotFound&) {
          if (!drop_missing) throw;
          ++dropped;
          continue;
        }
      } catch (const mteval::SpanNotFound&) {
        if (!drop_missing) throw;
        ++dropped;
        continue;
      }
      located.push_back(std::move(span));
    }
    rec.spans = std::move(located);
    out.get() << mteval::to_json(rec).dump() << '\n';
  }
  std::cerr << json{{"context_fallbacks", context_fallbacks}, {"spans_dropped", dropped}}.dump()
            << '\n';
  return 0;
}

int cmd_annotate_context(const std::string& char_langs_csv, const std::string& input,
                         const std::string& output) {
  log_config("annotate-context",
             {{"char_unit_langs", char_langs_csv}, {"input", input}, {"output", output}});
  const auto policy = make_policy(char_langs_csv);
  Input in(input);
  Output out(output);
  for (auto rec : mteval::read_segment_records(in.get())) {
    mteval::validate_segment(rec.segment);
    rec.spans = mteval::annotate_training_spans(rec.segment, std::move(rec.spans), policy);
    out.get() << mteval::to_json(rec).dump() << '\n';
  }
  return 0;
}

int cmd_span_stats(const std::string& input, const std::string& output) {
  log_config("span-stats", {{"input", input}, {"output", output}});
  Input in(input);
  Output out(output);
  std::vector<std::pair<std::string, std::vector<mteval::ErrorSpan>>> corpus;
  for (const auto& rec : mteval::read_segment_records(in.get())) {
    std::vector<mteval::ErrorSpan> hyp_spans, src_spans;
    for (const auto& s : rec.spans) (s.is_source_error ? src_spans : hyp_spans).push_back(s);
    if (rec.segment.hypothesis && !hyp_spans.empty())
      corpus.emplace_back(*rec.segment.hypothesis, std::move(hyp_spans));
    if (rec.segment.source && !src_spans.empty())
      corpus.emplace_back(*rec.segment.source, std::move(src_spans));
  }
  const auto stats = mteval::span_uniqueness_stats(corpus);
  out.get() << json{{"total_spans", stats.total_spans},
                    {"non_unique_spans", stats.non_unique_spans},
                    {"total_span_chars", stats.total_span_chars},
                    {"non_unique_span_chars", stats.non_unique_span_chars},
                    {"non_unique_span_fraction", stats.span_fraction()},
                    {"non_unique_char_fraction", stats.char_fraction()}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_score_spans(const std::string& pred_path, const std::string& gold_path,
                    double partial_credit, bool macro, const std::string& output) {
  log_config("score-spans", {{"pred", pred_path},
                             {"gold", gold_path},
                             {"partial_credit", partial_credit},
                             {"macro", macro},
                             {"output", output}});
  Input pred_in(pred_path);
  Input gold_in(gold_path);
  Output out(output);
  auto preds = mteval::read_segment_records(pred_in.get());
  auto golds = mteval::read_segment_records(gold_in.get());
  std::map<std::pair<std::string, std::string>, const mteval::SegmentRecord*> pred_index;
  for (const auto& p : preds) pred_index[{p.segment.doc_id, p.segment.seg_id}] = &p;

  const auto resolve = [](const std::string& text, std::vector<mteval::ErrorSpan> spans) {
    for (auto& s : spans)
      if (!s.offsets && !s.is_source_error) s.offsets = mteval::locate_span(text, s);
    return spans;
  };

  std::vector<std::pair<mteval::CharLabeling, mteval::CharLabeling>> labelings;
  json segments_json = json::array();
  for (const auto& g : golds) {
    mteval::validate_segment(g.segment);
    const std::string& text = *g.segment.hypothesis;
    const auto it = pred_index.find({g.segment.doc_id, g.segment.seg_id});
    std::vector<mteval::ErrorSpan> pred_spans;
    if (it != pred_index.end()) pred_spans = it->second->spans;
    const auto pred_label = mteval::label_characters(text, resolve(text, std::move(pred_spans)));
    const auto gold_label = mteval::label_characters(text, resolve(text, g.spans));
    const auto prf = mteval::segment_char_f1(pred_label, gold_label, partial_credit);
    segments_json.push_back(json{{"doc_id", g.segment.doc_id},
                                 {"seg_id", g.segment.seg_id},
                                 {"precision", prf.precision},
                                 {"recall", prf.recall},
                                 {"f1", prf.f1}});
    labelings.emplace_back(pred_label, gold_label);
  }
  const auto corpus = macro ? mteval::corpus_char_f1_macro(labelings, partial_credit)
                            : mteval::corpus_char_f1(labelings, partial_credit);
  out.get() << json{{"corpus",
                     {{"precision", corpus.precision},
                      {"recall", corpus.recall},
                      {"f1", corpus.f1},
                      {"averaging", macro ? "macro" : "micro"}}},
                    {"partial_credit", partial_credit},
                    {"segments", segments_json}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_mqm_score(double w_minor, double w_major, double w_critical, const std::string& input,
                  const std::string& output) {
  log_config("mqm-score", {{"w_minor", w_minor},
                           {"w_major", w_major},
                           {"w_critical", w_critical},
                           {"input", input},
                           {"output", output}});
  const auto weights = weights_from_flags(w_minor, w_major, w_critical);
  Input in(input);
  Output out(output);
  for (auto rec : mteval::read_segment_records(in.get())) {
    rec.score = mteval::QualityScore{mteval::mqm_score_from_spans(rec.spans, weights),
                                     mteval::ScoreType::MQM, mteval::Orientation::LowerBetter};
    out.get() << mteval::to_json(rec).dump() << '\n';
  }
  return 0;
}

int cmd_rescale(const std::string& op, const std::string& score_type_str, const std::string& input,
                const std::string& output) {
  log_config("rescale",
             {{"op", op}, {"score_type", score_type_str}, {"input", input}, {"output", output}});
  Input in(input);
  Output out(output);
  if (op == "output") {
    const auto type = mteval::score_type_from_string(score_type_str);
    if (!type) throw mteval::Error("--score-type must be mqm or esa for --op output");
    for (auto row : mteval::read_jsonl(in.get())) {
      const double raw = row.at("raw").get<double>();
      row["score"] = mteval::to_json(mteval::rescale_output(raw, *type));
      out.get() << row.dump() << '\n';
    }
    return 0;
  }
  if (op == "da-to-mqm") {
    for (auto row : mteval::read_jsonl(in.get())) {
      row["mqm_scale_score"] = mteval::da_to_mqm_scale(row.at("raw_score").get<double>());
      out.get() << row.dump() << '\n';
    }
    return 0;
  }
  if (op == "zscore") {
    std::vector<mteval::RatingRecord> records;
    for (const auto& r : mteval::read_jsonl(in.get())) records.push_back(rating_from_json(r));
    const auto result = mteval::zscore_per_rater(records);
    for (const auto& r : result.records) {
      json j{{"system", r.system}, {"doc_id", r.doc_id}, {"seg_id", r.seg_id},
             {"rater", r.rater},   {"raw_score", r.raw_score}, {"z_score", *r.z_score}};
      if (r.year) j["year"] = *r.year;
      if (r.src_lang) j["src_lang"] = r.src_lang->str();
      if (r.tgt_lang) j["tgt_lang"] = r.tgt_lang->str();
      out.get() << j.dump() << '\n';
    }
    std::cerr << json{{"degenerate_raters", result.degenerate_raters},
                      {"dropped_records", result.dropped_records}}
                     .dump()
              << '\n';
    return 0;
  }
  if (op == "stage1") {
    // Group z-scores by (system, doc, seg); emit the aggregated, negated,
    // clipped stage-1 training label per segment.
    std::vector<std::array<std::string, 3>> order;
    std::map<std::array<std::string, 3>, std::vector<double>> groups;
    for (const auto& row : mteval::read_jsonl(in.get())) {
      const auto r = rating_from_json(row);
      if (!r.z_score) throw mteval::Error("stage1 aggregation needs z_score on every record");
      const std::array<std::string, 3> key{r.system, r.doc_id, r.seg_id};
      if (!groups.count(key)) order.push_back(key);
      groups[key].push_back(*r.z_score);
    }
    for (const auto& key : order) {
      out.get() << json{{"system", key[0]},
                        {"doc_id", key[1]},
                        {"seg_id", key[2]},
                        {"label", mteval::aggregate_stage1_label(groups.at(key))}}
                       .dump()
                << '\n';
    }
    return 0;
  }
  throw mteval::Error("unknown rescale op: " + op);
}

std::map<std::string, mteval::ScoreMatrix> matrices_from_jsonl(std::istream& in) {
  std::map<std::string, mteval::ScoreMatrix> by_pair;
  for (const auto& row : mteval::read_jsonl(in)) {
    const std::string lp = row.value("lang_pair", "all");
    auto& m = by_pair[lp];
    m.set(row.at("system").get<std::string>(),
          row.value("doc_id", "") + "\x1f" + row.value("seg_id", ""),
          row.at("score").get<double>());
  }
  return by_pair;
}

int cmd_metaeval(const std::string& human_path, const std::string& metric_path,
                 const std::string& level, int resamples, uint64_t seed, unsigned threads,
                 double w_sys, const std::string& output) {
  log_config("metaeval", {{"human", human_path},
                          {"metric", metric_path},
                          {"level", level},
                          {"resamples", resamples},
                          {"seed", seed},
                          {"threads", threads},
                          {"w_sys", w_sys},
                          {"output", output}});
  if (level != "segment" && level != "system" && level != "both")
    throw mteval::Error("unknown metaeval level: " + level);
  Input human_in(human_path);
  Input metric_in(metric_path);
  Output out(output);
  auto human = matrices_from_jsonl(human_in.get());
  auto metric = matrices_from_jsonl(metric_in.get());
  json pairs = json::object();
  std::vector<double> seg_accs, sys_accs;
  for (const auto& [lp, hm] : human) {
    const auto mit = metric.find(lp);
    if (mit == metric.end()) throw mteval::Error("metric scores missing for lang pair " + lp);
    mteval::MetaEvalReport report;
    report.lang_pair = lp;
    if (level == "segment" || level == "both") {
      const auto r = mteval::pairwise_accuracy_tie_calibrated(hm, mit->second);
      report.segment_accuracy = r.accuracy;
      report.epsilon = r.epsilon;
      report.pairs_used = r.pairs_used;
      report.pairs_dropped = r.pairs_dropped;
      seg_accs.push_back(r.accuracy);
    }
    if (level == "system" || level == "both") {
      mteval::SpaOptions opts;
      opts.resamples = resamples;
      opts.seed = seed;
      opts.threads = threads;
      report.system_spa = mteval::soft_pairwise_accuracy(hm, mit->second, opts);
      sys_accs.push_back(*report.system_spa);
    }
    pairs[lp] = mteval::to_json(report);
  }
  json report{{"level", level}, {"pairs", pairs}};
  if (level == "both")
    report["selection_score"] = mteval::checkpoint_selection_score(seg_accs, sys_accs, w_sys);
  out.get() << report.dump(2) << '\n';
  return 0;
}

int cmd_select_checkpoint(const std::string& dir, double w_sys, const std::string& output) {
  log_config("select-checkpoint", {{"dir", dir}, {"w_sys", w_sys}, {"output", output}});
  Output out(output);
  struct Entry {
    std::string checkpoint;
    double score;
  };
  std::vector<Entry> entries;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    json j;
    in >> j;
    std::vector<double> seg_accs, sys_accs;
    for (const auto& [lp, entry] : j.at("pairs").items()) {
      seg_accs.push_back(entry.at("segment_accuracy").get<double>());
      sys_accs.push_back(entry.at("system_spa").get<double>());
    }
    entries.push_back(Entry{j.value("checkpoint", path.stem().string()),
                            mteval::checkpoint_selection_score(seg_accs, sys_accs, w_sys)});
  }
  if (entries.empty()) throw mteval::Error("no checkpoint reports (*.json) in " + dir);
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.score > b.score; });
  json ranking = json::array();
  for (const auto& e : entries)
    ranking.push_back(json{{"checkpoint", e.checkpoint}, {"score", e.score}});
  out.get() << json{{"best", ranking.front()}, {"w_sys", w_sys}, {"ranking", ranking}}.dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MT evaluation toolkit: ingestion, prompts, spans, scores, meta-evaluation"};
  app.require_subcommand(1);

  std::string input = "-", output = "-";
  std::string format, src_lang, tgt_lang, filter_preset = "none";
  int year = 0;
  bool emit_score = false;
  double w_minor = 1.0, w_major = 5.0, w_critical = 5.0;

  auto* ingest = app.add_subcommand("ingest", "Parse WMT-style MQM/DA exports to JSONL");
  ingest->add_option("--format", format, "mqm-tsv or da-tsv")->required();
  ingest->add_option("-i,--input", input);
  ingest->add_option("-o,--output", output);
  ingest->add_option("--src-lang", src_lang);
  ingest->add_option("--tgt-lang", tgt_lang);
  ingest->add_option("--year", year);
  ingest->add_option("--filter-preset", filter_preset, "none or metricx25");
  ingest->add_flag("--emit-score", emit_score, "derive the MQM score from spans (mqm-tsv)");
  ingest->add_option("--w-minor", w_minor);
  ingest->add_option("--w-major", w_major);
  ingest->add_option("--w-critical", w_critical);

  std::string task = "score", mode = "src_and_ref", score_type, dialect_table;
  bool with_reference = false;
  auto* prompts = app.add_subcommand("prompts", "Render model input prompts");
  prompts->add_option("--task", task, "score or spans");
  prompts->add_option("--mode", mode, "src_only, ref_only or src_and_ref");
  prompts->add_option("--score-type", score_type, "mqm, esa, or none (stage 1)");
  prompts->add_flag("--with-reference", with_reference);
  prompts->add_option("--dialect-table", dialect_table, "JSON display-name/dialect override");
  prompts->add_option("-i,--input", input);
  prompts->add_option("-o,--output", output);

  std::string categories = "under,over,unrelated,punct", weights_csv;
  uint64_t seed = 0;
  std::string synth_score_type = "mqm";
  auto* synth = app.add_subcommand("synth", "Generate synthetic bad-translation examples");
  synth->add_option("--categories", categories);
  synth->add_option("--weights", weights_csv);
  synth->add_option("--seed", seed)->required();
  synth->add_option("--score-type", synth_score_type, "mqm, esa or both");
  synth->add_option("-i,--input", input);
  synth->add_option("-o,--output", output);

  std::string infer_config;
  int max_in_flight = 0;
  bool resample_first = false;
  auto* infer = app.add_subcommand("infer", "Send prompts to inference endpoints");
  infer->add_option("--task", task, "score or spans")->required();
  infer->add_option("--config", infer_config, "endpoint chain JSON")->required();
  infer->add_option("--max-in-flight", max_in_flight);
  infer->add_flag("--resample-first", resample_first);
  infer->add_option("-i,--input", input);
  infer->add_option("-o,--output", output);

  bool strict = false, lenient = false;
  std::string extra_categories;
  auto* parse_spans = app.add_subcommand("parse-spans", "Parse model span responses");
  parse_spans->add_flag("--strict", strict);
  parse_spans->add_flag("--lenient", lenient);
  parse_spans->add_option("--extra-categories", extra_categories,
                          "comma-separated additions to the category vocabulary");
  parse_spans->add_option("-i,--input", input);
  parse_spans->add_option("-o,--output", output);

  bool drop_missing = false, relocate = false;
  auto* locate = app.add_subcommand("locate", "Resolve spans to character offsets");
  locate->add_flag("--lenient", lenient, "retry hallucinated contexts with the bare span");
  locate->add_flag("--drop-missing", drop_missing, "drop spans absent from the text");
  locate->add_flag("--relocate", relocate, "re-resolve spans that already carry offsets");
  locate->add_option("-i,--input", input);
  locate->add_option("-o,--output", output);

  std::string char_langs = "zh,ja";
  auto* annotate = app.add_subcommand("annotate-context", "Add disambiguating span contexts");
  annotate->add_option("--char-unit-langs", char_langs);
  annotate->add_option("-i,--input", input);
  annotate->add_option("-o,--output", output);

  auto* span_stats = app.add_subcommand("span-stats", "Span uniqueness statistics");
  span_stats->add_option("-i,--input", input);
  span_stats->add_option("-o,--output", output);

  std::string pred_path, gold_path;
  double partial_credit = 0.5;
  bool macro = false;
  auto* score_spans = app.add_subcommand("score-spans", "Character-level span F1");
  score_spans->add_option("--pred", pred_path)->required();
  score_spans->add_option("--gold", gold_path)->required();
  score_spans->add_option("--partial-credit", partial_credit);
  score_spans->add_flag("--macro", macro);
  score_spans->add_option("-o,--output", output);

  auto* mqm_score = app.add_subcommand("mqm-score", "Severity-weighted MQM score from spans");
  mqm_score->add_option("--w-minor", w_minor);
  mqm_score->add_option("--w-major", w_major);
  mqm_score->add_option("--w-critical", w_critical);
  mqm_score->add_option("-i,--input", input);
  mqm_score->add_option("-o,--output", output);

  std::string rescale_op = "output";
  auto* rescale = app.add_subcommand("rescale", "Score-scale transformations");
  rescale->add_option("--op", rescale_op, "output, da-to-mqm, zscore or stage1");
  rescale->add_option("--score-type", score_type, "mqm or esa (for --op output)");
  rescale->add_option("-i,--input", input);
  rescale->add_option("-o,--output", output);

  std::string human_path, metric_path, level = "segment";
  int resamples = 1000;
  unsigned threads = 1;
  double w_sys = 0.2;
  auto* metaeval = app.add_subcommand("metaeval", "Metric meta-evaluation");
  metaeval->add_option("--human", human_path)->required();
  metaeval->add_option("--metric", metric_path)->required();
  metaeval->add_option("--level", level, "segment, system, or both");
  metaeval->add_option("--resamples", resamples);
  metaeval->add_option("--seed", seed);
  metaeval->add_option("--threads", threads);
  metaeval->add_option("--w-sys", w_sys, "system-level weight in the selection score (with both)");
  metaeval->add_option("-o,--output", output);

  std::string ckpt_dir;
  auto* select = app.add_subcommand("select-checkpoint", "Pick the best checkpoint report");
  select->add_option("--dir", ckpt_dir)->required();
  select->add_option("--w-sys", w_sys);
  select->add_option("-o,--output", output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Exit-code contract: 0 for --help, 1 for any usage error.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed())
      return cmd_ingest(format, input, output, src_lang, tgt_lang, year, filter_preset, emit_score,
                        w_minor, w_major, w_critical);
    if (prompts->parsed())
      return cmd_prompts(task, mode, score_type, with_reference, dialect_table, input, output);
    if (synth->parsed())
      return cmd_synth(categories, weights_csv, seed, synth_score_type, input, output);
    if (infer->parsed())
      return cmd_infer(task, infer_config, max_in_flight, resample_first, input, output);
    if (parse_spans->parsed()) {
      if (strict && lenient) throw mteval::Error("--strict and --lenient are mutually exclusive");
      return cmd_parse_spans(strict, extra_categories, input, output);
    }
    if (locate->parsed()) return cmd_locate(lenient, drop_missing, relocate, input, output);
    if (annotate->parsed()) return cmd_annotate_context(char_langs, input, output);
    if (span_stats->parsed()) return cmd_span_stats(input, output);
    if (score_spans->parsed())
      return cmd_score_spans(pred_path, gold_path, partial_credit, macro, output);
    if (mqm_score->parsed()) return cmd_mqm_score(w_minor, w_major, w_critical, input, output);
    if (rescale->parsed()) return cmd_rescale(rescale_op, score_type, input, output);
    if (metaeval->parsed())
      return cmd_metaeval(human_path, metric_path, level, resamples, seed, threads,
                          w_sys, output);
    if (select->parsed()) return cmd_select_checkpoint(ckpt_dir, w_sys, output);
  } catch (const mteval::TransportError& e) {
    std::cerr << json{{"error", "transport"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "data"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }
  return 0;
}
