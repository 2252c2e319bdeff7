#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support/fixtures.hpp"

// End-to-end tests of the mteval binary: subcommands compose via JSONL and
// behave as pure functions of (inputs, flags, seed).

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
  int exit_code = -1;
  std::string out;
};

fs::path temp_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() /
             ("mteval_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(MTEVAL_BIN) + " " + args + " 2>" +
                          (temp_dir() / "stderr.log").string();
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string write_file(const std::string& name, const std::string& content) {
  const fs::path path = temp_dir() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<json> parse_jsonl(const std::string& text) {
  std::vector<json> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

std::string data_file(const std::string& name) {
  return std::string(MTEVAL_TEST_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("cli: unknown subcommand exits 1 with usage") {
  CHECK(run_cli("no-such-command").exit_code == 1);
  CHECK(run_cli("").exit_code != 0);
}

TEST_CASE("cli: score-spans against itself is a perfect score") {
  json rec{{"doc_id", "d"},     {"seg_id", "1"},
           {"source", nullptr}, {"reference", "ref"},
           {"hypothesis", "Das ist gut."},
           {"src_lang", "en"},  {"tgt_lang", "de"},
           {"spans", json::array({{{"span", "gut"},
                                   {"severity", "major"},
                                   {"category", "accuracy/mistranslation"},
                                   {"is_source_error", false},
                                   {"offsets", {8, 11}}}})},
           {"score", nullptr}};
  const auto path = write_file("self.jsonl", rec.dump() + "\n");
  const auto result = run_cli("score-spans --pred " + path + " --gold " + path);
  REQUIRE(result.exit_code == 0);
  const auto report = json::parse(result.out);
  CHECK(report.at("corpus").at("f1") == 1.0);
  CHECK(report.at("corpus").at("precision") == 1.0);
  CHECK(report.at("segments").size() == 1);
}

TEST_CASE("cli: full pipeline on the worked example reproduces the context") {
  // ingest -> annotate-context -> (strip offsets, as a model response would)
  // -> locate -> score-spans round-trips the example's gold annotation.
  const auto ingested = (temp_dir() / "example.jsonl").string();
  auto result = run_cli("ingest --format mqm-tsv --src-lang en --tgt-lang de -i " +
                        data_file("example.mqm.tsv") + " -o " + ingested);
  REQUIRE(result.exit_code == 0);
  const auto ingested_rows = parse_jsonl(read_file(ingested));
  REQUIRE(ingested_rows.size() == 1);
  REQUIRE(ingested_rows[0].at("spans").size() == 3);

  const auto annotated = (temp_dir() / "example.annotated.jsonl").string();
  result = run_cli("annotate-context -i " + ingested + " -o " + annotated);
  REQUIRE(result.exit_code == 0);
  const auto rows = parse_jsonl(read_file(annotated));
  REQUIRE(rows.size() == 1);
  int with_context = 0;
  for (const auto& span : rows[0].at("spans")) {
    if (span.contains("span_with_context")) {
      ++with_context;
      CHECK(span.at("span") == "im");
      CHECK(span.at("span_with_context") == "nützlich im Büro");
    }
  }
  CHECK(with_context == 1);

  // Strip offsets to simulate spans parsed from a model response.
  json stripped = rows[0];
  for (auto& span : stripped.at("spans")) span.erase("offsets");
  const auto unlocated = write_file("example.unlocated.jsonl", stripped.dump() + "\n");

  const auto located = (temp_dir() / "example.located.jsonl").string();
  result = run_cli("locate -i " + unlocated + " -o " + located);
  REQUIRE(result.exit_code == 0);
  const auto located_rows = parse_jsonl(read_file(located));
  for (size_t i = 0; i < 3; ++i)
    CHECK(located_rows[0].at("spans").at(i).at("offsets") ==
          ingested_rows[0].at("spans").at(i).at("offsets"));

  result = run_cli("score-spans --pred " + located + " --gold " + ingested);
  REQUIRE(result.exit_code == 0);
  CHECK(json::parse(result.out).at("corpus").at("f1") == 1.0);
}

TEST_CASE("cli: mqm-score computes the severity-weighted sum") {
  json rec{{"doc_id", "d"},     {"seg_id", "1"},     {"source", "s"},
           {"reference", nullptr}, {"hypothesis", "abcdef"},
           {"src_lang", "en"},  {"tgt_lang", "de"},
           {"spans", json::array({{{"span", "ab"},
                                   {"severity", "minor"},
                                   {"category", "other"},
                                   {"is_source_error", false}},
                                  {{"span", "cd"},
                                   {"severity", "major"},
                                   {"category", "other"},
                                   {"is_source_error", false}}})},
           {"score", nullptr}};
  const auto path = write_file("mqm.jsonl", rec.dump() + "\n");
  const auto result = run_cli("mqm-score -i " + path);
  REQUIRE(result.exit_code == 0);
  const auto rows = parse_jsonl(result.out);
  CHECK(rows[0].at("score").at("value") == 6.0);
  CHECK(rows[0].at("score").at("score_type") == "MQM");
  CHECK(rows[0].at("score").at("orientation") == "lower_better");
}

TEST_CASE("cli: rescale pipeline ops") {
  SECTION("output, both score types") {
    const auto path = write_file("raw.jsonl",
                                 json{{"doc_id", "d"}, {"seg_id", "1"}, {"raw", 12.5}}.dump() +
                                     "\n");
    auto result = run_cli("rescale --op output --score-type esa -i " + path);
    REQUIRE(result.exit_code == 0);
    CHECK(parse_jsonl(result.out)[0].at("score").at("value") == 50.0);
    result = run_cli("rescale --op output --score-type mqm -i " + path);
    CHECK(parse_jsonl(result.out)[0].at("score").at("value") == -12.5);
  }
  SECTION("da-to-mqm") {
    const auto path = write_file("da.jsonl", json{{"raw_score", 50.0}}.dump() + "\n");
    const auto result = run_cli("rescale --op da-to-mqm -i " + path);
    REQUIRE(result.exit_code == 0);
    CHECK(parse_jsonl(result.out)[0].at("mqm_scale_score") == 12.5);
  }
  SECTION("zscore then stage1") {
    std::string lines;
    for (const double raw : {10.0, 20.0, 30.0})
      lines += json{{"system", "sysA"}, {"doc_id", "d"}, {"seg_id", "1"},
                    {"rater", "r1"},    {"raw_score", raw}}
                   .dump() +
               "\n";
    const auto path = write_file("ratings.jsonl", lines);
    auto result = run_cli("rescale --op zscore -i " + path + " -o " +
                          (temp_dir() / "z.jsonl").string());
    REQUIRE(result.exit_code == 0);
    result = run_cli("rescale --op stage1 -i " + (temp_dir() / "z.jsonl").string());
    REQUIRE(result.exit_code == 0);
    const auto rows = parse_jsonl(result.out);
    REQUIRE(rows.size() == 1);
    // Mean z is 0 by construction, so the label is -0 == 0.
    CHECK(std::abs(rows[0].at("label").get<double>()) == 0.0);
  }
}

TEST_CASE("cli: prompts renders the golden score prompt") {
  json rec{{"doc_id", "d"},
           {"seg_id", "1"},
           {"source", "Připadalo mi, že na mě dýchnul závan z hrobu."},
           {"reference", "It was like having felt a draught from a grave."},
           {"hypothesis", "It was like having felt a draft from a grave."},
           {"src_lang", "cs"},
           {"tgt_lang", "en_GB"},
           {"spans", json::array()},
           {"score", nullptr}};
  const auto path = write_file("seg.jsonl", rec.dump() + "\n");
  const auto result =
      run_cli("prompts --task score --mode src_and_ref --score-type mqm -i " + path);
  REQUIRE(result.exit_code == 0);
  const auto rows = parse_jsonl(result.out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("text") == testsupport::normalize_newlines(
                                  testsupport::read_file("golden_score_prompt.txt")));
}

TEST_CASE("cli: synth is byte-identical across runs with the same seed") {
  std::string lines;
  for (int i = 0; i < 20; ++i)
    lines += json{{"doc_id", "d"},   {"seg_id", std::to_string(i)},
                  {"source", "s"},   {"reference", "word one two three four."},
                  {"hypothesis", ""}, {"src_lang", "en"},
                  {"tgt_lang", "de"}, {"spans", json::array()},
                  {"score", nullptr}}
                 .dump() +
             "\n";
  const auto path = write_file("synth_in.jsonl", lines);
  const auto a = run_cli("synth --seed 7 -i " + path);
  const auto b = run_cli("synth --seed 7 -i " + path);
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  const auto c = run_cli("synth --seed 8 -i " + path);
  CHECK(a.out != c.out);
}

TEST_CASE("cli: locate preserves already-resolved offsets") {
  // A gold span at the SECOND "im" occurrence must survive locate untouched.
  json rec{{"doc_id", "d"},       {"seg_id", "1"},       {"source", "s"},
           {"reference", nullptr}, {"hypothesis", "im Haus und im Garten"},
           {"src_lang", "en"},    {"tgt_lang", "de"},
           {"spans", json::array({{{"span", "im"},
                                   {"severity", "minor"},
                                   {"category", "other"},
                                   {"is_source_error", false},
                                   {"offsets", {12, 14}}}})},
           {"score", nullptr}};
  const auto path = write_file("resolved.jsonl", rec.dump() + "\n");
  auto result = run_cli("locate -i " + path);
  REQUIRE(result.exit_code == 0);
  CHECK(parse_jsonl(result.out)[0].at("spans").at(0).at("offsets") == json::array({12, 14}));
  // --relocate forces a fresh bare-span search, which picks the first one.
  result = run_cli("locate --relocate -i " + path);
  REQUIRE(result.exit_code == 0);
  CHECK(parse_jsonl(result.out)[0].at("spans").at(0).at("offsets") == json::array({0, 2}));
}

TEST_CASE("cli: parse-spans exits 2 on truncated JSON") {
  const auto path = write_file("resp.jsonl",
                               json{{"doc_id", "d"}, {"seg_id", "1"}, {"response", "[{"}}.dump() +
                                   "\n");
  CHECK(run_cli("parse-spans -i " + path).exit_code == 2);

  const auto ok = write_file("resp_ok.jsonl",
                             json{{"doc_id", "d"}, {"seg_id", "1"}, {"response", "[]"}}.dump() +
                                 "\n");
  const auto result = run_cli("parse-spans -i " + ok);
  CHECK(result.exit_code == 0);
  CHECK(parse_jsonl(result.out)[0].at("spans").empty());
}

TEST_CASE("cli: metaeval segment level is deterministic") {
  std::string human, metric;
  for (int g = 0; g < 6; ++g) {
    for (int s = 0; s < 3; ++s) {
      const double h = s + 0.1 * g;
      human += json{{"system", "sys" + std::to_string(s)}, {"doc_id", "d"},
                    {"seg_id", std::to_string(g)},          {"score", h}}
                   .dump() +
               "\n";
      metric += json{{"system", "sys" + std::to_string(s)}, {"doc_id", "d"},
                     {"seg_id", std::to_string(g)},          {"score", 2 * h + 1}}
                    .dump() +
                "\n";
    }
  }
  const auto human_path = write_file("human.jsonl", human);
  const auto metric_path = write_file("metric.jsonl", metric);
  const auto a = run_cli("metaeval --human " + human_path + " --metric " + metric_path +
                         " --level segment");
  REQUIRE(a.exit_code == 0);
  const auto report = json::parse(a.out);
  CHECK(report.at("pairs").at("all").at("segment_accuracy") == 1.0);
  const auto b = run_cli("metaeval --human " + human_path + " --metric " + metric_path +
                         " --level segment");
  CHECK(a.out == b.out);

  const auto sys = run_cli("metaeval --human " + human_path + " --metric " + human_path +
                           " --level system --resamples 200 --seed 3");
  REQUIRE(sys.exit_code == 0);
  CHECK(json::parse(sys.out).at("pairs").at("all").at("system_spa") == 1.0);

  const auto both = run_cli("metaeval --human " + human_path + " --metric " + human_path +
                            " --level both --resamples 200 --seed 3 --w-sys 0.2");
  REQUIRE(both.exit_code == 0);
  const auto both_report = json::parse(both.out);
  CHECK(both_report.at("pairs").at("all").contains("segment_accuracy"));
  CHECK(both_report.at("pairs").at("all").contains("system_spa"));
  CHECK(both_report.at("selection_score") == 1.0);  // perfect metric at both levels
}

TEST_CASE("cli: parse-spans strict accepts configured extra categories") {
  const auto path = write_file(
      "extra_cat.jsonl",
      json{{"doc_id", "d"},
           {"seg_id", "1"},
           {"response",
            R"([{"span": "x", "severity": "minor", "category": "locale convention/date format"}])"}}
          .dump() +
          "\n");
  CHECK(run_cli("parse-spans --strict -i " + path).exit_code == 2);
  const auto result = run_cli(
      "parse-spans --strict --extra-categories \"locale convention/date format\" -i " + path);
  REQUIRE(result.exit_code == 0);
  CHECK(parse_jsonl(result.out)[0].at("spans").at(0).at("category") ==
        "locale convention/date format");
}

TEST_CASE("cli: select-checkpoint picks the best aggregate") {
  const auto dir = temp_dir() / "ckpts";
  fs::create_directories(dir);
  const auto write_ckpt = [&](const std::string& name, double seg, double spa) {
    std::ofstream out(dir / (name + ".json"));
    out << json{{"checkpoint", name},
                {"pairs",
                 {{"en-de", {{"segment_accuracy", seg}, {"system_spa", spa}}},
                  {"ja-zh", {{"segment_accuracy", seg}, {"system_spa", spa}}}}}}
               .dump();
  };
  write_ckpt("step-1000", 0.50, 0.90);
  write_ckpt("step-2000", 0.60, 0.80);  // better at w_sys = 0.2
  const auto result = run_cli("select-checkpoint --dir " + dir.string() + " --w-sys 0.2");
  REQUIRE(result.exit_code == 0);
  const auto report = json::parse(result.out);
  CHECK(report.at("best").at("checkpoint") == "step-2000");
  CHECK(report.at("ranking").size() == 2);
}

TEST_CASE("cli: span-stats on the worked example") {
  const auto ingested = (temp_dir() / "stats_in.jsonl").string();
  REQUIRE(run_cli("ingest --format mqm-tsv --src-lang en --tgt-lang de -i " +
                  data_file("example.mqm.tsv") + " -o " + ingested)
              .exit_code == 0);
  const auto result = run_cli("span-stats -i " + ingested);
  REQUIRE(result.exit_code == 0);
  const auto stats = json::parse(result.out);
  CHECK(stats.at("total_spans") == 3);
  CHECK(stats.at("non_unique_spans") == 1);
  CHECK(stats.at("non_unique_char_fraction") == 0.25);
}

TEST_CASE("cli: empty hypothesis survives ingest -> prompt -> score") {
  // Empty translations occur in WMT data; the pipeline must carry them.
  const auto tsv = write_file("empty_hyp.mqm.tsv",
                              "sysA\tdoc1\t1\tr1\tSome source.\t\tno-error\tno-error\n");
  const auto ingested = (temp_dir() / "empty_hyp.jsonl").string();
  auto result = run_cli("ingest --format mqm-tsv --src-lang en --tgt-lang de -i " + tsv + " -o " +
                        ingested);
  REQUIRE(result.exit_code == 0);
  const auto rows = parse_jsonl(read_file(ingested));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("hypothesis") == "");

  result = run_cli("prompts --task score --mode src_only --score-type mqm -i " + ingested);
  REQUIRE(result.exit_code == 0);
  CHECK(parse_jsonl(result.out)[0].at("text").get<std::string>().find(
            "translation:\n``````") != std::string::npos);

  result = run_cli("mqm-score -i " + ingested);
  REQUIRE(result.exit_code == 0);
  CHECK(parse_jsonl(result.out)[0].at("score").at("value") == 0.0);

  result = run_cli("score-spans --pred " + ingested + " --gold " + ingested);
  REQUIRE(result.exit_code == 0);
  CHECK(json::parse(result.out).at("corpus").at("f1") == 1.0);  // both empty: perfect
}

TEST_CASE("cli: subcommands compose over stdin") {
  json rec{{"doc_id", "d"},      {"seg_id", "1"},    {"source", "s"},
           {"reference", nullptr}, {"hypothesis", "abc"},
           {"src_lang", "en"},   {"tgt_lang", "de"}, {"spans", json::array()},
           {"score", nullptr}};
  const auto path = write_file("pipe.jsonl", rec.dump() + "\n");
  const std::string cmd = "cat " + path + " | " + std::string(MTEVAL_BIN) + " mqm-score | " +
                          std::string(MTEVAL_BIN) + " span-stats";
  const auto result = run_cli("span-stats -i " + path);  // baseline sanity
  REQUIRE(result.exit_code == 0);
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  REQUIRE(pclose(pipe) == 0);
  CHECK(json::parse(out).at("total_spans") == 0);
}

TEST_CASE("cli: prompts rejects the stage-2 ref_only combination") {
  json rec{{"doc_id", "d"},  {"seg_id", "1"},       {"source", nullptr},
           {"reference", "r"}, {"hypothesis", "h"},
           {"src_lang", "en"}, {"tgt_lang", "de"},  {"spans", json::array()},
           {"score", nullptr}};
  const auto path = write_file("refonly.jsonl", rec.dump() + "\n");
  CHECK(run_cli("prompts --task score --mode ref_only --score-type mqm -i " + path).exit_code ==
        2);
  CHECK(run_cli("prompts --task score --mode ref_only -i " + path).exit_code == 0);
}

TEST_CASE("cli: ingest da-tsv with the metricx25 filter") {
  const auto tsv = write_file("da.tsv",
                              "sysA\td1\t1\tr1\t80\n"
                              "sysA\td1\t2\tr1\t60\n");
  const auto kept = run_cli("ingest --format da-tsv --year 2021 --src-lang de --tgt-lang en "
                            "--filter-preset metricx25 -i " +
                            tsv);
  REQUIRE(kept.exit_code == 0);
  CHECK(parse_jsonl(kept.out).empty());  // WMT21 into-English is excluded

  const auto out_of_english =
      run_cli("ingest --format da-tsv --year 2021 --src-lang en --tgt-lang de "
              "--filter-preset metricx25 -i " +
              tsv);
  CHECK(parse_jsonl(out_of_english.out).size() == 2);
}
