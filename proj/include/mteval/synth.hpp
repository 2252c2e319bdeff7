#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mteval/core.hpp"
#include "mteval/error.hpp"
#include "mteval/json_io.hpp"
#include "mteval/utf8.hpp"

// Synthetic bad-translation training examples with assigned scores on the
// fixed [0, 25] MQM scale: over-/undertranslation, fluent-but-unrelated
// translation, and missing punctuation.

namespace mteval {

enum class SynthCategory { Undertranslation, Overtranslation, Unrelated, MissingPunct };

inline std::string_view to_string(SynthCategory c) {
  switch (c) {
    case SynthCategory::Undertranslation: return "undertranslation";
    case SynthCategory::Overtranslation: return "overtranslation";
    case SynthCategory::Unrelated: return "unrelated";
    case SynthCategory::MissingPunct: return "missing_punct";
  }
  return "undertranslation";
}

struct SyntheticExample {
  Segment segment;
  double score = 25.0;  // MQM scale, [0, 25]
  SynthCategory category = SynthCategory::Undertranslation;
};

namespace detail {

inline bool is_ws(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r'; }

inline const std::string& require_reference(const Segment& seg) {
  if (!seg.reference) throw NoReference("segment " + seg.doc_id + ":" + seg.seg_id);
  return *seg.reference;
}

}  // namespace detail

/// Truncates the reference at the whitespace boundary nearest to `fraction`
/// of its characters; the truncation is the new hypothesis. A reference with
/// no internal whitespace degenerates to the full reference.
inline SyntheticExample gen_undertranslation(const Segment& seg, double fraction,
                                             double score = 25.0) {
  const std::string& ref = detail::require_reference(seg);
  if (!(fraction > 0.0 && fraction < 1.0))
    throw OutOfRange("undertranslation fraction must lie in (0, 1)");
  const std::u32string r = utf8::decode(ref);
  const double target = fraction * static_cast<double>(r.size());
  // Candidate boundaries are the whitespace positions plus the text end,
  // scanned in ascending order so ties go to the smaller cut.
  size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i <= r.size(); ++i) {
    if (i < r.size() && !detail::is_ws(r[i])) continue;
    const double dist = std::abs(static_cast<double>(i) - target);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  std::u32string prefix = r.substr(0, best);
  while (!prefix.empty() && detail::is_ws(prefix.back())) prefix.pop_back();
  SyntheticExample out{seg, score, SynthCategory::Undertranslation};
  out.segment.hypothesis = utf8::encode(prefix);
  return out;
}

/// Appends a pool-sampled target-language sentence to the reference.
inline SyntheticExample gen_overtranslation(const Segment& seg, std::span<const std::string> pool,
                                            std::mt19937_64& rng, double score = 25.0) {
  const std::string& ref = detail::require_reference(seg);
  if (pool.empty()) throw EmptyPool("overtranslation needs a sentence pool");
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  SyntheticExample out{seg, score, SynthCategory::Overtranslation};
  out.segment.hypothesis = ref + " " + pool[pick(rng)];
  return out;
}

/// Replaces the hypothesis with a different segment's reference (fluent but
/// unrelated). Never samples the segment's own reference.
inline SyntheticExample gen_unrelated(const Segment& seg, std::span<const std::string> pool,
                                      std::mt19937_64& rng, double score = 25.0) {
  const std::string& ref = detail::require_reference(seg);
  std::vector<const std::string*> candidates;
  for (const auto& p : pool)
    if (p != ref) candidates.push_back(&p);
  if (candidates.empty()) throw EmptyPool("no pool reference differs from the segment's own");
  std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
  SyntheticExample out{seg, score, SynthCategory::Unrelated};
  out.segment.hypothesis = *candidates[pick(rng)];
  return out;
}

inline const std::set<char32_t>& default_terminal_punct() {
  static const std::set<char32_t> punct{U'.', U'!', U'?', U'。', U'！', U'？'};
  return punct;
}

/// Strips the reference's terminal punctuation mark, scoring one minor
/// error. Returns nullopt when the reference does not end in one.
inline std::optional<SyntheticExample> gen_missing_punct(
    const Segment& seg, const std::set<char32_t>& punct = default_terminal_punct(),
    double score = 1.0) {
  const std::string& ref = detail::require_reference(seg);
  const std::u32string r = utf8::decode(ref);
  if (r.empty() || !punct.count(r.back())) return std::nullopt;
  SyntheticExample out{seg, score, SynthCategory::MissingPunct};
  out.segment.hypothesis = utf8::encode(std::u32string_view(r).substr(0, r.size() - 1));
  return out;
}

// ---------------------------------------------------------------------------
// Mixture generation

struct SynthOptions {
  std::vector<SynthCategory> categories{SynthCategory::Undertranslation,
                                        SynthCategory::Overtranslation, SynthCategory::Unrelated,
                                        SynthCategory::MissingPunct};
  std::vector<double> weights{1.0, 1.0, 1.0, 1.0};
  uint64_t seed = 0;
  double bad_score = 25.0;
  double punct_score = 1.0;
  double min_fraction = 0.2;  // undertranslation truncation range
  double max_fraction = 0.8;
};

struct SynthResult {
  std::vector<SyntheticExample> examples;
  size_t skipped = 0;  // segments where the drawn category was unavailable
};

/// Draws one category per input segment and generates the example. The
/// per-segment RNG stream derives from (seed, input index), so generation is
/// deterministic given (seed, input order) and partitions cleanly across
/// workers. Pools are built per target language, so sampled text always
/// matches the segment's language.
inline SynthResult synth_mixture(std::span<const Segment> segments, const SynthOptions& opts) {
  if (opts.categories.empty() || opts.categories.size() != opts.weights.size())
    throw OutOfRange("categories and weights must be nonempty and of equal length");
  std::map<std::string, std::vector<std::string>> pools;
  for (const auto& seg : segments)
    if (seg.reference) pools[seg.tgt_lang.language].push_back(*seg.reference);

  SynthResult result;
  for (size_t i = 0; i < segments.size(); ++i) {
    const Segment& seg = segments[i];
    const std::vector<std::string>& pool = pools[seg.tgt_lang.language];
    std::seed_seq seq{static_cast<uint32_t>(opts.seed), static_cast<uint32_t>(opts.seed >> 32),
                      static_cast<uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::discrete_distribution<size_t> draw(opts.weights.begin(), opts.weights.end());
    const SynthCategory category = opts.categories[draw(rng)];
    try {
      switch (category) {
        case SynthCategory::Undertranslation: {
          std::uniform_real_distribution<double> frac(opts.min_fraction, opts.max_fraction);
          result.examples.push_back(gen_undertranslation(seg, frac(rng), opts.bad_score));
          break;
        }
        case SynthCategory::Overtranslation:
          result.examples.push_back(gen_overtranslation(seg, pool, rng, opts.bad_score));
          break;
        case SynthCategory::Unrelated:
          result.examples.push_back(gen_unrelated(seg, pool, rng, opts.bad_score));
          break;
        case SynthCategory::MissingPunct: {
          auto ex = gen_missing_punct(seg, default_terminal_punct(), opts.punct_score);
          if (!ex) {
            ++result.skipped;
            continue;
          }
          result.examples.push_back(std::move(*ex));
          break;
        }
      }
    } catch (const NoReference&) {
      ++result.skipped;
    } catch (const EmptyPool&) {
      ++result.skipped;
    }
  }
  return result;
}

}  // namespace mteval
