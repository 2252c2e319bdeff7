#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mteval/core.hpp"
#include "mteval/error.hpp"

// Metric meta-evaluation: segment-level tie-calibrated pairwise accuracy,
// system-level soft pairwise accuracy (SPA), and the checkpoint-selection
// aggregate over language pairs.

namespace mteval {

/// Scores indexed by (system, segment). Missing values are allowed and drop
/// the pairs they touch.
struct ScoreMatrix {
  std::vector<std::string> systems;
  std::vector<std::string> segments;
  std::vector<std::vector<std::optional<double>>> values;  // [system][segment]
  Orientation orientation = Orientation::HigherBetter;

  size_t add_system(const std::string& name) {
    for (size_t i = 0; i < systems.size(); ++i)
      if (systems[i] == name) return i;
    systems.push_back(name);
    values.emplace_back(segments.size());
    return systems.size() - 1;
  }

  size_t add_segment(const std::string& key) {
    for (size_t i = 0; i < segments.size(); ++i)
      if (segments[i] == key) return i;
    segments.push_back(key);
    for (auto& row : values) row.emplace_back();
    return segments.size() - 1;
  }

  void set(const std::string& system, const std::string& segment, double score) {
    values[add_system(system)][add_segment(segment)] = score;
  }

  std::optional<double> get(size_t sys, size_t seg) const { return values[sys][seg]; }
};

namespace detail {

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct AlignedMatrices {
  // metric values re-indexed to the human matrix's (system, segment) grid
  const ScoreMatrix* human;
  std::vector<std::vector<std::optional<double>>> metric;
};

inline AlignedMatrices align(const ScoreMatrix& human, const ScoreMatrix& metric) {
  if (human.orientation != Orientation::HigherBetter ||
      metric.orientation != Orientation::HigherBetter)
    throw Error("meta-evaluation requires higher-is-better matrices on both sides");
  std::map<std::string, size_t> msys, mseg;
  for (size_t i = 0; i < metric.systems.size(); ++i) msys[metric.systems[i]] = i;
  for (size_t i = 0; i < metric.segments.size(); ++i) mseg[metric.segments[i]] = i;
  AlignedMatrices out{&human, {}};
  out.metric.assign(human.systems.size(),
                    std::vector<std::optional<double>>(human.segments.size()));
  for (size_t s = 0; s < human.systems.size(); ++s) {
    const auto si = msys.find(human.systems[s]);
    if (si == msys.end()) continue;
    for (size_t g = 0; g < human.segments.size(); ++g) {
      const auto gi = mseg.find(human.segments[g]);
      if (gi == mseg.end()) continue;
      out.metric[s][g] = metric.values[si->second][gi->second];
    }
  }
  return out;
}

}  // namespace detail

struct TieCalibrationResult {
  double accuracy = 0.0;
  double epsilon = 0.0;
  size_t pairs_used = 0;
  size_t pairs_dropped = 0;  // missing a human or metric score
};

/// Segment-level pairwise accuracy with tie calibration. Human ties are
/// exact equality (MQM scores are discrete sums, so exact ties are
/// meaningful); the metric declares a tie when |m_i - m_j| <= epsilon.
/// Epsilon is chosen from {0} U {midpoints of consecutive distinct absolute
/// metric differences} U {max difference} to maximize accuracy; the smallest
/// maximizer wins.
inline TieCalibrationResult pairwise_accuracy_tie_calibrated(const ScoreMatrix& human,
                                                             const ScoreMatrix& metric) {
  const auto aligned = detail::align(human, metric);
  struct Pair {
    int human_rel;   // -1, 0, +1
    int metric_rel;  // sign of the metric difference
    double abs_diff;
  };
  std::vector<Pair> pairs;
  size_t dropped = 0;
  for (size_t g = 0; g < human.segments.size(); ++g) {
    for (size_t a = 0; a < human.systems.size(); ++a) {
      for (size_t b = a + 1; b < human.systems.size(); ++b) {
        const auto ha = human.values[a][g], hb = human.values[b][g];
        const auto ma = aligned.metric[a][g], mb = aligned.metric[b][g];
        if (!ha || !hb || !ma || !mb) {
          ++dropped;
          continue;
        }
        const double hd = *ha - *hb, md = *ma - *mb;
        pairs.push_back(Pair{hd > 0 ? 1 : (hd < 0 ? -1 : 0), md > 0 ? 1 : (md < 0 ? -1 : 0),
                             std::abs(md)});
      }
    }
  }
  if (pairs.empty()) throw NoComparablePairs("no system pairs with scores on both sides");

  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& x, const Pair& y) { return x.abs_diff < y.abs_diff; });

  // Accuracy at epsilon = 0: only zero-difference pairs are predicted ties.
  long correct = 0;
  for (const auto& p : pairs)
    correct += (p.abs_diff == 0.0) ? (p.human_rel == 0) : (p.human_rel == p.metric_rel);

  long best_correct = correct;
  double best_eps = 0.0;

  // Sweep distinct nonzero |diff| groups in ascending order. Crossing a
  // group's value turns its pairs into predicted ties; the representative
  // epsilon for the interval up to the next group is their midpoint, and the
  // last group's own value ties everything (the tie test is inclusive).
  size_t i = 0;
  while (i < pairs.size() && pairs[i].abs_diff == 0.0) ++i;
  while (i < pairs.size()) {
    const double v = pairs[i].abs_diff;
    for (; i < pairs.size() && pairs[i].abs_diff == v; ++i)
      correct += (pairs[i].human_rel == 0) - (pairs[i].human_rel == pairs[i].metric_rel);
    const double eps = (i < pairs.size()) ? (v + pairs[i].abs_diff) / 2.0 : v;
    if (correct > best_correct) {
      best_correct = correct;
      best_eps = eps;
    }
  }

  TieCalibrationResult result;
  result.accuracy = static_cast<double>(best_correct) / static_cast<double>(pairs.size());
  result.epsilon = best_eps;
  result.pairs_used = pairs.size();
  result.pairs_dropped = dropped;
  return result;
}

struct SpaOptions {
  int resamples = 1000;
  uint64_t seed = 0;
  unsigned threads = 1;
};

namespace detail {

// Two-sided p-values of a paired sign-flip permutation test run jointly on
// the human and metric per-segment differences of one system pair. The same
// flip sequence applies to both sides, so identical inputs get identical
// p-values, and streams are derived from (seed, system ids) so results do
// not depend on evaluation order or thread count.
inline std::pair<double, double> paired_permutation_pvalues(const std::vector<double>& human_diff,
                                                            const std::vector<double>& metric_diff,
                                                            uint64_t seed, uint64_t pair_hash,
                                                            int resamples) {
  const size_t n = human_diff.size();
  double obs_h = 0, obs_m = 0;
  for (size_t i = 0; i < n; ++i) {
    obs_h += human_diff[i];
    obs_m += metric_diff[i];
  }
  obs_h = std::abs(obs_h / static_cast<double>(n));
  obs_m = std::abs(obs_m / static_cast<double>(n));

  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(pair_hash), static_cast<uint32_t>(pair_hash >> 32)};
  std::mt19937_64 rng(seq);
  long count_h = 0, count_m = 0;
  std::vector<uint64_t> masks((n + 63) / 64);
  for (int r = 0; r < resamples; ++r) {
    for (auto& m : masks) m = rng();
    double sh = 0, sm = 0;
    for (size_t i = 0; i < n; ++i) {
      const bool flip = (masks[i / 64] >> (i % 64)) & 1;
      sh += flip ? -human_diff[i] : human_diff[i];
      sm += flip ? -metric_diff[i] : metric_diff[i];
    }
    count_h += std::abs(sh / static_cast<double>(n)) >= obs_h;
    count_m += std::abs(sm / static_cast<double>(n)) >= obs_m;
  }
  const double denom = static_cast<double>(resamples) + 1.0;
  return {(static_cast<double>(count_h) + 1.0) / denom,
          (static_cast<double>(count_m) + 1.0) / denom};
}

}  // namespace detail

/// System-level soft pairwise accuracy: for each unordered system pair, the
/// human and metric p-values of a paired permutation test are compared; the
/// pair scores 1 - |p_h - p_m| and SPA is the mean over pairs. Deterministic
/// given the seed, independent of thread count, symmetric in its arguments,
/// and exactly 1.0 when the matrices agree.
inline double soft_pairwise_accuracy(const ScoreMatrix& human, const ScoreMatrix& metric,
                                     const SpaOptions& opts = {}) {
  const auto aligned = detail::align(human, metric);
  if (human.systems.size() < 2) throw TooFewSystems("SPA needs at least 2 systems");

  // Canonical iteration order: sorted system names, sorted segment keys.
  std::vector<size_t> sys_order(human.systems.size());
  for (size_t i = 0; i < sys_order.size(); ++i) sys_order[i] = i;
  std::sort(sys_order.begin(), sys_order.end(),
            [&](size_t a, size_t b) { return human.systems[a] < human.systems[b]; });
  std::vector<size_t> seg_order(human.segments.size());
  for (size_t i = 0; i < seg_order.size(); ++i) seg_order[i] = i;
  std::sort(seg_order.begin(), seg_order.end(),
            [&](size_t a, size_t b) { return human.segments[a] < human.segments[b]; });

  struct PairTask {
    std::vector<double> human_diff, metric_diff;
    uint64_t hash;
  };
  std::vector<PairTask> tasks;
  for (size_t ai = 0; ai < sys_order.size(); ++ai) {
    for (size_t bi = ai + 1; bi < sys_order.size(); ++bi) {
      const size_t a = sys_order[ai], b = sys_order[bi];
      PairTask task;
      for (size_t g : seg_order) {
        const auto ha = human.values[a][g], hb = human.values[b][g];
        const auto ma = aligned.metric[a][g], mb = aligned.metric[b][g];
        if (!ha || !hb || !ma || !mb) continue;
        task.human_diff.push_back(*ha - *hb);
        task.metric_diff.push_back(*ma - *mb);
      }
      if (task.human_diff.size() < 2)
        throw TooFewSegments("system pair (" + human.systems[a] + ", " + human.systems[b] +
                             ") has fewer than 2 paired segments");
      task.hash = detail::fnv1a(human.systems[a]) * 31 + detail::fnv1a(human.systems[b]);
      tasks.push_back(std::move(task));
    }
  }

  std::vector<double> pair_scores(tasks.size());
  const auto run = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const auto [ph, pm] = detail::paired_permutation_pvalues(
          tasks[i].human_diff, tasks[i].metric_diff, opts.seed, tasks[i].hash, opts.resamples);
      pair_scores[i] = 1.0 - std::abs(ph - pm);
    }
  };
  const unsigned threads = std::max(1u, opts.threads);
  if (threads == 1 || tasks.size() < 2) {
    run(0, tasks.size());
  } else {
    std::vector<std::future<void>> futures;
    const size_t chunk = (tasks.size() + threads - 1) / threads;
    for (size_t begin = 0; begin < tasks.size(); begin += chunk)
      futures.push_back(std::async(std::launch::async, run, begin,
                                   std::min(begin + chunk, tasks.size())));
    for (auto& f : futures) f.get();
  }

  double total = 0;
  for (double s : pair_scores) total += s;
  return total / static_cast<double>(pair_scores.size());
}

/// Checkpoint-selection aggregate: the mean segment-level accuracy mixed with
/// the mean system-level accuracy, the latter downweighted (its variance is
/// larger).
inline double checkpoint_selection_score(std::span<const double> seg_accs,
                                         std::span<const double> sys_accs, double w_sys) {
  if (w_sys < 0.0 || w_sys > 1.0) throw OutOfRange("w_sys must lie in [0, 1]");
  if (seg_accs.empty() || sys_accs.empty()) throw EmptyRatings("empty accuracy lists");
  const auto mean = [](std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  return (1.0 - w_sys) * mean(seg_accs) + w_sys * mean(sys_accs);
}

/// One language pair's meta-evaluation numbers.
struct MetaEvalReport {
  std::string lang_pair;
  std::optional<double> segment_accuracy;
  std::optional<double> epsilon;
  size_t pairs_used = 0;
  size_t pairs_dropped = 0;
  std::optional<double> system_spa;
};

inline nlohmann::json to_json(const MetaEvalReport& r) {
  nlohmann::json j = nlohmann::json::object();
  if (r.segment_accuracy) {
    j["segment_accuracy"] = *r.segment_accuracy;
    j["epsilon"] = *r.epsilon;
    j["pairs_used"] = r.pairs_used;
    j["pairs_dropped"] = r.pairs_dropped;
  }
  if (r.system_spa) j["system_spa"] = *r.system_spa;
  return j;
}

}  // namespace mteval
