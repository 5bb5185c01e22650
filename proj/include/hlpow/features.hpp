#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hlpow/activity.hpp"
#include "hlpow/design.hpp"

namespace hlpow {

struct HistogramConfig {
  int n_bins = 4;
  bool normalize_by_width = true;
};

// Fixed-length feature row with a named index layout:
// 11 architecture features followed by one block per opcode in table order,
// each block [total, then per bin (count, percentage, mean)].
struct FeatureVector {
  std::vector<double> values;

  bool operator==(const FeatureVector&) const = default;
};

std::size_t feature_length(const HistogramConfig& cfg);
const std::vector<std::string>& feature_layout(const HistogramConfig& cfg);

enum class ZeroBasePolicy {
  Raise,          // signal ZeroBaseline when a baseline denominator is 0
  SubstituteOne,  // fall back to SF = 1 for resources the baseline lacks
};

// [lut, ff, dsp, bram, clock_period_ns, latency_cycles,
//  SF_lut, SF_ff, SF_dsp, SF_bram, SF_latency]
std::array<double, 11> architecture_features(const HlsMetrics& current, const HlsMetrics& base,
                                             ZeroBasePolicy policy = ZeroBasePolicy::Raise);

struct ActivityRecord {
  Opcode opcode = Opcode::Add;
  double scaled_sa = 0.0;
  int max_width = 1;
};

struct BinStats {
  std::int64_t count = 0;
  double percentage = 0.0;
  double mean = 0.0;
};

struct OpcodeHistogram {
  std::int64_t total = 0;
  std::vector<BinStats> bins;
};

// One histogram per opcode (table order). Activities are normalized by their
// operator's widest signal when configured, clamped to [0, 1]; the final bin
// is closed on the right so activity 1.0 is binned.
std::array<OpcodeHistogram, kOpcodeCount> build_histograms(
    const std::vector<ActivityRecord>& activities, const HistogramConfig& cfg);

// Full feature assembly for one design point given its baseline metrics and
// executed traces.
FeatureVector assemble_features(const DesignPoint& point, const HlsMetrics& base,
                                const std::map<std::int64_t, ValueTrace>& traces,
                                const HistogramConfig& cfg,
                                ZeroBasePolicy policy = ZeroBasePolicy::Raise);

// Convenience: execute the trace and assemble in one step.
FeatureVector compute_features(const DesignPoint& point, const HlsMetrics& base,
                               const Stimuli& stimuli, const HistogramConfig& cfg,
                               ZeroBasePolicy policy = ZeroBasePolicy::Raise);

// Feature matrix CSV: header `app,point_id,<layout...>[,measured_power_w]`.
struct FeatureRow {
  std::string app;
  std::string point_id;
  FeatureVector features;
  std::optional<double> measured_power_w;
};

std::string feature_matrix_to_csv(const std::vector<FeatureRow>& rows,
                                  const HistogramConfig& cfg);
std::vector<FeatureRow> feature_matrix_from_csv(const std::string& text);

}  // namespace hlpow
