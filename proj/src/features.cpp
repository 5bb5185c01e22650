#include "hlpow/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>

#include "hlpow/errors.hpp"
#include "hlpow/util.hpp"

namespace hlpow {

std::size_t feature_length(const HistogramConfig& cfg) {
  return 11 + static_cast<std::size_t>(kOpcodeCount) *
                  (1 + 3 * static_cast<std::size_t>(cfg.n_bins));
}

namespace {

constexpr const char* kArchNames[11] = {
    "lut", "ff", "dsp", "bram", "clock_period_ns", "latency_cycles",
    "sf_lut", "sf_ff", "sf_dsp", "sf_bram", "sf_latency",
};

std::vector<std::string> make_layout(const HistogramConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(feature_length(cfg));
  for (const char* n : kArchNames) names.emplace_back(n);
  for (int oc = 0; oc < kOpcodeCount; ++oc) {
    const std::string op = opcode_name(static_cast<Opcode>(oc));
    names.push_back(op + "_total");
    for (int b = 0; b < cfg.n_bins; ++b) {
      const std::string bin = op + "_bin" + std::to_string(b);
      names.push_back(bin + "_count");
      names.push_back(bin + "_pct");
      names.push_back(bin + "_mean");
    }
  }
  return names;
}

}  // namespace

const std::vector<std::string>& feature_layout(const HistogramConfig& cfg) {
  static std::mutex mutex;
  static std::map<int, std::vector<std::string>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(cfg.n_bins);
  if (it == cache.end()) it = cache.emplace(cfg.n_bins, make_layout(cfg)).first;
  return it->second;
}

std::array<double, 11> architecture_features(const HlsMetrics& current, const HlsMetrics& base,
                                             ZeroBasePolicy policy) {
  auto scale = [&](double cur, double ref, const char* name) -> double {
    if (ref == 0.0) {
      if (policy == ZeroBasePolicy::SubstituteOne) return 1.0;
      raise(ErrorKind::ZeroBaseline, std::string("baseline ") + name + " is 0");
    }
    return cur / ref;
  };
  return {
      static_cast<double>(current.lut),
      static_cast<double>(current.ff),
      static_cast<double>(current.dsp),
      static_cast<double>(current.bram),
      current.clock_period_ns,
      static_cast<double>(current.latency_cycles),
      scale(static_cast<double>(current.lut), static_cast<double>(base.lut), "lut"),
      scale(static_cast<double>(current.ff), static_cast<double>(base.ff), "ff"),
      scale(static_cast<double>(current.dsp), static_cast<double>(base.dsp), "dsp"),
      scale(static_cast<double>(current.bram), static_cast<double>(base.bram), "bram"),
      scale(static_cast<double>(current.latency_cycles),
            static_cast<double>(base.latency_cycles), "latency"),
  };
}

std::array<OpcodeHistogram, kOpcodeCount> build_histograms(
    const std::vector<ActivityRecord>& activities, const HistogramConfig& cfg) {
  if (cfg.n_bins < 1) raise(ErrorKind::InvalidArgument, "n_bins must be >= 1");
  std::array<OpcodeHistogram, kOpcodeCount> result;
  for (auto& hist : result) hist.bins.resize(static_cast<std::size_t>(cfg.n_bins));

  std::array<std::vector<double>, kOpcodeCount> sums;
  for (auto& s : sums) s.resize(static_cast<std::size_t>(cfg.n_bins), 0.0);

  for (const auto& rec : activities) {
    double a = rec.scaled_sa;
    if (cfg.normalize_by_width && rec.max_width > 0) {
      a /= static_cast<double>(rec.max_width);
    }
    a = std::clamp(a, 0.0, 1.0);
    int bin = static_cast<int>(a * cfg.n_bins);
    if (bin >= cfg.n_bins) bin = cfg.n_bins - 1;  // activity 1.0 lands in the last bin
    auto& hist = result[static_cast<std::size_t>(static_cast<int>(rec.opcode))];
    hist.total += 1;
    hist.bins[static_cast<std::size_t>(bin)].count += 1;
    sums[static_cast<std::size_t>(static_cast<int>(rec.opcode))][static_cast<std::size_t>(bin)] += a;
  }

  for (int oc = 0; oc < kOpcodeCount; ++oc) {
    auto& hist = result[static_cast<std::size_t>(oc)];
    if (hist.total == 0) continue;
    for (int b = 0; b < cfg.n_bins; ++b) {
      auto& bin = hist.bins[static_cast<std::size_t>(b)];
      bin.percentage = static_cast<double>(bin.count) / static_cast<double>(hist.total);
      bin.mean = bin.count > 0
                     ? sums[static_cast<std::size_t>(oc)][static_cast<std::size_t>(b)] /
                           static_cast<double>(bin.count)
                     : 0.0;
    }
  }
  return result;
}

FeatureVector assemble_features(const DesignPoint& point, const HlsMetrics& base,
                                const std::map<std::int64_t, ValueTrace>& traces,
                                const HistogramConfig& cfg, ZeroBasePolicy policy) {
  std::vector<ActivityRecord> activities;
  activities.reserve(point.design.rtl_operators.size());
  for (const auto& rtl : point.design.rtl_operators) {
    auto it = traces.find(rtl.id);
    if (it == traces.end()) {
      raise(ErrorKind::InvalidArgument,
            "no trace for rtl op " + std::to_string(rtl.id));
    }
    const ValueTrace& trace = it->second;
    const double sa = switching_activity(trace);
    const double scaled =
        scaled_activity(sa, trace.transition_count(), point.metrics.latency_cycles);
    activities.push_back({rtl.opcode, scaled, std::max(1, trace.max_width())});
  }

  const auto arch = architecture_features(point.metrics, base, policy);
  const auto hists = build_histograms(activities, cfg);

  FeatureVector fv;
  fv.values.reserve(feature_length(cfg));
  fv.values.insert(fv.values.end(), arch.begin(), arch.end());
  for (const auto& hist : hists) {
    fv.values.push_back(static_cast<double>(hist.total));
    for (const auto& bin : hist.bins) {
      fv.values.push_back(static_cast<double>(bin.count));
      fv.values.push_back(bin.percentage);
      fv.values.push_back(bin.mean);
    }
  }
  return fv;
}

FeatureVector compute_features(const DesignPoint& point, const HlsMetrics& base,
                               const Stimuli& stimuli, const HistogramConfig& cfg,
                               ZeroBasePolicy policy) {
  const auto traces = execute_trace(point.design, stimuli);
  return assemble_features(point, base, traces, cfg, policy);
}

std::string feature_matrix_to_csv(const std::vector<FeatureRow>& rows,
                                  const HistogramConfig& cfg) {
  const auto& layout = feature_layout(cfg);
  const bool with_power =
      std::any_of(rows.begin(), rows.end(), [](const FeatureRow& r) {
        return r.measured_power_w.has_value();
      });

  std::string out = "app,point_id";
  for (const auto& name : layout) out += "," + name;
  if (with_power) out += ",measured_power_w";
  out += "\n";

  for (const auto& row : rows) {
    if (row.features.values.size() != layout.size()) {
      raise(ErrorKind::LayoutMismatch,
            "feature row for " + row.app + "/" + row.point_id + " has " +
                std::to_string(row.features.values.size()) + " values, layout expects " +
                std::to_string(layout.size()));
    }
    out += row.app + "," + row.point_id;
    for (double v : row.features.values) out += "," + format_double(v);
    if (with_power) {
      out += ",";
      if (row.measured_power_w) out += format_double(*row.measured_power_w);
    }
    out += "\n";
  }
  return out;
}

std::vector<FeatureRow> feature_matrix_from_csv(const std::string& text) {
  std::vector<std::string> lines;
  for (auto& line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) raise(ErrorKind::MalformedDocument, "feature csv is empty");

  const auto header = split(lines.front(), ',');
  if (header.size() < 3 || header[0] != "app" || header[1] != "point_id") {
    raise(ErrorKind::MalformedDocument, "feature csv header must start with app,point_id");
  }
  const bool with_power = header.back() == "measured_power_w";
  const std::size_t n_features = header.size() - 2 - (with_power ? 1 : 0);

  std::vector<FeatureRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != header.size()) {
      raise(ErrorKind::MalformedDocument,
            "feature csv row " + std::to_string(i) + " has " + std::to_string(cells.size()) +
                " cells, expected " + std::to_string(header.size()));
    }
    FeatureRow row;
    row.app = cells[0];
    row.point_id = cells[1];
    row.features.values.resize(n_features);
    for (std::size_t c = 0; c < n_features; ++c) {
      const std::string& cell = cells[2 + c];
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), row.features.values[c]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        raise(ErrorKind::MalformedDocument,
              "feature csv row " + std::to_string(i) + ": bad number '" + cell + "'");
      }
    }
    if (with_power && !cells.back().empty()) {
      double p = 0.0;
      auto res = std::from_chars(cells.back().data(), cells.back().data() + cells.back().size(), p);
      if (res.ec != std::errc() || res.ptr != cells.back().data() + cells.back().size()) {
        raise(ErrorKind::MalformedDocument,
              "feature csv row " + std::to_string(i) + ": bad power '" + cells.back() + "'");
      }
      row.measured_power_w = p;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hlpow
