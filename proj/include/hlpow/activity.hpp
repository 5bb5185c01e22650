#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hlpow/design.hpp"

namespace hlpow {

// Fixed-width bit vector, at most 64 bits. Only the low `width` bits of
// `bits` are significant; constructors mask the rest away.
struct BitVec {
  std::uint64_t bits = 0;
  int width = 1;

  BitVec() = default;
  BitVec(std::uint64_t value, int w);

  static BitVec from_signed(std::int64_t value, int w);
  static BitVec from_double(double value, int w);  // IEEE-754 binary32/64 pattern

  std::int64_t as_signed() const;   // sign-extended
  std::uint64_t as_unsigned() const { return bits; }
  double as_double() const;         // reinterpret per width (32 or 64)
  std::string to_string() const;    // msb-first binary digits

  bool operator==(const BitVec&) const = default;
};

// Number of differing bit positions. Throws Error{WidthMismatch}.
int hamming(const BitVec& a, const BitVec& b);

// Per-RTL-operator value history: one sample sequence per operand plus one
// for the result, all of equal length.
struct ValueTrace {
  std::int64_t rtl_id = 0;
  std::vector<std::vector<BitVec>> signals;

  std::size_t sample_count() const { return signals.empty() ? 0 : signals.front().size(); }
  std::size_t signal_count() const { return signals.size(); }
  // Recorded transitions (K - 1 for K samples).
  std::int64_t transition_count() const {
    const auto k = sample_count();
    return k > 0 ? static_cast<std::int64_t>(k) - 1 : 0;
  }
  int max_width() const;
};

// Named per-invocation input values; entry i of a sequence feeds invocation i.
struct Stimuli {
  std::map<std::string, std::vector<BitVec>> inputs;

  std::size_t invocations() const {
    return inputs.empty() ? 0 : inputs.begin()->second.size();
  }
};

// Parses a column-per-port CSV (one row per invocation, decimal integer or
// float values) against the design's port declarations.
Stimuli parse_stimuli_csv(const std::string& text, const FsmdDesign& design);
std::string stimuli_to_csv(const Stimuli& stimuli, const FsmdDesign& design);
Stimuli load_stimuli(const std::string& path, const FsmdDesign& design);

// Interprets the design over the stimuli, recording one sample per signal
// each time an IR operator fires (iterations x invocations firings total).
// Throws Error{WidthMismatch|UnsupportedOpcode|DivisionByZero}.
std::map<std::int64_t, ValueTrace> execute_trace(const FsmdDesign& design,
                                                 const Stimuli& stimuli);

// Average switching activity per recorded transition and signal (SA_op).
double switching_activity(const ValueTrace& trace);

// Activation-rate-scaled activity: (n_op / latency) * sa.
// Throws Error{InvalidLatency} when latency < 1.
double scaled_activity(double sa, std::int64_t n_op, std::int64_t latency);

}  // namespace hlpow
