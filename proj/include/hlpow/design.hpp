#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hlpow {

// Directive knobs of one design point. pipeline_level is an ordinal over the
// loop nest: 0 = no pipelining, 1 = innermost loop, D = outermost loop.
// unroll_factors holds one factor per loop level, outermost first.
struct DirectiveConfig {
  int array_partition_factor = 1;
  int pipeline_level = 0;
  std::vector<int> unroll_factors = {1};

  int loop_depth() const { return static_cast<int>(unroll_factors.size()); }
  bool is_identity() const;
  // (partition, pipeline, unroll...) lexicographic key used for all
  // deterministic orderings over configurations.
  std::vector<int> sort_key() const;

  bool operator==(const DirectiveConfig&) const = default;
  bool operator<(const DirectiveConfig& other) const { return sort_key() < other.sort_key(); }
};

std::string directive_id(const DirectiveConfig& directives);

struct PlatformOptions {
  std::vector<int> partition_factors = {1, 2, 4, 8};
  std::vector<int> unroll_factors = {1, 2, 4, 8};
};

struct HlsMetrics {
  std::int64_t lut = 0;
  std::int64_t ff = 0;
  std::int64_t dsp = 0;
  std::int64_t bram = 0;
  double clock_period_ns = 10.0;
  std::int64_t latency_cycles = 1;

  bool operator==(const HlsMetrics&) const = default;
};

enum class Opcode {
  Add, Sub, Mul, Div, Sqrt,
  Fadd, Fsub, Fmul, Fdiv, Fsqrt,
  And, Or, Xor, Icmp, Fcmp,
  Store, Load, Read, Write,
  Mux, Select,
};

inline constexpr int kOpcodeCount = 21;

const char* opcode_name(Opcode opcode);
std::optional<Opcode> opcode_from_name(const std::string& name);
bool is_float_opcode(Opcode opcode);
bool is_memory_access(Opcode opcode);  // load/store (needs a `mem` binding)

// An operator input: the result of another operator, a stimulus port, a
// constant, or the implicit loop-iteration counter.
struct OpRef { std::int64_t ir_id; bool operator==(const OpRef&) const = default; };
struct PortRef { std::string name; bool operator==(const PortRef&) const = default; };
struct ConstRef { double value; bool operator==(const ConstRef&) const = default; };
struct IterRef { bool operator==(const IterRef&) const = default; };
using InputRef = std::variant<OpRef, PortRef, ConstRef, IterRef>;

struct IrOperator {
  std::int64_t id = 0;
  Opcode opcode = Opcode::Add;
  std::vector<int> operand_widths;
  int result_width = 1;
  int state = 0;
  std::vector<InputRef> inputs;
  std::string mem;  // memory name, load/store only

  bool operator==(const IrOperator&) const = default;
};

struct RtlOperator {
  std::int64_t id = 0;
  Opcode opcode = Opcode::Add;
  std::vector<std::int64_t> ir_ids;

  bool operator==(const RtlOperator&) const = default;
};

struct InputPort {
  std::string name;
  int width = 32;
  bool is_float = false;

  bool operator==(const InputPort&) const = default;
};

struct Memory {
  std::string name;
  std::int64_t depth = 1;
  int width = 32;

  bool operator==(const Memory&) const = default;
};

// Scheduled dataflow description of one design point. Each kernel invocation
// executes the operator list `iterations` times (the residual loop trip count
// not flattened by unrolling); operator `state` is the schedule step within
// one pass, in [0, n_states).
struct FsmdDesign {
  int n_states = 1;
  std::int64_t iterations = 1;
  std::vector<InputPort> input_ports;
  std::vector<Memory> memories;
  std::vector<IrOperator> ir_operators;
  std::vector<RtlOperator> rtl_operators;
  std::vector<InputRef> output_ports;

  bool operator==(const FsmdDesign&) const = default;
};

struct DesignPoint {
  std::string app_name;
  DirectiveConfig directives;
  HlsMetrics metrics;
  FsmdDesign design;
  std::string stimuli_ref;
  std::optional<double> measured_power_w;

  bool operator==(const DesignPoint&) const = default;
};

struct Application {
  std::string name;
  int loop_depth = 1;
  DesignPoint base_point;
  std::vector<DesignPoint> points;
};

// Throws Error{MalformedDocument|SchemaViolation|InvariantViolation}.
DesignPoint parse_design_point(const std::string& text, const PlatformOptions& options = {});
std::string serialize_design_point(const DesignPoint& point);

// Collects invariant violations; empty result means valid.
std::vector<std::string> validate_design_point(const DesignPoint& point,
                                               const PlatformOptions& options = {});
std::vector<std::string> validate_application(const Application& app,
                                              const PlatformOptions& options = {});

// RTL-to-IR sharing map: rtl_id -> (ir_id, schedule state) ordered by state
// ascending (ties by ir id). Throws Error{DanglingIrReference}.
std::map<std::int64_t, std::vector<std::pair<std::int64_t, int>>> back_trace(
    const FsmdDesign& design);

}  // namespace hlpow
