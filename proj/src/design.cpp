#include "hlpow/design.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "hlpow/errors.hpp"
#include "hlpow/util.hpp"

namespace hlpow {

using json = nlohmann::json;

bool DirectiveConfig::is_identity() const {
  if (array_partition_factor != 1 || pipeline_level != 0) return false;
  return std::all_of(unroll_factors.begin(), unroll_factors.end(),
                     [](int f) { return f == 1; });
}

std::vector<int> DirectiveConfig::sort_key() const {
  std::vector<int> key;
  key.reserve(2 + unroll_factors.size());
  key.push_back(array_partition_factor);
  key.push_back(pipeline_level);
  key.insert(key.end(), unroll_factors.begin(), unroll_factors.end());
  return key;
}

std::string directive_id(const DirectiveConfig& directives) {
  std::string id = "p" + std::to_string(directives.array_partition_factor) + "_pl" +
                   std::to_string(directives.pipeline_level) + "_u";
  for (std::size_t i = 0; i < directives.unroll_factors.size(); ++i) {
    if (i > 0) id += "x";
    id += std::to_string(directives.unroll_factors[i]);
  }
  return id;
}

namespace {

struct OpcodeEntry {
  Opcode opcode;
  const char* name;
  int min_arity;
  int max_arity;  // -1 = unbounded
};

constexpr OpcodeEntry kOpcodeTable[kOpcodeCount] = {
    {Opcode::Add, "add", 2, 2},       {Opcode::Sub, "sub", 2, 2},
    {Opcode::Mul, "mul", 2, 2},       {Opcode::Div, "div", 2, 2},
    {Opcode::Sqrt, "sqrt", 1, 1},     {Opcode::Fadd, "fadd", 2, 2},
    {Opcode::Fsub, "fsub", 2, 2},     {Opcode::Fmul, "fmul", 2, 2},
    {Opcode::Fdiv, "fdiv", 2, 2},     {Opcode::Fsqrt, "fsqrt", 1, 1},
    {Opcode::And, "and", 2, 2},       {Opcode::Or, "or", 2, 2},
    {Opcode::Xor, "xor", 2, 2},       {Opcode::Icmp, "icmp", 2, 2},
    {Opcode::Fcmp, "fcmp", 2, 2},     {Opcode::Store, "store", 2, 2},
    {Opcode::Load, "load", 1, 1},     {Opcode::Read, "read", 1, 1},
    {Opcode::Write, "write", 1, 1},   {Opcode::Mux, "mux", 3, -1},
    {Opcode::Select, "select", 3, 3},
};

const OpcodeEntry& opcode_entry(Opcode opcode) {
  return kOpcodeTable[static_cast<int>(opcode)];
}

}  // namespace

const char* opcode_name(Opcode opcode) { return opcode_entry(opcode).name; }

std::optional<Opcode> opcode_from_name(const std::string& name) {
  for (const auto& entry : kOpcodeTable) {
    if (name == entry.name) return entry.opcode;
  }
  return std::nullopt;
}

bool is_float_opcode(Opcode opcode) {
  switch (opcode) {
    case Opcode::Fadd:
    case Opcode::Fsub:
    case Opcode::Fmul:
    case Opcode::Fdiv:
    case Opcode::Fsqrt:
    case Opcode::Fcmp:
      return true;
    default:
      return false;
  }
}

bool is_memory_access(Opcode opcode) {
  return opcode == Opcode::Load || opcode == Opcode::Store;
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void schema_error(const std::string& context, const std::string& what) {
  raise(ErrorKind::SchemaViolation, context.empty() ? what : context + ": " + what);
}

void check_keys(const json& obj, const std::string& context,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional = {}) {
  if (!obj.is_object()) schema_error(context, "expected an object");
  for (const char* key : required) {
    if (!obj.contains(key)) schema_error(context, std::string("missing field '") + key + "'");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    auto match = [&key](const char* k) { return key == k; };
    if (!std::any_of(required.begin(), required.end(), match) &&
        !std::any_of(optional.begin(), optional.end(), match)) {
      schema_error(context, "unknown field '" + key + "'");
    }
  }
}

std::int64_t get_int(const json& obj, const char* key, const std::string& context) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) schema_error(context, std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

double get_number(const json& obj, const char* key, const std::string& context) {
  const json& v = obj.at(key);
  if (!v.is_number()) schema_error(context, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::string get_string(const json& obj, const char* key, const std::string& context) {
  const json& v = obj.at(key);
  if (!v.is_string()) schema_error(context, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

const json& get_array(const json& obj, const char* key, const std::string& context) {
  const json& v = obj.at(key);
  if (!v.is_array()) schema_error(context, std::string("field '") + key + "' must be an array");
  return v;
}

InputRef parse_input_ref(const json& j, const std::string& context) {
  if (!j.is_object() || j.size() != 1) {
    schema_error(context, "input reference must be a single-key object");
  }
  const auto it = j.begin();
  const std::string& key = it.key();
  if (key == "op") {
    if (!it.value().is_number_integer()) schema_error(context, "'op' reference must be an integer id");
    return OpRef{it.value().get<std::int64_t>()};
  }
  if (key == "port") {
    if (!it.value().is_string()) schema_error(context, "'port' reference must be a string");
    return PortRef{it.value().get<std::string>()};
  }
  if (key == "const") {
    if (!it.value().is_number()) schema_error(context, "'const' reference must be a number");
    return ConstRef{it.value().get<double>()};
  }
  if (key == "iter") {
    if (!(it.value().is_boolean() && it.value().get<bool>())) {
      schema_error(context, "'iter' reference must be true");
    }
    return IterRef{};
  }
  schema_error(context, "unknown reference kind '" + key + "'");
}

json dump_input_ref(const InputRef& ref) {
  json j;
  if (const auto* op = std::get_if<OpRef>(&ref)) {
    j["op"] = op->ir_id;
  } else if (const auto* port = std::get_if<PortRef>(&ref)) {
    j["port"] = port->name;
  } else if (const auto* c = std::get_if<ConstRef>(&ref)) {
    const double v = c->value;
    if (std::floor(v) == v && std::abs(v) < 9007199254740992.0) {
      j["const"] = static_cast<std::int64_t>(v);
    } else {
      j["const"] = v;
    }
  } else {
    j["iter"] = true;
  }
  return j;
}

Opcode parse_opcode(const json& obj, const std::string& context) {
  const std::string name = get_string(obj, "opcode", context);
  const auto opcode = opcode_from_name(name);
  if (!opcode) raise(ErrorKind::InvariantViolation, context + ": unknown opcode '" + name + "'");
  return *opcode;
}

}  // namespace

DesignPoint parse_design_point(const std::string& text, const PlatformOptions& options) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorKind::MalformedDocument, e.what());
  }

  check_keys(doc, "document", {"app", "directives", "metrics", "fsmd", "stimuli"},
             {"measured_power_w"});

  DesignPoint point;
  point.app_name = get_string(doc, "app", "document");
  point.stimuli_ref = get_string(doc, "stimuli", "document");
  if (doc.contains("measured_power_w")) {
    point.measured_power_w = get_number(doc, "measured_power_w", "document");
  }

  {
    const json& d = doc.at("directives");
    check_keys(d, "directives", {"array_partition_factor", "pipeline_level", "unroll_factors"});
    point.directives.array_partition_factor =
        static_cast<int>(get_int(d, "array_partition_factor", "directives"));
    point.directives.pipeline_level = static_cast<int>(get_int(d, "pipeline_level", "directives"));
    point.directives.unroll_factors.clear();
    for (const json& f : get_array(d, "unroll_factors", "directives")) {
      if (!f.is_number_integer()) schema_error("directives.unroll_factors", "factors must be integers");
      point.directives.unroll_factors.push_back(f.get<int>());
    }
  }

  {
    const json& m = doc.at("metrics");
    check_keys(m, "metrics", {"lut", "ff", "dsp", "bram", "clock_period_ns", "latency_cycles"});
    point.metrics.lut = get_int(m, "lut", "metrics");
    point.metrics.ff = get_int(m, "ff", "metrics");
    point.metrics.dsp = get_int(m, "dsp", "metrics");
    point.metrics.bram = get_int(m, "bram", "metrics");
    point.metrics.clock_period_ns = get_number(m, "clock_period_ns", "metrics");
    point.metrics.latency_cycles = get_int(m, "latency_cycles", "metrics");
  }

  {
    const json& f = doc.at("fsmd");
    check_keys(f, "fsmd",
               {"n_states", "input_ports", "memories", "ir_operators", "rtl_operators",
                "output_ports"},
               {"iterations"});
    point.design.n_states = static_cast<int>(get_int(f, "n_states", "fsmd"));
    point.design.iterations = f.contains("iterations") ? get_int(f, "iterations", "fsmd") : 1;

    for (const json& p : get_array(f, "input_ports", "fsmd")) {
      check_keys(p, "fsmd.input_ports[]", {"name", "width"}, {"kind"});
      InputPort port;
      port.name = get_string(p, "name", "fsmd.input_ports[]");
      port.width = static_cast<int>(get_int(p, "width", "fsmd.input_ports[]"));
      if (p.contains("kind")) {
        const std::string kind = get_string(p, "kind", "fsmd.input_ports[]");
        if (kind != "int" && kind != "float") {
          schema_error("fsmd.input_ports[]", "kind must be 'int' or 'float'");
        }
        port.is_float = kind == "float";
      }
      point.design.input_ports.push_back(std::move(port));
    }

    for (const json& m : get_array(f, "memories", "fsmd")) {
      check_keys(m, "fsmd.memories[]", {"name", "depth", "width"});
      Memory mem;
      mem.name = get_string(m, "name", "fsmd.memories[]");
      mem.depth = get_int(m, "depth", "fsmd.memories[]");
      mem.width = static_cast<int>(get_int(m, "width", "fsmd.memories[]"));
      point.design.memories.push_back(std::move(mem));
    }

    for (const json& o : get_array(f, "ir_operators", "fsmd")) {
      const std::string context = "fsmd.ir_operators[]";
      check_keys(o, context, {"id", "opcode", "operand_widths", "result_width", "state", "inputs"},
                 {"mem"});
      IrOperator op;
      op.id = get_int(o, "id", context);
      op.opcode = parse_opcode(o, context);
      for (const json& w : get_array(o, "operand_widths", context)) {
        if (!w.is_number_integer()) schema_error(context, "operand widths must be integers");
        op.operand_widths.push_back(w.get<int>());
      }
      op.result_width = static_cast<int>(get_int(o, "result_width", context));
      op.state = static_cast<int>(get_int(o, "state", context));
      for (const json& r : get_array(o, "inputs", context)) {
        op.inputs.push_back(parse_input_ref(r, context + ".inputs"));
      }
      if (o.contains("mem")) op.mem = get_string(o, "mem", context);
      point.design.ir_operators.push_back(std::move(op));
    }

    for (const json& o : get_array(f, "rtl_operators", "fsmd")) {
      const std::string context = "fsmd.rtl_operators[]";
      check_keys(o, context, {"id", "opcode", "ir_ids"});
      RtlOperator op;
      op.id = get_int(o, "id", context);
      op.opcode = parse_opcode(o, context);
      for (const json& i : get_array(o, "ir_ids", context)) {
        if (!i.is_number_integer()) schema_error(context, "ir_ids must be integers");
        op.ir_ids.push_back(i.get<std::int64_t>());
      }
      point.design.rtl_operators.push_back(std::move(op));
    }

    for (const json& r : get_array(f, "output_ports", "fsmd")) {
      point.design.output_ports.push_back(parse_input_ref(r, "fsmd.output_ports"));
    }
  }

  const auto violations = validate_design_point(point, options);
  if (!violations.empty()) {
    std::string msg = violations.front();
    if (violations.size() > 1) {
      msg += " (+" + std::to_string(violations.size() - 1) + " more)";
    }
    raise(ErrorKind::InvariantViolation, msg);
  }
  return point;
}

std::string serialize_design_point(const DesignPoint& point) {
  json doc;
  doc["app"] = point.app_name;
  doc["stimuli"] = point.stimuli_ref;
  if (point.measured_power_w) doc["measured_power_w"] = *point.measured_power_w;

  doc["directives"] = {
      {"array_partition_factor", point.directives.array_partition_factor},
      {"pipeline_level", point.directives.pipeline_level},
      {"unroll_factors", point.directives.unroll_factors},
  };
  doc["metrics"] = {
      {"lut", point.metrics.lut},
      {"ff", point.metrics.ff},
      {"dsp", point.metrics.dsp},
      {"bram", point.metrics.bram},
      {"clock_period_ns", point.metrics.clock_period_ns},
      {"latency_cycles", point.metrics.latency_cycles},
  };

  json fsmd;
  fsmd["n_states"] = point.design.n_states;
  fsmd["iterations"] = point.design.iterations;
  fsmd["input_ports"] = json::array();
  for (const auto& p : point.design.input_ports) {
    fsmd["input_ports"].push_back(
        {{"name", p.name}, {"width", p.width}, {"kind", p.is_float ? "float" : "int"}});
  }
  fsmd["memories"] = json::array();
  for (const auto& m : point.design.memories) {
    fsmd["memories"].push_back({{"name", m.name}, {"depth", m.depth}, {"width", m.width}});
  }
  fsmd["ir_operators"] = json::array();
  for (const auto& op : point.design.ir_operators) {
    json o;
    o["id"] = op.id;
    o["opcode"] = opcode_name(op.opcode);
    o["operand_widths"] = op.operand_widths;
    o["result_width"] = op.result_width;
    o["state"] = op.state;
    o["inputs"] = json::array();
    for (const auto& r : op.inputs) o["inputs"].push_back(dump_input_ref(r));
    if (!op.mem.empty()) o["mem"] = op.mem;
    fsmd["ir_operators"].push_back(std::move(o));
  }
  fsmd["rtl_operators"] = json::array();
  for (const auto& op : point.design.rtl_operators) {
    fsmd["rtl_operators"].push_back(
        {{"id", op.id}, {"opcode", opcode_name(op.opcode)}, {"ir_ids", op.ir_ids}});
  }
  fsmd["output_ports"] = json::array();
  for (const auto& r : point.design.output_ports) fsmd["output_ports"].push_back(dump_input_ref(r));
  doc["fsmd"] = std::move(fsmd);

  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

bool in_options(int value, const std::vector<int>& options) {
  return std::find(options.begin(), options.end(), value) != options.end();
}

void validate_directives(const DirectiveConfig& d, const PlatformOptions& options,
                         std::vector<std::string>& out) {
  if (d.unroll_factors.empty()) out.push_back("directives: unroll_factors must not be empty");
  if (!in_options(d.array_partition_factor, options.partition_factors)) {
    out.push_back("directives: array_partition_factor " +
                  std::to_string(d.array_partition_factor) + " not in platform option list");
  }
  for (int f : d.unroll_factors) {
    if (!in_options(f, options.unroll_factors)) {
      out.push_back("directives: unroll factor " + std::to_string(f) +
                    " not in platform option list");
    }
  }
  if (d.pipeline_level < 0 || d.pipeline_level > d.loop_depth()) {
    out.push_back("directives: pipeline_level " + std::to_string(d.pipeline_level) +
                  " outside [0, " + std::to_string(d.loop_depth()) + "]");
  }
}

void validate_metrics(const HlsMetrics& m, std::vector<std::string>& out) {
  if (m.lut < 0 || m.ff < 0 || m.dsp < 0 || m.bram < 0) {
    out.push_back("metrics: resource counts must be non-negative");
  }
  if (!(m.clock_period_ns > 0.0) || !std::isfinite(m.clock_period_ns)) {
    out.push_back("metrics: clock_period_ns must be positive and finite");
  }
  if (m.latency_cycles < 1) out.push_back("metrics: latency_cycles must be >= 1");
}

bool valid_width(int w) { return w >= 1 && w <= 64; }

void validate_fsmd(const FsmdDesign& design, std::vector<std::string>& out) {
  if (design.n_states < 1) out.push_back("fsmd: n_states must be >= 1");
  if (design.iterations < 1) out.push_back("fsmd: iterations must be >= 1");

  std::set<std::string> port_names;
  for (const auto& p : design.input_ports) {
    if (!port_names.insert(p.name).second) {
      out.push_back("fsmd: duplicate input port '" + p.name + "'");
    }
    if (!valid_width(p.width)) out.push_back("fsmd: port '" + p.name + "' width outside [1, 64]");
    if (p.is_float && p.width != 32 && p.width != 64) {
      out.push_back("fsmd: float port '" + p.name + "' width must be 32 or 64");
    }
  }

  std::set<std::string> memory_names;
  for (const auto& m : design.memories) {
    if (!memory_names.insert(m.name).second) {
      out.push_back("fsmd: duplicate memory '" + m.name + "'");
    }
    if (m.depth < 1) out.push_back("fsmd: memory '" + m.name + "' depth must be >= 1");
    if (!valid_width(m.width)) out.push_back("fsmd: memory '" + m.name + "' width outside [1, 64]");
  }

  std::unordered_map<std::int64_t, const IrOperator*> ops_by_id;
  for (const auto& op : design.ir_operators) {
    if (!ops_by_id.emplace(op.id, &op).second) {
      out.push_back("fsmd: duplicate ir operator id " + std::to_string(op.id));
    }
  }

  for (const auto& op : design.ir_operators) {
    const std::string where = "ir op " + std::to_string(op.id);
    const auto& entry = opcode_entry(op.opcode);
    const int arity = static_cast<int>(op.inputs.size());
    if (arity < entry.min_arity || (entry.max_arity >= 0 && arity > entry.max_arity)) {
      out.push_back("fsmd: " + where + ": opcode '" + entry.name + "' cannot take " +
                    std::to_string(arity) + " inputs");
    }
    if (op.operand_widths.size() != op.inputs.size()) {
      out.push_back("fsmd: " + where + ": operand_widths and inputs lengths differ");
    }
    for (int w : op.operand_widths) {
      if (!valid_width(w)) out.push_back("fsmd: " + where + ": operand width outside [1, 64]");
    }
    if (!valid_width(op.result_width)) {
      out.push_back("fsmd: " + where + ": result width outside [1, 64]");
    }
    if (op.state < 0 || op.state >= design.n_states) {
      out.push_back("fsmd: " + where + ": state outside [0, n_states)");
    }
    if (op.opcode == Opcode::Icmp || op.opcode == Opcode::Fcmp) {
      if (op.result_width != 1) out.push_back("fsmd: " + where + ": compare result width must be 1");
    }
    if (is_float_opcode(op.opcode)) {
      for (int w : op.operand_widths) {
        if (w != 32 && w != 64) {
          out.push_back("fsmd: " + where + ": float operand width must be 32 or 64");
        }
      }
      if (op.opcode != Opcode::Fcmp && op.result_width != 32 && op.result_width != 64) {
        out.push_back("fsmd: " + where + ": float result width must be 32 or 64");
      }
    }
    if (is_memory_access(op.opcode)) {
      if (op.mem.empty()) {
        out.push_back("fsmd: " + where + ": load/store requires a 'mem' binding");
      } else if (!memory_names.count(op.mem)) {
        out.push_back("fsmd: " + where + ": unknown memory '" + op.mem + "'");
      }
    } else if (!op.mem.empty()) {
      out.push_back("fsmd: " + where + ": 'mem' is only valid on load/store");
    }
    for (const auto& ref : op.inputs) {
      if (const auto* r = std::get_if<OpRef>(&ref)) {
        if (!ops_by_id.count(r->ir_id)) {
          out.push_back("fsmd: " + where + ": input references unknown ir op " +
                        std::to_string(r->ir_id));
        }
      } else if (const auto* p = std::get_if<PortRef>(&ref)) {
        if (!port_names.count(p->name)) {
          out.push_back("fsmd: " + where + ": input references unknown port '" + p->name + "'");
        }
      } else if (const auto* c = std::get_if<ConstRef>(&ref)) {
        if (!std::isfinite(c->value)) out.push_back("fsmd: " + where + ": constant must be finite");
      }
    }
  }

  // cycle check over op->op edges (iterative DFS, three-color)
  {
    enum class Mark : std::uint8_t { White, Grey, Black };
    std::unordered_map<std::int64_t, Mark> marks;
    for (const auto& op : design.ir_operators) marks[op.id] = Mark::White;
    bool cyclic = false;
    for (const auto& root : design.ir_operators) {
      if (cyclic) break;
      if (marks[root.id] != Mark::White) continue;
      std::vector<std::pair<std::int64_t, std::size_t>> stack{{root.id, 0}};
      marks[root.id] = Mark::Grey;
      while (!stack.empty() && !cyclic) {
        auto& [id, edge] = stack.back();
        const IrOperator* op = ops_by_id.count(id) ? ops_by_id.at(id) : nullptr;
        if (!op || edge >= op->inputs.size()) {
          marks[id] = Mark::Black;
          stack.pop_back();
          continue;
        }
        const auto& ref = op->inputs[edge++];
        if (const auto* r = std::get_if<OpRef>(&ref)) {
          auto it = marks.find(r->ir_id);
          if (it == marks.end()) continue;  // dangling, reported above
          if (it->second == Mark::Grey) {
            cyclic = true;
          } else if (it->second == Mark::White) {
            it->second = Mark::Grey;
            stack.push_back({r->ir_id, 0});
          }
        }
      }
    }
    if (cyclic) out.push_back("fsmd: operator input references form a cycle");
  }

  std::unordered_map<std::int64_t, int> ir_coverage;
  std::set<std::int64_t> rtl_ids;
  for (const auto& rtl : design.rtl_operators) {
    const std::string where = "rtl op " + std::to_string(rtl.id);
    if (!rtl_ids.insert(rtl.id).second) {
      out.push_back("fsmd: duplicate rtl operator id " + std::to_string(rtl.id));
    }
    if (rtl.ir_ids.empty()) out.push_back("fsmd: " + where + ": ir_ids must not be empty");
    int shared_arity = -1;
    for (std::int64_t ir_id : rtl.ir_ids) {
      auto it = ops_by_id.find(ir_id);
      if (it == ops_by_id.end()) {
        out.push_back("fsmd: " + where + ": references unknown ir op " + std::to_string(ir_id));
        continue;
      }
      if (it->second->opcode != rtl.opcode) {
        out.push_back("fsmd: " + where + ": shares ir op " + std::to_string(ir_id) +
                      " with a different opcode");
      }
      const int arity = static_cast<int>(it->second->inputs.size());
      if (shared_arity < 0) {
        shared_arity = arity;
      } else if (shared_arity != arity) {
        out.push_back("fsmd: " + where + ": shares ir ops of different input arity");
      }
      ir_coverage[ir_id] += 1;
    }
  }
  for (const auto& op : design.ir_operators) {
    const int n = ir_coverage.count(op.id) ? ir_coverage.at(op.id) : 0;
    if (n != 1) {
      out.push_back("fsmd: ir op " + std::to_string(op.id) + " mapped to " + std::to_string(n) +
                    " rtl operators (expected exactly 1)");
    }
  }

  for (const auto& ref : design.output_ports) {
    if (const auto* r = std::get_if<OpRef>(&ref)) {
      if (!ops_by_id.count(r->ir_id)) {
        out.push_back("fsmd: output references unknown ir op " + std::to_string(r->ir_id));
      }
    } else if (const auto* p = std::get_if<PortRef>(&ref)) {
      if (!port_names.count(p->name)) {
        out.push_back("fsmd: output references unknown port '" + p->name + "'");
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate_design_point(const DesignPoint& point,
                                               const PlatformOptions& options) {
  std::vector<std::string> out;
  if (point.app_name.empty()) out.push_back("app name must not be empty");
  if (point.stimuli_ref.empty()) out.push_back("stimuli reference must not be empty");
  if (point.measured_power_w &&
      !(std::isfinite(*point.measured_power_w) && *point.measured_power_w > 0.0)) {
    out.push_back("measured_power_w must be finite and > 0");
  }
  validate_directives(point.directives, options, out);
  validate_metrics(point.metrics, out);
  validate_fsmd(point.design, out);
  return out;
}

std::vector<std::string> validate_application(const Application& app,
                                              const PlatformOptions& options) {
  std::vector<std::string> out;
  if (app.name.empty()) out.push_back("application name must not be empty");
  if (app.loop_depth < 1) out.push_back("loop_depth must be >= 1");

  auto check_point = [&](const DesignPoint& point, const std::string& label) {
    for (const auto& v : validate_design_point(point, options)) {
      out.push_back(label + ": " + v);
    }
    if (point.app_name != app.name) {
      out.push_back(label + ": app_name '" + point.app_name + "' does not match application '" +
                    app.name + "'");
    }
  };

  check_point(app.base_point, "base_point");
  if (!app.base_point.directives.is_identity()) {
    out.push_back("base_point: directives must be the identity configuration");
  }
  for (std::size_t i = 0; i < app.points.size(); ++i) {
    check_point(app.points[i], "points[" + std::to_string(i) + "]");
  }
  return out;
}

std::map<std::int64_t, std::vector<std::pair<std::int64_t, int>>> back_trace(
    const FsmdDesign& design) {
  std::unordered_map<std::int64_t, int> states;
  states.reserve(design.ir_operators.size());
  for (const auto& op : design.ir_operators) states.emplace(op.id, op.state);

  std::map<std::int64_t, std::vector<std::pair<std::int64_t, int>>> result;
  for (const auto& rtl : design.rtl_operators) {
    auto& list = result[rtl.id];
    for (std::int64_t ir_id : rtl.ir_ids) {
      auto it = states.find(ir_id);
      if (it == states.end()) {
        raise(ErrorKind::DanglingIrReference,
              "rtl op " + std::to_string(rtl.id) + " references undefined ir op " +
                  std::to_string(ir_id));
      }
      list.emplace_back(ir_id, it->second);
    }
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return std::tie(a.second, a.first) < std::tie(b.second, b.first);
    });
  }
  return result;
}

}  // namespace hlpow
