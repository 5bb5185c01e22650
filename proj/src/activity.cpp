#include "hlpow/activity.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "hlpow/errors.hpp"
#include "hlpow/util.hpp"

namespace hlpow {

namespace {

std::uint64_t width_mask(int width) {
  return width >= 64 ? ~0ULL : ((1ULL << width) - 1ULL);
}

}  // namespace

BitVec::BitVec(std::uint64_t value, int w) : bits(value & width_mask(w)), width(w) {}

BitVec BitVec::from_signed(std::int64_t value, int w) {
  return BitVec(static_cast<std::uint64_t>(value), w);
}

BitVec BitVec::from_double(double value, int w) {
  if (w == 32) {
    const float f = static_cast<float>(value);
    std::uint32_t raw;
    std::memcpy(&raw, &f, sizeof(raw));
    return BitVec(raw, 32);
  }
  if (w == 64) {
    std::uint64_t raw;
    std::memcpy(&raw, &value, sizeof(raw));
    return BitVec(raw, 64);
  }
  raise(ErrorKind::WidthMismatch, "float values require width 32 or 64, got " + std::to_string(w));
}

std::int64_t BitVec::as_signed() const {
  if (width >= 64) return static_cast<std::int64_t>(bits);
  const std::uint64_t sign = 1ULL << (width - 1);
  return static_cast<std::int64_t>((bits ^ sign)) - static_cast<std::int64_t>(sign);
}

double BitVec::as_double() const {
  if (width == 32) {
    const std::uint32_t raw = static_cast<std::uint32_t>(bits);
    float f;
    std::memcpy(&f, &raw, sizeof(f));
    return static_cast<double>(f);
  }
  if (width == 64) {
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  raise(ErrorKind::WidthMismatch, "float decode requires width 32 or 64, got " + std::to_string(width));
}

std::string BitVec::to_string() const {
  std::string out(static_cast<std::size_t>(width), '0');
  for (int i = 0; i < width; ++i) {
    if ((bits >> (width - 1 - i)) & 1ULL) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

int hamming(const BitVec& a, const BitVec& b) {
  if (a.width != b.width) {
    raise(ErrorKind::WidthMismatch, "hamming distance of widths " + std::to_string(a.width) +
                                        " and " + std::to_string(b.width));
  }
  return std::popcount(a.bits ^ b.bits);
}

int ValueTrace::max_width() const {
  int w = 0;
  for (const auto& sig : signals) {
    if (!sig.empty()) w = std::max(w, sig.front().width);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Stimuli CSV
// ---------------------------------------------------------------------------

namespace {

const InputPort* find_port(const FsmdDesign& design, const std::string& name) {
  for (const auto& p : design.input_ports) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

BitVec parse_stimulus_value(const std::string& token, const InputPort& port, std::size_t row) {
  const std::string where =
      "stimulus row " + std::to_string(row) + ", port '" + port.name + "'";
  if (token.empty()) raise(ErrorKind::MalformedDocument, where + ": empty value");
  if (port.is_float) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      raise(ErrorKind::MalformedDocument, where + ": bad float '" + token + "'");
    }
    return BitVec::from_double(v, port.width);
  }
  std::int64_t v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    raise(ErrorKind::MalformedDocument, where + ": bad integer '" + token + "'");
  }
  return BitVec::from_signed(v, port.width);
}

}  // namespace

Stimuli parse_stimuli_csv(const std::string& text, const FsmdDesign& design) {
  std::vector<std::string> lines;
  for (auto& line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) raise(ErrorKind::MalformedDocument, "stimulus file is empty");

  const auto header = split(lines.front(), ',');
  std::vector<const InputPort*> ports;
  for (const auto& name : header) {
    const InputPort* port = find_port(design, name);
    if (!port) {
      raise(ErrorKind::InvariantViolation,
            "stimulus column '" + name + "' does not name a design port");
    }
    ports.push_back(port);
  }

  Stimuli stimuli;
  for (const auto* port : ports) stimuli.inputs[port->name] = {};
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto cells = split(lines[row], ',');
    if (cells.size() != ports.size()) {
      raise(ErrorKind::MalformedDocument,
            "stimulus row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                " cells, expected " + std::to_string(ports.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      stimuli.inputs[ports[c]->name].push_back(parse_stimulus_value(cells[c], *ports[c], row));
    }
  }
  if (stimuli.invocations() == 0) {
    raise(ErrorKind::InvariantViolation, "stimulus file has no invocation rows");
  }
  return stimuli;
}

std::string stimuli_to_csv(const Stimuli& stimuli, const FsmdDesign& design) {
  std::string out;
  std::vector<const InputPort*> ports;
  for (const auto& p : design.input_ports) {
    if (!stimuli.inputs.count(p.name)) continue;
    if (!ports.empty()) out += ",";
    out += p.name;
    ports.push_back(&p);
  }
  out += "\n";
  const std::size_t rows = stimuli.invocations();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ports.size(); ++c) {
      if (c > 0) out += ",";
      const BitVec& v = stimuli.inputs.at(ports[c]->name).at(r);
      out += ports[c]->is_float ? format_double(v.as_double()) : std::to_string(v.as_signed());
    }
    out += "\n";
  }
  return out;
}

Stimuli load_stimuli(const std::string& path, const FsmdDesign& design) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoFailure, "cannot open stimulus file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_stimuli_csv(buf.str(), design);
}

// ---------------------------------------------------------------------------
// Trace interpreter
// ---------------------------------------------------------------------------

namespace {

std::uint64_t isqrt_u64(std::uint64_t n) {
  if (n == 0) return 0;
  std::uint64_t x = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  x = std::min<std::uint64_t>(x, 0xFFFFFFFFULL);
  while (x > 0 && x * x > n) --x;
  while (x < 0xFFFFFFFFULL && (x + 1) * (x + 1) <= n) ++x;
  return x;
}

struct CompiledInput {
  enum class Kind { FromOp, FromPort, Constant, Iteration } kind = Kind::Constant;
  std::size_t index = 0;  // value slot (FromOp) or port slot (FromPort)
  BitVec constant;
  int width = 1;
};

struct CompiledOp {
  const IrOperator* ir = nullptr;
  std::vector<CompiledInput> inputs;
  std::size_t value_slot = 0;
  std::size_t rtl_slot = 0;
  int mem_index = -1;
};

BitVec compute(const CompiledOp& cop, const std::vector<BitVec>& operands,
               std::vector<std::vector<std::uint64_t>>& memories,
               const std::vector<const Memory*>& memory_decls) {
  const IrOperator& op = *cop.ir;
  const int rw = op.result_width;

  auto int_result = [&](std::uint64_t raw) { return BitVec(raw, rw); };

  switch (op.opcode) {
    case Opcode::Add:
      return int_result(static_cast<std::uint64_t>(operands[0].as_signed()) +
                        static_cast<std::uint64_t>(operands[1].as_signed()));
    case Opcode::Sub:
      return int_result(static_cast<std::uint64_t>(operands[0].as_signed()) -
                        static_cast<std::uint64_t>(operands[1].as_signed()));
    case Opcode::Mul:
      return int_result(static_cast<std::uint64_t>(operands[0].as_signed()) *
                        static_cast<std::uint64_t>(operands[1].as_signed()));
    case Opcode::Div: {
      const std::int64_t a = operands[0].as_signed();
      const std::int64_t b = operands[1].as_signed();
      if (b == 0) {
        raise(ErrorKind::DivisionByZero, "ir op " + std::to_string(op.id) + " divides by zero");
      }
      if (a == std::numeric_limits<std::int64_t>::min() && b == -1) {
        return int_result(static_cast<std::uint64_t>(a));  // wraps
      }
      return int_result(static_cast<std::uint64_t>(a / b));
    }
    case Opcode::Sqrt:
      return int_result(isqrt_u64(operands[0].as_unsigned()));
    case Opcode::And:
      return int_result(operands[0].bits & operands[1].bits);
    case Opcode::Or:
      return int_result(operands[0].bits | operands[1].bits);
    case Opcode::Xor:
      return int_result(operands[0].bits ^ operands[1].bits);
    case Opcode::Icmp:
      return int_result(operands[0].as_signed() < operands[1].as_signed() ? 1 : 0);
    case Opcode::Fadd:
    case Opcode::Fsub:
    case Opcode::Fmul:
    case Opcode::Fdiv: {
      if (rw == 32) {
        const float a = static_cast<float>(operands[0].as_double());
        const float b = static_cast<float>(operands[1].as_double());
        float r = 0.0f;
        switch (op.opcode) {
          case Opcode::Fadd: r = a + b; break;
          case Opcode::Fsub: r = a - b; break;
          case Opcode::Fmul: r = a * b; break;
          default: r = a / b; break;
        }
        return BitVec::from_double(r, 32);
      }
      const double a = operands[0].as_double();
      const double b = operands[1].as_double();
      double r = 0.0;
      switch (op.opcode) {
        case Opcode::Fadd: r = a + b; break;
        case Opcode::Fsub: r = a - b; break;
        case Opcode::Fmul: r = a * b; break;
        default: r = a / b; break;
      }
      return BitVec::from_double(r, 64);
    }
    case Opcode::Fsqrt: {
      if (rw == 32) {
        return BitVec::from_double(std::sqrt(static_cast<float>(operands[0].as_double())), 32);
      }
      return BitVec::from_double(std::sqrt(operands[0].as_double()), 64);
    }
    case Opcode::Fcmp:
      return int_result(operands[0].as_double() < operands[1].as_double() ? 1 : 0);
    case Opcode::Load: {
      const auto& decl = *memory_decls[static_cast<std::size_t>(cop.mem_index)];
      auto& mem = memories[static_cast<std::size_t>(cop.mem_index)];
      const std::uint64_t addr =
          operands[0].as_unsigned() % static_cast<std::uint64_t>(decl.depth);
      return int_result(mem[addr]);
    }
    case Opcode::Store: {
      const auto& decl = *memory_decls[static_cast<std::size_t>(cop.mem_index)];
      auto& mem = memories[static_cast<std::size_t>(cop.mem_index)];
      const std::uint64_t addr =
          operands[0].as_unsigned() % static_cast<std::uint64_t>(decl.depth);
      const std::uint64_t data = operands[1].bits & ((decl.width >= 64) ? ~0ULL : ((1ULL << decl.width) - 1));
      mem[addr] = data;
      return int_result(data);
    }
    case Opcode::Read:
    case Opcode::Write:
      return int_result(operands[0].bits);
    case Opcode::Mux: {
      const std::size_t n_data = operands.size() - 1;
      const std::size_t pick = static_cast<std::size_t>(operands[0].as_unsigned() % n_data);
      return int_result(operands[1 + pick].bits);
    }
    case Opcode::Select:
      return int_result(operands[0].as_unsigned() != 0 ? operands[1].bits : operands[2].bits);
  }
  raise(ErrorKind::UnsupportedOpcode, "ir op " + std::to_string(op.id));
}

}  // namespace

std::map<std::int64_t, ValueTrace> execute_trace(const FsmdDesign& design,
                                                 const Stimuli& stimuli) {
  // stimuli coverage and width checks
  const std::size_t invocations = stimuli.invocations();
  if (invocations == 0) raise(ErrorKind::InvalidArgument, "stimuli contain no invocations");
  for (const auto& [name, seq] : stimuli.inputs) {
    if (seq.size() != invocations) {
      raise(ErrorKind::InvalidArgument, "stimulus sequences have unequal lengths");
    }
  }
  std::unordered_map<std::string, std::size_t> port_slots;
  for (std::size_t i = 0; i < design.input_ports.size(); ++i) {
    const auto& port = design.input_ports[i];
    auto it = stimuli.inputs.find(port.name);
    if (it == stimuli.inputs.end()) {
      raise(ErrorKind::InvalidArgument, "stimuli do not cover port '" + port.name + "'");
    }
    for (const auto& v : it->second) {
      if (v.width != port.width) {
        raise(ErrorKind::WidthMismatch, "stimulus width " + std::to_string(v.width) +
                                            " for port '" + port.name + "' of width " +
                                            std::to_string(port.width));
      }
    }
    port_slots[port.name] = i;
  }

  std::unordered_map<std::int64_t, std::size_t> op_index;
  for (std::size_t i = 0; i < design.ir_operators.size(); ++i) {
    op_index[design.ir_operators[i].id] = i;
  }
  std::unordered_map<std::string, int> mem_index;
  std::vector<const Memory*> memory_decls;
  for (const auto& m : design.memories) {
    mem_index[m.name] = static_cast<int>(memory_decls.size());
    memory_decls.push_back(&m);
  }

  // Map RTL operators to trace slots and check that shared IR ops agree on
  // signal count; unit signal widths are the max over the sharing IR ops.
  std::unordered_map<std::int64_t, std::size_t> rtl_slot_of_ir;
  std::vector<ValueTrace> traces(design.rtl_operators.size());
  std::vector<std::vector<int>> unit_widths(design.rtl_operators.size());
  for (std::size_t r = 0; r < design.rtl_operators.size(); ++r) {
    const auto& rtl = design.rtl_operators[r];
    traces[r].rtl_id = rtl.id;
    for (std::int64_t ir_id : rtl.ir_ids) {
      auto it = op_index.find(ir_id);
      if (it == op_index.end()) {
        raise(ErrorKind::InvalidArgument,
              "rtl op " + std::to_string(rtl.id) + " references undefined ir op " +
                  std::to_string(ir_id));
      }
      const IrOperator& ir = design.ir_operators[it->second];
      auto& widths = unit_widths[r];
      if (widths.empty()) {
        widths.assign(ir.operand_widths.begin(), ir.operand_widths.end());
        widths.push_back(ir.result_width);
      } else {
        if (widths.size() != ir.operand_widths.size() + 1) {
          raise(ErrorKind::InvalidArgument,
                "rtl op " + std::to_string(rtl.id) + " shares ir ops of different arity");
        }
        for (std::size_t i = 0; i < ir.operand_widths.size(); ++i) {
          widths[i] = std::max(widths[i], ir.operand_widths[i]);
        }
        widths.back() = std::max(widths.back(), ir.result_width);
      }
      rtl_slot_of_ir[ir_id] = r;
    }
    traces[r].signals.resize(unit_widths[r].size());
  }

  // Firing order: Kahn's algorithm with a (state, id) min-priority tie break.
  // For schedule-consistent designs this is exactly state-ascending order.
  std::vector<CompiledOp> order;
  {
    const std::size_t n = design.ir_operators.size();
    std::vector<int> pending(n, 0);
    std::vector<std::vector<std::size_t>> consumers(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& ref : design.ir_operators[i].inputs) {
        if (const auto* r = std::get_if<OpRef>(&ref)) {
          auto it = op_index.find(r->ir_id);
          if (it == op_index.end()) {
            raise(ErrorKind::InvalidArgument, "ir op " + std::to_string(design.ir_operators[i].id) +
                                                  " references undefined ir op " +
                                                  std::to_string(r->ir_id));
          }
          pending[i] += 1;
          consumers[it->second].push_back(i);
        }
      }
    }
    auto priority = [&](std::size_t i) {
      const auto& op = design.ir_operators[i];
      return std::pair<int, std::int64_t>(op.state, op.id);
    };
    auto cmp = [&](std::size_t a, std::size_t b) { return priority(a) > priority(b); };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
    for (std::size_t i = 0; i < n; ++i) {
      if (pending[i] == 0) ready.push(i);
    }
    while (!ready.empty()) {
      const std::size_t i = ready.top();
      ready.pop();
      order.push_back(CompiledOp{&design.ir_operators[i], {}, i, 0, -1});
      for (std::size_t c : consumers[i]) {
        if (--pending[c] == 0) ready.push(c);
      }
    }
    if (order.size() != n) {
      raise(ErrorKind::InvalidArgument, "operator graph contains a cycle");
    }
  }

  for (auto& cop : order) {
    const IrOperator& op = *cop.ir;
    if (is_float_opcode(op.opcode)) {
      for (int w : op.operand_widths) {
        if (w != 32 && w != 64) {
          raise(ErrorKind::UnsupportedOpcode,
                "ir op " + std::to_string(op.id) + ": float width " + std::to_string(w));
        }
      }
      if (op.opcode != Opcode::Fcmp && op.result_width != 32 && op.result_width != 64) {
        raise(ErrorKind::UnsupportedOpcode,
              "ir op " + std::to_string(op.id) + ": float result width " +
                  std::to_string(op.result_width));
      }
    }
    if (op.inputs.size() != op.operand_widths.size()) {
      raise(ErrorKind::InvalidArgument,
            "ir op " + std::to_string(op.id) + ": inputs and operand_widths lengths differ");
    }
    if (is_memory_access(op.opcode)) {
      auto it = mem_index.find(op.mem);
      if (it == mem_index.end()) {
        raise(ErrorKind::InvalidArgument,
              "ir op " + std::to_string(op.id) + ": unknown memory '" + op.mem + "'");
      }
      cop.mem_index = it->second;
    }
    cop.rtl_slot = rtl_slot_of_ir.count(op.id) ? rtl_slot_of_ir.at(op.id) : SIZE_MAX;
    for (std::size_t i = 0; i < op.inputs.size(); ++i) {
      CompiledInput in;
      in.width = op.operand_widths[i];
      const auto& ref = op.inputs[i];
      if (const auto* r = std::get_if<OpRef>(&ref)) {
        in.kind = CompiledInput::Kind::FromOp;
        in.index = op_index.at(r->ir_id);
      } else if (const auto* p = std::get_if<PortRef>(&ref)) {
        auto it = port_slots.find(p->name);
        if (it == port_slots.end()) {
          raise(ErrorKind::InvalidArgument,
                "ir op " + std::to_string(op.id) + ": unknown port '" + p->name + "'");
        }
        in.kind = CompiledInput::Kind::FromPort;
        in.index = it->second;
      } else if (const auto* c = std::get_if<ConstRef>(&ref)) {
        in.kind = CompiledInput::Kind::Constant;
        in.constant = is_float_opcode(op.opcode)
                          ? BitVec::from_double(c->value, in.width)
                          : BitVec::from_signed(static_cast<std::int64_t>(c->value), in.width);
      } else {
        in.kind = CompiledInput::Kind::Iteration;
      }
      cop.inputs.push_back(in);
    }
  }

  std::vector<BitVec> values(design.ir_operators.size());
  std::vector<BitVec> ports(design.input_ports.size());
  std::vector<std::vector<std::uint64_t>> memories;
  for (const auto& m : design.memories) {
    memories.emplace_back(static_cast<std::size_t>(m.depth), 0ULL);
  }
  std::vector<BitVec> operands;

  for (std::size_t inv = 0; inv < invocations; ++inv) {
    for (std::size_t p = 0; p < design.input_ports.size(); ++p) {
      ports[p] = stimuli.inputs.at(design.input_ports[p].name)[inv];
    }
    for (auto& mem : memories) std::fill(mem.begin(), mem.end(), 0ULL);

    for (std::int64_t iter = 0; iter < design.iterations; ++iter) {
      for (const auto& cop : order) {
        operands.clear();
        for (const auto& in : cop.inputs) {
          switch (in.kind) {
            case CompiledInput::Kind::FromOp:
              operands.emplace_back(values[in.index].bits, in.width);
              break;
            case CompiledInput::Kind::FromPort:
              operands.emplace_back(ports[in.index].bits, in.width);
              break;
            case CompiledInput::Kind::Constant:
              operands.push_back(in.constant);
              break;
            case CompiledInput::Kind::Iteration:
              operands.emplace_back(static_cast<std::uint64_t>(iter), in.width);
              break;
          }
        }
        const BitVec result = compute(cop, operands, memories, memory_decls);
        values[cop.value_slot] = result;
        if (cop.rtl_slot != SIZE_MAX) {
          auto& trace = traces[cop.rtl_slot];
          const auto& widths = unit_widths[cop.rtl_slot];
          for (std::size_t s = 0; s + 1 < widths.size(); ++s) {
            trace.signals[s].emplace_back(operands[s].bits, widths[s]);
          }
          trace.signals.back().emplace_back(result.bits, widths.back());
        }
      }
    }
  }

  std::map<std::int64_t, ValueTrace> result;
  for (auto& trace : traces) {
    result.emplace(trace.rtl_id, std::move(trace));
  }
  return result;
}

double switching_activity(const ValueTrace& trace) {
  const std::size_t samples = trace.sample_count();
  const std::size_t m = trace.signal_count();
  if (m == 0 || samples <= 1) return 0.0;
  std::int64_t total = 0;
  for (const auto& sig : trace.signals) {
    for (std::size_t j = 1; j < sig.size(); ++j) {
      total += hamming(sig[j], sig[j - 1]);
    }
  }
  const std::size_t transitions = samples - 1;
  return static_cast<double>(total) / (static_cast<double>(m) * static_cast<double>(transitions));
}

double scaled_activity(double sa, std::int64_t n_op, std::int64_t latency) {
  if (latency < 1) {
    raise(ErrorKind::InvalidLatency, "latency must be >= 1, got " + std::to_string(latency));
  }
  return (static_cast<double>(n_op) / static_cast<double>(latency)) * sa;
}

}  // namespace hlpow
