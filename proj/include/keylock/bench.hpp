#pragma once

// ISCAS-style BENCH reader and writer.

#include "error.hpp"
#include "netlist.hpp"

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace keylock {

inline constexpr std::string_view key_input_prefix = "keyinput";

namespace detail {

inline std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline bool iequals(std::string_view a, std::string_view b)
{
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) == std::toupper(static_cast<unsigned char>(y));
         });
}

struct BenchLine {
  enum class Kind { input, output, gate, constant } kind;
  std::size_t line = 0;
  std::string target;
  std::string function;
  std::vector<std::string> args;
};

inline std::vector<std::string> split_args(std::string_view body, std::size_t line)
{
  std::vector<std::string> args;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    if (comma == std::string_view::npos) comma = body.size();
    auto arg = trim(body.substr(start, comma - start));
    if (arg.empty()) {
      if (body.find_first_not_of(" \t") == std::string_view::npos) break;
      throw ParseError(ErrorCode::arity_mismatch, line, "empty gate argument");
    }
    args.emplace_back(arg);
    start = comma + 1;
  }
  return args;
}

inline BenchLine parse_line(std::string_view text, std::size_t line)
{
  BenchLine result;
  result.line = line;
  const auto eq = text.find('=');
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (eq == std::string_view::npos) {
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
      throw ParseError(ErrorCode::unknown_gate, line, "cannot parse '" + std::string(text) + "'");
    }
    const auto head = trim(text.substr(0, open));
    const auto name = trim(text.substr(open + 1, close - open - 1));
    if (iequals(head, "INPUT")) {
      result.kind = BenchLine::Kind::input;
    } else if (iequals(head, "OUTPUT")) {
      result.kind = BenchLine::Kind::output;
    } else {
      throw ParseError(ErrorCode::unknown_gate, line, "unknown declaration '" + std::string(head) + "'");
    }
    if (name.empty()) throw ParseError(ErrorCode::undeclared_net, line, "empty net name");
    result.target = std::string(name);
    return result;
  }
  result.target = std::string(trim(text.substr(0, eq)));
  if (result.target.empty()) throw ParseError(ErrorCode::undeclared_net, line, "missing assignment target");
  const auto rhs = trim(text.substr(eq + 1));
  const auto rhs_open = rhs.find('(');
  if (rhs_open == std::string_view::npos) {
    if (iequals(rhs, "CONST0") || iequals(rhs, "CONST1") || iequals(rhs, "gnd") || iequals(rhs, "vdd")) {
      result.kind = BenchLine::Kind::constant;
      result.function = (iequals(rhs, "CONST1") || iequals(rhs, "vdd")) ? "1" : "0";
      return result;
    }
    throw ParseError(ErrorCode::unknown_gate, line, "unknown gate '" + std::string(rhs) + "'");
  }
  const auto rhs_close = rhs.rfind(')');
  if (rhs_close == std::string_view::npos || rhs_close < rhs_open) {
    throw ParseError(ErrorCode::unknown_gate, line, "unbalanced parentheses");
  }
  result.kind = BenchLine::Kind::gate;
  result.function = std::string(trim(rhs.substr(0, rhs_open)));
  result.args = split_args(rhs.substr(rhs_open + 1, rhs_close - rhs_open - 1), line);
  return result;
}

} // namespace detail

/// Parses BENCH text. Multi-input gates become left-associated chains of 2-input gates.
/// Inputs whose name starts with "keyinput" become key inputs.
inline Netlist parse_bench(std::string_view text)
{
  using detail::BenchLine;
  std::vector<BenchLine> lines;
  {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      auto raw = text.substr(pos, end - pos);
      if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      raw = detail::trim(raw);
      if (!raw.empty()) lines.push_back(detail::parse_line(raw, line_no));
      pos = end + 1;
    }
  }

  Netlist n;
  auto declare = [&](const BenchLine& l, NetKind kind, bool value = false) {
    if (n.find(l.target)) {
      throw ParseError(ErrorCode::duplicate_driver, l.line, "net '" + l.target + "' is driven twice");
    }
    n.add_net(l.target, kind, value);
  };

  for (const auto& l : lines) {
    if (l.kind != BenchLine::Kind::input) continue;
    const bool is_key = l.target.starts_with(key_input_prefix);
    declare(l, is_key ? NetKind::key_input : NetKind::primary_input);
  }
  for (const auto& l : lines) {
    if (l.kind == BenchLine::Kind::constant) declare(l, NetKind::constant, l.function == "1");
    if (l.kind == BenchLine::Kind::gate) declare(l, NetKind::internal);
  }

  auto resolve = [&](const std::string& name, std::size_t line) {
    const auto id = n.find(name);
    if (!id) throw ParseError(ErrorCode::undeclared_net, line, "net '" + name + "' is not declared");
    return *id;
  };

  for (const auto& l : lines) {
    if (l.kind != BenchLine::Kind::gate) continue;
    const auto type = gate_type_from_string(l.function);
    if (!type) throw ParseError(ErrorCode::unknown_gate, l.line, "unknown gate '" + l.function + "'");
    std::vector<NetId> ins;
    ins.reserve(l.args.size());
    for (const auto& a : l.args) ins.push_back(resolve(a, l.line));
    const NetId out = *n.find(l.target);

    const auto want = arity(*type);
    if (!is_binary(*type) || ins.size() == 2) {
      if (ins.size() != want) {
        throw ParseError(ErrorCode::arity_mismatch, l.line,
                         l.function + " expects " + std::to_string(want) + " inputs, got " + std::to_string(ins.size()));
      }
      n.add_gate(*type, std::move(ins), out);
      continue;
    }
    if (ins.size() < 2) {
      throw ParseError(ErrorCode::arity_mismatch, l.line, l.function + " needs at least 2 inputs");
    }
    // Chain: the associative core accumulates, the final gate applies any output inversion.
    GateType core = *type;
    if (*type == GateType::NAND) core = GateType::AND;
    if (*type == GateType::NOR) core = GateType::OR;
    if (*type == GateType::XNOR) core = GateType::XOR;
    NetId acc = ins[0];
    for (std::size_t i = 1; i + 1 < ins.size(); ++i) {
      acc = n.add_gate_net(core, {acc, ins[i]}, l.target + "_c" + std::to_string(i));
    }
    n.add_gate(*type, {acc, ins.back()}, out);
  }

  for (const auto& l : lines) {
    if (l.kind == BenchLine::Kind::output) n.add_output(resolve(l.target, l.line));
  }

  n.set_cyclic_allowed(!n.is_acyclic());
  try {
    n.validate();
  } catch (const Error& e) {
    // Attribute undriven nets to the first line that mentions them.
    for (const auto& l : lines) {
      for (const auto& a : l.args) {
        const auto id = *n.find(a);
        if (n.net(id).kind == NetKind::internal && n.driver(id) == no_gate) {
          throw ParseError(ErrorCode::undeclared_net, l.line, "net '" + a + "' is never driven");
        }
      }
    }
    throw;
  }
  return n;
}

/// Emits BENCH text: inputs, key inputs, outputs, constants, then gates in topological
/// order (declaration order if the netlist is cyclic). Outputs aliasing an input are
/// emitted through a BUF.
inline std::string write_bench(const Netlist& n)
{
  std::ostringstream out;
  out << "# " << n.primary_inputs().size() << " inputs, " << n.key_inputs().size() << " key inputs, "
      << n.primary_outputs().size() << " outputs, " << n.num_gates() << " gates\n";
  for (NetId pi : n.primary_inputs()) out << "INPUT(" << n.net(pi).name << ")\n";
  for (NetId k : n.key_inputs()) out << "INPUT(" << n.net(k).name << ")\n";

  std::vector<std::string> alias_lines;
  std::vector<std::string> used_names;
  auto taken = [&](const std::string& s) {
    return n.find(s).has_value() || std::find(used_names.begin(), used_names.end(), s) != used_names.end();
  };
  for (NetId po : n.primary_outputs()) {
    const auto& net = n.net(po);
    if (net.kind == NetKind::primary_input || net.kind == NetKind::key_input) {
      std::string name = net.name + "_po";
      for (int i = 1; taken(name); ++i) name = net.name + "_po" + std::to_string(i);
      used_names.push_back(name);
      out << "OUTPUT(" << name << ")\n";
      alias_lines.push_back(name + " = BUF(" + net.name + ")");
    } else {
      out << "OUTPUT(" << net.name << ")\n";
    }
  }
  for (const auto& net : n.nets()) {
    if (net.kind == NetKind::constant) out << net.name << " = " << (net.constant_value ? "CONST1" : "CONST0") << "\n";
  }
  std::vector<GateId> order;
  if (auto topo = n.try_topological_order()) {
    order = std::move(*topo);
  } else {
    order.resize(n.num_gates());
    for (GateId g = 0; g < order.size(); ++g) order[g] = g;
  }
  for (GateId g : order) {
    const auto& gate = n.gate(g);
    out << n.net(gate.output).name << " = " << to_string(gate.type) << "(";
    for (std::size_t i = 0; i < gate.inputs.size(); ++i) {
      if (i) out << ", ";
      out << n.net(gate.inputs[i]).name;
    }
    out << ")\n";
  }
  for (const auto& l : alias_lines) out << l << "\n";
  return out.str();
}

} // namespace keylock
