#include "egpu/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace egpu {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool is_ident(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

struct Cursor {
  const std::string& origin;
  int line;
};

AsmError at(const Cursor& c, const std::string& msg) {
  return AsmError(c.origin + ":" + std::to_string(c.line) + ": " + msg);
}

std::int64_t parse_int(const std::string& tok, const Cursor& c,
                       const char* what) {
  std::string s = tok;
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s = s.substr(1);
  }
  int base = 10;
  if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) {
    base = 16;
    s = s.substr(2);
  }
  if (s.empty()) throw at(c, std::string("bad ") + what + " '" + tok + "'");
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, base);
  if (errno != 0 || end == nullptr || *end != '\0')
    throw at(c, std::string("bad ") + what + " '" + tok + "'");
  return neg ? -v : v;
}

unsigned parse_reg(const std::string& tok, const Cursor& c) {
  std::string s = upper(trim(tok));
  if (s.size() < 2 || s[0] != 'R')
    throw at(c, "expected a register, got '" + tok + "'");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i])))
      throw at(c, "expected a register, got '" + tok + "'");
  if (s.size() > 4)
    throw at(c, "register '" + tok + "' out of range");
  unsigned n = static_cast<unsigned>(std::stoul(s.substr(1)));
  if (n > 15) throw at(c, "register R" + std::to_string(n) + " out of range");
  return n;
}

// Rn or Rn@slot. Returns the register; slot set when '@' is present.
unsigned parse_reg_snoop(const std::string& tok, const Cursor& c, int* slot) {
  std::string s = trim(tok);
  auto pos = s.find('@');
  *slot = -1;
  if (pos == std::string::npos) return parse_reg(s, c);
  std::int64_t v = parse_int(s.substr(pos + 1), c, "snoop slot");
  if (v < 0 || v > 31)
    throw at(c, "snoop slot " + std::to_string(v) + " out of range (0..31)");
  *slot = static_cast<int>(v);
  return parse_reg(s.substr(0, pos), c);
}

std::vector<std::string> split_operands(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

void check_simm(std::int64_t v, const Cursor& c, const char* what) {
  if (v < -16384 || v > 16383)
    throw at(c, std::string(what) + " " + std::to_string(v) +
                    " out of signed 15-bit range (-16384..16383)");
}

struct Stmt {
  int line = 0;
  bool isRaw = false;
  Word raw = 0;
  Instruction in{};
  std::string target;  // unresolved branch label
};

// Parses one statement body (no labels, non-empty) into *out.
void parse_stmt(const std::string& body, const Cursor& c, Stmt* out) {
  std::istringstream ss(body);
  std::string head;
  ss >> head;
  std::string rest = trim(body.substr(head.size() < body.size()
                                          ? body.find(head) + head.size()
                                          : body.size()));

  if (head[0] == '.') {
    if (upper(head) != ".WORD")
      throw at(c, "unknown directive '" + head + "'");
    auto toks = split_operands(rest);
    if (toks.size() != 1) throw at(c, ".word takes one value");
    std::int64_t v = parse_int(toks[0], c, "word value");
    if (v < 0 || static_cast<Word>(v) > kWordMask)
      throw at(c, ".word value out of 40-bit range");
    out->isRaw = true;
    out->raw = static_cast<Word>(v);
    return;
  }

  // Mnemonic plus dot-separated suffixes.
  std::vector<std::string> parts;
  {
    std::string cur;
    for (char ch : head) {
      if (ch == '.') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    parts.push_back(cur);
  }
  std::string name = upper(parts[0]);
  const Opcode* op = opcode_by_name(name);
  if (!op) throw at(c, "unknown instruction '" + parts[0] + "'");
  const OpInfo& info = op_info(*op);

  Instruction in{};
  in.op = *op;
  bool sawType = false;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    std::string sfx = upper(parts[i]);
    if (sfx == "INT32" || sfx == "UINT32" || sfx == "FP32") {
      if (sawType) throw at(c, "duplicate type suffix '." + parts[i] + "'");
      sawType = true;
      in.typ = sfx == "INT32" ? Type::INT32
                              : sfx == "UINT32" ? Type::UINT32 : Type::FP32;
    } else if (sfx == "W16") in.var.width = WidthSel::FULL;
    else if (sfx == "W8") in.var.width = WidthSel::HALF;
    else if (sfx == "W4") in.var.width = WidthSel::QUARTER;
    else if (sfx == "W1") in.var.width = WidthSel::SINGLE;
    else if (sfx == "D32") in.var.depth = DepthSel::FULL;
    else if (sfx == "D16") in.var.depth = DepthSel::HALF;
    else if (sfx == "D8") in.var.depth = DepthSel::QUARTER;
    else if (sfx == "D1") in.var.depth = DepthSel::SINGLE;
    else if (sfx == "X") in.x = true;
    else throw at(c, "unknown suffix '." + parts[i] + "'");
  }
  if (!sawType) {
    if (info.fp_only) in.typ = Type::FP32;
    else if (info.typed)
      throw at(c, name + " needs a type suffix (.INT32/.UINT32/.FP32)");
  }

  auto require_x_slots = [&](int slotA, int slotB) {
    if (!in.x) {
      if (slotA >= 0 || slotB >= 0)
        throw at(c, "Rn@slot operands require the .X suffix");
      return;
    }
    if (slotA < 0)
      throw at(c, "with .X, source registers take the form Rn@slot");
    in.imm = static_cast<std::uint16_t>(slotA | ((slotB < 0 ? 0 : slotB) << 5));
  };

  switch (info.shape) {
    case OperandShape::NONE: {
      if (!rest.empty()) throw at(c, name + " takes no operands");
      break;
    }
    case OperandShape::RD: {
      auto toks = split_operands(rest);
      if (toks.size() != 1)
        throw at(c, name + " takes one destination register");
      in.rd = static_cast<std::uint8_t>(parse_reg(toks[0], c));
      break;
    }
    case OperandShape::R3: {
      auto toks = split_operands(rest);
      if (toks.size() != 3)
        throw at(c, name + " takes 3 operands, got " +
                        std::to_string(toks.size()));
      int sa = -1, sb = -1;
      in.rd = static_cast<std::uint8_t>(parse_reg(toks[0], c));
      in.ra = static_cast<std::uint8_t>(parse_reg_snoop(toks[1], c, &sa));
      in.rb = static_cast<std::uint8_t>(parse_reg_snoop(toks[2], c, &sb));
      if (in.x && sb < 0)
        throw at(c, "with .X, source registers take the form Rn@slot");
      require_x_slots(sa, sb);
      break;
    }
    case OperandShape::R2: {
      auto toks = split_operands(rest);
      if (toks.size() != 2 && toks.size() != 3)
        throw at(c, name + " takes 2 operands, got " +
                        std::to_string(toks.size()));
      int sa = -1, sb = -1;
      in.rd = static_cast<std::uint8_t>(parse_reg(toks[0], c));
      in.ra = static_cast<std::uint8_t>(parse_reg_snoop(toks[1], c, &sa));
      if (toks.size() == 3)
        in.rb = static_cast<std::uint8_t>(parse_reg_snoop(toks[2], c, &sb));
      require_x_slots(sa, sb);
      break;
    }
    case OperandShape::MEM: {
      auto split = rest.find_first_of(", \t");
      if (split == std::string::npos)
        throw at(c, name + " takes a register and a memory operand");
      in.rd = static_cast<std::uint8_t>(parse_reg(rest.substr(0, split), c));
      std::string mem = strip_spaces(rest.substr(split));
      if (!mem.empty() && mem[0] == ',') mem = mem.substr(1);
      if (mem.empty())
        throw at(c, name + " takes a register and a memory operand");
      if (mem[0] == '#') {
        if (in.op != Opcode::LOD)
          throw at(c, name + " does not take an immediate");
        in.op = Opcode::LODI;  // LOD Rd,#k is the immediate load
        std::int64_t v = parse_int(mem.substr(1), c, "immediate");
        check_simm(v, c, "immediate");
        in.imm = static_cast<std::uint16_t>(v & 0x7FFF);
        break;
      }
      if (mem[0] != '(')
        throw at(c, "bad memory operand '" + mem + "'");
      auto close = mem.find(')');
      if (close == std::string::npos)
        throw at(c, "bad memory operand '" + mem + "'");
      in.ra = static_cast<std::uint8_t>(
          parse_reg(mem.substr(1, close - 1), c));
      std::string off = mem.substr(close + 1);
      if (!off.empty()) {
        if (off[0] != '+' && off[0] != '-')
          throw at(c, "bad address offset '" + off + "'");
        std::int64_t v = parse_int(off, c, "address offset");
        check_simm(v, c, "address offset");
        in.imm = static_cast<std::uint16_t>(v & 0x7FFF);
      }
      break;
    }
    case OperandShape::IMM: {
      auto toks = split_operands(rest);
      if (toks.size() != 2)
        throw at(c, name + " takes a register and an immediate");
      in.rd = static_cast<std::uint8_t>(parse_reg(toks[0], c));
      std::string imm = toks[1];
      if (!imm.empty() && imm[0] == '#') imm = imm.substr(1);
      std::int64_t v = parse_int(imm, c, "immediate");
      check_simm(v, c, "immediate");
      in.imm = static_cast<std::uint16_t>(v & 0x7FFF);
      break;
    }
    case OperandShape::TARGET: {
      auto toks = split_operands(rest);
      if (toks.size() != 1) throw at(c, name + " takes one target");
      if (is_ident(toks[0])) {
        out->target = toks[0];
      } else {
        std::int64_t v = parse_int(toks[0], c, "branch target");
        if (v < 0 || v > 0x7FFF)
          throw at(c, "branch target " + std::to_string(v) +
                          " out of range (0..32767)");
        in.imm = static_cast<std::uint16_t>(v);
      }
      break;
    }
    case OperandShape::COUNT: {
      auto toks = split_operands(rest);
      if (toks.size() != 1) throw at(c, name + " takes one count");
      std::string imm = toks[0];
      if (!imm.empty() && imm[0] == '#') imm = imm.substr(1);
      std::int64_t v = parse_int(imm, c, "loop count");
      if (v < 0 || v > 0x7FFF)
        throw at(c, "loop count " + std::to_string(v) +
                        " out of range (0..32767)");
      in.imm = static_cast<std::uint16_t>(v);
      break;
    }
  }
  out->in = in;
}

}  // namespace

ImemImage assemble(const std::string& source, const std::string& origin,
                   std::vector<std::string>* warnings) {
  std::vector<Stmt> stmts;
  std::map<std::string, std::uint32_t> labels;
  std::map<std::string, int> labelLines;

  std::istringstream in(source);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    Cursor c{origin, lineno};
    auto comment = line.find("//");
    if (comment != std::string::npos) line = line.substr(0, comment);

    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto semi = line.find(';', pos);
      std::string frag = trim(semi == std::string::npos
                                  ? line.substr(pos)
                                  : line.substr(pos, semi - pos));
      pos = semi == std::string::npos ? line.size() + 1 : semi + 1;

      // Leading labels.
      while (!frag.empty()) {
        auto colon = frag.find(':');
        if (colon == std::string::npos) break;
        std::string name = trim(frag.substr(0, colon));
        if (!is_ident(name)) throw at(c, "bad label '" + name + "'");
        if (labels.count(name))
          throw at(c, "label '" + name + "' already defined on line " +
                          std::to_string(labelLines[name]));
        labels[name] = static_cast<std::uint32_t>(stmts.size());
        labelLines[name] = lineno;
        frag = trim(frag.substr(colon + 1));
      }
      if (frag.empty()) continue;

      Stmt s;
      s.line = lineno;
      parse_stmt(frag, c, &s);
      stmts.push_back(std::move(s));
    }
  }

  ImemImage img;
  img.symbols = labels;
  img.words.reserve(stmts.size());
  for (auto& s : stmts) {
    Cursor c{origin, s.line};
    if (s.isRaw) {
      img.words.push_back(s.raw);
      continue;
    }
    if (!s.target.empty()) {
      auto it = labels.find(s.target);
      if (it == labels.end())
        throw at(c, "undefined label '" + s.target + "'");
      s.in.imm = static_cast<std::uint16_t>(it->second);
    }
    for (const auto& d : legality_check(s.in)) {
      if (d.severity == Severity::ERROR) throw at(c, d.message);
      if (warnings)
        warnings->push_back(origin + ":" + std::to_string(s.line) +
                            ": warning: " + d.message);
    }
    try {
      img.words.push_back(encode(s.in));
    } catch (const EncodeError& e) {
      throw at(c, e.what());
    }
  }
  return img;
}

ImemImage assemble_file(const std::string& path,
                        std::vector<std::string>* warnings) {
  std::ifstream f(path);
  if (!f) throw AsmError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return assemble(ss.str(), path, warnings);
}

std::string canonical_text(const Instruction& in) {
  const OpInfo& info = op_info(in.op);
  std::string t = info.name;

  // Arithmetic and logic spell the type out; everything else implies it.
  if (in.op >= Opcode::ADD && in.op <= Opcode::LSR)
    t += in.typ == Type::INT32 ? ".INT32"
                               : in.typ == Type::UINT32 ? ".UINT32" : ".FP32";
  switch (in.var.width) {
    case WidthSel::FULL: break;
    case WidthSel::HALF: t += ".W8"; break;
    case WidthSel::QUARTER: t += ".W4"; break;
    case WidthSel::SINGLE: t += ".W1"; break;
  }
  switch (in.var.depth) {
    case DepthSel::FULL: break;
    case DepthSel::HALF: t += ".D16"; break;
    case DepthSel::QUARTER: t += ".D8"; break;
    case DepthSel::SINGLE: t += ".D1"; break;
  }
  if (in.x) t += ".X";

  char buf[64];
  auto src = [&](unsigned reg, int slot) {
    if (in.x)
      std::snprintf(buf, sizeof buf, "R%u@%d", reg, slot);
    else
      std::snprintf(buf, sizeof buf, "R%u", reg);
    return std::string(buf);
  };

  switch (info.shape) {
    case OperandShape::NONE:
      break;
    case OperandShape::RD:
      t += " R" + std::to_string(in.rd);
      break;
    case OperandShape::R3:
      t += " R" + std::to_string(in.rd) + "," + src(in.ra, in.ext_a()) + "," +
           src(in.rb, in.ext_b());
      break;
    case OperandShape::R2:
      t += " R" + std::to_string(in.rd) + "," + src(in.ra, in.ext_a());
      if (in.rb != 0 || (in.x && in.ext_b() != 0))
        t += "," + src(in.rb, in.ext_b());
      break;
    case OperandShape::MEM: {
      std::int32_t off = in.simm();
      t += " R" + std::to_string(in.rd) + ",(R" + std::to_string(in.ra) + ")";
      if (off > 0) t += "+" + std::to_string(off);
      if (off < 0) t += std::to_string(off);
      break;
    }
    case OperandShape::IMM:
      t += " R" + std::to_string(in.rd) + ",#" + std::to_string(in.simm());
      break;
    case OperandShape::TARGET:
    case OperandShape::COUNT:
      t += " " + std::to_string(in.imm);
      break;
  }
  return t;
}

std::string disassemble_word(Word w) {
  char buf[96];
  Instruction in;
  std::string why;
  if (!try_decode(w, in, &why)) {
    std::snprintf(buf, sizeof buf, ".word 0x%010llx // %s",
                  static_cast<unsigned long long>(w & kWordMask), why.c_str());
    return buf;
  }
  if (!is_canonical(in)) {
    std::string reason = "non-canonical encoding";
    for (const auto& d : legality_check(in))
      if (d.severity == Severity::ERROR) {
        reason = d.message;
        break;
      }
    std::snprintf(buf, sizeof buf, ".word 0x%010llx // %s",
                  static_cast<unsigned long long>(w & kWordMask),
                  reason.c_str());
    return buf;
  }
  return canonical_text(in) + ";";
}

std::string disassemble(const ImemImage& img) {
  std::string out;
  for (Word w : img.words) {
    out += disassemble_word(w);
    out += '\n';
  }
  return out;
}

std::string render_symbols(const ImemImage& img) {
  std::string out;
  for (const auto& [name, addr] : img.symbols)
    out += name + "\t" + std::to_string(addr) + "\n";
  return out;
}

std::vector<LintFinding> lint_hazards(const ImemImage& img,
                                      const ThreadConfig& cfg,
                                      const LatencyModel& lat,
                                      std::uint64_t maxCycles) {
  validate(cfg);
  std::uint32_t depth = kDefaultImemDepth;
  std::uint32_t need = img.base + static_cast<std::uint32_t>(img.size());
  if (need > depth) depth = need;

  MachineState m(kDefaultSharedDepth, depth);
  m.reset(cfg);
  m.load_imem(img);

  EngineOptions opt;
  opt.mode = HazardMode::WARN;
  opt.latency = lat;
  opt.fragmentMode = true;
  Engine eng(m, opt);
  ExecReport rep = eng.run(maxCycles);

  std::vector<LintFinding> out;
  out.reserve(rep.hazards.size());
  for (const auto& h : rep.hazards)
    out.push_back({h.writerAddr, h.readerAddr, h.deficit, h.occurrences});
  std::sort(out.begin(), out.end(), [](const LintFinding& a,
                                       const LintFinding& b) {
    if (a.readerAddr != b.readerAddr) return a.readerAddr < b.readerAddr;
    return a.writerAddr < b.writerAddr;
  });
  return out;
}

std::string render_lint(const std::vector<LintFinding>& findings) {
  std::string out;
  char buf[160];
  for (const auto& f : findings) {
    std::snprintf(buf, sizeof buf,
                  "RAW: instruction %u reads the result of instruction %u too "
                  "early; insert %llu NOP(s) (%llu stale read(s))\n",
                  f.readerAddr, f.writerAddr,
                  static_cast<unsigned long long>(f.deficit),
                  static_cast<unsigned long long>(f.occurrences));
    out += buf;
  }
  return out;
}

}  // namespace egpu
