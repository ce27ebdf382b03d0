#include "egpu/isa.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace egpu {

namespace {

constexpr std::array<OpInfo, kOpcodeCount> kOpTable = {{
    // name      shape                 typed  fp_only snoop
    {"NOP",     OperandShape::NONE,   false, false, false},
    {"ADD",     OperandShape::R3,     true,  false, true},
    {"SUB",     OperandShape::R3,     true,  false, true},
    {"MUL",     OperandShape::R3,     true,  false, true},
    {"AND",     OperandShape::R3,     false, false, true},
    {"OR",      OperandShape::R3,     false, false, true},
    {"XOR",     OperandShape::R3,     false, false, true},
    {"NOT",     OperandShape::R2,     false, false, true},
    {"LSL",     OperandShape::R3,     false, false, true},
    {"LSR",     OperandShape::R3,     false, false, true},
    {"LOD",     OperandShape::MEM,    false, false, false},
    {"STO",     OperandShape::MEM,    false, false, false},
    {"LODI",    OperandShape::IMM,    false, false, false},
    {"TDX",     OperandShape::RD,     false, false, false},
    {"TDY",     OperandShape::RD,     false, false, false},
    {"DOT",     OperandShape::R3,     true,  true,  true},
    {"SUM",     OperandShape::R3,     true,  true,  true},
    {"INVSQR",  OperandShape::R2,     true,  true,  true},
    {"JMP",     OperandShape::TARGET, false, false, false},
    {"JSR",     OperandShape::TARGET, false, false, false},
    {"RTS",     OperandShape::NONE,   false, false, false},
    {"LOOP",    OperandShape::TARGET, false, false, false},
    {"INIT",    OperandShape::COUNT,  false, false, false},
    {"STOP",    OperandShape::NONE,   false, false, false},
}};

bool is_control(Opcode op) {
  switch (op) {
    case Opcode::JMP:
    case Opcode::JSR:
    case Opcode::RTS:
    case Opcode::LOOP:
    case Opcode::INIT:
    case Opcode::STOP:
      return true;
    default:
      return false;
  }
}

}  // namespace

const OpInfo& op_info(Opcode op) {
  return kOpTable[static_cast<std::size_t>(op)];
}

const Opcode* opcode_by_name(const std::string& name) {
  static const std::map<std::string, Opcode> index = [] {
    std::map<std::string, Opcode> m;
    for (int i = 0; i < kOpcodeCount; ++i)
      m.emplace(kOpTable[i].name, static_cast<Opcode>(i));
    return m;
  }();
  auto it = index.find(name);
  return it == index.end() ? nullptr : &it->second;
}

Word encode(const Instruction& in) {
  if (static_cast<unsigned>(in.op) >= kOpcodeCount)
    throw EncodeError("opcode out of range: " +
                      std::to_string(static_cast<unsigned>(in.op)));
  if (static_cast<unsigned>(in.typ) > 2)
    throw EncodeError("type field out of range: " +
                      std::to_string(static_cast<unsigned>(in.typ)));
  if (static_cast<unsigned>(in.var.width) > 3)
    throw EncodeError("width select out of range");
  if (static_cast<unsigned>(in.var.depth) > 3)
    throw EncodeError("depth select out of range");
  if (in.rd > 15) throw EncodeError("rd out of range: " + std::to_string(in.rd));
  if (in.ra > 15) throw EncodeError("ra out of range: " + std::to_string(in.ra));
  if (in.rb > 15) throw EncodeError("rb out of range: " + std::to_string(in.rb));
  if (in.imm > 0x7FFF)
    throw EncodeError("imm out of range: " + std::to_string(in.imm));

  Word w = 0;
  w |= Word{static_cast<unsigned>(in.var.width)} << 38;
  w |= Word{static_cast<unsigned>(in.var.depth)} << 36;
  w |= Word{static_cast<unsigned>(in.op)} << 30;
  w |= Word{static_cast<unsigned>(in.typ)} << 28;
  w |= Word{in.rd} << 24;
  w |= Word{in.ra} << 20;
  w |= Word{in.rb} << 16;
  w |= Word{in.x ? 1u : 0u} << 15;
  w |= Word{in.imm};
  return w;
}

bool try_decode(Word w, Instruction& out, std::string* why) {
  if (w > kWordMask) {
    if (why) *why = "word exceeds 40 bits";
    return false;
  }
  unsigned op = static_cast<unsigned>((w >> 30) & 0x3F);
  if (op >= kOpcodeCount) {
    if (why) *why = "illegal opcode " + std::to_string(op);
    return false;
  }
  unsigned typ = static_cast<unsigned>((w >> 28) & 0x3);
  if (typ == 3) {
    if (why) *why = "illegal type code 3";
    return false;
  }
  out.var.width = static_cast<WidthSel>((w >> 38) & 0x3);
  out.var.depth = static_cast<DepthSel>((w >> 36) & 0x3);
  out.op = static_cast<Opcode>(op);
  out.typ = static_cast<Type>(typ);
  out.rd = static_cast<std::uint8_t>((w >> 24) & 0xF);
  out.ra = static_cast<std::uint8_t>((w >> 20) & 0xF);
  out.rb = static_cast<std::uint8_t>((w >> 16) & 0xF);
  out.x = ((w >> 15) & 0x1) != 0;
  out.imm = static_cast<std::uint16_t>(w & 0x7FFF);
  return true;
}

Instruction decode(Word w) {
  Instruction in;
  std::string why;
  if (!try_decode(w, in, &why)) throw DecodeError(why);
  return in;
}

std::vector<Diagnostic> legality_check(const Instruction& in) {
  std::vector<Diagnostic> diags;
  const OpInfo& info = op_info(in.op);

  if (in.x && !info.snoopable) {
    const char* what =
        (in.op == Opcode::LOD || in.op == Opcode::STO || in.op == Opcode::LODI)
            ? "snooping not defined for memory ops"
            : "snooping not defined for control ops";
    diags.push_back({Severity::ERROR, what});
  }
  if (info.fp_only && in.typ != Type::FP32)
    diags.push_back({Severity::ERROR,
                     std::string(info.name) + " is FP32-only"});
  if (info.shape == OperandShape::R2 && in.rb != 0)
    diags.push_back({Severity::WARNING, "rb ignored"});
  if (info.shape == OperandShape::RD && (in.ra != 0 || in.rb != 0))
    diags.push_back({Severity::WARNING, "ra/rb ignored"});
  if (info.shape == OperandShape::IMM && (in.ra != 0 || in.rb != 0))
    diags.push_back({Severity::WARNING, "ra/rb ignored"});
  if ((info.shape == OperandShape::NONE || info.shape == OperandShape::TARGET ||
       info.shape == OperandShape::COUNT) &&
      (in.rd != 0 || in.ra != 0 || in.rb != 0))
    diags.push_back({Severity::WARNING, "register fields ignored"});
  if (info.shape == OperandShape::MEM && in.rb != 0)
    diags.push_back({Severity::WARNING, "rb ignored"});
  if ((is_control(in.op) || in.op == Opcode::NOP) &&
      in.var != VariableField{})
    diags.push_back({Severity::WARNING, "variable field ignored"});
  return diags;
}

bool has_error(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::ERROR) return true;
  return false;
}

bool is_canonical(const Instruction& in) {
  if (has_error(legality_check(in))) return false;
  const OpInfo& info = op_info(in.op);

  // Fields the canonical text cannot express must be zero.
  switch (info.shape) {
    case OperandShape::NONE:
      if (in.rd || in.ra || in.rb || in.imm || in.x) return false;
      break;
    case OperandShape::R3:
    case OperandShape::R2:
      // R2 with rb != 0 stays canonical: the 3-operand form expresses it.
      if (in.x) {
        if (in.imm & ~0x3FFu) return false;  // only extA/extB in imm
      } else if (in.imm) {
        return false;
      }
      break;
    case OperandShape::RD:
      if (in.ra || in.rb || in.imm || in.x) return false;
      break;
    case OperandShape::MEM:
      if (in.rb || in.x) return false;
      break;
    case OperandShape::IMM:
      if (in.ra || in.rb || in.x) return false;
      break;
    case OperandShape::TARGET:
    case OperandShape::COUNT:
      if (in.rd || in.ra || in.rb || in.x) return false;
      break;
  }

  if (info.fp_only) {
    if (in.typ != Type::FP32) return false;
  } else if (!info.typed && in.typ != Type::INT32) {
    // untyped ops encode type 0
    return false;
  }
  if ((is_control(in.op) || in.op == Opcode::NOP) && in.var != VariableField{})
    return false;
  return true;
}

namespace {

std::string strip_hash_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ImemImage parse_imem_image(const std::string& text, const std::string& origin) {
  ImemImage img;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = trim(strip_hash_comment(line));
    if (body.empty()) continue;
    if (body.rfind("0x", 0) == 0 || body.rfind("0X", 0) == 0)
      body = body.substr(2);
    if (body.size() > 10)
      throw DecodeError(origin + ":" + std::to_string(lineno) +
                        ": word wider than 40 bits");
    Word w = 0;
    for (char c : body) {
      int digit;
      if (c >= '0' && c <= '9') digit = c - '0';
      else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
      else
        throw DecodeError(origin + ":" + std::to_string(lineno) +
                          ": bad hex digit '" + std::string(1, c) + "'");
      w = (w << 4) | static_cast<unsigned>(digit);
    }
    img.words.push_back(w);
  }
  return img;
}

ImemImage read_imem_image(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DecodeError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_imem_image(ss.str(), path);
}

std::string render_imem_image(const ImemImage& img) {
  std::string out;
  char buf[16];
  for (Word w : img.words) {
    std::snprintf(buf, sizeof buf, "%010llx\n",
                  static_cast<unsigned long long>(w & kWordMask));
    out += buf;
  }
  return out;
}

void write_imem_image(const ImemImage& img, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DecodeError("cannot open " + path + " for writing");
  f << render_imem_image(img);
}

}  // namespace egpu
