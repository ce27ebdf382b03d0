#ifndef EGPU_ISA_HPP
#define EGPU_ISA_HPP

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace egpu {

// One instruction word is 40 bits, packed big-field-first:
//   [39:38] width select   [37:36] depth select
//   [35:30] opcode         [29:28] type
//   [27:24] rd   [23:20] ra   [19:16] rb
//   [15]    x (register snoop enable)
//   [14:0]  imm (signed offset/immediate, absolute branch target,
//           or snoop extensions extA=imm[4:0], extB=imm[9:5] when x=1)
using Word = std::uint64_t;

inline constexpr Word kWordMask = (Word{1} << 40) - 1;

enum class Opcode : std::uint8_t {
  NOP = 0,
  ADD = 1,
  SUB = 2,
  MUL = 3,
  AND = 4,
  OR = 5,
  XOR = 6,
  NOT = 7,
  LSL = 8,
  LSR = 9,
  LOD = 10,
  STO = 11,
  LODI = 12,
  TDX = 13,
  TDY = 14,
  DOT = 15,
  SUM = 16,
  INVSQR = 17,
  JMP = 18,
  JSR = 19,
  RTS = 20,
  LOOP = 21,
  INIT = 22,
  STOP = 23,
};
inline constexpr int kOpcodeCount = 24;

enum class Type : std::uint8_t {
  INT32 = 0,
  UINT32 = 1,
  FP32 = 2,
  // code 3 is illegal
};

enum class WidthSel : std::uint8_t {
  FULL = 0,     // 16 lanes
  HALF = 1,     // 8 lanes
  QUARTER = 2,  // 4 lanes
  SINGLE = 3,   // 1 lane
};

enum class DepthSel : std::uint8_t {
  FULL = 0,     // all wavefronts of the thread block
  HALF = 1,     // half of them (at least 1)
  QUARTER = 2,  // quarter of them (at least 1)
  SINGLE = 3,   // exactly 1 wavefront
};

struct VariableField {
  WidthSel width = WidthSel::FULL;
  DepthSel depth = DepthSel::FULL;
  bool operator==(const VariableField&) const = default;
};

inline constexpr int active_lanes(WidthSel w) {
  constexpr int lanes[4] = {16, 8, 4, 1};
  return lanes[static_cast<int>(w)];
}

struct Instruction {
  VariableField var{};
  Opcode op = Opcode::NOP;
  Type typ = Type::INT32;
  std::uint8_t rd = 0;
  std::uint8_t ra = 0;
  std::uint8_t rb = 0;
  bool x = false;
  std::uint16_t imm = 0;  // raw 15-bit field

  bool operator==(const Instruction&) const = default;

  // Signed view of imm (15-bit two's complement).
  std::int32_t simm() const {
    return (imm & 0x4000) ? static_cast<std::int32_t>(imm) - 0x8000
                          : static_cast<std::int32_t>(imm);
  }
  // Snoop extensions, meaningful when x=1.
  std::uint8_t ext_a() const { return imm & 0x1F; }
  std::uint8_t ext_b() const { return (imm >> 5) & 0x1F; }
};

// Operand shape drives assembly syntax and canonical disassembly.
enum class OperandShape : std::uint8_t {
  NONE,     // NOP, RTS, STOP
  R3,       // Rd,Ra,Rb
  R2,       // Rd,Ra (rb ignored; 3-operand form also accepted)
  RD,       // Rd
  MEM,      // Rd,(Ra)+k
  IMM,      // Rd,#k
  TARGET,   // label or absolute address
  COUNT,    // loop count
};

struct OpInfo {
  const char* name;
  OperandShape shape;
  bool typed;      // carries a meaningful .INT32/.UINT32/.FP32 suffix
  bool fp_only;    // type must be FP32
  bool snoopable;  // x=1 permitted
};

// Indexed by opcode value.
const OpInfo& op_info(Opcode op);
// Returns nullptr for unknown mnemonics.
const Opcode* opcode_by_name(const std::string& name);

struct EncodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Packs fields into a 40-bit word. Throws EncodeError naming the first
// out-of-range field.
Word encode(const Instruction& in);

// Unpacks any 40-bit word. Throws DecodeError for opcode >= 24, type == 3,
// or a word wider than 40 bits.
Instruction decode(Word w);
bool try_decode(Word w, Instruction& out, std::string* why = nullptr);

enum class Severity : std::uint8_t { WARNING, ERROR };

struct Diagnostic {
  Severity severity;
  std::string message;
};

// Structural checks beyond field ranges: snoop on non-snoopable opcodes,
// non-FP32 type on the FP32-only extension ops, ignored-field warnings.
std::vector<Diagnostic> legality_check(const Instruction& in);
bool has_error(const std::vector<Diagnostic>& diags);

// True when the word re-emerges bit-identically from its canonical assembly
// text: no error diagnostics and every field the text cannot express is zero.
bool is_canonical(const Instruction& in);

struct ImemImage {
  std::uint32_t base = 0;
  std::vector<Word> words;
  std::map<std::string, std::uint32_t> symbols;

  std::size_t size() const { return words.size(); }
};

// I-MEM image file: one 10-hex-digit word per line, '#' comments, blank
// lines ignored. Addresses are implied by line order starting at base 0.
ImemImage read_imem_image(const std::string& path);
void write_imem_image(const ImemImage& img, const std::string& path);
std::string render_imem_image(const ImemImage& img);
ImemImage parse_imem_image(const std::string& text, const std::string& origin);

}  // namespace egpu

#endif
