#ifndef EGPU_ASSEMBLER_HPP
#define EGPU_ASSEMBLER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "egpu/isa.hpp"
#include "egpu/machine.hpp"
#include "egpu/sim.hpp"

namespace egpu {

struct AsmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two-pass assembler.
//
// Line grammar, one or more statements per line:
//   [label:] [MNEMONIC[.SUFFIX]... [operands]] [;]   [// comment]
//
// Suffixes, any order: a type (.INT32/.UINT32/.FP32), a wavefront width
// (.W16/.W8/.W4/.W1), a thread-block depth (.D32/.D16/.D8/.D1), and .X for
// register snooping (sources then take the form Rn@slot). ADD/SUB/MUL need an
// explicit type; logic ops default to .INT32; DOT/SUM/INVSQR imply .FP32.
// Memory operands are (Ra), (Ra)+k, (Ra)-k; immediates are #k; branch targets
// are labels or absolute addresses; `.word 0x...` embeds a raw 40-bit word.
// `LOD Rd,#k` is accepted as an alias for LODI.
//
// Warnings (ignored-field diagnostics and the like) are appended to
// *warnings as "origin:line: text" when the pointer is non-null.
ImemImage assemble(const std::string& source,
                   const std::string& origin = "<input>",
                   std::vector<std::string>* warnings = nullptr);

ImemImage assemble_file(const std::string& path,
                        std::vector<std::string>* warnings = nullptr);

// Canonical text for one instruction, without the trailing ';'. The
// instruction must satisfy is_canonical().
std::string canonical_text(const Instruction& in);

// One source line per word: canonical text followed by ';' when the word
// decodes to a canonical instruction, otherwise a `.word 0x... // reason`
// escape. Reassembling the result reproduces the image bit for bit.
std::string disassemble(const ImemImage& img);
std::string disassemble_word(Word w);

// Symbol sidecar: "name<TAB>address" per line, sorted by name.
std::string render_symbols(const ImemImage& img);

// One stale register read collapsed per writer/reader instruction pair,
// with the largest observed NOP shortfall.
struct LintFinding {
  std::uint32_t writerAddr = 0;
  std::uint32_t readerAddr = 0;
  std::uint64_t deficit = 0;
  std::uint64_t occurrences = 0;
};

// Executes the program in fragment mode (off-end pc and bare RTS halt
// cleanly, data addresses wrap) and reports every RAW hazard the run
// exposes. Control flow in this ISA is data-independent, so the findings
// cover exactly the paths the program can take under cfg.
std::vector<LintFinding> lint_hazards(const ImemImage& img,
                                      const ThreadConfig& cfg,
                                      const LatencyModel& lat = {},
                                      std::uint64_t maxCycles = 1000000);

std::string render_lint(const std::vector<LintFinding>& findings);

}  // namespace egpu

#endif
