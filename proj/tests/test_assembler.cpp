#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <random>

#include "doctest.h"
#include "egpu/assembler.hpp"

using namespace egpu;

namespace {

Word one(const std::string& src) {
  ImemImage img = assemble(src);
  REQUIRE(img.size() == 1);
  return img.words[0];
}

const char* kMixListing =
    "AND.INT32 R6,R1,R3;\n"
    "AND.INT32 R7,R1,R4;\n"
    "LSL.INT32 R8,R6,R5;\n"
    "ADD.INT32 R6,R7,R8;\n"
    "NOP;\n"
    "ADD.INT32 R2,R6,R6;\n"
    "LSL.INT32 R3,R7,R9;\n"
    "RTS\n";

}  // namespace

TEST_CASE("assembles the published-style mixing listing verbatim") {
  ImemImage img = assemble(kMixListing);
  REQUIRE(img.size() == 8);
  CHECK(img.words[0] == 0x0106130000ull);  // AND.INT32 R6,R1,R3
  CHECK(img.words[4] == 0ull);             // NOP
  CHECK(img.words[7] == 0x0500000000ull);  // RTS
  // canonical disassembly reproduces the image bit for bit
  ImemImage back = assemble(disassemble(img));
  CHECK(back.words == img.words);
}

TEST_CASE("suffixes combine in any order") {
  Word a = one("ADD.FP32.W8.D1 R1,R2,R3;");
  CHECK(one("ADD.D1.W8.FP32 R1,R2,R3;") == a);
  CHECK(one("add.w8.fp32.d1 r1, r2, r3") == a);
  Instruction in = decode(a);
  CHECK(in.var.width == WidthSel::HALF);
  CHECK(in.var.depth == DepthSel::SINGLE);
  CHECK(in.typ == Type::FP32);
}

TEST_CASE("type suffix rules") {
  CHECK_THROWS_AS(one("ADD R1,R2,R3;"), AsmError);  // arith needs a type
  CHECK_THROWS_WITH_AS(one("MUL R1,R2,R3;"),
                       doctest::Contains("needs a type suffix"), AsmError);
  CHECK(decode(one("AND R1,R2,R3;")).typ == Type::INT32);  // logic defaults
  CHECK(decode(one("DOT R1,R2,R3;")).typ == Type::FP32);   // reductions imply
  CHECK(decode(one("INVSQR R1,R2;")).typ == Type::FP32);
  CHECK_THROWS_AS(one("DOT.INT32 R1,R2,R3;"), AsmError);
  CHECK_THROWS_AS(one("INVSQR.UINT32 R1,R2;"), AsmError);
  CHECK_THROWS_AS(one("ADD.INT32.FP32 R1,R2,R3;"), AsmError);  // duplicate
}

TEST_CASE("memory operands") {
  Instruction in = decode(one("LOD R1,(R2);"));
  CHECK(in.op == Opcode::LOD);
  CHECK(in.rd == 1);
  CHECK(in.ra == 2);
  CHECK(in.simm() == 0);
  CHECK(decode(one("LOD R1,(R2)+5;")).simm() == 5);
  CHECK(decode(one("LOD R1,(R2)-5;")).simm() == -5);
  CHECK(decode(one("LOD R1, (R2) + 5 ;")).simm() == 5);
  CHECK(decode(one("STO R3 (R4)+12;")).rd == 3);  // comma optional
  CHECK(decode(one("STO R1,(R2)+16383;")).simm() == 16383);
  CHECK(decode(one("LOD R1,(R2)-16384;")).simm() == -16384);
  CHECK_THROWS_AS(one("LOD R1,(R2)+16384;"), AsmError);
  CHECK_THROWS_AS(one("LOD R1,R2;"), AsmError);  // parens required
}

TEST_CASE("immediates and the LODI alias") {
  CHECK(decode(one("LODI R4,#-7;")).simm() == -7);
  CHECK(decode(one("LODI R4,42;")).simm() == 42);  // '#' optional
  CHECK(one("LOD R4,#42;") == one("LODI R4,#42;"));
  CHECK_THROWS_AS(one("STO R4,#42;"), AsmError);
  CHECK_THROWS_AS(one("LODI R4,#20000;"), AsmError);
}

TEST_CASE("register snooping operands") {
  Instruction in = decode(one("ADD.FP32.X R1,R2@3,R3@17;"));
  CHECK(in.x);
  CHECK(in.ext_a() == 3);
  CHECK(in.ext_b() == 17);
  CHECK_THROWS_WITH_AS(one("ADD.FP32 R1,R2@3,R3;"),
                       doctest::Contains(".X"), AsmError);
  CHECK_THROWS_AS(one("ADD.FP32.X R1,R2,R3;"), AsmError);  // slots required
  CHECK_THROWS_AS(one("ADD.FP32.X R1,R2@32,R3@0;"), AsmError);
  CHECK_THROWS_AS(one("LOD.X R1,(R2);"), AsmError);  // not snoopable

  Instruction nt = decode(one("NOT.X R1,R2@5;"));
  CHECK(nt.x);
  CHECK(nt.ext_a() == 5);
  CHECK(nt.ext_b() == 0);
}

TEST_CASE("two-operand ops accept a third register") {
  Instruction in = decode(one("NOT R1,R2,R3;"));
  CHECK(in.rb == 3);
  std::vector<std::string> warnings;
  assemble("NOT R1,R2,R3;", "w.s", &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("w.s:1:") != std::string::npos);
  CHECK(warnings[0].find("ignored") != std::string::npos);
}

TEST_CASE("labels and branch targets") {
  ImemImage img = assemble("JMP end;\nNOP;\nend: STOP;\n");
  CHECK(decode(img.words[0]).imm == 2);
  CHECK(img.symbols.at("end") == 2);

  img = assemble("top:\nNOP;\nLOOP top;\n");
  CHECK(decode(img.words[1]).imm == 0);

  img = assemble("a: b: NOP;\n");
  CHECK(img.symbols.at("a") == 0);
  CHECK(img.symbols.at("b") == 0);

  CHECK(decode(one("JMP 5;")).imm == 5);
  CHECK_THROWS_AS(one("JMP 40000;"), AsmError);
  CHECK_THROWS_WITH_AS(assemble("JMP nowhere;\n"),
                       doctest::Contains("nowhere"), AsmError);
  CHECK_THROWS_WITH_AS(assemble("a: NOP;\na: NOP;\n"),
                       doctest::Contains("line 1"), AsmError);

  CHECK(decode(one("INIT 16;")).imm == 16);
  CHECK(decode(one("INIT #16;")).imm == 16);
  CHECK_THROWS_AS(one("INIT -1;"), AsmError);
}

TEST_CASE("statement separators and comments") {
  ImemImage img = assemble("NOP; NOP ; STOP // tail comment\n// whole line\n");
  CHECK(img.size() == 3);
  img = assemble("start: NOP; JMP start; STOP;\n");
  CHECK(img.size() == 3);
  CHECK(decode(img.words[1]).imm == 0);
}

TEST_CASE("raw word escape") {
  CHECK(one(".word 0x05C0000000") == 0x05C0000000ull);
  CHECK(one(".word 0xffffffffff") == kWordMask);
  CHECK_THROWS_AS(one(".word 0x10000000000"), AsmError);
}

TEST_CASE("errors carry origin and line") {
  try {
    assemble("NOP;\nADD R1,R2,R3;\n", "prog.s");
    FAIL("expected AsmError");
  } catch (const AsmError& e) {
    CHECK(std::string(e.what()).find("prog.s:2:") != std::string::npos);
  }
  CHECK_THROWS_AS(one("R1,R2"), AsmError);
  CHECK_THROWS_AS(one("ADDX R1,R2,R3;"), AsmError);
  CHECK_THROWS_AS(one("ADD.INT32 R1,R99,R3;"), AsmError);
  CHECK_THROWS_AS(one("ADD.INT32 R1,R99999999999,R3;"), AsmError);
  CHECK_THROWS_AS(one("ADD.BAD R1,R2,R3;"), AsmError);
}

TEST_CASE("canonical text pins") {
  CHECK(canonical_text(decode(0x0046130000ull)) == "ADD.INT32 R6,R1,R3");
  CHECK(canonical_text(decode(one("ADD.FP32.W8.D1.X R1,R2@3,R3@17;"))) ==
        "ADD.FP32.W8.D1.X R1,R2@3,R3@17");
  CHECK(canonical_text(decode(one("LOD R1,(R2)+0;"))) == "LOD R1,(R2)");
  CHECK(canonical_text(decode(one("STO R1,(R2)-9;"))) == "STO R1,(R2)-9");
  CHECK(canonical_text(decode(one("LODI R4,#-7;"))) == "LODI R4,#-7");
  CHECK(canonical_text(decode(one("DOT R1,R2,R3;"))) == "DOT R1,R2,R3");
  CHECK(canonical_text(decode(one("NOT R1,R2;"))) == "NOT.INT32 R1,R2");
  CHECK(canonical_text(decode(one("NOT R1,R2,R3;"))) == "NOT.INT32 R1,R2,R3");
  CHECK(canonical_text(decode(one("TDX R7;"))) == "TDX R7");
  CHECK(canonical_text(decode(one("JMP 5;"))) == "JMP 5");
  CHECK(canonical_text(decode(one("INIT 16;"))) == "INIT 16");
  CHECK(canonical_text(Instruction{}) == "NOP");
}

TEST_CASE("disassembly escapes what it cannot express") {
  // decodable but non-canonical: AND carrying UINT32
  Word odd = one("AND.UINT32 R1,R2,R3;");
  std::string line = disassemble_word(odd);
  CHECK(line.find(".word") == 0);
  CHECK(line.find("non-canonical") != std::string::npos);
  // illegal opcode
  line = disassemble_word(Word{43} << 30);
  CHECK(line.find(".word") == 0);
  // FP32-only op with the wrong type is an escape with the reason
  Instruction bad;
  bad.op = Opcode::INVSQR;
  bad.typ = Type::INT32;
  line = disassemble_word(encode(bad));
  CHECK(line.find(".word") == 0);
  CHECK(line.find("FP32") != std::string::npos);
}

TEST_CASE("disassemble/assemble round trip on arbitrary words") {
  std::mt19937_64 rng(4242);
  ImemImage img;
  for (int i = 0; i < 4000; ++i) img.words.push_back(rng() & kWordMask);
  img.words.push_back(0);
  img.words.push_back(kWordMask);
  ImemImage back = assemble(disassemble(img));
  REQUIRE(back.size() == img.size());
  CHECK(back.words == img.words);
}

TEST_CASE("canonical instructions survive text round trips") {
  std::mt19937_64 rng(7);
  int checked = 0;
  while (checked < 4000) {
    Word w = rng() & kWordMask;
    Instruction in;
    if (!try_decode(w, in) || !is_canonical(in)) continue;
    Word back = one(canonical_text(in) + ";");
    CHECK(back == w);
    ++checked;
  }
}

TEST_CASE("symbol sidecar") {
  ImemImage img = assemble("zz: NOP;\naa: STOP;\n");
  CHECK(render_symbols(img) == "aa\t1\nzz\t0\n");
}

TEST_CASE("assemble_file reads from disk") {
  std::string path = "/tmp/egpu_asm_test.s";
  std::FILE* f = std::fopen(path.c_str(), "w");
  REQUIRE(f != nullptr);
  std::fputs("NOP;\nSTOP;\n", f);
  std::fclose(f);
  ImemImage img = assemble_file(path);
  REQUIRE(img.size() == 2);
  CHECK(img.words[1] == 0x05C0000000ull);
  CHECK_THROWS_AS(assemble_file("/tmp/egpu_no_such_file.s"), AsmError);
}

TEST_CASE("assembly output is deterministic") {
  std::string src = "top: ADD.INT32 R1,R2,R3; LOOP top; STOP;\n";
  ImemImage a = assemble(src);
  ImemImage b = assemble(src);
  CHECK(a.words == b.words);
  CHECK(render_imem_image(a) == render_imem_image(b));
  CHECK(disassemble(a) == disassemble(b));
}
