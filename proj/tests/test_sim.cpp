#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <bit>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "egpu/assembler.hpp"
#include "egpu/machine.hpp"
#include "egpu/sim.hpp"

using namespace egpu;

namespace {

std::uint32_t f2b(float f) { return std::bit_cast<std::uint32_t>(f); }
float b2f(std::uint32_t b) { return std::bit_cast<float>(b); }

// All visibility latencies collapsed to one cycle: back-to-back dependent
// instructions are clean, so semantic tests need no NOP padding.
EngineOptions fast_opts() {
  EngineOptions opt;
  for (const char* name : {"fpOps", "intOps", "logicOps", "lodShared",
                           "lodImmediate", "tdOps", "dotSumSfu"})
    opt.latency.set(name, 1);
  return opt;
}

ExecReport run_src(MachineState& m, const std::string& src,
                   const EngineOptions& opt = fast_opts(),
                   std::uint64_t maxCycles = 100000) {
  m.load_imem(assemble(src));
  Engine eng(m, opt);
  return eng.run(maxCycles);
}

// Register r of thread t, set before a run.
void poke(MachineState& m, std::uint32_t t, int r, std::uint32_t v) {
  m.reg(lane_of(t), slot_of(t) * kRegsPerThread + r) = v;
}

Instruction parse_one(const std::string& src) {
  return decode(assemble(src).words.at(0));
}

}  // namespace

TEST_CASE("issue cost laws") {
  ThreadConfig full{16, 32};   // 512 threads
  ThreadConfig half{16, 16};   // 256 threads
  auto cost = [](const std::string& src, const ThreadConfig& cfg) {
    Instruction in = parse_one(src);
    return issue_cost(in, active_set(in.var, cfg));
  };
  CHECK(cost("ADD.INT32 R1,R2,R3;", full) == 32);
  CHECK(cost("LOD R1,(R2);", half) == 64);
  CHECK(cost("STO R1,(R2);", half) == 256);
  CHECK(cost("STO.W1.D1 R1,(R2);", half) == 1);
  CHECK(cost("INIT 5;", full) == 1);
  CHECK(cost("LOOP 0;", full) == 1);
  CHECK(cost("JMP 0;", full) == 1);
  CHECK(cost("NOP;", full) == 1);
  CHECK(cost("LODI R1,#0;", half) == 16);     // per-wavefront
  CHECK(cost("ADD.INT32.W8 R1,R2,R3;", half) == 16);  // width is free
  CHECK(cost("ADD.INT32.D8 R1,R2,R3;", half) == 4);
  CHECK(cost("LOD.W8 R1,(R2);", half) == 32);  // 128 threads / 4
  CHECK(cost("LOD.W4.D1 R1,(R2);", half) == 1);
  CHECK(cost("STO.W8.D16 R1,(R2);", half) == 64);
  CHECK(cost("DOT R1,R2,R3;", half) == 16);
}

TEST_CASE("active set selection") {
  ThreadConfig cfg{16, 8};
  auto act = active_set({WidthSel::FULL, DepthSel::FULL}, cfg);
  CHECK(act.lanes == 16);
  CHECK(act.wavefronts == 8);
  act = active_set({WidthSel::HALF, DepthSel::HALF}, cfg);
  CHECK(act.lanes == 8);
  CHECK(act.wavefronts == 4);
  act = active_set({WidthSel::QUARTER, DepthSel::QUARTER}, cfg);
  CHECK(act.lanes == 4);
  CHECK(act.wavefronts == 2);
  act = active_set({WidthSel::SINGLE, DepthSel::SINGLE}, cfg);
  CHECK(act.lanes == 1);
  CHECK(act.wavefronts == 1);
  // fractional depths round up and never reach zero
  ThreadConfig one{16, 1};
  CHECK(active_set({WidthSel::FULL, DepthSel::HALF}, one).wavefronts == 1);
  CHECK(active_set({WidthSel::FULL, DepthSel::QUARTER}, one).wavefronts == 1);
  ThreadConfig three{16, 3};
  CHECK(active_set({WidthSel::FULL, DepthSel::HALF}, three).wavefronts == 2);
}

TEST_CASE("integer arithmetic wraps") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, 0x80000000u);
  poke(m, 0, 2, 0x80000000u);
  poke(m, 0, 4, 3u);
  run_src(m,
          "ADD.INT32 R3,R1,R2;"
          "SUB.UINT32 R5,R4,R1;"
          "STOP;");
  CHECK(m.thread_reg(0, 3) == 0u);
  CHECK(m.thread_reg(0, 5) == 0x80000003u);
}

TEST_CASE("multiply uses the low 16 bits of each source") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, 0xFFFFFFFDu);  // low16 = -3 signed, 65533 unsigned
  poke(m, 0, 2, 7u);
  poke(m, 0, 4, 0x00012345u);  // high bits ignored
  run_src(m,
          "MUL.INT32 R3,R1,R2;"
          "MUL.UINT32 R5,R1,R2;"
          "MUL.INT32 R6,R4,R2;"
          "STOP;");
  CHECK(static_cast<std::int32_t>(m.thread_reg(0, 3)) == -21);
  CHECK(m.thread_reg(0, 5) == 65533u * 7u);
  CHECK(m.thread_reg(0, 6) == 0x2345u * 7u);
}

TEST_CASE("logic and shifts") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, 0xF0F0A5A5u);
  poke(m, 0, 2, 0x0FF000FFu);
  poke(m, 0, 3, 33u);  // shift counts use the low five bits
  run_src(m,
          "AND R4,R1,R2;"
          "OR R5,R1,R2;"
          "XOR R6,R1,R2;"
          "NOT R7,R1;"
          "LSL R8,R1,R3;"
          "LSR R9,R1,R3;"
          "STOP;");
  CHECK(m.thread_reg(0, 4) == (0xF0F0A5A5u & 0x0FF000FFu));
  CHECK(m.thread_reg(0, 5) == (0xF0F0A5A5u | 0x0FF000FFu));
  CHECK(m.thread_reg(0, 6) == (0xF0F0A5A5u ^ 0x0FF000FFu));
  CHECK(m.thread_reg(0, 7) == ~0xF0F0A5A5u);
  CHECK(m.thread_reg(0, 8) == 0xF0F0A5A5u << 1);
  CHECK(m.thread_reg(0, 9) == 0xF0F0A5A5u >> 1);
}

TEST_CASE("NOT reads only Ra") {
  // rb names a register whose pending write would be a hazard if read
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  EngineOptions opt;  // default 9-cycle latencies, STRICT
  m.load_imem(assemble("LODI R2,#1; NOT R3,R1,R2; STOP;"));
  Engine eng(m, opt);
  CHECK_NOTHROW(eng.run(1000));
  CHECK(m.thread_reg(0, 3) == 0xFFFFFFFFu);
}

TEST_CASE("FP32 arithmetic is binary32 exact") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, f2b(1.5f));
  poke(m, 0, 2, f2b(2.25f));
  run_src(m,
          "ADD.FP32 R3,R1,R2;"
          "SUB.FP32 R4,R1,R2;"
          "MUL.FP32 R5,R1,R2;"
          "STOP;");
  CHECK(b2f(m.thread_reg(0, 3)) == 3.75f);
  CHECK(b2f(m.thread_reg(0, 4)) == -0.75f);
  CHECK(b2f(m.thread_reg(0, 5)) == 3.375f);

  // round-to-nearest-even at the 24-bit boundary
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, f2b(1.0f));
  poke(m, 0, 2, 0x33800000u);  // 2^-24
  run_src(m, "ADD.FP32 R3,R1,R2; STOP;");
  CHECK(b2f(m.thread_reg(0, 3)) == 1.0f);
}

TEST_CASE("variable field masks lanes and wavefronts") {
  MachineState m;
  m.reset(ThreadConfig{16, 4});
  for (std::uint32_t t = 0; t < 64; ++t) {
    poke(m, t, 1, 1);
    poke(m, t, 2, 2);
  }
  run_src(m, "ADD.INT32.W8.D16 R3,R1,R2; STOP;");
  for (std::uint32_t t = 0; t < 64; ++t) {
    bool active = lane_of(t) < 8 && slot_of(t) < 2;
    CHECK(m.thread_reg(t, 3) == (active ? 3u : 0u));
  }

  m.reset(ThreadConfig{16, 4});
  for (std::uint32_t t = 0; t < 64; ++t) poke(m, t, 1, t + 1);
  run_src(m, "ADD.INT32.W1.D1 R3,R1,R0; STOP;");
  for (std::uint32_t t = 0; t < 64; ++t)
    CHECK(m.thread_reg(t, 3) == (t == 0 ? 1u : 0u));
}

TEST_CASE("shared memory load and store") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  for (std::uint32_t i = 0; i < 16; ++i) m.shared[100 + i] = 1000 + i;
  run_src(m,
          "TDX R1;"
          "LODI R2,#104;"
          "ADD.INT32 R3,R1,R2;"
          "LOD R4,(R3)-4;"     // shared[t + 100]
          "STO R4,(R3)+100;"   // shared[t + 204]
          "STOP;");
  for (std::uint32_t t = 0; t < 16; ++t) {
    CHECK(m.thread_reg(t, 4) == 1000 + t);
    CHECK(m.shared[204 + t] == 1000 + t);
  }
}

TEST_CASE("stores from one instruction land in thread order") {
  MachineState m;
  m.reset(ThreadConfig{16, 2});
  for (std::uint32_t t = 0; t < 32; ++t) poke(m, t, 1, t);
  run_src(m, "STO R1,(R0)+9; STOP;");  // all 32 threads hit word 9
  CHECK(m.shared[9] == 31u);           // the highest thread id wins
}

TEST_CASE("strict mode range-checks data addresses") {
  MachineState m(64, 64);
  m.reset(ThreadConfig{16, 1});
  EngineOptions strict = fast_opts();
  m.load_imem(assemble("LODI R1,#100; LOD R2,(R1); STOP;"));
  Engine eng(m, strict);
  CHECK_THROWS_AS(eng.run(1000), RunError);

  // warn mode wraps instead
  MachineState w(64, 64);
  w.reset(ThreadConfig{16, 1});
  w.shared[36] = 77;  // 100 mod 64
  EngineOptions warn = fast_opts();
  warn.mode = HazardMode::WARN;
  w.load_imem(assemble("LODI R1,#100; LOD R2,(R1); STOP;"));
  Engine weng(w, warn);
  weng.run(1000);
  CHECK(w.thread_reg(0, 2) == 77u);

  // negative addresses wrap from the top
  MachineState n(64, 64);
  n.reset(ThreadConfig{16, 1});
  n.shared[63] = 55;
  n.load_imem(assemble("LOD R2,(R0)-1; STOP;"));
  Engine neng(n, warn);
  neng.run(1000);
  CHECK(n.thread_reg(0, 2) == 55u);
}

TEST_CASE("LODI broadcasts and TDX/TDY decompose thread ids") {
  MachineState m;
  m.reset(ThreadConfig{5, 2});
  run_src(m, "LODI R1,#-9; TDX R2; TDY R3; STOP;");
  for (std::uint32_t t = 0; t < 10; ++t) {
    CHECK(m.thread_reg(t, 1) == 0xFFFFFFF7u);
    CHECK(m.thread_reg(t, 2) == t % 5);
    CHECK(m.thread_reg(t, 3) == t / 5);
  }
}

TEST_CASE("DOT and SUM reduce each wavefront to lane zero") {
  MachineState m;
  m.reset(ThreadConfig{16, 2});
  for (std::uint32_t t = 0; t < 32; ++t) {
    poke(m, t, 1, f2b(static_cast<float>(lane_of(t) + 1)));
    poke(m, t, 2, f2b(slot_of(t) == 0 ? 2.0f : 3.0f));
  }
  run_src(m, "DOT R3,R1,R2; SUM R4,R1,R2; STOP;");
  // dot: sum over lanes of (lane+1)*c = c*136
  CHECK(b2f(m.reg(0, 0 * 16 + 3)) == 272.0f);
  CHECK(b2f(m.reg(0, 1 * 16 + 3)) == 408.0f);
  // sum: sum over lanes of (lane+1)+c = 136 + 16c
  CHECK(b2f(m.reg(0, 0 * 16 + 4)) == 168.0f);
  CHECK(b2f(m.reg(0, 1 * 16 + 4)) == 184.0f);
  // other lanes untouched
  CHECK(m.reg(1, 0 * 16 + 3) == 0u);
  CHECK(m.reg(15, 1 * 16 + 4) == 0u);

  // width-limited reduction covers only the active lanes
  m.reset(ThreadConfig{16, 1});
  for (std::uint32_t t = 0; t < 16; ++t) poke(m, t, 1, f2b(1.0f));
  run_src(m, "DOT.W4 R3,R1,R1; STOP;");
  CHECK(b2f(m.reg(0, 3)) == 4.0f);
}

TEST_CASE("full-width DOT adds 31 flops per wavefront") {
  for (std::uint32_t wf : {1u, 8u, 32u}) {
    MachineState m;
    m.reset(ThreadConfig{16, wf});
    ExecReport rep = run_src(m, "DOT R3,R1,R2; STOP;");
    CHECK(rep.flops == 31ull * wf);
  }
  // SUM counts the same tree; INVSQR is one flop per wavefront
  MachineState m;
  m.reset(ThreadConfig{16, 4});
  ExecReport rep = run_src(m, "SUM R3,R1,R2; INVSQR R4,R5; STOP;");
  CHECK(rep.flops == 31ull * 4 + 4);
  // FP32 lane arithmetic counts one flop per active lane
  m.reset(ThreadConfig{16, 4});
  rep = run_src(m, "ADD.FP32.W8.D16 R3,R1,R2; STOP;");
  CHECK(rep.flops == 16);
}

TEST_CASE("INVSQR writes lane zero of each active wavefront") {
  MachineState m;
  m.reset(ThreadConfig{16, 2});
  m.reg(0, 0 * 16 + 1) = f2b(4.0f);
  m.reg(0, 1 * 16 + 1) = f2b(0.25f);
  run_src(m, "INVSQR R2,R1; STOP;");
  CHECK(b2f(m.reg(0, 0 * 16 + 2)) == 0.5f);
  CHECK(b2f(m.reg(0, 1 * 16 + 2)) == 2.0f);
  CHECK(m.reg(1, 0 * 16 + 2) == 0u);
}

TEST_CASE("register snooping reads an absolute slot") {
  MachineState m;
  m.reset(ThreadConfig{16, 2});
  for (int lane = 0; lane < 16; ++lane) {
    m.reg(lane, 0 * 16 + 1) = 10 + static_cast<std::uint32_t>(lane);
    m.reg(lane, 1 * 16 + 1) = 99;  // would be read without snooping
    m.reg(lane, 1 * 16 + 2) = 7;
  }
  run_src(m, "ADD.INT32.X R3,R1@0,R2@1; STOP;");
  for (int lane = 0; lane < 16; ++lane) {
    CHECK(m.reg(lane, 0 * 16 + 3) == 17 + static_cast<std::uint32_t>(lane));
    CHECK(m.reg(lane, 1 * 16 + 3) == 17 + static_cast<std::uint32_t>(lane));
  }

  // without .X each wavefront reads its own slot
  m.reset(ThreadConfig{16, 2});
  for (int lane = 0; lane < 16; ++lane) {
    m.reg(lane, 0 * 16 + 1) = 1;
    m.reg(lane, 1 * 16 + 1) = 2;
  }
  run_src(m, "ADD.INT32 R3,R1,R1; STOP;");
  CHECK(m.reg(5, 0 * 16 + 3) == 2u);
  CHECK(m.reg(5, 1 * 16 + 3) == 4u);
}

TEST_CASE("subroutine calls nest to depth eight") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  ExecReport rep = run_src(m, "JSR sub; STOP; sub: RTS;");
  CHECK(rep.reason == StopReason::STOPPED);
  CHECK(rep.instructions == 3);

  // pushing a ninth frame fails
  m.reset(ThreadConfig{16, 1});
  EngineOptions strict = fast_opts();
  m.load_imem(assemble("top: JSR top;"));
  Engine eng(m, strict);
  CHECK_THROWS_AS(eng.run(1000), RunError);

  // popping an empty stack fails
  m.reset(ThreadConfig{16, 1});
  m.load_imem(assemble("RTS;"));
  Engine eng2(m, strict);
  CHECK_THROWS_AS(eng2.run(1000), RunError);

  // fragment mode treats both as a clean halt
  m.reset(ThreadConfig{16, 1});
  EngineOptions frag = fast_opts();
  frag.fragmentMode = true;
  m.load_imem(assemble("RTS;"));
  Engine eng3(m, frag);
  ExecReport frep = eng3.run(1000);
  CHECK(frep.reason == StopReason::OFF_END);
}

TEST_CASE("zero-overhead loop repeats its body") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  run_src(m,
          "LODI R1,#0;"
          "LODI R2,#1;"
          "INIT 3;"
          "body: ADD.INT32 R1,R1,R2;"
          "LOOP body;"
          "STOP;");
  CHECK(m.thread_reg(0, 1) == 3u);

  // LOOP with a zero counter is an error under strict handling
  m.reset(ThreadConfig{16, 1});
  m.load_imem(assemble("LOOP 0; STOP;"));
  Engine eng(m, fast_opts());
  CHECK_THROWS_AS(eng.run(1000), RunError);

  // warn mode notes it and wraps
  m.reset(ThreadConfig{16, 1});
  EngineOptions warn = fast_opts();
  warn.mode = HazardMode::WARN;
  m.load_imem(assemble("here: LOOP here;"));
  Engine weng(m, warn);
  ExecReport rep = weng.run(50);
  CHECK(rep.reason == StopReason::MAX_CYCLES);
  CHECK_FALSE(rep.notes.empty());

  // INIT over a live counter is noted
  m.reset(ThreadConfig{16, 1});
  m.load_imem(assemble("INIT 2; INIT 2; STOP;"));
  Engine neng(m, warn);
  rep = neng.run(1000);
  CHECK_FALSE(rep.notes.empty());
}

TEST_CASE("STOP halts and latches status") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  ExecReport rep = run_src(m, "NOP; STOP; NOP;");
  CHECK(rep.reason == StopReason::STOPPED);
  CHECK(rep.instructions == 2);
  CHECK(m.read_status().stopped);
  CHECK_FALSE(m.running);
  Engine eng(m, fast_opts());
  CHECK_THROWS_AS(eng.step(), RunError);
}

TEST_CASE("running off the end") {
  MachineState m(64, 4);
  m.reset(ThreadConfig{16, 1});
  m.load_imem(assemble("NOP; NOP;"));
  Engine eng(m, fast_opts());
  CHECK_THROWS_AS(eng.run(1000), RunError);

  m.reset(ThreadConfig{16, 1});
  EngineOptions frag = fast_opts();
  frag.fragmentMode = true;
  Engine feng(m, frag);
  ExecReport rep = feng.run(1000);
  CHECK(rep.reason == StopReason::OFF_END);
  CHECK(rep.finalPc == 4);
}

TEST_CASE("max cycle budget") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  ExecReport rep = run_src(m, "top: JMP top;", fast_opts(), 25);
  CHECK(rep.reason == StopReason::MAX_CYCLES);
  CHECK(rep.cycles >= 25);
}

TEST_CASE("hazard detection sits exactly at the latency boundary") {
  // writer at cycle 0 becomes visible at 9; a reader at cycle 8 is one
  // NOP short, a reader at cycle 9 is clean
  auto build = [](int nops) {
    std::string src = "LODI R1,#5;";
    for (int i = 0; i < nops; ++i) src += "NOP;";
    src += "ADD.INT32 R2,R1,R0; STOP;";
    return src;
  };
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  EngineOptions strict;  // default nine-cycle latencies
  m.load_imem(assemble(build(8)));
  Engine clean(m, strict);
  ExecReport rep = clean.run(1000);
  CHECK(rep.hazards.empty());
  CHECK(m.thread_reg(0, 2) == 5u);

  m.reset(ThreadConfig{16, 1});
  m.load_imem(assemble(build(7)));
  Engine tight(m, strict);
  try {
    tight.run(1000);
    FAIL("expected HazardError");
  } catch (const HazardError& e) {
    CHECK(e.writerAddr == 0);
    CHECK(e.readerAddr == 8);
    CHECK(e.deficit == 1);
    CHECK(std::string(e.what()).find("NOP") != std::string::npos);
  }
}

TEST_CASE("warn mode returns the stale value and records the pair") {
  MachineState m;
  m.reset(ThreadConfig{16, 8});
  EngineOptions warn;
  warn.mode = HazardMode::WARN;
  m.load_imem(assemble("LODI R1,#5; ADD.INT32 R2,R1,R1; STOP;"));
  Engine eng(m, warn);
  ExecReport rep = eng.run(1000);
  REQUIRE(rep.hazards.size() == 1);
  CHECK(rep.hazards[0].writerAddr == 0);
  CHECK(rep.hazards[0].readerAddr == 1);
  CHECK(rep.hazards[0].deficit == 1);
  // both source operands of 128 threads read stale
  CHECK(rep.hazards[0].occurrences == 256);
  // the stale read saw the pre-write zero, the write still landed
  CHECK(m.thread_reg(0, 2) == 0u);
  CHECK(m.thread_reg(0, 1) == 5u);

  // faithful mode: same values, no diagnostics
  m.reset(ThreadConfig{16, 8});
  EngineOptions faithful;
  faithful.mode = HazardMode::FAITHFUL;
  Engine feng(m, faithful);
  rep = feng.run(1000);
  CHECK(rep.hazards.empty());
  CHECK(m.thread_reg(0, 2) == 0u);
}

TEST_CASE("wavefront spacing hides short dependencies") {
  // with 16 wavefronts a per-wavefront op re-reads its own output 16
  // cycles later, past the 9-cycle latency
  MachineState m;
  m.reset(ThreadConfig{16, 16});
  EngineOptions strict;
  m.load_imem(assemble("LODI R1,#5; ADD.INT32 R2,R1,R1; STOP;"));
  Engine eng(m, strict);
  ExecReport rep = eng.run(1000);
  CHECK(rep.hazards.empty());
  CHECK(m.thread_reg(255, 2) == 10u);
}

TEST_CASE("pending writes commit in visibility order") {
  // a slow write issued first outlives a fast write issued second
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 2, 42u);
  EngineOptions opt;
  opt.mode = HazardMode::FAITHFUL;
  opt.latency.set("lodImmediate", 9);
  opt.latency.set("intOps", 2);
  // LODI visible at 9; ADD visible at 1+2=3; the register must end at 1
  m.load_imem(assemble("LODI R1,#1; ADD.INT32 R1,R0,R2; STOP;"));
  Engine eng(m, opt);
  eng.run(1000);
  CHECK(m.thread_reg(0, 1) == 1u);
}

TEST_CASE("flush-to-zero") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, 0x00000001u);  // smallest positive subnormal
  run_src(m, "ADD.FP32 R3,R1,R0; STOP;");
  CHECK(m.thread_reg(0, 3) == 0x00000001u);  // preserved by default

  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, 0x00000001u);
  EngineOptions ftz = fast_opts();
  ftz.flushToZero = true;
  run_src(m, "ADD.FP32 R3,R1,R0; STOP;", ftz);
  CHECK(m.thread_reg(0, 3) == 0x00000000u);

  // output flush keeps the sign
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, f2b(-std::numeric_limits<float>::min()));
  poke(m, 0, 2, f2b(0.5f));
  run_src(m, "MUL.FP32 R3,R1,R2; STOP;", ftz);
  CHECK(m.thread_reg(0, 3) == 0x80000000u);
}

TEST_CASE("NaN and infinity production is counted") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  for (std::uint32_t t = 0; t < 16; ++t) {
    poke(m, t, 1, f2b(std::numeric_limits<float>::max()));
    poke(m, t, 2, f2b(2.0f));
  }
  ExecReport rep = run_src(m, "MUL.FP32 R3,R1,R2; STOP;");
  CHECK(rep.nanInfCount == 16);
  CHECK(std::isinf(b2f(m.thread_reg(3, 3))));
}

TEST_CASE("trace records issue timing") {
  MachineState m;
  m.reset(ThreadConfig{16, 2});
  EngineOptions opt = fast_opts();
  opt.collectTrace = true;
  ExecReport rep = run_src(m, "NOP; LODI R1,#3; STOP;", opt);
  REQUIRE(rep.trace.size() == 3);
  CHECK(rep.trace[0].addr == 0);
  CHECK(rep.trace[0].startCycle == 0);
  CHECK(rep.trace[0].issueCycles == 1);
  CHECK(rep.trace[1].startCycle == 1);
  CHECK(rep.trace[1].issueCycles == 2);
  CHECK(rep.trace[2].startCycle == 3);
  CHECK(rep.cycles == 4);
  CHECK(render_trace_line(rep.trace[1]) == "1\t1\tLODI\t2\t32");

  // tracing off by default
  m.reset(ThreadConfig{16, 2});
  rep = run_src(m, "STOP;");
  CHECK(rep.trace.empty());
}

TEST_CASE("latency overrides by name") {
  LatencyModel lat;
  lat.set("logicOps", 8);
  CHECK(lat.logicOps == 8);
  CHECK(lat.intOps == 9);
  CHECK_THROWS(lat.set("bogus", 3));

  Instruction in = parse_one("AND R1,R2,R3;");
  CHECK(lat.for_instruction(in) == 8);
  in = parse_one("ADD.FP32 R1,R2,R3;");
  CHECK(lat.for_instruction(in) == 9);
  in = parse_one("STO R1,(R2);");
  CHECK(lat.for_instruction(in) == 0);  // stores publish through memory
}

TEST_CASE("shared stores are visible to later instructions immediately") {
  MachineState m;
  m.reset(ThreadConfig{16, 1});
  poke(m, 0, 1, 123u);
  run_src(m,
          "STO.W1.D1 R1,(R0)+7;"
          "LOD R2,(R0)+7;"
          "STOP;");
  CHECK(m.thread_reg(5, 2) == 123u);
}
