#ifndef EGPU_SIM_HPP
#define EGPU_SIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "egpu/isa.hpp"
#include "egpu/machine.hpp"
#include "egpu/profile.hpp"

namespace egpu {

struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised in strict mode when a register is read before its pending write
// lands. Carries both instruction addresses and the NOP shortfall.
struct HazardError : RunError {
  HazardError(std::uint32_t writer, std::uint32_t reader, std::uint64_t deficit,
              const std::string& msg)
      : RunError(msg), writerAddr(writer), readerAddr(reader), deficit(deficit) {}
  std::uint32_t writerAddr;
  std::uint32_t readerAddr;
  std::uint64_t deficit;
};

// Lanes and wavefronts selected by an instruction's variable field under a
// thread configuration. Active lanes and slots are always the lowest-indexed.
struct ActiveSet {
  int lanes = kLanes;
  int wavefronts = 1;
  int threads() const { return lanes * wavefronts; }
};

ActiveSet active_set(const VariableField& var, const ThreadConfig& cfg);

// Cycles the sequencer spends issuing one instruction:
//   per-wavefront ops        -> active wavefronts
//   LOD                      -> ceil(active threads / 4)
//   STO                      -> active threads
//   NOP and control          -> 1
std::uint32_t issue_cost(const Instruction& in, const ActiveSet& act);

// Result-visibility latency per instruction class, in cycles from the issuing
// wavefront's cycle. The pipeline is nine deep and publishes no per-class
// breakdown, so everything defaults to 9 and each class stays adjustable.
struct LatencyModel {
  std::uint32_t fpOps = 9;
  std::uint32_t intOps = 9;
  std::uint32_t logicOps = 9;
  std::uint32_t lodShared = 9;
  std::uint32_t lodImmediate = 9;
  std::uint32_t tdOps = 9;
  std::uint32_t dotSumSfu = 9;

  std::uint32_t for_instruction(const Instruction& in) const;
  // Named-field override, e.g. set("logicOps", 8). Unknown name throws.
  void set(const std::string& name, std::uint32_t cycles);
};

enum class HazardMode {
  STRICT,    // abort on stale read, range-check data addresses
  WARN,      // record diagnostics, return the stale value, wrap addresses
  FAITHFUL,  // silent stale value, wrap addresses
};

struct TraceRecord {
  std::uint32_t addr = 0;
  Opcode op = Opcode::NOP;
  Type typ = Type::INT32;
  std::uint64_t startCycle = 0;
  std::uint32_t issueCycles = 0;
  std::uint32_t activeThreads = 0;
};

// cycle<TAB>addr<TAB>mnemonic<TAB>issue_cycles<TAB>active_threads
std::string render_trace_line(const TraceRecord& rec);

struct HazardRecord {
  std::uint32_t writerAddr = 0;
  std::uint32_t readerAddr = 0;
  std::uint64_t deficit = 0;      // NOPs needed to make the read clean
  std::uint64_t firstCycle = 0;
  std::uint64_t occurrences = 0;  // stale reads collapsed into this pair
};

enum class StopReason { STOPPED, MAX_CYCLES, OFF_END };

struct ExecReport {
  std::uint64_t cycles = 0;
  std::uint64_t instructions = 0;
  ClassCycles classCycles{};
  std::uint64_t flops = 0;
  std::uint64_t nanInfCount = 0;
  std::vector<HazardRecord> hazards;  // unique writer/reader pairs, max deficit
  std::vector<std::string> notes;     // non-fatal control diagnostics
  std::vector<TraceRecord> trace;     // populated when tracing is enabled
  StopReason reason = StopReason::STOPPED;
  std::uint32_t finalPc = 0;
};

struct EngineOptions {
  HazardMode mode = HazardMode::STRICT;
  LatencyModel latency{};
  bool collectTrace = false;
  bool flushToZero = false;
  // Fragment tolerance for static analysis: RTS on an empty stack, a full
  // return stack, or pc running off I-MEM halts instead of throwing.
  bool fragmentMode = false;
};

class Engine {
 public:
  Engine(MachineState& m, const EngineOptions& opt);

  // Executes one instruction; advances pc and the cycle counter.
  TraceRecord step();
  // Steps until STOP, maxCycles, or an error. Drains the write pipeline so
  // the register file is fully committed afterwards.
  ExecReport run(std::uint64_t maxCycles);

  bool halted() const { return halted_; }
  void drain_pending();
  const ExecReport& report() const { return report_; }

 private:
  struct Pending {
    std::uint64_t visibleAt;
    std::uint64_t seq;
    std::uint32_t value;
    std::uint32_t writerAddr;
  };

  std::uint32_t read_reg(int lane, int addr, std::uint64_t cycle,
                         std::uint32_t readerAddr);
  void write_reg(int lane, int addr, std::uint32_t value,
                 std::uint64_t visibleAt, std::uint32_t writerAddr);
  void commit_cell(std::vector<Pending>& cell, int lane, int addr,
                   std::uint64_t cycle);
  void note_hazard(std::uint32_t writer, std::uint32_t reader,
                   std::uint64_t deficit, std::uint64_t cycle);
  std::uint32_t resolve_shared_addr(std::int64_t addr, std::uint32_t threadId,
                                    std::uint32_t instrAddr);
  float fp_in(std::uint32_t bits) const;
  std::uint32_t fp_out(float v);

  void exec_alu(const Instruction& in, const ActiveSet& act, std::uint64_t start);
  void exec_lod(const Instruction& in, const ActiveSet& act, std::uint64_t start);
  void exec_sto(const Instruction& in, const ActiveSet& act, std::uint64_t start);
  void exec_lodi(const Instruction& in, const ActiveSet& act, std::uint64_t start);
  void exec_thread_id(const Instruction& in, const ActiveSet& act,
                      std::uint64_t start);
  void exec_reduce(const Instruction& in, const ActiveSet& act,
                   std::uint64_t start);
  void exec_invsqr(const Instruction& in, const ActiveSet& act,
                   std::uint64_t start);
  // Returns the next pc; everything else returns pc+1 implicitly.
  std::uint32_t exec_control(const Instruction& in);

  MachineState& m_;
  EngineOptions opt_;
  std::vector<std::vector<Pending>> cells_;
  std::uint64_t seq_ = 0;
  ExecReport report_;
  bool halted_ = false;
};

}  // namespace egpu

#endif
