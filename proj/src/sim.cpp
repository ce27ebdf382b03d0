#include "egpu/sim.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

namespace egpu {

ActiveSet active_set(const VariableField& var, const ThreadConfig& cfg) {
  ActiveSet act;
  act.lanes = active_lanes(var.width);
  std::uint32_t w = cfg.wavefronts();
  switch (var.depth) {
    case DepthSel::FULL: break;
    case DepthSel::HALF: w = (w + 1) / 2; break;
    case DepthSel::QUARTER: w = (w + 3) / 4; break;
    case DepthSel::SINGLE: w = 1; break;
  }
  if (w == 0) w = 1;
  act.wavefronts = static_cast<int>(w);
  return act;
}

std::uint32_t issue_cost(const Instruction& in, const ActiveSet& act) {
  switch (in.op) {
    case Opcode::NOP:
    case Opcode::JMP:
    case Opcode::JSR:
    case Opcode::RTS:
    case Opcode::LOOP:
    case Opcode::INIT:
    case Opcode::STOP:
      return 1;
    case Opcode::LOD:
      return (static_cast<std::uint32_t>(act.threads()) + 3) / 4;
    case Opcode::STO:
      return static_cast<std::uint32_t>(act.threads());
    default:
      return static_cast<std::uint32_t>(act.wavefronts);
  }
}

std::uint32_t LatencyModel::for_instruction(const Instruction& in) const {
  switch (in.op) {
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::MUL:
      return in.typ == Type::FP32 ? fpOps : intOps;
    case Opcode::AND:
    case Opcode::OR:
    case Opcode::XOR:
    case Opcode::NOT:
    case Opcode::LSL:
    case Opcode::LSR:
      return logicOps;
    case Opcode::LOD:
      return lodShared;
    case Opcode::LODI:
      return lodImmediate;
    case Opcode::TDX:
    case Opcode::TDY:
      return tdOps;
    case Opcode::DOT:
    case Opcode::SUM:
    case Opcode::INVSQR:
      return dotSumSfu;
    default:
      return 0;  // no register result
  }
}

void LatencyModel::set(const std::string& name, std::uint32_t cycles) {
  if (name == "fpOps") fpOps = cycles;
  else if (name == "intOps") intOps = cycles;
  else if (name == "logicOps") logicOps = cycles;
  else if (name == "lodShared") lodShared = cycles;
  else if (name == "lodImmediate") lodImmediate = cycles;
  else if (name == "tdOps") tdOps = cycles;
  else if (name == "dotSumSfu") dotSumSfu = cycles;
  else throw RunError("unknown latency class '" + name + "'");
}

std::string render_trace_line(const TraceRecord& rec) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%llu\t%u\t%s\t%u\t%u",
                static_cast<unsigned long long>(rec.startCycle), rec.addr,
                op_info(rec.op).name, rec.issueCycles, rec.activeThreads);
  return buf;
}

Engine::Engine(MachineState& m, const EngineOptions& opt)
    : m_(m), opt_(opt), cells_(kLanes * kRegsPerLane) {}

void Engine::commit_cell(std::vector<Pending>& cell, int lane, int addr,
                         std::uint64_t cycle) {
  std::size_t done = 0;
  for (; done < cell.size() && cell[done].visibleAt <= cycle; ++done)
    m_.reg(lane, addr) = cell[done].value;
  if (done) cell.erase(cell.begin(), cell.begin() + done);
}

std::uint32_t Engine::read_reg(int lane, int addr, std::uint64_t cycle,
                               std::uint32_t readerAddr) {
  auto& cell = cells_[static_cast<std::size_t>(lane) * kRegsPerLane + addr];
  if (!cell.empty()) {
    commit_cell(cell, lane, addr, cycle);
    if (!cell.empty()) {
      // The program-order-latest write has not landed: the read is stale.
      const Pending* latest = &cell[0];
      for (const auto& p : cell)
        if (p.seq > latest->seq) latest = &p;
      note_hazard(latest->writerAddr, readerAddr, latest->visibleAt - cycle,
                  cycle);
    }
  }
  return m_.reg(lane, addr);
}

void Engine::write_reg(int lane, int addr, std::uint32_t value,
                       std::uint64_t visibleAt, std::uint32_t writerAddr) {
  auto& cell = cells_[static_cast<std::size_t>(lane) * kRegsPerLane + addr];
  Pending p{visibleAt, ++seq_, value, writerAddr};
  auto it = cell.end();
  while (it != cell.begin()) {
    auto prev = it - 1;
    if (prev->visibleAt <= p.visibleAt) break;
    it = prev;
  }
  cell.insert(it, p);
}

void Engine::drain_pending() {
  for (int lane = 0; lane < kLanes; ++lane)
    for (int addr = 0; addr < kRegsPerLane; ++addr) {
      auto& cell = cells_[static_cast<std::size_t>(lane) * kRegsPerLane + addr];
      if (!cell.empty())
        commit_cell(cell, lane, addr, std::numeric_limits<std::uint64_t>::max());
    }
}

void Engine::note_hazard(std::uint32_t writer, std::uint32_t reader,
                         std::uint64_t deficit, std::uint64_t cycle) {
  if (opt_.mode == HazardMode::FAITHFUL) return;
  HazardRecord* rec = nullptr;
  for (auto& h : report_.hazards)
    if (h.writerAddr == writer && h.readerAddr == reader) {
      rec = &h;
      break;
    }
  if (rec) {
    if (deficit > rec->deficit) rec->deficit = deficit;
    ++rec->occurrences;
  } else {
    report_.hazards.push_back({writer, reader, deficit, cycle, 1});
  }
  if (opt_.mode == HazardMode::STRICT) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "RAW hazard: instruction at %u reads a register written by "
                  "instruction at %u, %llu NOP(s) short",
                  reader, writer, static_cast<unsigned long long>(deficit));
    throw HazardError(writer, reader, deficit, buf);
  }
}

std::uint32_t Engine::resolve_shared_addr(std::int64_t addr,
                                          std::uint32_t threadId,
                                          std::uint32_t instrAddr) {
  auto depth = static_cast<std::int64_t>(m_.shared_depth());
  if (addr >= 0 && addr < depth) return static_cast<std::uint32_t>(addr);
  if (opt_.mode == HazardMode::STRICT && !opt_.fragmentMode) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "data address %lld out of range (depth %lld), thread %u, "
                  "instruction at %u",
                  static_cast<long long>(addr), static_cast<long long>(depth),
                  threadId, instrAddr);
    throw RunError(buf);
  }
  std::int64_t wrapped = addr % depth;
  if (wrapped < 0) wrapped += depth;
  return static_cast<std::uint32_t>(wrapped);
}

float Engine::fp_in(std::uint32_t bits) const {
  if (opt_.flushToZero && (bits & 0x7F800000u) == 0 && (bits & 0x007FFFFFu))
    bits &= 0x80000000u;
  return std::bit_cast<float>(bits);
}

std::uint32_t Engine::fp_out(float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  if (opt_.flushToZero && (bits & 0x7F800000u) == 0 && (bits & 0x007FFFFFu))
    bits &= 0x80000000u;
  if ((bits & 0x7F800000u) == 0x7F800000u) ++report_.nanInfCount;
  return bits;
}

void Engine::exec_alu(const Instruction& in, const ActiveSet& act,
                      std::uint64_t start) {
  const std::uint32_t lat = opt_.latency.for_instruction(in);
  const bool readsRb = in.op != Opcode::NOT;
  for (int w = 0; w < act.wavefronts; ++w) {
    std::uint64_t cycle = start + static_cast<std::uint64_t>(w);
    int slotA = in.x ? in.ext_a() : w;
    int slotB = in.x ? in.ext_b() : w;
    for (int lane = 0; lane < act.lanes; ++lane) {
      std::uint32_t a = read_reg(lane, slotA * kRegsPerThread + in.ra, cycle, m_.pc);
      std::uint32_t b = readsRb
          ? read_reg(lane, slotB * kRegsPerThread + in.rb, cycle, m_.pc)
          : 0;
      std::uint32_t r = 0;
      switch (in.op) {
        case Opcode::ADD:
          if (in.typ == Type::FP32) {
            r = fp_out(fp_in(a) + fp_in(b));
            ++report_.flops;
          } else {
            r = a + b;
          }
          break;
        case Opcode::SUB:
          if (in.typ == Type::FP32) {
            r = fp_out(fp_in(a) - fp_in(b));
            ++report_.flops;
          } else {
            r = a - b;
          }
          break;
        case Opcode::MUL:
          if (in.typ == Type::FP32) {
            r = fp_out(fp_in(a) * fp_in(b));
            ++report_.flops;
          } else if (in.typ == Type::INT32) {
            // 16x16 multiplier: sign-extended low halves, 32-bit product
            std::int32_t pa = static_cast<std::int16_t>(a & 0xFFFF);
            std::int32_t pb = static_cast<std::int16_t>(b & 0xFFFF);
            r = static_cast<std::uint32_t>(pa * pb);
          } else {
            std::uint32_t pa = a & 0xFFFF, pb = b & 0xFFFF;
            r = pa * pb;
          }
          break;
        case Opcode::AND: r = a & b; break;
        case Opcode::OR: r = a | b; break;
        case Opcode::XOR: r = a ^ b; break;
        case Opcode::NOT: r = ~a; break;
        case Opcode::LSL: r = a << (b & 31); break;
        case Opcode::LSR: r = a >> (b & 31); break;
        default: break;
      }
      write_reg(lane, w * kRegsPerThread + in.rd, r, cycle + lat, m_.pc);
    }
  }
}

void Engine::exec_lod(const Instruction& in, const ActiveSet& act,
                      std::uint64_t start) {
  const std::uint32_t lat = opt_.latency.for_instruction(in);
  int idx = 0;
  for (int w = 0; w < act.wavefronts; ++w) {
    for (int lane = 0; lane < act.lanes; ++lane, ++idx) {
      std::uint64_t cycle = start + static_cast<std::uint64_t>(idx / 4);
      std::uint32_t base =
          read_reg(lane, w * kRegsPerThread + in.ra, cycle, m_.pc);
      std::int64_t ea =
          static_cast<std::int64_t>(static_cast<std::int32_t>(base)) + in.simm();
      std::uint32_t t = static_cast<std::uint32_t>(w * kLanes + lane);
      std::uint32_t sa = resolve_shared_addr(ea, t, m_.pc);
      write_reg(lane, w * kRegsPerThread + in.rd, m_.shared[sa], cycle + lat,
                m_.pc);
    }
  }
}

void Engine::exec_sto(const Instruction& in, const ActiveSet& act,
                      std::uint64_t start) {
  int idx = 0;
  for (int w = 0; w < act.wavefronts; ++w) {
    for (int lane = 0; lane < act.lanes; ++lane, ++idx) {
      std::uint64_t cycle = start + static_cast<std::uint64_t>(idx);
      std::uint32_t base =
          read_reg(lane, w * kRegsPerThread + in.ra, cycle, m_.pc);
      std::uint32_t value =
          read_reg(lane, w * kRegsPerThread + in.rd, cycle, m_.pc);
      std::int64_t ea =
          static_cast<std::int64_t>(static_cast<std::int32_t>(base)) + in.simm();
      std::uint32_t t = static_cast<std::uint32_t>(w * kLanes + lane);
      std::uint32_t sa = resolve_shared_addr(ea, t, m_.pc);
      m_.shared[sa] = value;  // serial thread order: later threads overwrite
    }
  }
}

void Engine::exec_lodi(const Instruction& in, const ActiveSet& act,
                       std::uint64_t start) {
  const std::uint32_t lat = opt_.latency.for_instruction(in);
  const std::uint32_t value = static_cast<std::uint32_t>(in.simm());
  for (int w = 0; w < act.wavefronts; ++w) {
    std::uint64_t cycle = start + static_cast<std::uint64_t>(w);
    for (int lane = 0; lane < act.lanes; ++lane)
      write_reg(lane, w * kRegsPerThread + in.rd, value, cycle + lat, m_.pc);
  }
}

void Engine::exec_thread_id(const Instruction& in, const ActiveSet& act,
                            std::uint64_t start) {
  const std::uint32_t lat = opt_.latency.for_instruction(in);
  for (int w = 0; w < act.wavefronts; ++w) {
    std::uint64_t cycle = start + static_cast<std::uint64_t>(w);
    for (int lane = 0; lane < act.lanes; ++lane) {
      std::uint32_t t = static_cast<std::uint32_t>(w * kLanes + lane);
      std::uint32_t v =
          in.op == Opcode::TDX ? t % m_.cfg.dimX : t / m_.cfg.dimX;
      write_reg(lane, w * kRegsPerThread + in.rd, v, cycle + lat, m_.pc);
    }
  }
}

void Engine::exec_reduce(const Instruction& in, const ActiveSet& act,
                         std::uint64_t start) {
  const std::uint32_t lat = opt_.latency.for_instruction(in);
  for (int w = 0; w < act.wavefronts; ++w) {
    std::uint64_t cycle = start + static_cast<std::uint64_t>(w);
    int slotA = in.x ? in.ext_a() : w;
    int slotB = in.x ? in.ext_b() : w;
    float v[kLanes];
    for (int lane = 0; lane < act.lanes; ++lane) {
      float a = fp_in(read_reg(lane, slotA * kRegsPerThread + in.ra, cycle, m_.pc));
      float b = fp_in(read_reg(lane, slotB * kRegsPerThread + in.rb, cycle, m_.pc));
      v[lane] = in.op == Opcode::DOT ? a * b : a + b;
    }
    // fixed balanced binary reduction tree
    for (int n = act.lanes; n > 1; n /= 2)
      for (int i = 0; i < n / 2; ++i) v[i] = v[2 * i] + v[2 * i + 1];
    write_reg(0, w * kRegsPerThread + in.rd, fp_out(v[0]), cycle + lat, m_.pc);
    report_.flops += static_cast<std::uint64_t>(2 * act.lanes - 1);
  }
}

void Engine::exec_invsqr(const Instruction& in, const ActiveSet& act,
                         std::uint64_t start) {
  const std::uint32_t lat = opt_.latency.for_instruction(in);
  for (int w = 0; w < act.wavefronts; ++w) {
    std::uint64_t cycle = start + static_cast<std::uint64_t>(w);
    int slotA = in.x ? in.ext_a() : w;
    float a = fp_in(read_reg(0, slotA * kRegsPerThread + in.ra, cycle, m_.pc));
    float r = static_cast<float>(1.0 / std::sqrt(static_cast<double>(a)));
    write_reg(0, w * kRegsPerThread + in.rd, fp_out(r), cycle + lat, m_.pc);
    ++report_.flops;
  }
}

std::uint32_t Engine::exec_control(const Instruction& in) {
  switch (in.op) {
    case Opcode::JMP:
      return in.imm;
    case Opcode::JSR:
      if (m_.returnStack.size() >= kReturnStackDepth) {
        if (opt_.fragmentMode) {
          halted_ = true;
          report_.reason = StopReason::OFF_END;
          return m_.pc + 1;
        }
        throw RunError("return stack overflow at instruction " +
                       std::to_string(m_.pc));
      }
      m_.returnStack.push_back(m_.pc + 1);
      return in.imm;
    case Opcode::RTS: {
      if (m_.returnStack.empty()) {
        if (opt_.fragmentMode) {
          halted_ = true;
          report_.reason = StopReason::OFF_END;
          return m_.pc + 1;
        }
        throw RunError("RTS with empty return stack at instruction " +
                       std::to_string(m_.pc));
      }
      std::uint32_t ret = m_.returnStack.back();
      m_.returnStack.pop_back();
      return ret;
    }
    case Opcode::LOOP:
      if (m_.loopCounter == 0) {
        if (opt_.mode == HazardMode::STRICT && !opt_.fragmentMode)
          throw RunError("LOOP with counter already 0 at instruction " +
                         std::to_string(m_.pc));
        if (opt_.mode != HazardMode::FAITHFUL)
          report_.notes.push_back("LOOP with counter 0 wrapped at instruction " +
                                  std::to_string(m_.pc));
      }
      --m_.loopCounter;
      return m_.loopCounter != 0 ? in.imm : m_.pc + 1;
    case Opcode::INIT:
      if (m_.loopCounter != 0 && opt_.mode != HazardMode::FAITHFUL)
        report_.notes.push_back("INIT while loop counter nonzero at instruction " +
                                std::to_string(m_.pc));
      m_.loopCounter = in.imm;
      return m_.pc + 1;
    case Opcode::STOP:
      m_.stopFlag = true;
      m_.running = false;
      halted_ = true;
      report_.reason = StopReason::STOPPED;
      return m_.pc + 1;
    default:
      return m_.pc + 1;
  }
}

TraceRecord Engine::step() {
  if (halted_ || m_.stopFlag)
    throw RunError("machine is stopped; reset before stepping");
  if (m_.pc >= m_.imem_depth()) {
    if (opt_.fragmentMode) {
      halted_ = true;
      report_.reason = StopReason::OFF_END;
      return {};
    }
    throw RunError("pc " + std::to_string(m_.pc) + " outside I-MEM");
  }

  Instruction in;
  std::string why;
  if (!try_decode(m_.imem[m_.pc], in, &why))
    throw RunError("at instruction " + std::to_string(m_.pc) + ": " + why);
  if (has_error(legality_check(in)))
    throw RunError("at instruction " + std::to_string(m_.pc) +
                   ": illegal operand combination for " + op_info(in.op).name);

  m_.running = true;
  const ActiveSet act = active_set(in.var, m_.cfg);
  const std::uint32_t cost = issue_cost(in, act);
  const std::uint64_t start = m_.cycleCounter;

  TraceRecord rec{m_.pc, in.op, in.typ, start, cost,
                  static_cast<std::uint32_t>(act.threads())};

  std::uint32_t next = m_.pc + 1;
  switch (in.op) {
    case Opcode::NOP:
      break;
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::MUL:
    case Opcode::AND:
    case Opcode::OR:
    case Opcode::XOR:
    case Opcode::NOT:
    case Opcode::LSL:
    case Opcode::LSR:
      exec_alu(in, act, start);
      break;
    case Opcode::LOD:
      exec_lod(in, act, start);
      break;
    case Opcode::STO:
      exec_sto(in, act, start);
      break;
    case Opcode::LODI:
      exec_lodi(in, act, start);
      break;
    case Opcode::TDX:
    case Opcode::TDY:
      exec_thread_id(in, act, start);
      break;
    case Opcode::DOT:
    case Opcode::SUM:
      exec_reduce(in, act, start);
      break;
    case Opcode::INVSQR:
      exec_invsqr(in, act, start);
      break;
    default:
      next = exec_control(in);
      break;
  }

  m_.cycleCounter = start + cost;
  m_.pc = next;
  ++report_.instructions;
  report_.classCycles[static_cast<int>(classify(in.op, in.typ))] += cost;
  if (opt_.collectTrace) report_.trace.push_back(rec);
  return rec;
}

ExecReport Engine::run(std::uint64_t maxCycles) {
  while (!halted_) {
    if (m_.cycleCounter >= maxCycles) {
      report_.reason = StopReason::MAX_CYCLES;
      break;
    }
    step();
  }
  drain_pending();
  report_.cycles = m_.cycleCounter;
  report_.finalPc = m_.pc;
  return report_;
}

}  // namespace egpu
