#include "egpu/machine.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace egpu {

void validate(const ThreadConfig& cfg) {
  if (cfg.dimX < 1 || cfg.dimY < 1)
    throw MachineError("thread dimensions must be at least 1x1");
  std::uint64_t total = std::uint64_t{cfg.dimX} * cfg.dimY;
  if (total > kMaxThreads)
    throw MachineError("thread count " + std::to_string(total) +
                       " exceeds " + std::to_string(kMaxThreads));
}

MachineState::MachineState(std::uint32_t sharedDepth, std::uint32_t imemDepth)
    : imem(imemDepth, 0), shared(sharedDepth, 0) {
  returnStack.reserve(kReturnStackDepth);
}

void MachineState::reset(const ThreadConfig& newCfg, bool poisonRegs) {
  validate(newCfg);
  cfg = newCfg;
  pc = 0;
  loopCounter = 0;
  returnStack.clear();
  stopFlag = false;
  cycleCounter = 0;
  running = false;
  regs.fill(poisonRegs ? 0xDEADBEEFu : 0u);
}

std::uint32_t& MachineState::reg(int lane, int addr) {
  return regs[static_cast<std::size_t>(lane) * kRegsPerLane +
              static_cast<std::size_t>(addr)];
}

std::uint32_t MachineState::reg(int lane, int addr) const {
  return regs[static_cast<std::size_t>(lane) * kRegsPerLane +
              static_cast<std::size_t>(addr)];
}

std::uint32_t MachineState::thread_reg(std::uint32_t t, int r) const {
  return reg(lane_of(t), slot_of(t) * kRegsPerThread + r);
}

void MachineState::host_write_shared(std::uint32_t addr, std::uint32_t value) {
  if (addr >= shared.size())
    throw MachineError("shared write at " + std::to_string(addr) +
                       " out of range (depth " +
                       std::to_string(shared.size()) + ")");
  shared[addr] = value;
}

std::uint32_t MachineState::host_read_shared(std::uint32_t addr) const {
  if (addr >= shared.size())
    throw MachineError("shared read at " + std::to_string(addr) +
                       " out of range (depth " +
                       std::to_string(shared.size()) + ")");
  return shared[addr];
}

void MachineState::load_imem(const ImemImage& img, std::uint32_t base) {
  std::uint64_t start = std::uint64_t{img.base} + base;
  std::uint64_t end = start + img.words.size();
  if (end > imem.size())
    throw MachineError("program of " + std::to_string(img.words.size()) +
                       " words at " + std::to_string(start) +
                       " exceeds I-MEM depth " + std::to_string(imem.size()));
  if (running && pc >= start && pc < end)
    throw MachineError("I-MEM update range [" + std::to_string(start) + "," +
                       std::to_string(end) + ") covers pc " +
                       std::to_string(pc) + " mid-run");
  for (std::size_t i = 0; i < img.words.size(); ++i)
    imem[start + i] = img.words[i] & kWordMask;
}

MachineState::Status MachineState::read_status() const {
  return {stopFlag, cycleCounter, pc};
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

void load_data_image_text(MachineState& m, const std::string& text,
                          const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::uint64_t cursor = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = trim(strip_hash_comment(line));
    if (body.empty()) continue;
    std::string where = origin + ":" + std::to_string(lineno);
    if (body[0] == '@') {
      std::string addr = trim(body.substr(1));
      try {
        cursor = std::stoull(addr, nullptr, 0);
      } catch (const std::exception&) {
        throw MachineError(where + ": bad @address '" + addr + "'");
      }
      continue;
    }
    std::string hex = body;
    if (hex.rfind("0x", 0) == 0 || hex.rfind("0X", 0) == 0) hex = hex.substr(2);
    if (hex.empty() || hex.size() > 8)
      throw MachineError(where + ": expected an 8-hex-digit word");
    std::uint32_t w = 0;
    for (char c : hex) {
      int digit;
      if (c >= '0' && c <= '9') digit = c - '0';
      else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
      else
        throw MachineError(where + ": bad hex digit '" + std::string(1, c) + "'");
      w = (w << 4) | static_cast<unsigned>(digit);
    }
    if (cursor >= m.shared.size())
      throw MachineError(where + ": address " + std::to_string(cursor) +
                         " out of range (depth " +
                         std::to_string(m.shared.size()) + ")");
    m.shared[cursor++] = w;
  }
}

void load_data_image(MachineState& m, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MachineError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  load_data_image_text(m, ss.str(), path);
}

std::string render_data_image(const MachineState& m, std::uint32_t base,
                              std::uint32_t count) {
  if (std::uint64_t{base} + count > m.shared.size())
    throw MachineError("dump range out of bounds");
  std::string out;
  char buf[16];
  if (base != 0) {
    std::snprintf(buf, sizeof buf, "@%u\n", base);
    out += buf;
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof buf, "%08x\n", m.shared[base + i]);
    out += buf;
  }
  return out;
}

void dump_data_image(const MachineState& m, const std::string& path,
                     std::uint32_t base, std::uint32_t count) {
  std::ofstream f(path);
  if (!f) throw MachineError("cannot open " + path + " for writing");
  f << render_data_image(m, base, count);
}

}  // namespace egpu
