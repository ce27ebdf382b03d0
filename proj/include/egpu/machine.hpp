#ifndef EGPU_MACHINE_HPP
#define EGPU_MACHINE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "egpu/isa.hpp"

namespace egpu {

struct MachineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kLanes = 16;
inline constexpr int kRegsPerLane = 512;
inline constexpr int kRegsPerThread = 16;
inline constexpr int kMaxThreads = 512;
inline constexpr int kMaxWavefronts = kMaxThreads / kLanes;
inline constexpr int kReturnStackDepth = 8;
inline constexpr std::uint32_t kDefaultSharedDepth = 4096;
inline constexpr std::uint32_t kDefaultImemDepth = 4096;

// A 2D thread block. Threads are numbered t = y*dimX + x and mapped to the
// register file as lane = t % 16, slot = t / 16.
struct ThreadConfig {
  std::uint32_t dimX = 16;
  std::uint32_t dimY = 1;

  std::uint32_t threads() const { return dimX * dimY; }
  std::uint32_t wavefronts() const { return (threads() + kLanes - 1) / kLanes; }
  bool operator==(const ThreadConfig&) const = default;
};

void validate(const ThreadConfig& cfg);  // throws MachineError

inline constexpr int lane_of(std::uint32_t t) { return static_cast<int>(t % kLanes); }
inline constexpr int slot_of(std::uint32_t t) { return static_cast<int>(t / kLanes); }

struct MachineState {
  explicit MachineState(std::uint32_t sharedDepth = kDefaultSharedDepth,
                        std::uint32_t imemDepth = kDefaultImemDepth);

  ThreadConfig cfg{};
  std::vector<Word> imem;                          // imemDepth words, zero = NOP
  std::array<std::uint32_t, kLanes * kRegsPerLane> regs{};
  std::vector<std::uint32_t> shared;               // sharedDepth words

  std::uint32_t pc = 0;
  std::uint32_t loopCounter = 0;
  std::vector<std::uint32_t> returnStack;
  bool stopFlag = false;
  std::uint64_t cycleCounter = 0;
  bool running = false;  // set while a program is mid-run (started, not stopped)

  std::uint32_t shared_depth() const { return static_cast<std::uint32_t>(shared.size()); }
  std::uint32_t imem_depth() const { return static_cast<std::uint32_t>(imem.size()); }

  // Clears control state and register files for a new thread configuration.
  // Shared memory and I-MEM contents are host-managed and preserved.
  void reset(const ThreadConfig& cfg, bool poisonRegs = false);

  std::uint32_t& reg(int lane, int addr);
  std::uint32_t reg(int lane, int addr) const;
  // Register r (0..15) of thread t under the current config.
  std::uint32_t thread_reg(std::uint32_t t, int r) const;

  // Host access, valid at instruction boundaries. Out-of-range throws.
  void host_write_shared(std::uint32_t addr, std::uint32_t value);
  std::uint32_t host_read_shared(std::uint32_t addr) const;

  // Copies a program into I-MEM at img.base + base offset. While a program is
  // mid-run the destination range must not cover the current pc.
  void load_imem(const ImemImage& img, std::uint32_t base = 0);

  struct Status {
    bool stopped;
    std::uint64_t cycles;
    std::uint32_t pc;
  };
  Status read_status() const;
};

// Data image file: one 8-hex-digit 32-bit word per line, '#' comments,
// blank lines ignored. Words load at ascending addresses from 0 unless an
// '@addr' line (decimal or 0x hex) repositions the cursor.
void load_data_image(MachineState& m, const std::string& path);
void load_data_image_text(MachineState& m, const std::string& text,
                          const std::string& origin);
std::string render_data_image(const MachineState& m, std::uint32_t base,
                              std::uint32_t count);
void dump_data_image(const MachineState& m, const std::string& path,
                     std::uint32_t base, std::uint32_t count);

}  // namespace egpu

#endif
