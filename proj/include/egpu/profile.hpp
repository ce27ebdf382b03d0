#ifndef EGPU_PROFILE_HPP
#define EGPU_PROFILE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "egpu/isa.hpp"

namespace egpu {

struct TraceRecord;  // sim.hpp

enum class ProfileClass : std::uint8_t {
  LOD_IMMEDIATE = 0,
  LOGIC,
  INT,
  LOD_INDEXED,
  FP32_ADDSUB,
  FP32_MULTIPLY,
  FP32_DOT,
  FP32_SFU,
  STO_INDEXED,
  NOP,
  CONTROL,
};
inline constexpr int kProfileClassCount = 11;

// Every (opcode, type) pair lands in exactly one class.
ProfileClass classify(Opcode op, Type typ);
const char* class_label(ProfileClass c);  // table heading, e.g. "FP32 Add/Sub"
const char* class_token(ProfileClass c);  // CSV token, e.g. "FP32_ADDSUB"

using ClassCycles = std::array<std::uint64_t, kProfileClassCount>;

struct ProfileReport {
  ClassCycles cycles{};
  std::uint64_t totalCycles = 0;
  std::uint64_t flops = 0;
  std::uint64_t staticInstructions = 0;
  std::uint64_t hazardDiagnostics = 0;

  double percent(ProfileClass c) const;
  double flops_per_cycle() const;
};

ProfileReport aggregate(const std::vector<TraceRecord>& trace);

enum class ReportFormat { TABLE, CSV };

// TABLE renders all eleven classes plus summary lines; CSV renders a
// "class,cycles,percent" header and one row per class, nothing else.
std::string render(const ProfileReport& report, ReportFormat format);

}  // namespace egpu

#endif
