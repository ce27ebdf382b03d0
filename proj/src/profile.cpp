#include "egpu/profile.hpp"

#include <cstdio>
#include <set>

#include "egpu/sim.hpp"

namespace egpu {

ProfileClass classify(Opcode op, Type typ) {
  switch (op) {
    case Opcode::LODI:
      return ProfileClass::LOD_IMMEDIATE;
    case Opcode::AND:
    case Opcode::OR:
    case Opcode::XOR:
    case Opcode::NOT:
    case Opcode::LSL:
    case Opcode::LSR:
      return ProfileClass::LOGIC;
    case Opcode::ADD:
    case Opcode::SUB:
      return typ == Type::FP32 ? ProfileClass::FP32_ADDSUB : ProfileClass::INT;
    case Opcode::MUL:
      return typ == Type::FP32 ? ProfileClass::FP32_MULTIPLY : ProfileClass::INT;
    case Opcode::TDX:
    case Opcode::TDY:
      return ProfileClass::INT;
    case Opcode::LOD:
      return ProfileClass::LOD_INDEXED;
    case Opcode::DOT:
    case Opcode::SUM:
      return ProfileClass::FP32_DOT;
    case Opcode::INVSQR:
      return ProfileClass::FP32_SFU;
    case Opcode::STO:
      return ProfileClass::STO_INDEXED;
    case Opcode::NOP:
      return ProfileClass::NOP;
    default:
      return ProfileClass::CONTROL;
  }
}

const char* class_label(ProfileClass c) {
  switch (c) {
    case ProfileClass::LOD_IMMEDIATE: return "LOD immediate";
    case ProfileClass::LOGIC: return "Logic";
    case ProfileClass::INT: return "Integer";
    case ProfileClass::LOD_INDEXED: return "LOD indexed";
    case ProfileClass::FP32_ADDSUB: return "FP32 Add/Sub";
    case ProfileClass::FP32_MULTIPLY: return "FP32 Multiply";
    case ProfileClass::FP32_DOT: return "FP32 Dot/Sum";
    case ProfileClass::FP32_SFU: return "FP32 SFU";
    case ProfileClass::STO_INDEXED: return "STO indexed";
    case ProfileClass::NOP: return "NOP";
    case ProfileClass::CONTROL: return "Control";
  }
  return "?";
}

const char* class_token(ProfileClass c) {
  switch (c) {
    case ProfileClass::LOD_IMMEDIATE: return "LOD_IMMEDIATE";
    case ProfileClass::LOGIC: return "LOGIC";
    case ProfileClass::INT: return "INT";
    case ProfileClass::LOD_INDEXED: return "LOD_INDEXED";
    case ProfileClass::FP32_ADDSUB: return "FP32_ADDSUB";
    case ProfileClass::FP32_MULTIPLY: return "FP32_MULTIPLY";
    case ProfileClass::FP32_DOT: return "FP32_DOT";
    case ProfileClass::FP32_SFU: return "FP32_SFU";
    case ProfileClass::STO_INDEXED: return "STO_INDEXED";
    case ProfileClass::NOP: return "NOP";
    case ProfileClass::CONTROL: return "CONTROL";
  }
  return "?";
}

double ProfileReport::percent(ProfileClass c) const {
  if (totalCycles == 0) return 0.0;
  return 100.0 * static_cast<double>(cycles[static_cast<int>(c)]) /
         static_cast<double>(totalCycles);
}

double ProfileReport::flops_per_cycle() const {
  if (totalCycles == 0) return 0.0;
  return static_cast<double>(flops) / static_cast<double>(totalCycles);
}

ProfileReport aggregate(const std::vector<TraceRecord>& trace) {
  ProfileReport rep;
  std::set<std::uint32_t> sites;
  for (const auto& rec : trace) {
    rep.cycles[static_cast<int>(classify(rec.op, rec.typ))] += rec.issueCycles;
    rep.totalCycles += rec.issueCycles;
    sites.insert(rec.addr);
  }
  rep.staticInstructions = sites.size();
  return rep;
}

std::string render(const ProfileReport& report, ReportFormat format) {
  std::string out;
  char line[128];
  if (format == ReportFormat::CSV) {
    out += "class,cycles,percent\n";
    for (int i = 0; i < kProfileClassCount; ++i) {
      auto c = static_cast<ProfileClass>(i);
      std::snprintf(line, sizeof line, "%s,%llu,%.1f\n", class_token(c),
                    static_cast<unsigned long long>(report.cycles[i]),
                    report.percent(c));
      out += line;
    }
    return out;
  }
  std::snprintf(line, sizeof line, "%-16s %10s %8s\n", "class", "cycles",
                "percent");
  out += line;
  for (int i = 0; i < kProfileClassCount; ++i) {
    auto c = static_cast<ProfileClass>(i);
    std::snprintf(line, sizeof line, "%-16s %10llu %7.1f%%\n", class_label(c),
                  static_cast<unsigned long long>(report.cycles[i]),
                  report.percent(c));
    out += line;
  }
  std::snprintf(line, sizeof line, "%-16s %10llu %7.1f%%\n", "total",
                static_cast<unsigned long long>(report.totalCycles),
                report.totalCycles ? 100.0 : 0.0);
  out += line;
  std::snprintf(line, sizeof line, "instructions (static): %llu\n",
                static_cast<unsigned long long>(report.staticInstructions));
  out += line;
  std::snprintf(line, sizeof line, "flops: %llu\n",
                static_cast<unsigned long long>(report.flops));
  out += line;
  std::snprintf(line, sizeof line, "flops/cycle: %.2f\n",
                report.flops_per_cycle());
  out += line;
  std::snprintf(line, sizeof line, "hazard diagnostics: %llu\n",
                static_cast<unsigned long long>(report.hazardDiagnostics));
  out += line;
  return out;
}

}  // namespace egpu
