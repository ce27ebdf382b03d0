// Command-line front end: assemble, disassemble, run, profile, trace, lint,
// generate reference kernels, and verify them against numerical oracles.
//
// Exit codes: 0 success; 1 input/verification/hazard failure; 2 usage error;
// 3 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "egpu/assembler.hpp"
#include "egpu/isa.hpp"
#include "egpu/kernels.hpp"
#include "egpu/machine.hpp"
#include "egpu/profile.hpp"
#include "egpu/sim.hpp"

namespace {

using namespace egpu;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ThreadConfig parse_threads(const std::string& spec) {
  ThreadConfig cfg;
  auto sep = spec.find_first_of("xX");
  try {
    if (sep == std::string::npos || sep == 0 || sep + 1 >= spec.size())
      throw std::invalid_argument("shape");
    std::size_t ax = 0, ay = 0;
    unsigned long dx = std::stoul(spec.substr(0, sep), &ax);
    unsigned long dy = std::stoul(spec.substr(sep + 1), &ay);
    if (ax != sep || ay != spec.size() - sep - 1)
      throw std::invalid_argument("shape");
    cfg.dimX = static_cast<std::uint32_t>(dx);
    cfg.dimY = static_cast<std::uint32_t>(dy);
    validate(cfg);
  } catch (const MachineError& e) {
    throw UsageError("--threads " + spec + ": " + e.what());
  } catch (const std::exception&) {
    throw UsageError("--threads expects XxY, e.g. 16x16; got '" + spec + "'");
  }
  return cfg;
}

LatencyModel parse_latencies(const std::vector<std::string>& specs) {
  LatencyModel lat;
  for (const auto& s : specs) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= s.size())
      throw UsageError("--latency expects name=cycles; got '" + s + "'");
    std::uint32_t cycles = 0;
    try {
      std::size_t used = 0;
      unsigned long v = std::stoul(s.substr(eq + 1), &used);
      if (used != s.size() - eq - 1 || v == 0 || v > 1000)
        throw std::invalid_argument("cycles");
      cycles = static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
      throw UsageError("--latency " + s + ": cycles must be 1..1000");
    }
    try {
      lat.set(s.substr(0, eq), cycles);
    } catch (const std::exception& e) {
      throw UsageError("--latency " + s + ": " + e.what());
    }
  }
  return lat;
}

HazardMode parse_hazard(const std::string& name) {
  if (name == "strict") return HazardMode::STRICT;
  if (name == "warn") return HazardMode::WARN;
  if (name == "faithful") return HazardMode::FAITHFUL;
  throw UsageError("--hazard must be strict, warn, or faithful");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("short write to " + path);
}

void emit(const std::string& outPath, const std::string& text) {
  if (outPath.empty())
    std::fputs(text.c_str(), stdout);
  else
    write_file(outPath, text);
}

// Shared machine/run flags for run, profile, and trace.
struct MachineFlags {
  std::string threads = "16x1";
  std::string hazard = "strict";
  std::vector<std::string> latencies;
  std::vector<std::string> dataPaths;
  std::uint64_t maxCycles = 10000000;
  std::uint32_t sharedDepth = kDefaultSharedDepth;
  std::uint32_t imemDepth = kDefaultImemDepth;
  bool poison = false;
  bool ftz = false;
};

void add_machine_flags(CLI::App* cmd, MachineFlags& mf) {
  cmd->add_option("--threads", mf.threads,
                  "thread block as XxY (default 16x1)");
  cmd->add_option("--hazard", mf.hazard,
                  "RAW hazard handling: strict, warn, or faithful")
      ->check(CLI::IsMember({"strict", "warn", "faithful"}));
  cmd->add_option("--latency", mf.latencies,
                  "issue-latency override name=cycles; repeatable "
                  "(fpOps intOps logicOps lodShared lodImmediate tdOps "
                  "dotSumSfu)");
  cmd->add_option("--data", mf.dataPaths,
                  "data image loaded into shared memory; repeatable");
  cmd->add_option("--max-cycles", mf.maxCycles,
                  "stop after this many cycles (default 10000000)");
  cmd->add_option("--shared-depth", mf.sharedDepth,
                  "shared memory words (default 4096)");
  cmd->add_option("--imem-depth", mf.imemDepth,
                  "instruction memory words (default 4096)");
  cmd->add_flag("--poison", mf.poison,
                "fill register files with 0xDEADBEEF instead of zero");
  cmd->add_flag("--ftz", mf.ftz, "flush subnormal FP32 values to zero");
}

struct RunResult {
  ExecReport report;
  MachineState machine;
};

RunResult execute(const std::string& imemPath, const MachineFlags& mf,
                  bool collectTrace) {
  RunResult res{ExecReport{},
                MachineState(mf.sharedDepth, mf.imemDepth)};
  ImemImage img = read_imem_image(imemPath);
  res.machine.reset(parse_threads(mf.threads), mf.poison);
  for (const auto& p : mf.dataPaths) load_data_image(res.machine, p);
  res.machine.load_imem(img);

  EngineOptions opt;
  opt.mode = parse_hazard(mf.hazard);
  opt.latency = parse_latencies(mf.latencies);
  opt.collectTrace = collectTrace;
  opt.flushToZero = mf.ftz;
  Engine eng(res.machine, opt);
  res.report = eng.run(mf.maxCycles);
  return res;
}

void report_diagnostics(const ExecReport& rep) {
  for (const auto& n : rep.notes) std::fprintf(stderr, "note: %s\n", n.c_str());
  for (const auto& h : rep.hazards)
    std::fprintf(stderr,
                 "warning: RAW hazard: instruction %u reads instruction %u "
                 "%llu cycle(s) early (%llu stale read(s))\n",
                 h.readerAddr, h.writerAddr,
                 static_cast<unsigned long long>(h.deficit),
                 static_cast<unsigned long long>(h.occurrences));
}

int do_asm(const std::string& in, const std::string& out,
           const std::string& symbolsOut) {
  std::vector<std::string> warnings;
  ImemImage img = assemble_file(in, &warnings);
  for (const auto& w : warnings) std::fprintf(stderr, "%s\n", w.c_str());
  emit(out, render_imem_image(img));
  if (!symbolsOut.empty()) write_file(symbolsOut, render_symbols(img));
  return 0;
}

int do_disasm(const std::string& in, const std::string& out) {
  emit(out, disassemble(read_imem_image(in)));
  return 0;
}

int do_run(const std::string& imemPath, const MachineFlags& mf,
           const std::string& dumpPath, std::uint32_t dumpBase,
           std::uint32_t dumpCount, const std::string& tracePath) {
  RunResult res = execute(imemPath, mf, !tracePath.empty());
  report_diagnostics(res.report);
  if (!tracePath.empty()) {
    std::string text;
    for (const auto& rec : res.report.trace) {
      text += render_trace_line(rec);
      text += '\n';
    }
    write_file(tracePath, text);
  }
  if (!dumpPath.empty()) {
    if (dumpCount == 0) dumpCount = res.machine.shared_depth() - dumpBase;
    dump_data_image(res.machine, dumpPath, dumpBase, dumpCount);
  }
  std::printf("cycles: %llu, stopped: %s\n",
              static_cast<unsigned long long>(res.report.cycles),
              res.machine.read_status().stopped ? "true" : "false");
  return 0;
}

int do_profile(const std::string& imemPath, const MachineFlags& mf, bool csv,
               const std::string& out) {
  RunResult res = execute(imemPath, mf, true);
  report_diagnostics(res.report);
  ProfileReport pr = aggregate(res.report.trace);
  pr.totalCycles = res.report.cycles;
  pr.flops = res.report.flops;
  pr.hazardDiagnostics = res.report.hazards.size();
  emit(out, render(pr, csv ? ReportFormat::CSV : ReportFormat::TABLE));
  return 0;
}

int do_trace(const std::string& imemPath, const MachineFlags& mf,
             const std::string& out) {
  RunResult res = execute(imemPath, mf, true);
  report_diagnostics(res.report);
  std::string text;
  for (const auto& rec : res.report.trace) {
    text += render_trace_line(rec);
    text += '\n';
  }
  emit(out, text);
  return 0;
}

int do_lint(const std::string& path, const std::string& threads,
            const std::vector<std::string>& latencies,
            std::uint64_t maxCycles) {
  ImemImage img;
  if (path.size() > 2 && path.rfind(".s") == path.size() - 2) {
    img = assemble_file(path);
  } else {
    img = read_imem_image(path);
  }
  auto findings = lint_hazards(img, parse_threads(threads),
                               parse_latencies(latencies), maxCycles);
  std::fputs(render_lint(findings).c_str(), stdout);
  if (findings.empty()) {
    std::printf("no RAW hazards found\n");
    return 0;
  }
  return 1;
}

int write_package(const KernelPackage& pkg, const std::string& dir) {
  std::string base = dir.empty() ? pkg.name : dir + "/" + pkg.name;
  write_file(base + ".s", pkg.source);
  write_file(base + ".imem", render_imem_image(pkg.image));
  write_file(base + ".data.hex", render_data_hex(pkg.data));
  write_file(base + ".layout.txt", pkg.layout);
  std::printf("wrote %s.s, %s.imem, %s.data.hex, %s.layout.txt\n",
              base.c_str(), base.c_str(), base.c_str(), base.c_str());
  std::printf("run with: egpu run %s.imem --data %s.data.hex --threads %ux%u\n",
              base.c_str(), base.c_str(), pkg.cfg.dimX, pkg.cfg.dimY);
  return 0;
}

FftInput parse_fft_input(const std::string& name) {
  if (name == "random") return FftInput::RANDOM;
  if (name == "impulse") return FftInput::IMPULSE;
  if (name == "constant") return FftInput::CONSTANT;
  throw UsageError("--input must be random, impulse, or constant");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "40-bit SIMT soft-GPU toolchain: assembler, cycle-accurate simulator, "
      "profiler, hazard lint, and reference kernels"};
  app.require_subcommand(1);

  // asm
  std::string asmIn, asmOut, asmSymbols;
  auto* cmdAsm = app.add_subcommand("asm", "assemble source to an I-MEM image");
  cmdAsm->add_option("input", asmIn, "assembly source file")->required();
  cmdAsm->add_option("-o,--output", asmOut, "output image (default stdout)");
  cmdAsm->add_option("--symbols", asmSymbols, "write label addresses here");

  // disasm
  std::string disIn, disOut;
  auto* cmdDis =
      app.add_subcommand("disasm", "disassemble an I-MEM image to source");
  cmdDis->add_option("input", disIn, "I-MEM image file")->required();
  cmdDis->add_option("-o,--output", disOut, "output file (default stdout)");

  // run
  std::string runIn, runDump, runTrace;
  std::uint32_t runDumpBase = 0, runDumpCount = 0;
  MachineFlags runFlags;
  auto* cmdRun = app.add_subcommand("run", "execute a program");
  cmdRun->add_option("program", runIn, "I-MEM image file")->required();
  add_machine_flags(cmdRun, runFlags);
  cmdRun->add_option("--dump", runDump, "write shared memory here afterwards");
  cmdRun->add_option("--dump-base", runDumpBase, "first word to dump");
  cmdRun->add_option("--dump-count", runDumpCount,
                     "words to dump (default: through the end)");
  cmdRun->add_option("--trace", runTrace, "write an issue trace here");

  // profile
  std::string profIn, profOut;
  bool profCsv = false;
  MachineFlags profFlags;
  auto* cmdProf =
      app.add_subcommand("profile", "run and report cycles per class");
  cmdProf->add_option("program", profIn, "I-MEM image file")->required();
  add_machine_flags(cmdProf, profFlags);
  cmdProf->add_flag("--csv", profCsv, "machine-readable output");
  cmdProf->add_option("-o,--output", profOut, "output file (default stdout)");

  // trace
  std::string traceIn, traceOut;
  MachineFlags traceFlags;
  auto* cmdTrace =
      app.add_subcommand("trace", "run and print one line per instruction");
  cmdTrace->add_option("program", traceIn, "I-MEM image file")->required();
  add_machine_flags(cmdTrace, traceFlags);
  cmdTrace->add_option("-o,--output", traceOut, "output file (default stdout)");

  // lint
  std::string lintIn, lintThreads = "16x1";
  std::vector<std::string> lintLatencies;
  std::uint64_t lintMaxCycles = 1000000;
  auto* cmdLint =
      app.add_subcommand("lint", "find RAW hazards; exits 1 if any");
  cmdLint->add_option("program", lintIn, "I-MEM image, or source if *.s")
      ->required();
  cmdLint->add_option("--threads", lintThreads,
                      "thread block as XxY (default 16x1)");
  cmdLint->add_option("--latency", lintLatencies,
                      "issue-latency override name=cycles; repeatable");
  cmdLint->add_option("--max-cycles", lintMaxCycles,
                      "analysis budget (default 1000000)");

  // gen-fft
  std::uint32_t fftN = 256;
  std::uint64_t fftSeed = 0xC0FFEE;
  std::string fftInput = "random", fftDir;
  bool fftBitrev = false;
  auto* cmdGenFft =
      app.add_subcommand("gen-fft", "generate the radix-2 FFT kernel");
  cmdGenFft->add_option("--n", fftN, "length, power of two 32..1024");
  cmdGenFft->add_option("--seed", fftSeed, "input fixture seed");
  cmdGenFft->add_option("--input", fftInput, "random, impulse, or constant")
      ->check(CLI::IsMember({"random", "impulse", "constant"}));
  cmdGenFft->add_flag("--bit-reversed", fftBitrev,
                      "skip the reorder pass; output stays bit-reversed");
  cmdGenFft->add_option("-o,--output-dir", fftDir, "directory (default cwd)");

  // gen-qrd
  std::uint64_t qrdSeed = 0xC0FFEE;
  std::string qrdDir;
  auto* cmdGenQrd = app.add_subcommand(
      "gen-qrd", "generate the 16x16 Gram-Schmidt QR kernel");
  cmdGenQrd->add_option("--seed", qrdSeed, "matrix fixture seed");
  cmdGenQrd->add_option("-o,--output-dir", qrdDir, "directory (default cwd)");

  // verify
  auto* cmdVerify = app.add_subcommand(
      "verify", "run a kernel against its oracle; exits 0 on pass");
  cmdVerify->require_subcommand(1);
  std::uint32_t vFftN = 256;
  std::uint64_t vFftSeed = 0xC0FFEE;
  std::string vFftInput = "random";
  bool vFftBitrev = false;
  double vFftTol = 1e-3;
  auto* cmdVerifyFft =
      cmdVerify->add_subcommand("fft", "FFT vs direct double-precision DFT");
  cmdVerifyFft->add_option("--n", vFftN, "length, power of two 32..1024");
  cmdVerifyFft->add_option("--seed", vFftSeed, "input fixture seed");
  cmdVerifyFft->add_option("--input", vFftInput,
                           "random, impulse, or constant")
      ->check(CLI::IsMember({"random", "impulse", "constant"}));
  cmdVerifyFft->add_flag("--bit-reversed", vFftBitrev,
                         "verify bit-reversed output order");
  cmdVerifyFft->add_option("--tol", vFftTol,
                           "max relative error (default 1e-3)");
  std::uint64_t vQrdSeed = 0xC0FFEE;
  double vQrdResid = 1e-4, vQrdOrth = 1e-3;
  auto* cmdVerifyQrd = cmdVerify->add_subcommand(
      "qrd", "QR factorization vs double-precision Gram-Schmidt");
  cmdVerifyQrd->add_option("--seed", vQrdSeed, "matrix fixture seed");
  cmdVerifyQrd->add_option("--resid-tol", vQrdResid,
                           "max |QR-A| relative to max |A| (default 1e-4)");
  cmdVerifyQrd->add_option("--orth-tol", vQrdOrth,
                           "max |QtQ-I| entry (default 1e-3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmdAsm->parsed()) return do_asm(asmIn, asmOut, asmSymbols);
    if (cmdDis->parsed()) return do_disasm(disIn, disOut);
    if (cmdRun->parsed())
      return do_run(runIn, runFlags, runDump, runDumpBase, runDumpCount,
                    runTrace);
    if (cmdProf->parsed()) return do_profile(profIn, profFlags, profCsv,
                                             profOut);
    if (cmdTrace->parsed()) return do_trace(traceIn, traceFlags, traceOut);
    if (cmdLint->parsed())
      return do_lint(lintIn, lintThreads, lintLatencies, lintMaxCycles);
    if (cmdGenFft->parsed()) {
      FftPlan plan;
      plan.n = fftN;
      plan.seed = fftSeed;
      plan.input = parse_fft_input(fftInput);
      plan.naturalOrder = !fftBitrev;
      return write_package(gen_fft(plan), fftDir);
    }
    if (cmdGenQrd->parsed()) {
      QrdPlan plan;
      plan.seed = qrdSeed;
      return write_package(gen_qrd(plan), qrdDir);
    }
    if (cmdVerifyFft->parsed()) {
      FftPlan plan;
      plan.n = vFftN;
      plan.seed = vFftSeed;
      plan.input = parse_fft_input(vFftInput);
      plan.naturalOrder = !vFftBitrev;
      FftCheck chk = verify_fft(plan, vFftTol);
      std::printf("fft%u %s: cycles %llu, max relative error %.3e "
                  "(tolerance %.0e)\n",
                  plan.n, vFftInput.c_str(),
                  static_cast<unsigned long long>(chk.report.cycles),
                  chk.maxRelErr, vFftTol);
      std::printf("%s\n", chk.pass ? "PASS" : "FAIL");
      return chk.pass ? 0 : 1;
    }
    if (cmdVerifyQrd->parsed()) {
      QrdPlan plan;
      plan.seed = vQrdSeed;
      QrdCheck chk = verify_qrd(plan, vQrdResid, vQrdOrth);
      std::printf("qrd16: cycles %llu, |QR-A| %.3e (tolerance %.0e), "
                  "|QtQ-I| %.3e (tolerance %.0e), upper-triangular %s\n",
                  static_cast<unsigned long long>(chk.report.cycles),
                  chk.residual, vQrdResid, chk.orthErr, vQrdOrth,
                  chk.upperTriangular ? "yes" : "NO");
      std::printf("%s\n", chk.pass ? "PASS" : "FAIL");
      return chk.pass ? 0 : 1;
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const HazardError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
