#include "egpu/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace egpu {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint32_t f2b(float f) { return std::bit_cast<std::uint32_t>(f); }
float b2f(std::uint32_t b) { return std::bit_cast<float>(b); }

bool is_pow2(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

int log2u(std::uint32_t v) {
  int n = 0;
  while ((1u << n) < v) ++n;
  return n;
}

std::uint32_t bit_reverse(std::uint32_t v, int bits) {
  std::uint32_t r = 0;
  for (int i = 0; i < bits; ++i) r |= ((v >> i) & 1u) << (bits - 1 - i);
  return r;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Statements the assembler would produce from one source line.
int statements_in_line(const std::string& raw) {
  std::string line = raw;
  auto comment = line.find("//");
  if (comment != std::string::npos) line = line.substr(0, comment);
  int count = 0;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    auto semi = line.find(';', pos);
    std::string frag = trim(semi == std::string::npos
                                ? line.substr(pos)
                                : line.substr(pos, semi - pos));
    pos = semi == std::string::npos ? line.size() + 1 : semi + 1;
    while (!frag.empty()) {
      auto colon = frag.find(':');
      if (colon == std::string::npos) break;
      frag = trim(frag.substr(colon + 1));
    }
    if (!frag.empty()) ++count;
  }
  return count;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double unit_range(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

std::string repair_hazards(const std::string& source, const ThreadConfig& cfg,
                           const LatencyModel& lat, int maxRounds) {
  std::vector<std::string> lines;
  {
    std::istringstream ss(source);
    std::string l;
    while (std::getline(ss, l)) lines.push_back(l);
  }
  for (int round = 0; round < maxRounds; ++round) {
    std::string text;
    for (const auto& l : lines) {
      text += l;
      text += '\n';
    }
    ImemImage img = assemble(text, "<generated>");
    auto findings = lint_hazards(img, cfg, lat);
    if (findings.empty()) return text;

    const LintFinding& f = findings.front();
    if (f.deficit > 64)
      throw KernelError("hazard repair needs an implausible gap of " +
                        std::to_string(f.deficit) + " cycles");
    std::uint32_t seen = 0;
    std::size_t idx = 0;
    bool found = false;
    for (; idx < lines.size(); ++idx) {
      int s = statements_in_line(lines[idx]);
      if (s == 0) continue;
      if (seen + static_cast<std::uint32_t>(s) > f.readerAddr) {
        found = true;
        break;
      }
      seen += static_cast<std::uint32_t>(s);
    }
    if (!found)
      throw KernelError("hazard repair lost instruction " +
                        std::to_string(f.readerAddr));
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(idx),
                 static_cast<std::size_t>(f.deficit), "NOP;");
  }
  throw KernelError("hazard repair did not converge");
}

KernelPackage gen_fft(const FftPlan& plan) {
  const std::uint32_t n = plan.n;
  if (!is_pow2(n) || n < 32 || n > 1024)
    throw KernelError("FFT length must be a power of two in 32..1024");
  const std::uint32_t half = n / 2;
  const int passes = log2u(n);
  const ThreadConfig cfg{16, half / 16};

  std::ostringstream s;
  s << "// " << n << "-point radix-2 decimation-in-frequency FFT\n";
  s << "// one butterfly per thread; data transformed in place\n";
  s << "TDY R7;\n";
  s << "LODI R6,#16;\n";
  s << "MUL.INT32 R7,R7,R6;\n";
  s << "TDX R1;\n";
  s << "ADD.INT32 R1,R1,R7;      // thread id\n";
  s << "LODI R5,#1;\n";
  s << "LODI R10,#" << half - 1 << ";      // full index mask\n";
  s << "LODI R4,#" << half - 1 << ";      // in-group mask, first pass\n";
  s << "XOR.INT32 R3,R10,R4;     // group base mask, first pass\n";
  s << "LODI R9,#1;              // twiddle shift, first pass\n";
  s << "LODI R11,#" << n << ";      // words to the lower input\n";
  s << "INIT " << passes << ";\n";
  s << "pass:\n";
  s << "AND.INT32 R6,R1,R3;      // group base bits\n";
  s << "AND.INT32 R7,R1,R4;      // index inside the group\n";
  s << "LSL.INT32 R8,R6,R5;\n";
  s << "ADD.INT32 R6,R7,R8;      // upper element index\n";
  s << "ADD.INT32 R2,R6,R6;      // upper word address\n";
  s << "LSL.INT32 R3,R7,R9;      // twiddle word offset\n";
  s << "ADD.INT32 R6,R2,R11;     // lower word address\n";
  s << "LOD R12,(R2)+0;          // upper re\n";
  s << "LOD R13,(R2)+1;          // upper im\n";
  s << "LOD R14,(R6)+0;          // lower re\n";
  s << "LOD R15,(R6)+1;          // lower im\n";
  s << "LOD R0,(R3)+" << 2 * n << ";       // twiddle re\n";
  s << "LOD R7,(R3)+" << 2 * n + 1 << ";       // twiddle im\n";
  s << "ADD.FP32 R8,R12,R14;\n";
  s << "STO R8,(R2)+0;           // upper result re\n";
  s << "ADD.FP32 R8,R13,R15;\n";
  s << "STO R8,(R2)+1;           // upper result im\n";
  s << "SUB.FP32 R12,R12,R14;    // difference re\n";
  s << "SUB.FP32 R13,R13,R15;    // difference im\n";
  s << "MUL.FP32 R14,R12,R0;\n";
  s << "MUL.FP32 R15,R13,R7;\n";
  s << "SUB.FP32 R14,R14,R15;\n";
  s << "STO R14,(R6)+0;          // lower result re\n";
  s << "MUL.FP32 R14,R12,R7;\n";
  s << "MUL.FP32 R15,R13,R0;\n";
  s << "ADD.FP32 R14,R14,R15;\n";
  s << "STO R14,(R6)+1;          // lower result im\n";
  s << "LSR.INT32 R4,R4,R5;      // masks for the next pass\n";
  s << "LSR.INT32 R11,R11,R5;\n";
  s << "ADD.INT32 R9,R9,R5;\n";
  s << "XOR.INT32 R3,R10,R4;\n";
  s << "LOOP pass;\n";
  if (plan.naturalOrder) {
    s << "// reorder: element e moves to the address stored at " << 3 * n
      << "+e\n";
    s << "ADD.INT32 R2,R1,R1;      // word address of element t\n";
    s << "LODI R6,#" << n << ";\n";
    s << "ADD.INT32 R6,R2,R6;      // word address of element t+" << half
      << "\n";
    s << "LOD R3,(R1)+" << 3 * n << ";\n";
    s << "LOD R7,(R1)+" << 3 * n + half << ";\n";
    s << "LOD R12,(R2)+0;\n";
    s << "LOD R13,(R2)+1;\n";
    s << "LOD R14,(R6)+0;\n";
    s << "LOD R15,(R6)+1;\n";
    s << "STO R12,(R3)+0;\n";
    s << "STO R13,(R3)+1;\n";
    s << "STO R14,(R7)+0;\n";
    s << "STO R15,(R7)+1;\n";
  }
  s << "STOP;\n";

  KernelPackage pkg;
  pkg.name = "fft" + std::to_string(n);
  pkg.cfg = cfg;
  pkg.source = repair_hazards(s.str(), cfg);
  pkg.image = assemble(pkg.source, pkg.name + ".s");

  pkg.data.assign(4 * n, 0u);
  std::uint64_t rng = plan.seed;
  switch (plan.input) {
    case FftInput::RANDOM:
      for (std::uint32_t i = 0; i < n; ++i) {
        pkg.data[2 * i] = f2b(static_cast<float>(unit_range(rng)));
        pkg.data[2 * i + 1] = f2b(static_cast<float>(unit_range(rng)));
      }
      break;
    case FftInput::IMPULSE:
      pkg.data[0] = f2b(1.0f);
      break;
    case FftInput::CONSTANT:
      for (std::uint32_t i = 0; i < n; ++i) pkg.data[2 * i] = f2b(1.0f);
      break;
  }
  for (std::uint32_t k = 0; k < half; ++k) {
    double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    pkg.data[2 * n + 2 * k] = f2b(static_cast<float>(std::cos(ang)));
    pkg.data[2 * n + 2 * k + 1] = f2b(static_cast<float>(std::sin(ang)));
  }
  for (std::uint32_t e = 0; e < n; ++e)
    pkg.data[3 * n + e] = 2 * bit_reverse(e, passes);

  std::ostringstream lay;
  lay << "threads: " << cfg.dimX << "x" << cfg.dimY << " (" << cfg.threads()
      << ")\n";
  lay << "shared memory map (32-bit words):\n";
  lay << "  [0, " << 2 * n << ")  complex samples, re/im interleaved, "
      << "transformed in place\n";
  lay << "  [" << 2 * n << ", " << 3 * n << ")  twiddle table, re/im "
      << "interleaved, k in [0, " << half << ")\n";
  lay << "  [" << 3 * n << ", " << 4 * n << ")  destination word address "
      << "per element (reorder table)\n";
  lay << "output order: "
      << (plan.naturalOrder ? "natural" : "bit-reversed") << "\n";
  pkg.layout = lay.str();
  return pkg;
}

KernelPackage gen_qrd(const QrdPlan& plan) {
  if (plan.dim != 16)
    throw KernelError("QRD supports dim 16 only (one element per thread)");
  const ThreadConfig cfg{16, 16};

  std::ostringstream s;
  s << "// 16x16 Modified Gram-Schmidt QR factorization\n";
  s << "// thread (lane i, slot j) owns element (row i, column j)\n";
  s << "LODI R0,#0;\n";
  s << "TDX R7;                  // row index i\n";
  s << "TDY R12;                 // column index j\n";
  s << "LODI R5,#16;\n";
  s << "LODI R13,#21;            // shift that flags j < k\n";
  s << "MUL.INT32 R15,R12,R5;    // 16*j\n";
  s << "LODI R6,#0;              // 16*k\n";
  s << "ADD.INT32 R4,R7,R15;     // element address i + 16*j\n";
  s << "LOD R1,(R4)+0;           // a_ij\n";
  s << "INIT 16;\n";
  s << "col:\n";
  s << "ADD.INT32.D1 R8,R7,R6;   // first wavefront: column-k address\n";
  s << "SUB.INT32 R11,R15,R6;    // 16*(j-k)\n";
  s << "LOD.D1 R9,(R8)+0;        // first wavefront holds column k\n";
  s << "LSR.INT32 R14,R11,R13;   // 0 on/above the diagonal, 2047 below\n";
  s << "ADD.INT32 R10,R6,R12;    // R address, row k column j\n";
  s << "DOT.D1 R2,R9,R9;         // squared column norm\n";
  s << "ADD.INT32 R10,R10,R14;   // below-diagonal stores spill clear\n";
  s << "ADD.INT32 R11,R7,R6;     // broadcast fetch address i + 16*k\n";
  s << "INVSQR.D1 R2,R2;         // inverse norm\n";
  s << "ADD.INT32 R6,R6,R5;      // advance k\n";
  s << "STO.W1.D1 R2,(R0)+768;   // inverse norm to scratch\n";
  s << "LOD.D1 R2,(R0)+768;      // first wavefront reads it back\n";
  s << "MUL.FP32.D1 R9,R9,R2;    // q_k = a_k * inverse norm\n";
  s << "STO.D1 R9,(R8)+256;      // column k of Q\n";
  s << "LOD R3,(R11)+256;        // every thread fetches q_k(i)\n";
  s << "DOT R14,R3,R1;           // r_kj per column\n";
  s << "STO.W1 R14,(R10)+512;    // row k of R\n";
  s << "STO.W1 R14,(R12)+784;    // stage r_kj for broadcast\n";
  s << "LOD R10,(R12)+784;       // every thread fetches r_kj\n";
  s << "MUL.FP32 R14,R10,R3;     // projection component\n";
  s << "SUB.FP32 R1,R1,R14;      // a_ij -= r_kj * q_k(i)\n";
  s << "STO R1,(R4)+0;           // write the updated column set back\n";
  s << "LOOP col;\n";
  s << "STOP;\n";

  KernelPackage pkg;
  pkg.name = "qrd16";
  pkg.cfg = cfg;
  pkg.source = repair_hazards(s.str(), cfg);
  pkg.image = assemble(pkg.source, pkg.name + ".s");

  pkg.data.assign(800, 0u);
  std::uint64_t rng = plan.seed;
  for (std::uint32_t j = 0; j < 16; ++j)
    for (std::uint32_t i = 0; i < 16; ++i)
      pkg.data[i + 16 * j] = f2b(static_cast<float>(unit_range(rng)));

  std::ostringstream lay;
  lay << "threads: 16x16 (256)\n";
  lay << "shared memory map (32-bit words):\n";
  lay << "  [0, 256)    A, column-major, consumed during factorization\n";
  lay << "  [256, 512)  Q, column-major\n";
  lay << "  [512, 768)  R, row-major; strict lower triangle never written\n";
  lay << "  [768]       inverse-norm scratch\n";
  lay << "  [784, 800)  row-broadcast scratch\n";
  lay << "  [2063, 2303)  spill range for masked stores (discarded)\n";
  pkg.layout = lay.str();
  return pkg;
}

ExecReport run_kernel(const KernelPackage& pkg, MachineState& m,
                      const EngineOptions& opt, std::uint64_t maxCycles) {
  validate(pkg.cfg);
  if (m.shared_depth() < pkg.sharedDepth)
    throw KernelError("machine shared memory smaller than the kernel needs");
  if (m.imem_depth() < pkg.image.size())
    throw KernelError("machine I-MEM smaller than the kernel needs");
  m.reset(pkg.cfg);
  std::fill(m.shared.begin(), m.shared.end(), 0u);
  std::copy(pkg.data.begin(), pkg.data.end(), m.shared.begin());
  std::fill(m.imem.begin(), m.imem.end(), Word{0});
  m.load_imem(pkg.image);
  Engine eng(m, opt);
  return eng.run(maxCycles);
}

std::vector<std::complex<double>> oracle_dft(
    const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      double ang = -2.0 * kPi * static_cast<double>(k * j % n) /
                   static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<std::complex<double>> oracle_idft(
    const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      double ang = 2.0 * kPi * static_cast<double>(k * j % n) /
                   static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc / static_cast<double>(n);
  }
  return out;
}

void oracle_mgs(const std::vector<double>& a, std::uint32_t n,
                std::vector<double>* q, std::vector<double>* r) {
  *q = a;  // column-major
  r->assign(static_cast<std::size_t>(n) * n, 0.0);  // row-major
  for (std::uint32_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      double v = (*q)[i + k * n];
      norm += v * v;
    }
    norm = std::sqrt(norm);
    (*r)[k * n + k] = norm;
    for (std::uint32_t i = 0; i < n; ++i) (*q)[i + k * n] /= norm;
    for (std::uint32_t j = k + 1; j < n; ++j) {
      double dot = 0.0;
      for (std::uint32_t i = 0; i < n; ++i)
        dot += (*q)[i + k * n] * (*q)[i + j * n];
      (*r)[k * n + j] = dot;
      for (std::uint32_t i = 0; i < n; ++i)
        (*q)[i + j * n] -= dot * (*q)[i + k * n];
    }
  }
}

FftCheck verify_fft(const FftPlan& plan, double tol) {
  KernelPackage pkg = gen_fft(plan);
  MachineState m(pkg.sharedDepth,
                 std::max<std::uint32_t>(
                     kDefaultImemDepth,
                     static_cast<std::uint32_t>(pkg.image.size())));
  FftCheck chk;
  chk.report = run_kernel(pkg, m, EngineOptions{});

  const std::uint32_t n = plan.n;
  const int bits = log2u(n);
  std::vector<std::complex<double>> x(n);
  for (std::uint32_t i = 0; i < n; ++i)
    x[i] = {static_cast<double>(b2f(pkg.data[2 * i])),
            static_cast<double>(b2f(pkg.data[2 * i + 1]))};
  auto ref = oracle_dft(x);

  double maxAbs = 0.0;
  for (const auto& v : ref) maxAbs = std::max(maxAbs, std::abs(v));
  if (maxAbs == 0.0) maxAbs = 1.0;

  double worst = 0.0;
  for (std::uint32_t k = 0; k < n; ++k) {
    std::uint32_t slot = plan.naturalOrder ? k : bit_reverse(k, bits);
    std::complex<double> sim{
        static_cast<double>(b2f(m.shared[2 * slot])),
        static_cast<double>(b2f(m.shared[2 * slot + 1]))};
    worst = std::max(worst, std::abs(sim - ref[k]) / maxAbs);
  }
  chk.maxRelErr = worst;
  chk.pass = chk.report.reason == StopReason::STOPPED && worst <= tol;
  return chk;
}

QrdCheck verify_qrd(const QrdPlan& plan, double residTol, double orthTol) {
  KernelPackage pkg = gen_qrd(plan);
  MachineState m(pkg.sharedDepth,
                 std::max<std::uint32_t>(
                     kDefaultImemDepth,
                     static_cast<std::uint32_t>(pkg.image.size())));
  QrdCheck chk;
  chk.report = run_kernel(pkg, m, EngineOptions{});

  const std::uint32_t n = 16;
  auto A = [&](std::uint32_t i, std::uint32_t j) {
    return static_cast<double>(b2f(pkg.data[i + n * j]));
  };
  auto Q = [&](std::uint32_t i, std::uint32_t j) {
    return static_cast<double>(b2f(m.shared[256 + i + n * j]));
  };
  auto R = [&](std::uint32_t k, std::uint32_t j) {
    return static_cast<double>(b2f(m.shared[512 + n * k + j]));
  };

  double maxA = 0.0;
  for (std::uint32_t j = 0; j < n; ++j)
    for (std::uint32_t i = 0; i < n; ++i)
      maxA = std::max(maxA, std::abs(A(i, j)));
  if (maxA == 0.0) maxA = 1.0;

  double resid = 0.0, orth = 0.0;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) {
      double qr = 0.0, qtq = 0.0;
      for (std::uint32_t k = 0; k < n; ++k) {
        qr += Q(i, k) * R(k, j);
        qtq += Q(k, i) * Q(k, j);
      }
      resid = std::max(resid, std::abs(qr - A(i, j)));
      orth = std::max(orth, std::abs(qtq - (i == j ? 1.0 : 0.0)));
    }
  chk.residual = resid / maxA;
  chk.orthErr = orth;

  chk.upperTriangular = true;
  for (std::uint32_t k = 0; k < n; ++k)
    for (std::uint32_t j = 0; j < k; ++j)
      if (m.shared[512 + n * k + j] != 0u) chk.upperTriangular = false;

  chk.pass = chk.report.reason == StopReason::STOPPED &&
             chk.residual <= residTol && chk.orthErr <= orthTol &&
             chk.upperTriangular;
  return chk;
}

std::string render_data_hex(const std::vector<std::uint32_t>& words) {
  std::string out;
  char buf[16];
  for (std::uint32_t w : words) {
    std::snprintf(buf, sizeof buf, "%08x\n", w);
    out += buf;
  }
  return out;
}

}  // namespace egpu
