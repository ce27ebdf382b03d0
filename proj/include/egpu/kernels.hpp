#ifndef EGPU_KERNELS_HPP
#define EGPU_KERNELS_HPP

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "egpu/assembler.hpp"
#include "egpu/isa.hpp"
#include "egpu/machine.hpp"
#include "egpu/sim.hpp"

namespace egpu {

struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A generated, assembled, hazard-free program plus its initial data image.
struct KernelPackage {
  std::string name;
  std::string source;               // assembly text, one statement per line
  ImemImage image;                  // assembled form of `source`
  ThreadConfig cfg;
  std::uint32_t sharedDepth = kDefaultSharedDepth;
  std::vector<std::uint32_t> data;  // shared memory words [0, data.size())
  std::string layout;               // human-readable memory map
};

enum class FftInput { RANDOM, IMPULSE, CONSTANT };

// Radix-2 decimation-in-frequency FFT, one butterfly per thread (n/2
// threads), complex data interleaved re/im and transformed in place.
struct FftPlan {
  std::uint32_t n = 256;     // power of two, 32..1024
  bool naturalOrder = true;  // false leaves the result bit-reversed
  FftInput input = FftInput::RANDOM;
  std::uint64_t seed = 0xC0FFEE;
};

// Modified Gram-Schmidt factorization of a 16x16 matrix, one element per
// thread: A and Q column-major, R row-major with the strict lower triangle
// never written.
struct QrdPlan {
  std::uint32_t dim = 16;  // only 16 is supported (one element per thread)
  std::uint64_t seed = 0xC0FFEE;
};

KernelPackage gen_fft(const FftPlan& plan);
KernelPackage gen_qrd(const QrdPlan& plan);

// Iteratively assembles, lints, and inserts NOP lines ahead of each stale
// read until the program is hazard-free under cfg and lat. The source must
// hold at most one statement per line, with labels on their own lines.
std::string repair_hazards(const std::string& source, const ThreadConfig& cfg,
                           const LatencyModel& lat = {}, int maxRounds = 256);

// Loads the package into m (registers cleared, data image at address 0,
// program at address 0) and runs it to completion.
ExecReport run_kernel(const KernelPackage& pkg, MachineState& m,
                      const EngineOptions& opt = {},
                      std::uint64_t maxCycles = 10000000);

// Deterministic fixture stream.
std::uint64_t splitmix64(std::uint64_t& state);
double unit_range(std::uint64_t& state);  // [-1, 1)

// Reference results computed in double precision, independent of the
// engine: an O(n^2) discrete Fourier transform pair and a textbook
// Gram-Schmidt factorization (q column-major, r row-major).
std::vector<std::complex<double>> oracle_dft(
    const std::vector<std::complex<double>>& x);
std::vector<std::complex<double>> oracle_idft(
    const std::vector<std::complex<double>>& x);
void oracle_mgs(const std::vector<double>& a, std::uint32_t n,
                std::vector<double>* q, std::vector<double>* r);

struct FftCheck {
  bool pass = false;
  double maxRelErr = 0.0;  // max |sim - ref| / max |ref|
  ExecReport report;
};

struct QrdCheck {
  bool pass = false;
  double residual = 0.0;  // max |QR - A| / max |A|
  double orthErr = 0.0;   // max |Q^T Q - I|
  bool upperTriangular = false;
  ExecReport report;
};

FftCheck verify_fft(const FftPlan& plan, double tol = 1e-3);
QrdCheck verify_qrd(const QrdPlan& plan, double residTol = 1e-4,
                    double orthTol = 1e-3);

// One 8-hex-digit word per line, loadable as a data image.
std::string render_data_hex(const std::vector<std::uint32_t>& words);

}  // namespace egpu

#endif
