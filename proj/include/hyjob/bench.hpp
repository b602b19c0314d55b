#pragma once

#include <cstdint>
#include <iosfwd>

#include "hyjob/run.hpp"

namespace hyjob {

struct BenchConfig {
  std::size_t n = 512;
  std::size_t blocks = 4;
  std::size_t iters = 500;
  std::uint32_t cores = 4;
  std::uint64_t seed = 1;
  std::size_t repeats = 3;
  TransportKind transport = TransportKind::Inproc;
};

struct BenchReport {
  BenchConfig config;
  bool no_work = false;
  double framework_s = 0;  // best of `repeats`
  double baseline_s = 0;   // best of `repeats`
  double ratio = 0;        // framework / baseline
  std::size_t iterations = 0;
  double residual = 0;
};

/// Times framework Jacobi (one worker with `cores` cores, convergence check
/// disabled so exactly `iters` sweeps run) against the OpenMP solver with
/// the same blocking and thread count. Throws MismatchedResults unless the
/// two x vectors are bitwise equal. iters == 0 yields a no_work report.
BenchReport bench_jacobi(const BenchConfig& config);

void print_bench(std::ostream& out, const BenchReport& r);

}  // namespace hyjob
