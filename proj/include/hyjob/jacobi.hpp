#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hyjob/registry.hpp"

// Jacobi iteration for A x = b as a job plan.
//
// Each iteration occupies two segments. Update job k (one per row block)
// computes y_i = b_i - sum_{j != i} a_ij x_j for its rows, summing over
// ascending j, and the squared residual of the incoming x over those rows.
// In the next segment apply job k forms x_i = y_i / a_ii while the check
// job adds the residual contributions. When res > epsilon and the
// iteration guard allows, check injects the next update/apply/check round;
// otherwise its output names the jobs holding the final x.
//
// Chunk layouts:
//   meta     I64 [row_start, rows, n]
//   control  F64 [epsilon, max_iters, iter, res]
//   ids      I64 [B, update ids (B), apply ids (B), fn update, fn apply, fn check]
//   update:  [meta, A rows, b rows, x chunks...] -> [y, contrib, meta, A rows, b rows]
//   apply:   [y, meta, A rows]                   -> [x rows]
//   check:   [control, ids, contrib_1..B]        -> [control, ids]

namespace hyjob::jacobi {

struct Problem {
  std::size_t n = 0;
  std::vector<double> a;  // row-major n x n
  std::vector<double> b;
  std::vector<double> x0;
  double epsilon = 1e-10;
  std::size_t max_iters = 500;
};

/// Strictly diagonally dominant instance with x0 = 0, reproducible from
/// `seed` on any platform.
Problem generate(std::size_t n, std::uint64_t seed);

/// Problem files: I64 chunk [n], then A, b and x0 as F64 chunks.
void write_problem(const std::string& path, const Problem& p);
Problem read_problem(const std::string& path);
std::vector<DataChunk> problem_chunks(const Problem& p);
Problem problem_from_chunks(const std::vector<DataChunk>& chunks);

/// Balanced contiguous row blocks, as (row_start, rows). Throws
/// InvalidBlocking unless 1 <= n_blocks <= n.
std::vector<std::pair<std::size_t, std::size_t>> row_blocks(std::size_t n, std::size_t n_blocks);

void fn_update(const FunctionData& in, FunctionData& out);
void fn_apply(const FunctionData& in, FunctionData& out);
void fn_check(const FunctionData& in, FunctionData& out, JobContext& ctx);

struct FunctionIds {
  std::uint32_t forward = 6, update = 7, apply = 8, check = 9;
};

struct JacobiPlan {
  AlgorithmPlan plan;
  std::vector<DataChunk> pool;
  std::size_t n_blocks = 0;
};

/// Segment 0: update jobs 1..B over [meta, A rows, b rows, x0] from the
/// pool plus job B+1 forwarding the control and ids chunks. Segment 1:
/// apply jobs B+2..2B+1 and the check job 2B+2. All jobs are single
/// sequence and no_send.
JacobiPlan build_plan(const Problem& p, std::size_t n_blocks, FunctionIds fns = {});

struct Solution {
  std::vector<double> x;
  double res = 0;           // residual of the iterate that entered the last sweep
  std::size_t iterations = 0;
};

/// Reads x and the final residual out of a run's live results.
Solution extract_solution(const std::map<JobId, FunctionData>& results);

/// The textbook sweep used by the plan, serially. Throws ZeroDiagonal.
std::vector<double> solve_serial(const Problem& p, std::size_t iters);
/// The same sweep with rows fanned out over `threads` OpenMP threads in
/// `n_blocks` static blocks; bitwise equal to solve_serial.
std::vector<double> solve_openmp(const Problem& p, std::size_t n_blocks, std::size_t iters, int threads);
/// ||b - A x||_2.
double residual(const Problem& p, const std::vector<double>& x);

}  // namespace hyjob::jacobi
