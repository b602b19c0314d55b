#include "hyjob/jacobi.hpp"

#include <omp.h>

#include <cmath>
#include <random>

namespace hyjob::jacobi {

namespace {

// y_i = b_i - sum_{j != i} a_ij x_j, summed over ascending j. Every solver
// in this file goes through here so their results agree bit for bit.
inline double offdiag_update(const double* arow, const double* x, std::size_t n, std::size_t i, double bi) {
  double s = 0.0;
  for (std::size_t j = 0; j < i; ++j) s += arow[j] * x[j];
  for (std::size_t j = i + 1; j < n; ++j) s += arow[j] * x[j];
  return bi - s;
}

std::int64_t as_i64(std::size_t v) { return static_cast<std::int64_t>(v); }

void shape_check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::ShapeMismatch, what);
}

void require_diagonal(const Problem& p) {
  for (std::size_t i = 0; i < p.n; ++i) {
    if (p.a[i * p.n + i] == 0.0) fail(ErrorCode::ZeroDiagonal, "a_ii is zero in row " + std::to_string(i));
  }
}

struct Meta {
  std::size_t row_start, rows, n;
};

Meta read_meta(const DataChunk& c) {
  auto m = c.values<std::int64_t>();
  shape_check(m.size() == 3 && m[0] >= 0 && m[1] > 0 && m[2] > 0 && m[0] + m[1] <= m[2],
              "malformed block descriptor");
  return {static_cast<std::size_t>(m[0]), static_cast<std::size_t>(m[1]), static_cast<std::size_t>(m[2])};
}

}  // namespace

Problem generate(std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::InvalidConfig, "problem size must be positive");
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Problem p;
  p.n = n;
  p.a.assign(n * n, 0.0);
  p.b.resize(n);
  p.x0.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      p.a[i * n + j] = 2.0 * unit() - 1.0;
      off += std::fabs(p.a[i * n + j]);
    }
    p.a[i * n + i] = off + 1.0 + unit();
    p.b[i] = 20.0 * unit() - 10.0;
  }
  return p;
}

std::vector<DataChunk> problem_chunks(const Problem& p) {
  return {DataChunk::of<std::int64_t>({as_i64(p.n)}), DataChunk::of(p.a), DataChunk::of(p.b), DataChunk::of(p.x0)};
}

Problem problem_from_chunks(const std::vector<DataChunk>& chunks) {
  shape_check(chunks.size() == 4, "a problem is four chunks: n, A, b, x0");
  auto nv = chunks[0].values<std::int64_t>();
  shape_check(nv.size() == 1 && nv[0] > 0, "problem size must be one positive integer");
  Problem p;
  p.n = static_cast<std::size_t>(nv[0]);
  p.a = chunks[1].to_vector<double>();
  p.b = chunks[2].to_vector<double>();
  p.x0 = chunks[3].to_vector<double>();
  shape_check(p.a.size() == p.n * p.n && p.b.size() == p.n && p.x0.size() == p.n,
              "matrix and vector sizes do not match n");
  return p;
}

void write_problem(const std::string& path, const Problem& p) {
  auto chunks = problem_chunks(p);
  write_chunk_file(path, chunks);
}

Problem read_problem(const std::string& path) { return problem_from_chunks(read_chunk_file(path)); }

std::vector<std::pair<std::size_t, std::size_t>> row_blocks(std::size_t n, std::size_t n_blocks) {
  if (n_blocks == 0 || n_blocks > n) {
    fail(ErrorCode::InvalidBlocking, "cannot split " + std::to_string(n) + " rows into " +
                                         std::to_string(n_blocks) + " blocks");
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k < n_blocks; ++k) {
    std::size_t rows = n / n_blocks + (k < n % n_blocks ? 1 : 0);
    out.emplace_back(start, rows);
    start += rows;
  }
  return out;
}

// ---- user functions ----------------------------------------------------------

void fn_update(const FunctionData& in, FunctionData& out) {
  shape_check(in.size() >= 4, "update expects meta, A rows, b rows and x");
  auto m = read_meta(in[0]);
  auto a = in[1].values<double>();
  auto b = in[2].values<double>();
  shape_check(a.size() == m.rows * m.n && b.size() == m.rows, "row block does not match its descriptor");
  std::vector<double> x;
  x.reserve(m.n);
  for (std::size_t c = 3; c < in.size(); ++c) {
    auto v = in[c].values<double>();
    x.insert(x.end(), v.begin(), v.end());
  }
  shape_check(x.size() == m.n, "x has " + std::to_string(x.size()) + " entries, expected " + std::to_string(m.n));

  std::vector<double> y(m.rows);
  double contrib = 0.0;
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto i = m.row_start + r;
    const double* arow = a.data() + r * m.n;
    y[r] = offdiag_update(arow, x.data(), m.n, i, b[r]);
    double ri = y[r] - arow[i] * x[i];
    contrib += ri * ri;
  }
  out.push_back(DataChunk::of(y));
  out.push_back(DataChunk::of<double>({contrib}));
  out.push_back(in[0]);
  out.push_back(in[1]);
  out.push_back(in[2]);
}

void fn_apply(const FunctionData& in, FunctionData& out) {
  shape_check(in.size() == 3, "apply expects y, meta and A rows");
  auto y = in[0].values<double>();
  auto m = read_meta(in[1]);
  auto a = in[2].values<double>();
  shape_check(y.size() == m.rows && a.size() == m.rows * m.n, "row block does not match its descriptor");
  std::vector<double> x(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double d = a[r * m.n + m.row_start + r];
    if (d == 0.0) fail(ErrorCode::ZeroDiagonal, "a_ii is zero in row " + std::to_string(m.row_start + r));
    x[r] = y[r] / d;
  }
  out.push_back(DataChunk::of(x));
}

void fn_check(const FunctionData& in, FunctionData& out, JobContext& ctx) {
  shape_check(in.size() >= 2, "check expects control and ids");
  auto control = in[0].to_vector<double>();
  auto ids = in[1].to_vector<std::int64_t>();
  shape_check(control.size() == 4 && !ids.empty(), "malformed control chunk");
  auto blocks = static_cast<std::size_t>(ids[0]);
  shape_check(ids.size() == 1 + 2 * blocks + 3 && in.size() == 2 + blocks, "malformed ids chunk");

  double sq = 0.0;
  for (std::size_t k = 0; k < blocks; ++k) {
    auto c = in[2 + k].values<double>();
    shape_check(c.size() == 1, "a residual contribution is a single value");
    sq += c[0];
  }
  const double eps = control[0];
  const double max_iters = control[1];
  const double iter = control[2] + 1;
  const double res = std::sqrt(sq);
  control[2] = iter;
  control[3] = res;

  if (res > eps && iter < max_iters) {
    auto update_fn = static_cast<std::uint32_t>(ids[1 + 2 * blocks]);
    auto apply_fn = static_cast<std::uint32_t>(ids[2 + 2 * blocks]);
    auto check_fn = static_cast<std::uint32_t>(ids[3 + 2 * blocks]);
    InjectionRequest req;
    req.target = InjectionTarget::FollowingSegment;
    req.offset = 1;
    for (std::size_t k = 0; k < blocks; ++k) {
      TemplateRefs refs;
      refs.refs.push_back({false, static_cast<std::uint64_t>(ids[1 + k]), ChunkRange{2, 5}});
      for (std::size_t j = 0; j < blocks; ++j) {
        refs.refs.push_back({false, static_cast<std::uint64_t>(ids[1 + blocks + j]), std::nullopt});
      }
      req.specs.push_back({k + 1, 0, update_fn, 1, true, std::move(refs)});
    }
    for (std::size_t k = 0; k < blocks; ++k) {
      TemplateRefs refs;
      refs.refs.push_back({true, k + 1, ChunkRange{0, 1}});
      refs.refs.push_back({true, k + 1, ChunkRange{2, 4}});
      req.specs.push_back({blocks + k + 1, 1, apply_fn, 1, true, std::move(refs)});
    }
    TemplateRefs check_refs;
    check_refs.refs.push_back({false, ctx.job_id().value, ChunkRange{0, 2}});
    for (std::size_t k = 0; k < blocks; ++k) check_refs.refs.push_back({true, k + 1, ChunkRange{1, 2}});
    req.specs.push_back({2 * blocks + 1, 1, check_fn, 1, true, std::move(check_refs)});

    auto mapping = ctx.inject(req);
    for (std::size_t k = 0; k < 2 * blocks; ++k) ids[1 + k] = static_cast<std::int64_t>(mapping.at(k + 1).value);
  }
  out.push_back(DataChunk::of(control));
  out.push_back(DataChunk::of(ids));
}

// ---- plan --------------------------------------------------------------------

JacobiPlan build_plan(const Problem& p, std::size_t n_blocks, FunctionIds fns) {
  shape_check(p.a.size() == p.n * p.n && p.b.size() == p.n && p.x0.size() == p.n,
              "matrix and vector sizes do not match n");
  if (p.max_iters == 0) fail(ErrorCode::InvalidConfig, "max_iters must be positive");
  auto blocks = row_blocks(p.n, n_blocks);
  const auto B = blocks.size();

  JacobiPlan jp;
  jp.n_blocks = B;
  auto x0 = DataChunk::of(p.x0);
  for (const auto& [start, rows] : blocks) {
    jp.pool.push_back(DataChunk::of<std::int64_t>({as_i64(start), as_i64(rows), as_i64(p.n)}));
    jp.pool.push_back(DataChunk::of(std::span<const double>(p.a.data() + start * p.n, rows * p.n)));
    jp.pool.push_back(DataChunk::of(std::span<const double>(p.b.data() + start, rows)));
    jp.pool.push_back(x0);
  }
  jp.pool.push_back(DataChunk::of<double>({p.epsilon, static_cast<double>(p.max_iters), 0.0, 0.0}));
  std::vector<std::int64_t> ids{as_i64(B)};
  for (std::size_t k = 1; k <= B; ++k) ids.push_back(as_i64(k));
  for (std::size_t k = 1; k <= B; ++k) ids.push_back(as_i64(B + 1 + k));
  ids.push_back(fns.update);
  ids.push_back(fns.apply);
  ids.push_back(fns.check);
  jp.pool.push_back(DataChunk::of(ids));

  SegmentPlan sweep, finish;
  for (std::size_t k = 1; k <= B; ++k) sweep.jobs.push_back({JobId{k}, fns.update, 1, PoolInput{4}, true});
  const JobId bookkeeping{B + 1};
  sweep.jobs.push_back({bookkeeping, fns.forward, 1, PoolInput{2}, true});
  RefsInput check_in;
  check_in.refs.push_back({bookkeeping, std::nullopt});
  for (std::size_t k = 1; k <= B; ++k) {
    RefsInput apply_in;
    apply_in.refs.push_back({JobId{k}, ChunkRange{0, 1}});
    apply_in.refs.push_back({JobId{k}, ChunkRange{2, 4}});
    finish.jobs.push_back({JobId{B + 1 + k}, fns.apply, 1, std::move(apply_in), true});
    check_in.refs.push_back({JobId{k}, ChunkRange{1, 2}});
  }
  finish.jobs.push_back({JobId{2 * B + 2}, fns.check, 1, std::move(check_in), true});
  jp.plan.segments = {std::move(sweep), std::move(finish)};
  return jp;
}

Solution extract_solution(const std::map<JobId, FunctionData>& results) {
  for (auto it = results.rbegin(); it != results.rend(); ++it) {
    const auto& out = it->second;
    if (out.size() != 2 || out[0].dtype() != ElementType::F64 || out[0].count() != 4 ||
        out[1].dtype() != ElementType::I64) {
      continue;
    }
    auto control = out[0].values<double>();
    auto ids = out[1].values<std::int64_t>();
    auto blocks = static_cast<std::size_t>(ids[0]);
    Solution s;
    s.iterations = static_cast<std::size_t>(control[2]);
    s.res = control[3];
    for (std::size_t k = 0; k < blocks; ++k) {
      auto holder = results.find(JobId{static_cast<std::uint64_t>(ids[1 + blocks + k])});
      if (holder == results.end() || holder->second.size() != 1) {
        fail(ErrorCode::UnresolvedDependency, "the final x blocks are not among the results");
      }
      auto v = holder->second[0].values<double>();
      s.x.insert(s.x.end(), v.begin(), v.end());
    }
    return s;
  }
  fail(ErrorCode::UnresolvedDependency, "no convergence check result among the run's results");
}

// ---- direct solvers ----------------------------------------------------------

std::vector<double> solve_serial(const Problem& p, std::size_t iters) {
  require_diagonal(p);
  const auto n = p.n;
  std::vector<double> x = p.x0, next(n);
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = offdiag_update(p.a.data() + i * n, x.data(), n, i, p.b[i]) / p.a[i * n + i];
    }
    x.swap(next);
  }
  return x;
}

std::vector<double> solve_openmp(const Problem& p, std::size_t n_blocks, std::size_t iters, int threads) {
  require_diagonal(p);
  const auto n = p.n;
  const auto blocks = row_blocks(n, n_blocks);
  const auto nb = static_cast<long>(blocks.size());
  std::vector<double> buf0 = p.x0, buf1(n);
  double* bufs[2] = {buf0.data(), buf1.data()};
#pragma omp parallel num_threads(threads)
  for (std::size_t it = 0; it < iters; ++it) {
    const double* x = bufs[it % 2];
    double* next = bufs[(it + 1) % 2];
#pragma omp for schedule(static)
    for (long k = 0; k < nb; ++k) {
      const auto [start, rows] = blocks[static_cast<std::size_t>(k)];
      for (std::size_t i = start; i < start + rows; ++i) {
        next[i] = offdiag_update(p.a.data() + i * n, x, n, i, p.b[i]) / p.a[i * n + i];
      }
    }
  }
  return iters % 2 == 0 ? buf0 : buf1;
}

double residual(const Problem& p, const std::vector<double>& x) {
  const auto n = p.n;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += p.a[i * n + j] * x[j];
    double r = p.b[i] - s;
    sq += r * r;
  }
  return std::sqrt(sq);
}

}  // namespace hyjob::jacobi
