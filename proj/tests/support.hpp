#pragma once

// Generators and oracles shared by the unit, property and acceptance tests.
// Nothing here calls into the scheduler or the reference interpreter, so the
// oracles stay independent of the code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hyjob/hub.hpp"
#include "hyjob/message.hpp"
#include "hyjob/partition.hpp"
#include "hyjob/plan.hpp"
#include "hyjob/registry.hpp"

namespace testsupport {

using namespace hyjob;

// ---- stub functions ------------------------------------------------------

// Chunk-count behaviour of each stub, for the generator:
//   gen    no input -> 3 I64 chunks keyed by the job id; else +1 on I64, x2 on F64
//   scale  x*3-1 on I64, x*0.5+1 on F64, one chunk per input chunk
//   total  one F64 chunk per sequence with the sum of its slice
//   mirror every chunk, then its reversal
enum Stub : std::uint32_t { kGen = 1, kScale = 2, kTotal = 3, kMirror = 4 };

inline void stub_gen(const FunctionData& in, FunctionData& out, JobContext& ctx) {
  if (in.empty()) {
    auto base = static_cast<std::int64_t>(ctx.job_id().value) * 100;
    for (std::int64_t k = 0; k < 3; ++k) out.push_back(DataChunk::of<std::int64_t>({base + k, base - k, k}));
    return;
  }
  for (const auto& c : in) {
    if (c.dtype() == ElementType::I64) {
      auto v = c.to_vector<std::int64_t>();
      for (auto& x : v) x += 1;
      out.push_back(DataChunk::of(v));
    } else {
      auto v = c.to_vector<double>();
      for (auto& x : v) x *= 2;
      out.push_back(DataChunk::of(v));
    }
  }
}

inline void stub_scale(const FunctionData& in, FunctionData& out) {
  for (const auto& c : in) {
    if (c.dtype() == ElementType::I64) {
      auto v = c.to_vector<std::int64_t>();
      for (auto& x : v) x = (x * 3 - 1) % 1000003;
      out.push_back(DataChunk::of(v));
    } else {
      auto v = c.to_vector<double>();
      for (auto& x : v) x = x * 0.5 + 1;
      out.push_back(DataChunk::of(v));
    }
  }
}

inline void stub_total(const FunctionData& in, FunctionData& out) {
  double s = 0;
  for (const auto& c : in) {
    if (c.dtype() == ElementType::I64) {
      for (auto x : c.values<std::int64_t>()) s += static_cast<double>(x);
    } else {
      for (auto x : c.values<double>()) s += x;
    }
  }
  out.push_back(DataChunk::of<double>({s}));
}

inline void stub_mirror(const FunctionData& in, FunctionData& out) {
  for (const auto& c : in) {
    out.push_back(c);
    auto bytes = c.bytes();
    auto w = element_width(c.dtype());
    Bytes rev(bytes.size());
    for (std::size_t i = 0; i < c.count(); ++i) {
      std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(i * w), w,
                  rev.begin() + static_cast<std::ptrdiff_t>((c.count() - 1 - i) * w));
    }
    out.push_back(DataChunk(c.dtype(), c.count(), std::move(rev)));
  }
}

inline void register_stubs(FunctionRegistry& r) {
  r.add_function(stub_gen);
  r.add_function(stub_scale);
  r.add_function(stub_total);
  r.add_function(stub_mirror);
}

// ---- random plans ----------------------------------------------------------

struct RandomCase {
  AlgorithmPlan plan;
  std::vector<DataChunk> pool;
  std::uint32_t subs = 1;
  std::uint32_t workers_per_sub = 1;
  std::uint32_t cores = 1;
};

inline std::size_t stub_output_count(std::uint32_t fn, std::uint32_t threads, std::uint32_t cores, std::size_t n_in) {
  auto seqs = effective_sequences(threads, cores, n_in);
  switch (fn) {
    case kGen: return n_in == 0 ? 3 * seqs : n_in;
    case kScale: return n_in;
    case kTotal: return seqs;
    case kMirror: return 2 * n_in;
  }
  return 0;
}

inline std::vector<DataChunk> random_pool(std::mt19937_64& rng, std::size_t n) {
  std::vector<DataChunk> pool;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = 1 + rng() % 5;
    if (rng() % 2) {
      std::vector<std::int64_t> v(len);
      for (auto& x : v) x = static_cast<std::int64_t>(rng() % 2001) - 1000;
      pool.push_back(DataChunk::of(v));
    } else {
      std::vector<double> v(len);
      for (auto& x : v) x = static_cast<double>(static_cast<std::int64_t>(rng() % 20001) - 10000) / 64.0;
      pool.push_back(DataChunk::of(v));
    }
  }
  return pool;
}

/// DAG-respecting plan over the stubs: every ref names an earlier segment,
/// ranges stay inside the producer's (predicted) output.
inline RandomCase random_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 7);
  RandomCase c;
  c.subs = 1 + rng() % 3;
  c.workers_per_sub = 1 + rng() % 3;
  c.cores = 1 + rng() % 8;

  std::map<std::uint64_t, std::size_t> out_count;
  std::vector<std::uint64_t> earlier;
  std::size_t pool_needed = 0;
  std::uint64_t next_id = 1;
  std::size_t n_segments = 1 + rng() % 5;
  for (std::size_t s = 0; s < n_segments; ++s) {
    SegmentPlan seg;
    std::size_t n_jobs = 1 + rng() % 4;
    std::vector<std::uint64_t> made;
    for (std::size_t j = 0; j < n_jobs; ++j) {
      JobSpec spec;
      spec.id = JobId{next_id};
      next_id += 1 + rng() % 2;  // labels need not be consecutive
      spec.function_id = 1 + rng() % 4;
      spec.threads = static_cast<std::uint32_t>(rng() % 5);
      spec.no_send = rng() % 3 == 0;
      std::size_t n_in = 0;
      auto kind = earlier.empty() ? rng() % 2 : rng() % 4;
      if (kind == 1) {
        std::size_t count = 1 + rng() % 4;
        spec.input = PoolInput{count};
        pool_needed += count;
        n_in = count;
      } else if (kind >= 2) {
        RefsInput refs;
        std::size_t n_refs = 1 + rng() % 3;
        for (std::size_t r = 0; r < n_refs; ++r) {
          auto producer = earlier[rng() % earlier.size()];
          auto total = out_count.at(producer);
          ResultRef ref{JobId{producer}, std::nullopt};
          if (rng() % 2 && total > 0) {
            std::size_t a = rng() % (total + 1), b = rng() % (total + 1);
            ref.range = ChunkRange{std::min(a, b), std::max(a, b)};
            n_in += ref.range->size();
          } else {
            n_in += total;
          }
          refs.refs.push_back(ref);
        }
        spec.input = std::move(refs);
      }
      out_count[spec.id.value] = stub_output_count(spec.function_id, spec.threads, c.cores, n_in);
      made.push_back(spec.id.value);
      seg.jobs.push_back(std::move(spec));
    }
    earlier.insert(earlier.end(), made.begin(), made.end());
    c.plan.segments.push_back(std::move(seg));
  }
  c.pool = random_pool(rng, pool_needed);
  return c;
}

// ---- independent oracle ----------------------------------------------------

/// Straight-line interpreter for plans without injection: segment by
/// segment, jobs in ascending id order, pool bindings drawn in plan-list
/// order, sequences run one after another and concatenated.
inline std::map<JobId, FunctionData> oracle_run(const AlgorithmPlan& plan, const FunctionRegistry& registry,
                                                const std::vector<DataChunk>& pool, std::uint32_t cores) {
  std::map<JobId, FunctionData> results;
  std::size_t cursor = 0;
  for (const auto& seg : plan.segments) {
    std::map<JobId, FunctionData> inputs;
    for (const auto& job : seg.jobs) {
      FunctionData in;
      if (const auto* p = std::get_if<PoolInput>(&job.input)) {
        for (std::size_t k = 0; k < p->count; ++k) in.push_back(pool.at(cursor++));
      } else if (const auto* r = std::get_if<RefsInput>(&job.input)) {
        for (const auto& ref : r->refs) {
          const auto& src = results.at(ref.producer);
          std::size_t a = ref.range ? ref.range->start : 0, b = ref.range ? ref.range->end : src.size();
          for (std::size_t k = a; k < b; ++k) in.push_back(src.at(k));
        }
      }
      inputs[job.id] = std::move(in);
    }
    for (auto& [id, in] : inputs) {
      const auto* spec = plan.find(id);
      std::size_t n = in.size();
      std::size_t seqs = spec->threads == 0 ? cores : spec->threads;
      seqs = n == 0 ? 1 : std::min(seqs, n);
      FunctionData out;
      std::size_t start = 0;
      for (std::size_t s = 0; s < seqs; ++s) {
        std::size_t len = n / seqs + (s < n % seqs ? 1 : 0);
        FunctionData slice;
        for (std::size_t k = start; k < start + len; ++k) slice.push_back(in[k]);
        start += len;
        DetachedContext ctx(id, s, seqs);
        out.append(registry.invoke(spec->function_id, slice, ctx));
      }
      results[id] = std::move(out);
    }
  }
  return results;
}

// ---- random messages -------------------------------------------------------

inline DataChunk random_chunk(std::mt19937_64& rng) {
  auto dtype = static_cast<ElementType>(rng() % 5);
  std::size_t count = rng() % 6;
  Bytes payload(count * element_width(dtype));
  for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
  return DataChunk(dtype, count, std::move(payload));
}

inline std::string random_text(std::mt19937_64& rng) {
  std::string s(rng() % 12, ' ');
  for (auto& ch : s) ch = static_cast<char>('a' + rng() % 26);
  return s;
}

inline std::optional<ChunkRange> random_range(std::mt19937_64& rng) {
  if (rng() % 2) return std::nullopt;
  std::size_t a = rng() % 50;
  return ChunkRange{a, a + rng() % 50};
}

inline InjectionRequest random_request(std::mt19937_64& rng) {
  InjectionRequest req;
  req.target = static_cast<InjectionTarget>(rng() % 3);
  req.offset = static_cast<std::uint32_t>(rng() % 4);
  std::size_t n = rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    JobTemplate t;
    t.placeholder = rng() % 1000;
    t.segment_delta = static_cast<std::uint32_t>(rng() % 3);
    t.function_id = static_cast<std::uint32_t>(rng());
    t.threads = static_cast<std::uint32_t>(rng() % 9);
    t.no_send = rng() % 2;
    switch (rng() % 3) {
      case 0: t.input = NoInput{}; break;
      case 1: t.input = PoolInput{1 + rng() % 9}; break;
      default: {
        TemplateRefs refs;
        std::size_t k = rng() % 4;
        for (std::size_t r = 0; r < k; ++r) refs.refs.push_back({rng() % 2 == 0, rng() % 500, random_range(rng)});
        t.input = std::move(refs);
      }
    }
    req.specs.push_back(std::move(t));
  }
  return req;
}

inline Message random_message(std::mt19937_64& rng) {
  auto chunks = [&] {
    std::vector<DataChunk> v;
    for (auto n = rng() % 4; n > 0; --n) v.push_back(random_chunk(rng));
    return v;
  };
  switch (rng() % 10) {
    case 0: return HelloMsg{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()), 1, random_text(rng)};
    case 1: {
      AssignJobMsg a;
      a.job_id = rng();
      a.function_id = static_cast<std::uint32_t>(rng());
      a.threads = static_cast<std::uint32_t>(rng() % 16);
      a.no_send = rng() % 2;
      a.inline_chunks = chunks();
      std::size_t n = rng() % 3;
      for (std::size_t i = 0; i < n; ++i) {
        a.refs.push_back({rng(), static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                          static_cast<HolderKind>(rng() % 2), random_text(rng)});
      }
      a.worker_id = static_cast<std::uint32_t>(rng());
      return a;
    }
    case 2: {
      JobDoneMsg d;
      d.job_id = rng();
      d.retention = static_cast<Retention>(rng() % 3);
      if (d.retention == Retention::Returned) {
        d.chunks = chunks();
        d.n_chunks = static_cast<std::uint32_t>(d.chunks.size());
      } else {
        d.n_chunks = static_cast<std::uint32_t>(rng() % 100);
      }
      d.bytes_in = rng();
      d.bytes_out = rng();
      return d;
    }
    case 3: return FetchMsg{rng(), static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng())};
    case 4: return ChunksMsg{rng(), chunks()};
    case 5: return ReleaseMsg{rng()};
    case 6: return InjectMsg{rng(), random_request(rng)};
    case 7: {
      InjectAckMsg a;
      std::size_t n = rng() % 5;
      for (std::size_t i = 0; i < n; ++i) a.mapping.emplace_back(rng(), rng());
      return a;
    }
    case 8: return ShutdownMsg{};
    default: return JobFailedMsg{rng(), static_cast<std::uint32_t>(rng() % 40), random_text(rng)};
  }
}

// ---- trace checks ----------------------------------------------------------

/// ASSIGN_JOB frames of segment k+1 delivered before the last JOB_DONE of
/// segment k (or any earlier segment).
inline std::size_t barrier_violations(const std::vector<runtime::TraceEntry>& trace,
                                      const std::map<JobId, std::size_t>& job_segments) {
  std::map<std::size_t, std::size_t> last_done;  // segment -> trace index
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].tag != Tag::JobDone) continue;
    auto it = job_segments.find(JobId{trace[i].subject});
    if (it != job_segments.end()) last_done[it->second] = i;
  }
  std::size_t violations = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].tag != Tag::AssignJob) continue;
    auto seg = job_segments.at(JobId{trace[i].subject});
    for (const auto& [s, idx] : last_done) {
      if (s < seg && idx > i) ++violations;
    }
  }
  return violations;
}

/// FETCH frames for a producer after a RELEASE frame for it.
inline std::size_t fetch_after_release(const std::vector<runtime::TraceEntry>& trace) {
  std::set<std::uint64_t> released;
  std::size_t violations = 0;
  for (const auto& e : trace) {
    if (e.tag == Tag::Release) released.insert(e.subject);
    if (e.tag == Tag::Fetch && released.count(e.subject)) ++violations;
  }
  return violations;
}

}  // namespace testsupport
