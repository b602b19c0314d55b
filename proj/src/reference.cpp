#include "hyjob/reference.hpp"

#include <algorithm>

#include "hyjob/partition.hpp"

namespace hyjob {

namespace {

struct Interpreter {
  const FunctionRegistry& registry;
  AlgorithmPlan plan;
  ChunkPool pool;
  std::uint32_t cores;
  std::size_t max_segments;
  std::map<JobId, FunctionData> results;
  std::uint64_t next_id = 1;
  std::size_t current = 0;
  std::size_t injections = 0;

  InjectionMapping inject(const InjectionRequest& req) {
    if (req.specs.empty()) return {};
    std::size_t base = current;
    if (req.target == InjectionTarget::FollowingSegment) {
      if (req.offset == 0) fail(ErrorCode::InvalidTarget, "following-segment offset must be at least 1");
      base = current + req.offset;
    } else if (req.target == InjectionTarget::AppendSegment) {
      base = std::max(plan.segments.size(), current + 1);
    }
    InjectionMapping mapping;
    for (const auto& t : req.specs) mapping[t.placeholder] = JobId{next_id++};
    for (const auto& t : req.specs) {
      auto seg = base + t.segment_delta;
      if (seg >= max_segments) fail(ErrorCode::InvalidTarget, "segment limit reached");
      JobSpec spec;
      spec.id = mapping.at(t.placeholder);
      spec.function_id = t.function_id;
      spec.threads = t.threads;
      spec.no_send = t.no_send;
      if (const auto* p = std::get_if<PoolInput>(&t.input)) {
        spec.input = *p;
      } else if (const auto* refs = std::get_if<TemplateRefs>(&t.input)) {
        RefsInput ri;
        for (const auto& r : refs->refs) {
          ri.refs.push_back({r.placeholder ? mapping.at(r.producer) : JobId{r.producer}, r.range});
        }
        spec.input = std::move(ri);
      }
      if (plan.segments.size() <= seg) plan.segments.resize(seg + 1);
      plan.segments[seg].jobs.push_back(std::move(spec));
    }
    ++injections;
    return mapping;
  }

  FunctionData run_job(const JobSpec& job, const FunctionData& input) {
    auto slices = partition_chunks(input.size(), effective_sequences(job.threads, cores, input.size()));
    std::map<std::size_t, FunctionData> outputs;
    for (const auto& s : slices) {
      Context ctx(*this, job.id, s.sequence_index, slices.size());
      outputs[s.sequence_index] =
          registry.invoke(job.function_id, input.slice(s.chunk_slice.start, s.chunk_slice.end), ctx);
    }
    return assemble_outputs(outputs);
  }

  class Context final : public JobContext {
   public:
    Context(Interpreter& in, JobId id, std::size_t index, std::size_t count)
        : in_(in), id_(id), index_(index), count_(count) {}
    JobId job_id() const override { return id_; }
    std::size_t sequence_index() const override { return index_; }
    std::size_t sequence_count() const override { return count_; }
    InjectionMapping inject(const InjectionRequest& r) override { return in_.inject(r); }

   private:
    Interpreter& in_;
    JobId id_;
    std::size_t index_;
    std::size_t count_;
  };

  void run() {
    for (const auto& seg : plan.segments) {
      for (const auto& j : seg.jobs) next_id = std::max(next_id, j.id.value + 1);
    }
    for (current = 0; current < plan.segments.size(); ++current) {
      // Jobs injected into this segment while it runs are picked up by the
      // outer loop: resolve inputs in list order, run by ascending id.
      std::size_t done = 0;
      while (done < plan.segments[current].jobs.size()) {
        std::vector<std::pair<JobSpec, FunctionData>> batch;
        for (; done < plan.segments[current].jobs.size(); ++done) {
          const auto& job = plan.segments[current].jobs[done];
          batch.emplace_back(job, resolve_binding(job.input, pool, results));
        }
        std::sort(batch.begin(), batch.end(),
                  [](const auto& a, const auto& b) { return a.first.id < b.first.id; });
        for (const auto& [job, input] : batch) results[job.id] = run_job(job, input);
      }
    }
  }
};

}  // namespace

ReferenceResult run_reference(const AlgorithmPlan& plan, const FunctionRegistry& registry,
                              std::vector<DataChunk> pool, std::uint32_t cores_per_worker,
                              std::size_t max_segments) {
  validate_plan(plan);
  if (cores_per_worker == 0) fail(ErrorCode::InvalidConfig, "cores must be positive");
  Interpreter in{registry, plan, ChunkPool(std::move(pool)), cores_per_worker, max_segments, {}};
  in.run();
  return {std::move(in.results), std::move(in.plan), in.injections};
}

}  // namespace hyjob
