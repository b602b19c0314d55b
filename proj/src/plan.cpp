#include "hyjob/plan.hpp"

#include <algorithm>
#include <set>

#include "hyjob/error.hpp"

namespace hyjob {

std::size_t AlgorithmPlan::job_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.jobs.size();
  return n;
}

const JobSpec* AlgorithmPlan::find(JobId id) const {
  for (const auto& s : segments) {
    for (const auto& j : s.jobs) {
      if (j.id == id) return &j;
    }
  }
  return nullptr;
}

std::vector<JobId> producers_of(const InputBinding& binding) {
  std::vector<JobId> out;
  if (const auto* refs = std::get_if<RefsInput>(&binding)) {
    for (const auto& r : refs->refs) {
      if (std::find(out.begin(), out.end(), r.producer) == out.end()) out.push_back(r.producer);
    }
  }
  return out;
}

void validate_plan(const AlgorithmPlan& plan) {
  std::map<JobId, std::size_t> segment_of;
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    for (const auto& job : plan.segments[s].jobs) {
      if (job.id.value == 0) fail(ErrorCode::ValidationError, "job ids must be positive");
      if (!segment_of.emplace(job.id, s).second) {
        fail(ErrorCode::ValidationError, "duplicate job id J" + std::to_string(job.id.value));
      }
    }
  }
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    for (const auto& job : plan.segments[s].jobs) {
      const auto* refs = std::get_if<RefsInput>(&job.input);
      if (const auto* pool = std::get_if<PoolInput>(&job.input); pool && pool->count == 0) {
        fail(ErrorCode::ValidationError, "J" + std::to_string(job.id.value) + ": empty pool binding");
      }
      if (!refs) continue;
      for (const auto& r : refs->refs) {
        auto name = "J" + std::to_string(job.id.value) + " references R" +
                    std::to_string(r.producer.value);
        auto it = segment_of.find(r.producer);
        if (it == segment_of.end()) fail(ErrorCode::ValidationError, name + ", which does not exist");
        if (it->second >= s) {
          fail(ErrorCode::ValidationError, name + ", which is not in an earlier segment");
        }
        if (r.range && r.range->end < r.range->start) {
          fail(ErrorCode::ValidationError, name + " with an inverted range");
        }
      }
    }
  }
}

std::string_view to_string(Hybridism h) {
  switch (h) {
    case Hybridism::NotHybrid: return "NotHybrid";
    case Hybridism::Loose: return "Loose";
    case Hybridism::Strict: return "Strict";
  }
  return "?";
}

Hybridism classify_hybridism(const AlgorithmPlan& plan,
                             const std::map<JobId, std::size_t>& sequence_counts) {
  auto sequences = [&](JobId id) {
    auto it = sequence_counts.find(id);
    return it == sequence_counts.end() ? std::size_t{1} : it->second;
  };
  bool multi_job = false;
  bool multi_sequence = false;
  for (const auto& seg : plan.segments) {
    bool seg_multi_sequence = std::any_of(seg.jobs.begin(), seg.jobs.end(),
                                          [&](const JobSpec& j) { return sequences(j.id) > 1; });
    if (seg.jobs.size() > 1 && seg_multi_sequence) return Hybridism::Strict;
    multi_job = multi_job || seg.jobs.size() > 1;
    multi_sequence = multi_sequence || seg_multi_sequence;
  }
  return multi_job && multi_sequence ? Hybridism::Loose : Hybridism::NotHybrid;
}

std::map<JobId, std::size_t> declared_sequence_counts(const AlgorithmPlan& plan,
                                                      std::size_t worker_cores) {
  std::map<JobId, std::size_t> out;
  for (const auto& seg : plan.segments) {
    for (const auto& j : seg.jobs) out[j.id] = j.threads == 0 ? worker_cores : j.threads;
  }
  return out;
}

}  // namespace hyjob
