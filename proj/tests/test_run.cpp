#include <doctest.h>

#include <sstream>

#include "hyjob/apps.hpp"
#include "hyjob/plan_parser.hpp"
#include "hyjob/reference.hpp"
#include "hyjob/run.hpp"
#include "support.hpp"

using namespace hyjob;

namespace {

RunOptions options_for(TransportKind kind, ClusterConfig cluster, std::uint64_t seed = 1) {
  RunOptions o;
  o.cluster = cluster;
  o.transport = kind;
  o.seed = seed;
  return o;
}

std::vector<JobReport> without_timing(std::vector<JobReport> r) {
  for (auto& j : r) j.t_start_ns = j.t_end_ns = 0;
  return r;
}

void check_sample_results(const RunResult& r) {
  // ramp -> R1 = ten chunks 4k+1..4k+4; J2 = square of nothing; J7 sums.
  REQUIRE(r.results.count(JobId{7}));
  REQUIRE(r.results.count(JobId{6}));
  const auto& j7 = r.results.at(JobId{7});
  REQUIRE(j7.size() == 1);
  // J3, J4 square halves of R1, J5 takes the max per chunk of R1 (+R2, empty),
  // so J7 = sum(R3) + sum(R4) + sum(R5), R2 being empty.
  double squares = 0, maxima = 0;
  for (int k = 0; k < 10; ++k) {
    for (int e = 1; e <= 4; ++e) squares += double(4 * k + e) * double(4 * k + e);
    maxima += 4.0 * k + 4;
  }
  CHECK(j7[0].values<double>()[0] == squares + maxima);
  CHECK(r.results.size() == 2);
}

}  // namespace

TEST_SUITE("run") {

TEST_CASE("sample plan on every transport") {
  FunctionRegistry registry;
  apps::register_builtins(registry);
  auto plan = parse_plan(sample_plan_text());
  for (auto kind : {TransportKind::Inproc, TransportKind::Threads, TransportKind::Tcp}) {
    CAPTURE(static_cast<int>(kind));
    auto r = run_algorithm(plan, registry, {}, options_for(kind, ClusterConfig{2, 2, 4}));
    check_sample_results(r);
    CHECK(r.report.size() == 7);
    CHECK(r.segments == 3);
    CHECK(r.segment_end_ns.size() == 3);
  }
}

TEST_CASE("empty plan") {
  FunctionRegistry registry;
  auto r = run_algorithm(AlgorithmPlan{}, registry, {});
  CHECK(r.results.empty());
  CHECK(r.report.empty());
}

TEST_CASE("unknown function is caught before dispatch") {
  FunctionRegistry registry;
  apps::register_builtins(registry);
  try {
    run_algorithm(parse_plan("J1(1,0,0); J2(77,0,R1);"), registry, {});
    FAIL("expected UnknownFunction");
  } catch (const RunFailed&) {
    FAIL("should fail before running");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownFunction);
  }
}

TEST_CASE("a failing job aborts the run at the barrier") {
  FunctionRegistry registry;
  auto ok = registry.add_function(apps::fn_ramp);
  auto bad = registry.add_function([](const FunctionData&, FunctionData&) { throw std::runtime_error("bad J2"); });
  std::string text = "J1(" + std::to_string(ok) + ",0,0), J2(" + std::to_string(bad) + ",1,0); J3(" +
                     std::to_string(ok) + ",0,R1);";
  for (auto kind : {TransportKind::Inproc, TransportKind::Threads, TransportKind::Tcp}) {
    try {
      run_algorithm(parse_plan(text), registry, {}, options_for(kind, ClusterConfig{1, 2, 2}));
      FAIL("expected RunFailed");
    } catch (const RunFailed& e) {
      CHECK(e.job() == JobId{2});
      CHECK(e.cause() == ErrorCode::UserFunctionPanic);
      CHECK(std::string(e.what()).find("bad J2") != std::string::npos);
    }
  }
}

TEST_CASE("pool exhaustion surfaces as a run failure") {
  FunctionRegistry registry;
  apps::register_builtins(registry);
  try {
    run_algorithm(parse_plan("J1(2,0,3);"), registry, {DataChunk::of<double>({1})});
    FAIL("expected RunFailed");
  } catch (const RunFailed& e) {
    CHECK(e.job() == JobId{1});
    CHECK(e.cause() == ErrorCode::PoolExhausted);
  }
}

TEST_CASE("invalid cluster config") {
  FunctionRegistry registry;
  try {
    run_algorithm(AlgorithmPlan{}, registry, {}, options_for(TransportKind::Inproc, ClusterConfig{0, 1, 1}));
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("framework agrees with the oracle on random plans") {
  for (std::uint64_t seed = 100; seed < 115; ++seed) {
    CAPTURE(seed);
    auto c = testsupport::random_case(seed);
    FunctionRegistry registry;
    testsupport::register_stubs(registry);
    auto expect = testsupport::oracle_run(c.plan, registry, c.pool, c.cores);
    auto ref = run_reference(c.plan, registry, c.pool, c.cores);
    CHECK(ref.results == expect);
    for (auto kind : {TransportKind::Inproc, TransportKind::Threads}) {
      auto r = run_algorithm(c.plan, registry, c.pool, options_for(kind, {c.subs, c.workers_per_sub, c.cores}, seed));
      CHECK_FALSE(r.results.empty());
      for (const auto& [id, data] : r.results) CHECK(data == expect.at(id));
    }
  }
}

TEST_CASE("retain-all returns every result") {
  auto c = testsupport::random_case(3);
  FunctionRegistry registry;
  testsupport::register_stubs(registry);
  auto o = options_for(TransportKind::Inproc, {c.subs, c.workers_per_sub, c.cores});
  o.retain_all = true;
  auto r = run_algorithm(c.plan, registry, c.pool, o);
  CHECK(r.results == testsupport::oracle_run(c.plan, registry, c.pool, c.cores));
}

TEST_CASE("same seed, same trace and report") {
  FunctionRegistry registry;
  testsupport::register_stubs(registry);
  auto c = testsupport::random_case(8);
  auto o = options_for(TransportKind::Inproc, {c.subs, c.workers_per_sub, c.cores}, 42);
  auto a = run_algorithm(c.plan, registry, c.pool, o);
  auto b = run_algorithm(c.plan, registry, c.pool, o);
  CHECK_FALSE(a.trace.empty());
  CHECK(a.trace == b.trace);
  CHECK(without_timing(a.report) == without_timing(b.report));
}

TEST_CASE("barrier and release hold on recorded traces") {
  FunctionRegistry registry;
  testsupport::register_stubs(registry);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = testsupport::random_case(seed);
    auto r = run_algorithm(c.plan, registry, c.pool, options_for(TransportKind::Inproc, {c.subs, c.workers_per_sub, c.cores}, seed));
    CHECK(testsupport::barrier_violations(r.trace, r.job_segments) == 0);
    CHECK(testsupport::fetch_after_release(r.trace) == 0);
  }
}

TEST_CASE("report round trip and schema checks") {
  FunctionRegistry registry;
  apps::register_builtins(registry);
  auto r = run_algorithm(parse_plan(sample_plan_text()), registry, {});
  std::stringstream s;
  write_report(s, r);
  auto text = s.str();
  CHECK(text.rfind(kReportHeader, 0) == 0);
  CHECK(text.find("# jobs 7") != std::string::npos);
  auto parsed = parse_report(s);
  CHECK(parsed == r.report);
  for (const auto& j : parsed) {
    CHECK(j.t_end_ns >= j.t_start_ns);
    CHECK(j.worker >= 1);
  }

  auto bad = [](const std::string& body) {
    std::istringstream in(body);
    try {
      parse_report(in);
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::ValidationError;
    }
  };
  CHECK(bad("nonsense\n"));
  CHECK(bad(std::string(kReportHeader) + "\n1,0,1,5,4,0,0\n"));     // ends before it starts
  CHECK(bad(std::string(kReportHeader) + "\n1,0,1,5\n"));           // missing fields
  CHECK(bad(std::string(kReportHeader) + "\n1,0,x,1,2,0,0\n"));     // not a number
  CHECK_FALSE(bad(std::string(kReportHeader) + "\n1,0,1,1,2,0,0\n# jobs 1\n"));
}

TEST_CASE("worker processes over tcp") {
  FunctionRegistry registry;
  apps::register_builtins(registry);
  auto o = options_for(TransportKind::Tcp, ClusterConfig{2, 1, 2});
  o.spawn = SpawnMode::Process;
  o.worker_executable = HYJOB_CLI_PATH;
  auto r = run_algorithm(parse_plan(sample_plan_text()), registry, {}, o);
  check_sample_results(r);
}

TEST_CASE("process spawning requires tcp") {
  FunctionRegistry registry;
  apps::register_builtins(registry);
  auto o = options_for(TransportKind::Inproc, ClusterConfig{});
  o.spawn = SpawnMode::Process;
  o.worker_executable = HYJOB_CLI_PATH;
  try {
    run_algorithm(parse_plan(sample_plan_text()), registry, {}, o);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

}
