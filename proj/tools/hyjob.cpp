// hyjob: run job plans, inspect them, and benchmark the Jacobi example.

#include <unistd.h>

#include <CLI11.hpp>
#include <climits>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

#include "hyjob/apps.hpp"
#include "hyjob/bench.hpp"
#include "hyjob/jacobi.hpp"
#include "hyjob/plan_parser.hpp"
#include "hyjob/run.hpp"
#include "hyjob/scheduler.hpp"
#include "hyjob/threaded.hpp"

using namespace hyjob;

namespace {

struct ClusterFlags {
  std::uint32_t subs = 1;
  std::uint32_t workers_per_sub = 2;
  std::uint32_t cores = 4;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--subs", subs, "Sub-schedulers")->check(CLI::PositiveNumber);
    cmd->add_option("--workers-per-sub", workers_per_sub, "Workers per sub-scheduler")->check(CLI::PositiveNumber);
    cmd->add_option("--cores", cores, "Cores per worker")->check(CLI::PositiveNumber);
  }
  ClusterConfig config() const { return {subs, workers_per_sub, cores}; }
};

struct RunFlags {
  std::string plan_path;
  std::string builtin;
  std::string pool_path;
  std::string problem_path;
  std::string transport = "inproc";
  std::string spawn = "thread";
  std::uint64_t seed = 1;
  bool retain_all = false;
  std::string report_path;
  std::size_t blocks = 4;
  std::size_t n = 64;
  double epsilon = 1e-10;
  std::size_t max_iters = 500;
  std::size_t max_segments = 100000;
  ClusterFlags cluster;
};

std::string self_executable() {
  char buf[PATH_MAX];
  auto len = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (len <= 0) return "hyjob";
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string describe_chunk(const DataChunk& c) {
  std::ostringstream s;
  s << to_string(c.dtype()) << "[" << c.count() << "]";
  if (c.dtype() == ElementType::F64 && c.count() <= 4) {
    s << " {";
    auto v = c.values<double>();
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
    s << "}";
  }
  return s.str();
}

void print_results(const RunResult& r) {
  for (const auto& [id, data] : r.results) {
    std::cout << "R" << id.value << ": " << data.size() << " chunk(s)";
    for (std::size_t i = 0; i < data.size() && i < 4; ++i) std::cout << (i ? ", " : " ") << describe_chunk(data[i]);
    if (data.size() > 4) std::cout << ", ...";
    std::cout << "\n";
  }
}

void print_summary(const RunResult& r) {
  std::cout << "completed " << r.report.size() << " job(s) in " << r.segments << " segment(s), "
            << r.injections.size() << " injection(s), " << std::fixed << std::setprecision(3)
            << static_cast<double>(r.wall_ns) / 1e6 << " ms\n"
            << std::defaultfloat;
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_run(const RunFlags& f) {
  RunOptions options;
  options.cluster = f.cluster.config();
  options.seed = f.seed;
  options.retain_all = f.retain_all;
  options.max_segments = f.max_segments;
  options.transport = f.transport == "tcp" ? TransportKind::Tcp : TransportKind::Inproc;
  if (f.spawn == "process") {
    options.spawn = SpawnMode::Process;
    options.worker_executable = self_executable();
  }

  FunctionRegistry registry;
  auto ids = apps::register_builtins(registry);

  AlgorithmPlan plan;
  std::vector<DataChunk> pool;
  if (!f.pool_path.empty()) pool = read_chunk_file(f.pool_path);

  if (f.builtin == "jacobi") {
    auto problem = f.problem_path.empty() ? jacobi::generate(f.n, f.seed) : jacobi::read_problem(f.problem_path);
    problem.epsilon = f.epsilon;
    problem.max_iters = f.max_iters;
    auto jp = jacobi::build_plan(problem, f.blocks, {ids.forward, ids.jacobi_update, ids.jacobi_apply, ids.jacobi_check});
    auto result = run_algorithm(jp.plan, registry, std::move(jp.pool), options);
    auto s = jacobi::extract_solution(result.results);
    print_summary(result);
    std::cout << "jacobi: n=" << problem.n << " blocks=" << jp.n_blocks << " iterations=" << s.iterations
              << " residual=" << std::scientific << std::setprecision(3) << s.res << std::defaultfloat << "\n";
    std::cout << "x[0.." << std::min<std::size_t>(4, s.x.size()) << ") =";
    for (std::size_t i = 0; i < s.x.size() && i < 4; ++i) std::cout << " " << std::setprecision(17) << s.x[i];
    std::cout << std::setprecision(6) << "\n";
    if (!f.report_path.empty()) {
      std::ofstream out(f.report_path);
      write_report(out, result);
    }
    return 0;
  }

  if (f.builtin == "max") {
    if (pool.empty()) throw Error(ErrorCode::ValidationError, "--builtin max needs a non-empty --pool file");
    plan = apps::build_max_plan(pool.size(), ids.search_max);
  } else if (f.builtin == "sample") {
    plan = parse_plan(sample_plan_text());
  } else if (!f.plan_path.empty()) {
    plan = load_plan_file(f.plan_path);
  } else {
    throw Error(ErrorCode::InvalidConfig, "give --plan FILE or --builtin max|jacobi|sample");
  }

  auto pool_copy = pool;
  auto result = run_algorithm(plan, registry, std::move(pool), options);
  print_summary(result);
  if (f.builtin == "max") {
    auto final_id = plan.segments.back().jobs.back().id;
    auto v = result.results.at(final_id)[0].values<double>();
    std::cout << "global maximum: " << std::setprecision(17) << v[0] << "\n";
  } else {
    print_results(result);
  }
  if (!f.report_path.empty()) {
    std::ofstream out(f.report_path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + f.report_path);
    write_report(out, result);
  }
  return 0;
}

int cmd_analyze(const std::string& plan_path, bool sample, const ClusterFlags& cluster) {
  auto plan = sample ? parse_plan(sample_plan_text()) : load_plan_file(plan_path);
  auto config = cluster.config();
  std::cout << "segment  job  function  threads  no_send  input\n";
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    for (const auto& j : plan.segments[s].jobs) {
      std::string input;
      if (std::holds_alternative<NoInput>(j.input)) input = "none";
      if (const auto* p = std::get_if<PoolInput>(&j.input)) input = "pool " + std::to_string(p->count);
      if (const auto* r = std::get_if<RefsInput>(&j.input)) {
        for (const auto& ref : r->refs) {
          input += (input.empty() ? "R" : " R") + std::to_string(ref.producer.value);
          if (ref.range) input += "[" + std::to_string(ref.range->start) + ".." + std::to_string(ref.range->end) + "]";
        }
      }
      std::cout << std::setw(7) << s + 1 << "  " << std::setw(3) << ("J" + std::to_string(j.id.value)) << "  "
                << std::setw(8) << j.function_id << "  " << std::setw(7) << j.threads << "  " << std::setw(7)
                << (j.no_send ? "yes" : "no") << "  " << input << "\n";
    }
  }
  auto hybrid = classify_hybridism(plan, declared_sequence_counts(plan, config.cores_per_worker));
  std::cout << "hybridism: " << to_string(hybrid) << "\n";
  std::cout << "placement (" << config.n_subschedulers << " sub-scheduler(s) x " << config.workers_per_subscheduler
            << " worker(s) x " << config.cores_per_worker << " core(s)):\n";
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    auto placed = place_jobs(plan.segments[s], config);
    std::map<std::uint32_t, std::vector<std::uint64_t>> by_worker;
    for (const auto& [id, p] : placed) by_worker[p.worker_id].push_back(id.value);
    std::cout << "  segment " << s + 1 << ":";
    for (const auto& [w, jobs] : by_worker) {
      std::cout << "  W" << w << "(S" << config.sub_of(w) << ") {";
      for (std::size_t i = 0; i < jobs.size(); ++i) std::cout << (i ? " " : "") << "J" << jobs[i];
      std::cout << "}";
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyjob: hybrid-parallel job orchestration"};
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Execute a plan");
  run_cmd->add_option("--plan", run.plan_path, "Plan file");
  run_cmd->add_option("--builtin", run.builtin, "Bundled example")
      ->check(CLI::IsMember({"max", "jacobi", "sample"}));
  run_cmd->add_option("--pool", run.pool_path, "Initial chunk pool file");
  run_cmd->add_option("--problem", run.problem_path, "Jacobi problem file (default: generated)");
  run_cmd->add_option("--n", run.n, "Size of a generated Jacobi problem")->check(CLI::PositiveNumber);
  run_cmd->add_option("--blocks", run.blocks, "Jacobi row blocks")->check(CLI::PositiveNumber);
  run_cmd->add_option("--epsilon", run.epsilon, "Jacobi convergence threshold");
  run_cmd->add_option("--max-iters", run.max_iters, "Jacobi iteration guard")->check(CLI::PositiveNumber);
  run_cmd->add_option("--transport", run.transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
  run_cmd->add_option("--spawn", run.spawn, "Workers as threads or processes (tcp only)")
      ->check(CLI::IsMember({"thread", "process"}));
  run_cmd->add_option("--seed", run.seed, "Seed for in-process delivery order and generated data");
  run_cmd->add_flag("--retain-all", run.retain_all, "Never release intermediate results");
  run_cmd->add_option("--max-segments", run.max_segments, "Upper bound on segments after injection");
  run_cmd->add_option("--report", run.report_path, "Write the run report here");
  run.cluster.add_to(run_cmd);

  std::string analyze_path;
  bool analyze_sample = false;
  ClusterFlags analyze_cluster;
  auto* analyze_cmd = app.add_subcommand("analyze", "Show a plan's structure and placement");
  analyze_cmd->add_option("--plan", analyze_path, "Plan file");
  analyze_cmd->add_flag("--sample", analyze_sample, "Analyze the bundled sample plan");
  analyze_cluster.add_to(analyze_cmd);

  BenchConfig bench;
  std::string bench_transport = "inproc";
  auto* bench_cmd = app.add_subcommand("bench-jacobi", "Framework Jacobi against the direct OpenMP solver");
  bench_cmd->add_option("--n", bench.n, "Unknowns")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--blocks", bench.blocks, "Row blocks")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--iters", bench.iters, "Sweeps");
  bench_cmd->add_option("--cores", bench.cores, "Cores")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Problem seed");
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repetitions")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--transport", bench_transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));

  std::size_t gen_n = 512;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-jacobi", "Write a diagonally dominant problem file");
  gen_cmd->add_option("--n", gen_n, "Unknowns")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "Seed");
  gen_cmd->add_option("--out", gen_out, "Output file")->required();

  std::size_t pool_chunks = 8, pool_size = 16;
  std::uint64_t pool_seed = 1;
  std::string pool_out;
  auto* pool_cmd = app.add_subcommand("gen-pool", "Write a pool file of random F64 chunks");
  pool_cmd->add_option("--chunks", pool_chunks, "Chunk count")->check(CLI::PositiveNumber);
  pool_cmd->add_option("--size", pool_size, "Elements per chunk")->check(CLI::PositiveNumber);
  pool_cmd->add_option("--seed", pool_seed, "Seed");
  pool_cmd->add_option("--out", pool_out, "Output file")->required();

  std::string scan_pool;
  auto* scan_cmd = app.add_subcommand("pool-max", "Print the largest element of a pool file by direct scan");
  scan_cmd->add_option("--pool", scan_pool, "Pool file")->required();

  std::string worker_connect;
  std::uint32_t worker_id = 0, worker_cores = 1;
  auto* worker_cmd = app.add_subcommand("worker", "Serve as a worker process (started by the runtime)");
  worker_cmd->add_option("--connect", worker_connect, "Sub-scheduler address")->required();
  worker_cmd->add_option("--id", worker_id, "Worker id")->required()->check(CLI::PositiveNumber);
  worker_cmd->add_option("--cores", worker_cores, "Cores")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*analyze_cmd) {
      if (analyze_path.empty() && !analyze_sample) throw Error(ErrorCode::InvalidConfig, "give --plan FILE or --sample");
      return cmd_analyze(analyze_path, analyze_sample, analyze_cluster);
    }
    if (*bench_cmd) {
      bench.transport = bench_transport == "tcp" ? TransportKind::Tcp : TransportKind::Inproc;
      print_bench(std::cout, bench_jacobi(bench));
      return 0;
    }
    if (*gen_cmd) {
      jacobi::write_problem(gen_out, jacobi::generate(gen_n, gen_seed));
      std::cout << "wrote " << gen_n << "x" << gen_n << " problem to " << gen_out << "\n";
      return 0;
    }
    if (*pool_cmd) {
      std::mt19937_64 rng(pool_seed);
      std::vector<DataChunk> chunks;
      for (std::size_t c = 0; c < pool_chunks; ++c) {
        std::vector<double> v(pool_size);
        for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2000.0 - 1000.0;
        chunks.push_back(DataChunk::of(v));
      }
      write_chunk_file(pool_out, chunks);
      std::cout << "wrote " << pool_chunks << " chunk(s) of " << pool_size << " to " << pool_out << "\n";
      return 0;
    }
    if (*scan_cmd) {
      std::cout << std::setprecision(17) << apps::scan_max(read_chunk_file(scan_pool)) << "\n";
      return 0;
    }
    if (*worker_cmd) {
      FunctionRegistry registry;
      apps::register_builtins(registry);
      runtime::run_worker_process(worker_connect, worker_id, worker_cores, registry);
      return 0;
    }
  } catch (const RunFailed& e) {
    std::cerr << "run failed: job J" << e.job().value << ": " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << (run.plan_path.empty() ? analyze_path : run.plan_path) << ":" << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}
