#include <doctest.h>

#include <thread>

#include "hyjob/apps.hpp"
#include "hyjob/registry.hpp"
#include "hyjob/run.hpp"

using namespace hyjob;

TEST_SUITE("registry") {

TEST_CASE("ids follow registration order") {
  FunctionRegistry r;
  CHECK(r.add_function(apps::fn_ramp) == 1);
  CHECK(r.add_function(apps::fn_square) == 2);
  CHECK(r.add_function(apps::fn_search_max) == 3);

  FunctionRegistry again;
  auto ids = apps::register_builtins(again);
  CHECK(ids.ramp == 1);
  CHECK(ids.square == 2);
  CHECK(ids.search_max == 3);
  CHECK(ids.jacobi_check == 9);
}

TEST_CASE("square and search_max") {
  FunctionRegistry r;
  auto ids = apps::register_builtins(r);
  auto sq = r.invoke(ids.square, FunctionData({DataChunk::of<std::int32_t>({3})}));
  REQUIRE(sq.size() == 1);
  CHECK(sq[0] == DataChunk::of<std::int32_t>({9}));

  auto mx = r.invoke(ids.search_max, FunctionData({DataChunk::of<double>({1.0, 5.0, 2.0})}));
  REQUIRE(mx.size() == 1);
  CHECK(mx[0] == DataChunk::of<double>({5.0}));
}

TEST_CASE("unknown function") {
  FunctionRegistry r;
  try {
    r.invoke(99, {});
    FAIL("expected UnknownFunction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownFunction);
  }
}

TEST_CASE("a throwing function is reported as a panic") {
  FunctionRegistry r;
  auto id = r.add_function([](const FunctionData&, FunctionData&) { throw std::runtime_error("boom"); });
  try {
    r.invoke(id, {});
    FAIL("expected UserFunctionPanic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UserFunctionPanic);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
}

TEST_CASE("registration after a run starts is refused") {
  FunctionRegistry r;
  auto ids = apps::register_builtins(r);
  run_algorithm(AlgorithmPlan{{SegmentPlan{{JobSpec{JobId{1}, ids.ramp, 1, NoInput{}}}}}}, r, {});
  try {
    r.add_function(apps::fn_sum);
    FAIL("expected RegistryFrozen");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RegistryFrozen);
  }
}

TEST_CASE("concurrent invocations stay isolated") {
  FunctionRegistry r;
  auto ids = apps::register_builtins(r);
  r.freeze();
  std::vector<std::thread> threads;
  std::vector<bool> ok(8, false);
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      bool good = true;
      for (int i = 0; i < 200; ++i) {
        auto v = static_cast<double>(t * 1000 + i);
        auto out = r.invoke(ids.negate, FunctionData({DataChunk::of<double>({v, v + 1})}));
        good = good && out.size() == 1 && out[0] == DataChunk::of<double>({-v, -v - 1});
      }
      ok[static_cast<std::size_t>(t)] = good;
    });
  }
  for (auto& th : threads) th.join();
  for (bool b : ok) CHECK(b);
}

}
