#include <doctest.h>

#include <cstdio>
#include <random>

#include "hyjob/partition.hpp"
#include "hyjob/plan_parser.hpp"
#include "support.hpp"

using namespace hyjob;

TEST_SUITE("core") {

TEST_CASE("chunk construction") {
  Bytes one{0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  DataChunk c(ElementType::F64, 1, one);
  CHECK(c.values<double>()[0] == 1.0);

  DataChunk empty(ElementType::I32, 0, {});
  CHECK(empty.count() == 0);
  CHECK(empty.size_bytes() == 0);

  try {
    DataChunk(ElementType::I32, 2, Bytes(7));
    FAIL("expected SizeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SizeMismatch);
  }
}

TEST_CASE("element widths") {
  CHECK(element_width(ElementType::U8) == 1);
  CHECK(element_width(ElementType::I32) == 4);
  CHECK(element_width(ElementType::I64) == 8);
  CHECK(element_width(ElementType::F32) == 4);
  CHECK(element_width(ElementType::F64) == 8);
}

TEST_CASE("typed view rejects the wrong type") {
  auto c = DataChunk::of<std::int32_t>({1, 2});
  try {
    (void)c.values<double>();
    FAIL("expected TypeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TypeMismatch);
  }
}

TEST_CASE("chunk encoding layout and round trip") {
  auto c = DataChunk::of<std::int32_t>({1, -1});
  Bytes out;
  encode_chunk(c, out);
  CHECK(out == Bytes{1, 2, 0, 0, 0, 1, 0, 0, 0, 0xFF, 0xFF, 0xFF, 0xFF});
  std::size_t off = 0;
  auto back = decode_chunk(out, off);
  REQUIRE(back);
  CHECK(*back == c);
  CHECK(off == out.size());

  Bytes bad{9, 0, 0, 0, 0};
  off = 0;
  std::string why;
  CHECK_FALSE(decode_chunk(bad, off, &why));
  CHECK(off == 0);
  CHECK_FALSE(why.empty());
}

TEST_CASE("chunk files") {
  std::mt19937_64 rng(3);
  std::vector<DataChunk> chunks;
  for (int i = 0; i < 20; ++i) chunks.push_back(testsupport::random_chunk(rng));
  std::string path = "core_chunks.bin";
  write_chunk_file(path, chunks);
  CHECK(read_chunk_file(path) == chunks);
  std::remove(path.c_str());
}

TEST_CASE("partition examples") {
  auto p = partition_chunks(10, 3);
  REQUIRE(p.size() == 3);
  CHECK(p[0].chunk_slice == ChunkRange{0, 4});
  CHECK(p[1].chunk_slice == ChunkRange{4, 7});
  CHECK(p[2].chunk_slice == ChunkRange{7, 10});

  auto q = partition_chunks(4, 4);
  REQUIRE(q.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(q[i].chunk_slice == ChunkRange{i, i + 1});

  auto z = partition_chunks(0, 3);
  REQUIRE(z.size() == 1);
  CHECK(z[0].sequence_index == 0);
  CHECK(z[0].chunk_slice.size() == 0);

  try {
    partition_chunks(5, 0);
    FAIL("expected InvalidSequenceCount");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSequenceCount);
  }
}

TEST_CASE("effective sequences") {
  CHECK(effective_sequences(0, 8, 3) == 3);
  CHECK(effective_sequences(2, 8, 10) == 2);
  CHECK(effective_sequences(4, 8, 0) == 1);
  CHECK(effective_sequences(12, 4, 20) == 12);  // oversubscription keeps the exact count
}

TEST_CASE("assemble outputs") {
  auto a = DataChunk::of<double>({1}), b = DataChunk::of<double>({2}), c = DataChunk::of<double>({3});
  std::map<std::size_t, FunctionData> parts{{0, FunctionData({a, b})}, {1, FunctionData({c})}};
  CHECK(assemble_outputs(parts) == FunctionData({a, b, c}));

  std::map<std::size_t, FunctionData> empties{{0, {}}, {1, {}}};
  CHECK(assemble_outputs(empties).empty());

  std::map<std::size_t, FunctionData> swapped;
  swapped[1] = FunctionData({a, b});
  swapped[0] = FunctionData({c});
  CHECK(assemble_outputs(swapped) == FunctionData({c, a, b}));

  std::map<std::size_t, FunctionData> gap{{0, {}}, {2, {}}};
  try {
    assemble_outputs(gap);
    FAIL("expected MissingSequence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingSequence);
  }
}

TEST_CASE("partition/assemble identity and balance") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = rng() % 40, s = 1 + rng() % 12;
    std::vector<DataChunk> chunks;
    for (std::size_t i = 0; i < n; ++i) chunks.push_back(testsupport::random_chunk(rng));
    FunctionData all(chunks);
    auto parts = partition_chunks(n, s);
    std::map<std::size_t, FunctionData> outs;
    std::size_t covered = 0, lo = SIZE_MAX, hi = 0;
    for (const auto& p : parts) {
      CHECK(p.chunk_slice.start == covered);
      covered = p.chunk_slice.end;
      lo = std::min(lo, p.chunk_slice.size());
      hi = std::max(hi, p.chunk_slice.size());
      outs[p.sequence_index] = all.slice(p.chunk_slice.start, p.chunk_slice.end);
    }
    CHECK(covered == n);
    CHECK(hi - lo <= 1);
    CHECK(assemble_outputs(outs) == all);
  }
}

TEST_CASE("resolve binding") {
  std::vector<DataChunk> r1, r2;
  for (int i = 0; i < 10; ++i) r1.push_back(DataChunk::of<std::int32_t>({i}));
  for (int i = 0; i < 3; ++i) r2.push_back(DataChunk::of<std::int32_t>({100 + i}));
  std::map<JobId, FunctionData> results{{JobId{1}, FunctionData(r1)}, {JobId{2}, FunctionData(r2)}};
  ChunkPool pool({DataChunk::of<double>({1}), DataChunk::of<double>({2}), DataChunk::of<double>({3})});

  auto first5 = resolve_binding(RefsInput{{{JobId{1}, ChunkRange{0, 5}}}}, pool, results);
  CHECK(first5 == FunctionData(std::vector<DataChunk>(r1.begin(), r1.begin() + 5)));
  CHECK(resolve_binding(NoInput{}, pool, results).empty());

  std::map<JobId, FunctionData> small{{JobId{1}, FunctionData({r1[0], r1[1]})}, {JobId{2}, FunctionData(r2)}};
  auto both = resolve_binding(RefsInput{{{JobId{1}, std::nullopt}, {JobId{2}, std::nullopt}}}, pool, small);
  CHECK(both == FunctionData({r1[0], r1[1], r2[0], r2[1], r2[2]}));

  auto two = resolve_binding(PoolInput{2}, pool, results);
  CHECK(two.size() == 2);
  CHECK(pool.cursor() == 2);

  auto expect = [&](const InputBinding& b, ErrorCode code) {
    try {
      resolve_binding(b, pool, results);
      FAIL("expected " << to_string(code));
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  expect(PoolInput{2}, ErrorCode::PoolExhausted);
  expect(RefsInput{{{JobId{9}, std::nullopt}}}, ErrorCode::UnknownProducer);
  expect(RefsInput{{{JobId{2}, ChunkRange{1, 4}}}}, ErrorCode::RangeOutOfBounds);
}

TEST_CASE("resolve binding is deterministic") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<JobId, FunctionData> results;
    for (std::uint64_t id = 1; id <= 3; ++id) {
      std::vector<DataChunk> v;
      for (auto n = rng() % 6; n > 0; --n) v.push_back(testsupport::random_chunk(rng));
      results[JobId{id}] = FunctionData(v);
    }
    RefsInput refs;
    for (int k = 0; k < 3; ++k) {
      JobId p{1 + rng() % 3};
      auto n = results[p].size();
      std::size_t a = rng() % (n + 1), b = rng() % (n + 1);
      refs.refs.push_back({p, ChunkRange{std::min(a, b), std::max(a, b)}});
    }
    ChunkPool p1, p2;
    CHECK(resolve_binding(refs, p1, results) == resolve_binding(refs, p2, results));
  }
}

TEST_CASE("hybridism classification") {
  AlgorithmPlan strict{{SegmentPlan{{JobSpec{JobId{1}, 1, 4, NoInput{}}, JobSpec{JobId{2}, 1, 1, NoInput{}}}}}};
  CHECK(classify_hybridism(strict, {{JobId{1}, 4}, {JobId{2}, 1}}) == Hybridism::Strict);

  AlgorithmPlan loose{{SegmentPlan{{JobSpec{JobId{1}, 1, 4, NoInput{}}}},
                       SegmentPlan{{JobSpec{JobId{2}, 1, 1, NoInput{}}, JobSpec{JobId{3}, 1, 1, NoInput{}}}}}};
  CHECK(classify_hybridism(loose, {{JobId{1}, 4}, {JobId{2}, 1}, {JobId{3}, 1}}) == Hybridism::Loose);

  AlgorithmPlan single{{SegmentPlan{{JobSpec{JobId{1}, 1, 1, NoInput{}}}}}};
  CHECK(classify_hybridism(single, {{JobId{1}, 1}}) == Hybridism::NotHybrid);

  auto sample = parse_plan(sample_plan_text());
  CHECK(classify_hybridism(sample, declared_sequence_counts(sample, 4)) == Hybridism::Strict);
}

TEST_CASE("plan validation") {
  auto expect_invalid = [](AlgorithmPlan p) {
    try {
      validate_plan(p);
      FAIL("expected ValidationError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ValidationError);
    }
  };
  JobSpec a{JobId{1}, 1, 0, NoInput{}};
  JobSpec b{JobId{2}, 1, 0, RefsInput{{{JobId{1}, std::nullopt}}}};
  validate_plan(AlgorithmPlan{{SegmentPlan{{a}}, SegmentPlan{{b}}}});
  expect_invalid(AlgorithmPlan{{SegmentPlan{{a, b}}}});                        // same segment
  expect_invalid(AlgorithmPlan{{SegmentPlan{{b}}, SegmentPlan{{a}}}});         // forward ref
  expect_invalid(AlgorithmPlan{{SegmentPlan{{a}}, SegmentPlan{{a}}}});         // duplicate id
  expect_invalid(AlgorithmPlan{{SegmentPlan{{JobSpec{JobId{0}, 1, 0, NoInput{}}}}}});
  JobSpec inverted{JobId{2}, 1, 0, RefsInput{{{JobId{1}, ChunkRange{5, 2}}}}};
  expect_invalid(AlgorithmPlan{{SegmentPlan{{a}}, SegmentPlan{{inverted}}}});
}

TEST_CASE("random plans satisfy plan invariants") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto c = testsupport::random_case(seed);
    CHECK_NOTHROW(validate_plan(c.plan));
  }
}

}
