#include <doctest.h>

#include <random>

#include "hyjob/plan_parser.hpp"
#include "support.hpp"

using namespace hyjob;

namespace {

ParseDiagnostic syntax_error(std::string_view text) {
  try {
    parse_plan(text);
  } catch (const ParseError& e) {
    return e.diagnostic();
  }
  FAIL("expected a syntax error for: " << text);
  return {};
}

ErrorCode error_code(std::string_view text) {
  try {
    parse_plan(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Aborted;
}

}  // namespace

TEST_SUITE("parser") {

TEST_CASE("sample plan structure") {
  auto p = parse_plan(sample_plan_text());
  REQUIRE(p.segments.size() == 3);
  CHECK(p.segments[0].jobs.size() == 2);
  CHECK(p.segments[1].jobs.size() == 4);
  CHECK(p.segments[2].jobs.size() == 1);
  const auto* j3 = p.find(JobId{3});
  REQUIRE(j3);
  CHECK(j3->function_id == 2);
  CHECK(j3->threads == 2);
  CHECK(j3->no_send);
  CHECK(j3->input == InputBinding{RefsInput{{{JobId{1}, ChunkRange{0, 5}}}}});
  const auto* j7 = p.find(JobId{7});
  REQUIRE(j7);
  CHECK(j7->input == InputBinding{RefsInput{{{JobId{2}, {}}, {JobId{3}, {}}, {JobId{4}, {}}, {JobId{5}, {}}}}});
}

TEST_CASE("minimal plan") {
  auto p = parse_plan("J1(1,0,0);");
  REQUIRE(p.segments.size() == 1);
  REQUIRE(p.segments[0].jobs.size() == 1);
  CHECK(std::holds_alternative<NoInput>(p.segments[0].jobs[0].input));
  CHECK_FALSE(p.segments[0].jobs[0].no_send);
  CHECK(serialize_plan(p) == "J1(1,0,0);");
}

TEST_CASE("pool counts, comments and optional trailing semicolon") {
  auto p = parse_plan("# header\nJ4 ( 1 , 2 , 3 , false )  # trailing\n;\n J9(2,0,R4[1..2])");
  REQUIRE(p.segments.size() == 2);
  CHECK(p.segments[0].jobs[0].id == JobId{4});
  CHECK(p.segments[0].jobs[0].input == InputBinding{PoolInput{3}});
  CHECK(p.segments[1].jobs[0].input == InputBinding{RefsInput{{{JobId{4}, ChunkRange{1, 2}}}}});
}

TEST_CASE("validation errors") {
  CHECK(error_code("J1(1,0,R1);") == ErrorCode::ValidationError);
  CHECK(error_code("J1(1,0,0), J2(1,0,R1);") == ErrorCode::ValidationError);
  CHECK(error_code("J1(1,0,0); J1(1,0,0);") == ErrorCode::ValidationError);
  CHECK(error_code("J1(1,0,0); J2(1,0,R1[4..2]);") == ErrorCode::ValidationError);
}

TEST_CASE("syntax diagnostics carry line and column") {
  auto d = syntax_error("J1(1,0,0);\nJ2(1,x,0);");
  CHECK(d.line == 2);
  CHECK(d.column == 6);
  CHECK(syntax_error("J1(1,0,0").line == 1);
  CHECK(syntax_error("K1(1,0,0);").column == 1);
  CHECK(syntax_error("J1(1,0,R1[0..]);").line == 1);
  CHECK(syntax_error("J1(1,0,0,maybe);").line == 1);
}

TEST_CASE("sample serializes to text that re-parses equal") {
  auto p = parse_plan(sample_plan_text());
  auto text = serialize_plan(p);
  CHECK(parse_plan(text) == p);
  CHECK(text.find("J1(1,0,0), J2(2,1,0);") == 0);
  CHECK(text.find("R1[0..5]") != std::string::npos);
  CHECK(text.find("false") == std::string::npos);
}

TEST_CASE("round trip over random plans") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto c = testsupport::random_case(seed);
    auto text = serialize_plan(c.plan);
    CHECK(parse_plan(text) == c.plan);
    CHECK(serialize_plan(parse_plan(text)) == text);
  }
}

TEST_CASE("diagnostics stay inside the source") {
  std::mt19937_64 rng(17);
  const std::string alphabet = "J R0123456789(),;[].\n#truefalse";
  for (int trial = 0; trial < 3000; ++trial) {
    std::string text = serialize_plan(testsupport::random_case(rng() % 50).plan);
    // Mutate a few characters so most inputs are almost valid.
    for (int m = 0, k = 1 + static_cast<int>(rng() % 3); m < k && !text.empty(); ++m) {
      auto pos = rng() % text.size();
      switch (rng() % 3) {
        case 0: text[pos] = alphabet[rng() % alphabet.size()]; break;
        case 1: text.erase(pos, 1); break;
        default: text.insert(pos, 1, alphabet[rng() % alphabet.size()]);
      }
    }
    try {
      auto p = parse_plan(text);
      CHECK_NOTHROW(validate_plan(p));
    } catch (const ParseError& e) {
      std::size_t lines = 1 + static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
      const auto& d = e.diagnostic();
      CHECK(d.line >= 1);
      CHECK(d.line <= lines);
      CHECK(d.column >= 1);
      // Column may point one past the last character of a line (end of input).
      std::size_t line_start = 0;
      for (std::size_t l = 1; l < d.line; ++l) line_start = text.find('\n', line_start) + 1;
      auto line_end = text.find('\n', line_start);
      if (line_end == std::string::npos) line_end = text.size();
      CHECK(d.column <= line_end - line_start + 1);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ValidationError);
    }
  }
}

}
