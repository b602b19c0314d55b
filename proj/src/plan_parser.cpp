#include "hyjob/plan_parser.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

namespace hyjob {
namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  AlgorithmPlan parse() {
    AlgorithmPlan plan;
    skip_space();
    plan.segments.push_back(parse_segment());
    while (true) {
      skip_space();
      if (at_end()) break;
      expect(';');
      skip_space();
      if (at_end()) break;
      plan.segments.push_back(parse_segment());
    }
    return plan;
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (!at_end()) {
      char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void error(const std::string& message) const {
    ParseDiagnostic d{line_, col_, message};
    if (at_end() && !src_.empty()) {
      // Point at the last character rather than one past the text.
      std::size_t line = 1, col = 1;
      for (std::size_t i = 0; i + 1 < src_.size(); ++i) {
        if (src_[i] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      d.line = line;
      d.column = col;
      d.message += " (at end of input)";
    }
    throw ParseError(std::move(d));
  }

  std::string describe_current() const {
    if (at_end()) return "end of input";
    return std::string("'") + peek() + "'";
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) error(std::string("expected '") + c + "', found " + describe_current());
    advance();
  }

  std::uint64_t parse_int() {
    skip_space();
    if (!std::isdigit(static_cast<unsigned char>(peek()))) {
      error("expected an integer, found " + describe_current());
    }
    std::uint64_t v = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      auto digit = static_cast<std::uint64_t>(peek() - '0');
      if (v > (std::numeric_limits<std::uint64_t>::max() - digit) / 10) error("integer too large");
      v = v * 10 + digit;
      advance();
    }
    return v;
  }

  std::uint32_t parse_u32(const char* what) {
    auto v = parse_int();
    if (v > std::numeric_limits<std::uint32_t>::max()) error(std::string(what) + " too large");
    return static_cast<std::uint32_t>(v);
  }

  SegmentPlan parse_segment() {
    SegmentPlan seg;
    seg.jobs.push_back(parse_job());
    while (true) {
      skip_space();
      if (peek() != ',') break;
      advance();
      seg.jobs.push_back(parse_job());
    }
    return seg;
  }

  JobSpec parse_job() {
    skip_space();
    if (peek() != 'J') error("expected a job 'J<n>(...)', found " + describe_current());
    advance();
    JobSpec job;
    job.id = JobId{parse_int()};
    expect('(');
    job.function_id = parse_u32("function id");
    expect(',');
    job.threads = parse_u32("thread count");
    expect(',');
    job.input = parse_input();
    skip_space();
    if (peek() == ',') {
      advance();
      job.no_send = parse_bool();
    }
    expect(')');
    return job;
  }

  InputBinding parse_input() {
    skip_space();
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      auto n = parse_int();
      if (n == 0) return NoInput{};
      return PoolInput{n};
    }
    if (peek() != 'R') error("expected a chunk count or a result ref, found " + describe_current());
    RefsInput refs;
    while (true) {
      skip_space();
      if (peek() != 'R') break;
      refs.refs.push_back(parse_ref());
    }
    return refs;
  }

  ResultRef parse_ref() {
    advance();  // 'R'
    if (!std::isdigit(static_cast<unsigned char>(peek()))) {
      error("expected a job number after 'R', found " + describe_current());
    }
    ResultRef ref{JobId{parse_int()}, std::nullopt};
    skip_space();
    if (peek() == '[') {
      advance();
      auto start = parse_int();
      skip_space();
      if (src_.substr(pos_, 2) != "..") error("expected '..' in range, found " + describe_current());
      advance();
      advance();
      auto end = parse_int();
      expect(']');
      ref.range = ChunkRange{start, end};
    }
    return ref;
  }

  bool parse_bool() {
    skip_space();
    if (src_.substr(pos_, 4) == "true") {
      for (int i = 0; i < 4; ++i) advance();
      return true;
    }
    if (src_.substr(pos_, 5) == "false") {
      for (int i = 0; i < 5; ++i) advance();
      return false;
    }
    error("expected 'true' or 'false', found " + describe_current());
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

void print_ref(std::ostringstream& out, const ResultRef& r) {
  out << 'R' << r.producer.value;
  if (r.range) out << '[' << r.range->start << ".." << r.range->end << ']';
}

}  // namespace

AlgorithmPlan parse_plan(std::string_view source) {
  auto plan = Parser(source).parse();
  validate_plan(plan);
  return plan;
}

std::string serialize_plan(const AlgorithmPlan& plan) {
  std::ostringstream out;
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    if (s) out << '\n';
    const auto& jobs = plan.segments[s].jobs;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto& job = jobs[j];
      if (j) out << ", ";
      out << 'J' << job.id.value << '(' << job.function_id << ',' << job.threads << ',';
      if (std::holds_alternative<NoInput>(job.input)) {
        out << '0';
      } else if (const auto* p = std::get_if<PoolInput>(&job.input)) {
        out << p->count;
      } else {
        const auto& refs = std::get<RefsInput>(job.input).refs;
        for (std::size_t r = 0; r < refs.size(); ++r) {
          if (r) out << ' ';
          print_ref(out, refs[r]);
        }
      }
      if (job.no_send) out << ",true";
      out << ')';
    }
    out << ';';
  }
  return out.str();
}

std::string_view sample_plan_text() {
  return "J1(1,0,0), J2(2,1,0);\n"
         "J3(2,2,R1[0..5],true), J4(2,2,R1[5..10],true), J5(3,0,R1 R2),\n"
         "  J6(4,0,R1 R2);\n"
         "J7(5,1, R2 R3 R4 R5);\n";
}

AlgorithmPlan load_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open plan file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_plan(text.str());
}

}  // namespace hyjob
