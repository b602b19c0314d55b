#include "hyjob/message.hpp"

#include <limits>
#include <sstream>

namespace hyjob {
namespace {

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}

  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void boolean(bool b) { out_.push_back(b ? 1 : 0); }

  void u32_checked(std::size_t v, const char* field) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      fail(ErrorCode::FieldOverflow, std::string(field) + " does not fit in 32 bits");
    }
    uint<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  void text(const std::string& s) {
    u32_checked(s.size(), "text length");
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void chunks(const std::vector<DataChunk>& cs) {
    for (const auto& c : cs) encode_chunk(c, out_);
  }

 private:
  Bytes& out_;
};

class Reader {
 public:
  // `base` is the offset of `data[0]` within the whole frame, for diagnostics.
  Reader(std::span<const std::uint8_t> data, std::size_t base, Tag tag)
      : data_(data), base_(base), tag_(tag) {}

  [[noreturn]] void malformed(const std::string& what) const {
    throw DecodeError(ErrorCode::MalformedBody, base_ + pos_,
                      std::string(to_string(tag_)) + " body: " + what);
  }

  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) malformed(std::string("truncated ") + what);
  }

  template <typename T>
  T uint(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  std::uint8_t u8(const char* what) { return uint<std::uint8_t>(what); }
  bool boolean(const char* what) {
    auto v = u8(what);
    if (v > 1) {
      --pos_;
      malformed(std::string(what) + " must be 0 or 1");
    }
    return v == 1;
  }
  std::string text(const char* what) {
    auto n = uint<std::uint32_t>(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<DataChunk> chunks(std::uint32_t n) {
    std::vector<DataChunk> out;
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string why;
      auto c = decode_chunk(data_, pos_, &why);
      if (!c) malformed("chunk " + std::to_string(i) + ": " + why);
      out.push_back(std::move(*c));
    }
    return out;
  }
  // Guards against counts that cannot possibly fit, before allocating.
  std::uint32_t count(const char* what, std::size_t min_item_size) {
    auto n = uint<std::uint32_t>(what);
    if (min_item_size && static_cast<std::size_t>(n) > (data_.size() - pos_) / min_item_size) {
      pos_ -= 4;
      malformed(std::string(what) + " exceeds the remaining body");
    }
    return n;
  }
  void finish() const {
    if (pos_ != data_.size()) malformed("unexpected trailing bytes");
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t base_;
  Tag tag_;
  std::size_t pos_ = 0;
};

void write_template_binding(Writer& w, const TemplateBinding& b) {
  if (std::holds_alternative<NoInput>(b)) {
    w.u8(0);
  } else if (const auto* p = std::get_if<PoolInput>(&b)) {
    w.u8(1);
    w.u32_checked(p->count, "pool count");
  } else {
    const auto& refs = std::get<TemplateRefs>(b).refs;
    w.u8(2);
    w.u32_checked(refs.size(), "ref count");
    for (const auto& r : refs) {
      w.boolean(r.placeholder);
      w.uint<std::uint64_t>(r.producer);
      w.boolean(r.range.has_value());
      if (r.range) {
        w.u32_checked(r.range->start, "range start");
        w.u32_checked(r.range->end, "range end");
      }
    }
  }
}

TemplateBinding read_template_binding(Reader& r) {
  auto kind = r.u8("input kind");
  switch (kind) {
    case 0: return NoInput{};
    case 1: return PoolInput{r.uint<std::uint32_t>("pool count")};
    case 2: {
      TemplateRefs refs;
      auto n = r.count("ref count", 10);
      for (std::uint32_t i = 0; i < n; ++i) {
        TemplateRef ref;
        ref.placeholder = r.boolean("placeholder flag");
        ref.producer = r.uint<std::uint64_t>("producer");
        if (r.boolean("range flag")) {
          auto start = r.uint<std::uint32_t>("range start");
          auto end = r.uint<std::uint32_t>("range end");
          ref.range = ChunkRange{start, end};
        }
        refs.refs.push_back(std::move(ref));
      }
      return refs;
    }
    default: r.malformed("unknown input kind " + std::to_string(kind));
  }
}

struct BodyEncoder {
  Writer& w;

  void operator()(const HelloMsg& m) {
    w.uint<std::uint32_t>(m.worker_id);
    w.uint<std::uint32_t>(m.cores);
    w.u8(m.version);
    w.text(m.address);
  }
  void operator()(const AssignJobMsg& m) {
    w.uint<std::uint64_t>(m.job_id);
    w.uint<std::uint32_t>(m.function_id);
    w.uint<std::uint32_t>(m.threads);
    w.boolean(m.no_send);
    w.u32_checked(m.inline_chunks.size(), "inline chunk count");
    w.chunks(m.inline_chunks);
    w.u32_checked(m.refs.size(), "ref count");
    for (const auto& r : m.refs) {
      w.uint<std::uint64_t>(r.producer);
      w.uint<std::uint32_t>(r.start);
      w.uint<std::uint32_t>(r.end);
      w.u8(static_cast<std::uint8_t>(r.holder_kind));
      w.text(r.holder_addr);
    }
    w.uint<std::uint32_t>(m.worker_id);
  }
  void operator()(const JobDoneMsg& m) {
    w.uint<std::uint64_t>(m.job_id);
    w.u8(static_cast<std::uint8_t>(m.retention));
    w.uint<std::uint32_t>(m.n_chunks);
    if (m.retention == Retention::Returned) {
      if (m.chunks.size() != m.n_chunks) {
        fail(ErrorCode::MalformedBody, "JOB_DONE n_chunks disagrees with the chunks carried");
      }
      w.chunks(m.chunks);
    } else if (!m.chunks.empty()) {
      fail(ErrorCode::MalformedBody, "retained JOB_DONE must not carry chunks");
    }
    w.uint<std::uint64_t>(m.bytes_in);
    w.uint<std::uint64_t>(m.bytes_out);
  }
  void operator()(const FetchMsg& m) {
    w.uint<std::uint64_t>(m.producer);
    w.uint<std::uint32_t>(m.start);
    w.uint<std::uint32_t>(m.end);
  }
  void operator()(const ChunksMsg& m) {
    w.uint<std::uint64_t>(m.producer);
    w.u32_checked(m.chunks.size(), "chunk count");
    w.chunks(m.chunks);
  }
  void operator()(const ReleaseMsg& m) { w.uint<std::uint64_t>(m.producer); }
  void operator()(const InjectMsg& m) {
    w.uint<std::uint64_t>(m.origin);
    w.u8(static_cast<std::uint8_t>(m.request.target));
    w.uint<std::uint32_t>(m.request.offset);
    w.u32_checked(m.request.specs.size(), "spec count");
    for (const auto& s : m.request.specs) {
      w.uint<std::uint64_t>(s.placeholder);
      w.uint<std::uint32_t>(s.segment_delta);
      w.uint<std::uint32_t>(s.function_id);
      w.uint<std::uint32_t>(s.threads);
      w.boolean(s.no_send);
      write_template_binding(w, s.input);
    }
  }
  void operator()(const InjectAckMsg& m) {
    w.u32_checked(m.mapping.size(), "mapping count");
    for (const auto& [placeholder, assigned] : m.mapping) {
      w.uint<std::uint64_t>(placeholder);
      w.uint<std::uint64_t>(assigned);
    }
  }
  void operator()(const ShutdownMsg&) {}
  void operator()(const JobFailedMsg& m) {
    w.uint<std::uint64_t>(m.job_id);
    w.uint<std::uint32_t>(m.code);
    w.text(m.message);
  }
};

Message decode_tagged(Tag tag, Reader& r) {
  switch (tag) {
    case Tag::Hello: {
      HelloMsg m;
      m.worker_id = r.uint<std::uint32_t>("worker_id");
      m.cores = r.uint<std::uint32_t>("cores");
      m.version = r.u8("version");
      m.address = r.text("address");
      return m;
    }
    case Tag::AssignJob: {
      AssignJobMsg m;
      m.job_id = r.uint<std::uint64_t>("job_id");
      m.function_id = r.uint<std::uint32_t>("function_id");
      m.threads = r.uint<std::uint32_t>("threads");
      m.no_send = r.boolean("no_send");
      m.inline_chunks = r.chunks(r.count("inline chunk count", 5));
      auto n_refs = r.count("ref count", 21);
      for (std::uint32_t i = 0; i < n_refs; ++i) {
        LocatedRef ref;
        ref.producer = r.uint<std::uint64_t>("ref producer");
        ref.start = r.uint<std::uint32_t>("ref start");
        ref.end = r.uint<std::uint32_t>("ref end");
        auto kind = r.u8("holder kind");
        if (kind > 1) r.malformed("holder kind must be 0 or 1");
        ref.holder_kind = static_cast<HolderKind>(kind);
        ref.holder_addr = r.text("holder address");
        m.refs.push_back(std::move(ref));
      }
      m.worker_id = r.uint<std::uint32_t>("worker_id");
      return m;
    }
    case Tag::JobDone: {
      JobDoneMsg m;
      m.job_id = r.uint<std::uint64_t>("job_id");
      auto retained = r.u8("retained");
      if (retained > 2) r.malformed("retained flag must be 0, 1 or 2");
      m.retention = static_cast<Retention>(retained);
      if (m.retention == Retention::Returned) {
        m.n_chunks = r.count("n_chunks", 5);
        m.chunks = r.chunks(m.n_chunks);
      } else {
        m.n_chunks = r.uint<std::uint32_t>("n_chunks");
      }
      m.bytes_in = r.uint<std::uint64_t>("bytes_in");
      m.bytes_out = r.uint<std::uint64_t>("bytes_out");
      return m;
    }
    case Tag::Fetch: {
      FetchMsg m;
      m.producer = r.uint<std::uint64_t>("producer");
      m.start = r.uint<std::uint32_t>("start");
      m.end = r.uint<std::uint32_t>("end");
      return m;
    }
    case Tag::Chunks: {
      ChunksMsg m;
      m.producer = r.uint<std::uint64_t>("producer");
      m.chunks = r.chunks(r.count("chunk count", 5));
      return m;
    }
    case Tag::Release: return ReleaseMsg{r.uint<std::uint64_t>("producer")};
    case Tag::Inject: {
      InjectMsg m;
      m.origin = r.uint<std::uint64_t>("origin");
      auto target = r.u8("target kind");
      if (target > 2) r.malformed("target kind must be 0, 1 or 2");
      m.request.target = static_cast<InjectionTarget>(target);
      m.request.offset = r.uint<std::uint32_t>("offset");
      auto n = r.count("spec count", 22);
      for (std::uint32_t i = 0; i < n; ++i) {
        JobTemplate t;
        t.placeholder = r.uint<std::uint64_t>("placeholder");
        t.segment_delta = r.uint<std::uint32_t>("segment delta");
        t.function_id = r.uint<std::uint32_t>("function_id");
        t.threads = r.uint<std::uint32_t>("threads");
        t.no_send = r.boolean("no_send");
        t.input = read_template_binding(r);
        m.request.specs.push_back(std::move(t));
      }
      return m;
    }
    case Tag::InjectAck: {
      InjectAckMsg m;
      auto n = r.count("mapping count", 16);
      for (std::uint32_t i = 0; i < n; ++i) {
        auto placeholder = r.uint<std::uint64_t>("placeholder");
        auto assigned = r.uint<std::uint64_t>("assigned id");
        m.mapping.emplace_back(placeholder, assigned);
      }
      return m;
    }
    case Tag::Shutdown: return ShutdownMsg{};
    case Tag::JobFailed: {
      JobFailedMsg m;
      m.job_id = r.uint<std::uint64_t>("job_id");
      m.code = r.uint<std::uint32_t>("code");
      m.message = r.text("message");
      return m;
    }
  }
  throw DecodeError(ErrorCode::UnknownTag, 4, "unknown tag");
}

bool known_tag(std::uint8_t t) { return t >= 0x01 && t <= 0x0A; }

}  // namespace

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::Hello: return "HELLO";
    case Tag::AssignJob: return "ASSIGN_JOB";
    case Tag::JobDone: return "JOB_DONE";
    case Tag::Fetch: return "FETCH";
    case Tag::Chunks: return "CHUNKS";
    case Tag::Release: return "RELEASE";
    case Tag::Inject: return "INJECT";
    case Tag::InjectAck: return "INJECT_ACK";
    case Tag::Shutdown: return "SHUTDOWN";
    case Tag::JobFailed: return "JOB_FAILED";
  }
  return "?";
}

Tag tag_of(const Message& m) {
  static constexpr Tag tags[] = {Tag::Hello,   Tag::AssignJob, Tag::JobDone,   Tag::Fetch,
                                 Tag::Chunks,  Tag::Release,   Tag::Inject,    Tag::InjectAck,
                                 Tag::Shutdown, Tag::JobFailed};
  return tags[m.index()];
}

void encode_into(const Message& m, Bytes& out) {
  std::size_t start = out.size();
  out.resize(start + 4);
  out.push_back(static_cast<std::uint8_t>(tag_of(m)));
  Writer w(out);
  std::visit(BodyEncoder{w}, m);
  std::size_t length = out.size() - start - 4;
  if (length > std::numeric_limits<std::uint32_t>::max()) {
    out.resize(start);
    fail(ErrorCode::FieldOverflow, "frame exceeds 4 GiB");
  }
  for (int i = 0; i < 4; ++i) out[start + i] = static_cast<std::uint8_t>(length >> (8 * i));
}

Bytes encode(const Message& m) {
  Bytes out;
  encode_into(m, out);
  return out;
}

Message decode_body(std::span<const std::uint8_t> tag_and_body) {
  if (tag_and_body.empty()) throw DecodeError(ErrorCode::MalformedBody, 4, "frame length must be at least 1");
  auto raw = tag_and_body[0];
  if (!known_tag(raw)) throw DecodeError(ErrorCode::UnknownTag, 4, "unknown tag " + std::to_string(raw));
  auto tag = static_cast<Tag>(raw);
  Reader r(tag_and_body.subspan(1), 5, tag);
  auto m = decode_tagged(tag, r);
  r.finish();
  return m;
}

std::pair<Message, std::size_t> decode_prefix(std::span<const std::uint8_t> stream) {
  if (stream.size() < 4) throw DecodeError(ErrorCode::TruncatedFrame, stream.size(), "truncated length prefix");
  std::uint32_t length = 0;
  for (int i = 0; i < 4; ++i) length |= static_cast<std::uint32_t>(stream[i]) << (8 * i);
  if (length == 0) throw DecodeError(ErrorCode::MalformedBody, 0, "frame length must be at least 1");
  if (stream.size() - 4 < length) {
    throw DecodeError(ErrorCode::TruncatedFrame, stream.size(),
                      "frame announces " + std::to_string(length) + " bytes, " +
                          std::to_string(stream.size() - 4) + " available");
  }
  return {decode_body(stream.subspan(4, length)), 4 + static_cast<std::size_t>(length)};
}

Message decode(std::span<const std::uint8_t> frame) {
  auto [m, used] = decode_prefix(frame);
  if (used != frame.size()) throw DecodeError(ErrorCode::MalformedBody, used, "bytes after the end of the frame");
  return std::move(m);
}

std::string describe(const Message& m) {
  std::ostringstream out;
  out << to_string(tag_of(m));
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          out << " worker=" << msg.worker_id << " cores=" << msg.cores;
        } else if constexpr (std::is_same_v<T, AssignJobMsg>) {
          out << " job=" << msg.job_id << " fn=" << msg.function_id << " worker=" << msg.worker_id
              << " inline=" << msg.inline_chunks.size() << " refs=" << msg.refs.size();
        } else if constexpr (std::is_same_v<T, JobDoneMsg>) {
          out << " job=" << msg.job_id << " retention=" << static_cast<int>(msg.retention)
              << " n=" << msg.n_chunks;
        } else if constexpr (std::is_same_v<T, FetchMsg>) {
          out << " producer=" << msg.producer << " [" << msg.start << ".." << msg.end << "]";
        } else if constexpr (std::is_same_v<T, ChunksMsg>) {
          out << " producer=" << msg.producer << " n=" << msg.chunks.size();
        } else if constexpr (std::is_same_v<T, ReleaseMsg>) {
          out << " producer=" << msg.producer;
        } else if constexpr (std::is_same_v<T, InjectMsg>) {
          out << " origin=" << msg.origin << " specs=" << msg.request.specs.size();
        } else if constexpr (std::is_same_v<T, InjectAckMsg>) {
          out << " n=" << msg.mapping.size();
        } else if constexpr (std::is_same_v<T, JobFailedMsg>) {
          out << " job=" << msg.job_id << " code=" << msg.code << " " << msg.message;
        }
      },
      m);
  return out.str();
}

}  // namespace hyjob
