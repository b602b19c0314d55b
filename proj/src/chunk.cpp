#include "hyjob/chunk.hpp"

#include <fstream>
#include <iterator>
#include <limits>

namespace hyjob {

std::optional<ElementType> element_type_from_tag(std::uint8_t tag) {
  if (tag > static_cast<std::uint8_t>(ElementType::F64)) return std::nullopt;
  return static_cast<ElementType>(tag);
}

std::string_view to_string(ElementType t) {
  switch (t) {
    case ElementType::U8: return "U8";
    case ElementType::I32: return "I32";
    case ElementType::I64: return "I64";
    case ElementType::F32: return "F32";
    case ElementType::F64: return "F64";
  }
  return "?";
}

DataChunk::DataChunk(ElementType dtype, std::size_t count, Bytes payload)
    : dtype_(dtype), count_(count) {
  if (payload.size() != count * element_width(dtype)) {
    fail(ErrorCode::SizeMismatch,
         "chunk of " + std::to_string(count) + " x " + std::string(to_string(dtype)) +
             " needs " + std::to_string(count * element_width(dtype)) + " bytes, got " +
             std::to_string(payload.size()));
  }
  payload_ = std::make_shared<const Bytes>(std::move(payload));
}

bool operator==(const DataChunk& a, const DataChunk& b) {
  if (a.dtype_ != b.dtype_ || a.count_ != b.count_) return false;
  if (a.payload_ == b.payload_) return true;
  return *a.payload_ == *b.payload_;
}

void FunctionData::append(const FunctionData& other) {
  chunks_.insert(chunks_.end(), other.chunks_.begin(), other.chunks_.end());
}

FunctionData FunctionData::slice(std::size_t start, std::size_t end) const {
  if (start > end || end > chunks_.size()) {
    fail(ErrorCode::RangeOutOfBounds, "range [" + std::to_string(start) + "," +
                                          std::to_string(end) + ") outside " +
                                          std::to_string(chunks_.size()) + " chunks");
  }
  return FunctionData(std::vector<DataChunk>(chunks_.begin() + static_cast<std::ptrdiff_t>(start),
                                             chunks_.begin() + static_cast<std::ptrdiff_t>(end)));
}

std::size_t FunctionData::payload_bytes() const noexcept {
  std::size_t total = 0;
  for (const auto& c : chunks_) total += c.size_bytes();
  return total;
}

std::size_t encoded_size(const DataChunk& chunk) { return 5 + chunk.size_bytes(); }

void encode_chunk(const DataChunk& chunk, Bytes& out) {
  if (chunk.count() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::FieldOverflow, "chunk element count exceeds 32 bits");
  }
  out.push_back(static_cast<std::uint8_t>(chunk.dtype()));
  auto n = static_cast<std::uint32_t>(chunk.count());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  auto b = chunk.bytes();
  out.insert(out.end(), b.begin(), b.end());
}

std::optional<DataChunk> decode_chunk(std::span<const std::uint8_t> in, std::size_t& offset,
                                      std::string* error) {
  auto set_error = [&](const char* what) {
    if (error) *error = what;
    return std::nullopt;
  };
  if (offset > in.size() || in.size() - offset < 5) return set_error("truncated chunk header");
  auto dtype = element_type_from_tag(in[offset]);
  if (!dtype) return set_error("unknown element type tag");
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(in[offset + 1 + i]) << (8 * i);
  std::size_t body = static_cast<std::size_t>(n) * element_width(*dtype);
  if (in.size() - offset - 5 < body) return set_error("truncated chunk payload");
  auto first = in.begin() + static_cast<std::ptrdiff_t>(offset + 5);
  Bytes payload(first, first + static_cast<std::ptrdiff_t>(body));
  offset += 5 + body;
  return DataChunk(*dtype, n, std::move(payload));
}

std::vector<DataChunk> read_chunk_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<DataChunk> chunks;
  std::size_t offset = 0;
  while (offset < data.size()) {
    std::string why;
    auto c = decode_chunk(data, offset, &why);
    if (!c) fail(ErrorCode::MalformedBody, path + ": " + why + " at offset " + std::to_string(offset));
    chunks.push_back(std::move(*c));
  }
  return chunks;
}

void write_chunk_file(const std::string& path, std::span<const DataChunk> chunks) {
  Bytes data;
  for (const auto& c : chunks) encode_chunk(c, data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + path);
}

}  // namespace hyjob
