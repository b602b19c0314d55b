#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "hyjob/error.hpp"

namespace hyjob {

static_assert(std::endian::native == std::endian::little,
              "chunk payloads are stored in host order and shipped as little-endian");

using Bytes = std::vector<std::uint8_t>;

enum class ElementType : std::uint8_t { U8 = 0, I32 = 1, I64 = 2, F32 = 3, F64 = 4 };

constexpr std::size_t element_width(ElementType t) {
  switch (t) {
    case ElementType::U8: return 1;
    case ElementType::I32: return 4;
    case ElementType::I64: return 8;
    case ElementType::F32: return 4;
    case ElementType::F64: return 8;
  }
  return 0;
}

std::optional<ElementType> element_type_from_tag(std::uint8_t tag);
std::string_view to_string(ElementType t);

template <typename T>
struct element_type_of;
template <> struct element_type_of<std::uint8_t> { static constexpr ElementType value = ElementType::U8; };
template <> struct element_type_of<std::int32_t> { static constexpr ElementType value = ElementType::I32; };
template <> struct element_type_of<std::int64_t> { static constexpr ElementType value = ElementType::I64; };
template <> struct element_type_of<float> { static constexpr ElementType value = ElementType::F32; };
template <> struct element_type_of<double> { static constexpr ElementType value = ElementType::F64; };

template <typename T>
concept Element = requires { element_type_of<T>::value; };

/// One contiguous typed array. Immutable once built; copies share the
/// payload buffer.
class DataChunk {
 public:
  /// Takes ownership of `payload`. Throws SizeMismatch unless
  /// payload.size() == count * element_width(dtype).
  DataChunk(ElementType dtype, std::size_t count, Bytes payload);

  template <Element T>
  static DataChunk of(std::span<const T> values) {
    Bytes payload(values.size_bytes());
    if (!values.empty()) std::memcpy(payload.data(), values.data(), values.size_bytes());
    return DataChunk(element_type_of<T>::value, values.size(), std::move(payload));
  }
  template <Element T>
  static DataChunk of(std::initializer_list<T> values) {
    return of(std::span<const T>(values.begin(), values.size()));
  }
  template <Element T>
  static DataChunk of(const std::vector<T>& values) {
    return of(std::span<const T>(values));
  }

  ElementType dtype() const noexcept { return dtype_; }
  std::size_t count() const noexcept { return count_; }
  std::size_t size_bytes() const noexcept { return payload_->size(); }
  std::span<const std::uint8_t> bytes() const noexcept { return *payload_; }

  /// Typed view; throws TypeMismatch when T does not match dtype().
  template <Element T>
  std::span<const T> values() const {
    if (element_type_of<T>::value != dtype_) {
      fail(ErrorCode::TypeMismatch, "chunk holds " + std::string(to_string(dtype_)) +
                                        ", requested " +
                                        std::string(to_string(element_type_of<T>::value)));
    }
    return {reinterpret_cast<const T*>(payload_->data()), count_};
  }

  template <Element T>
  std::vector<T> to_vector() const {
    auto v = values<T>();
    return {v.begin(), v.end()};
  }

  friend bool operator==(const DataChunk& a, const DataChunk& b);

 private:
  ElementType dtype_;
  std::size_t count_;
  std::shared_ptr<const Bytes> payload_;
};

/// Ordered list of chunks; the input and output container of user functions.
class FunctionData {
 public:
  FunctionData() = default;
  explicit FunctionData(std::vector<DataChunk> chunks) : chunks_(std::move(chunks)) {}

  void push_back(DataChunk c) { chunks_.push_back(std::move(c)); }
  void append(const FunctionData& other);

  std::size_t size() const noexcept { return chunks_.size(); }
  bool empty() const noexcept { return chunks_.empty(); }
  const DataChunk& operator[](std::size_t i) const { return chunks_[i]; }
  const DataChunk& at(std::size_t i) const { return chunks_.at(i); }

  auto begin() const noexcept { return chunks_.begin(); }
  auto end() const noexcept { return chunks_.end(); }

  const std::vector<DataChunk>& chunks() const noexcept { return chunks_; }
  std::vector<DataChunk> release() && { return std::move(chunks_); }

  /// Chunks [start, end). Throws RangeOutOfBounds.
  FunctionData slice(std::size_t start, std::size_t end) const;

  std::size_t payload_bytes() const noexcept;

  friend bool operator==(const FunctionData& a, const FunctionData& b) = default;

 private:
  std::vector<DataChunk> chunks_;
};

// Chunk binary encoding: 1-byte dtype tag, 4-byte LE element count, then
// count * width payload bytes.
void encode_chunk(const DataChunk& chunk, Bytes& out);
std::size_t encoded_size(const DataChunk& chunk);

/// Decodes one chunk starting at `offset`, advancing it. Returns nullopt
/// with `offset` untouched if the bytes are truncated or the tag is bad;
/// `error` receives the reason.
std::optional<DataChunk> decode_chunk(std::span<const std::uint8_t> in, std::size_t& offset,
                                      std::string* error = nullptr);

/// Reads/writes a concatenation of encoded chunks (pool and problem files).
std::vector<DataChunk> read_chunk_file(const std::string& path);
void write_chunk_file(const std::string& path, std::span<const DataChunk> chunks);

}  // namespace hyjob
