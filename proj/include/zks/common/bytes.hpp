#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace zks {

/// Little-endian append-only encoder.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v);
    void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
    void tag(const char (&magic)[5]);
    // u32 length prefix
    void str(const std::string& s);

    const std::vector<std::uint8_t>& bytes() const { return out_; }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

/// Bounds-checked decoder; truncation or trailing garbage raises FormatError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : in_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64();
    std::span<const std::uint8_t> raw(std::size_t n);
    void expect_tag(const char (&magic)[5]);
    std::string str();
    // A u32 count bounded by the remaining bytes at min_item_size each.
    std::size_t count(std::size_t min_item_size);

    std::size_t remaining() const { return in_.size() - pos_; }
    void expect_end() const;

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace zks
