#include "zks/common/bytes.hpp"

#include <bit>
#include <cstring>

#include "zks/common/errors.hpp"

namespace zks {

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::tag(const char (&magic)[5]) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(magic[i]));
}

void ByteWriter::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
    if (n > remaining()) throw FormatError("truncated input");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint32_t ByteReader::u32() {
    auto b = raw(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    auto b = raw(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::expect_tag(const char (&magic)[5]) {
    auto b = raw(4);
    if (std::memcmp(b.data(), magic, 4) != 0) throw FormatError(std::string("expected magic ") + magic);
}

std::string ByteReader::str() {
    const std::size_t n = count(1);
    auto b = raw(n);
    return std::string(b.begin(), b.end());
}

std::size_t ByteReader::count(std::size_t min_item_size) {
    const std::size_t n = u32();
    if (min_item_size > 0 && n > remaining() / min_item_size) throw FormatError("length prefix exceeds input");
    return n;
}

void ByteReader::expect_end() const {
    if (remaining() != 0) throw FormatError("trailing bytes after record");
}

}  // namespace zks
