#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "batm/errors.hpp"

namespace batm {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;
using Hours = std::uint64_t;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_hex(ByteSpan data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline Bytes from_hex(std::string_view s) {
    if (s.size() % 2 != 0) throw Error(Errc::malformed, "hex string has odd length");
    Bytes out(s.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_nibble(s[2 * i]), lo = hex_nibble(s[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error(Errc::malformed, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

// Big-endian canonical writer. All on-chain integers go through this.
class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u16(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
        buf_.push_back(static_cast<std::uint8_t>(v));
    }
    void put_u32(std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void put_u64(std::uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }
    void put_f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put_u64(bits);
    }
    void put_bytes(ByteSpan data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    // u16 length prefix; for key material and signatures
    void put_var16(ByteSpan data) {
        if (data.size() > 0xffff) throw Error(Errc::malformed, "var16 field too long");
        put_u16(static_cast<std::uint16_t>(data.size()));
        put_bytes(data);
    }
    // u32 length prefix; for nested records
    void put_var32(ByteSpan data) {
        if (data.size() > 0xffffffffull) throw Error(Errc::malformed, "var32 field too long");
        put_u32(static_cast<std::uint32_t>(data.size()));
        put_bytes(data);
    }

    const Bytes& data() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    Bytes buf_;
};

// Bounds-checked big-endian reader; throws on truncation.
class ByteReader {
public:
    explicit ByteReader(ByteSpan data) : data_(data) {}

    std::uint8_t get_u8() { return take(1)[0]; }
    std::uint16_t get_u16() {
        auto b = take(2);
        return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
    }
    std::uint32_t get_u32() {
        auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | b[i];
        return v;
    }
    std::uint64_t get_u64() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | b[i];
        return v;
    }
    std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }
    double get_f64() {
        std::uint64_t bits = get_u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    Bytes get_bytes(std::size_t n) {
        auto b = take(n);
        return Bytes(b.begin(), b.end());
    }
    Bytes get_var16() { return get_bytes(get_u16()); }
    Bytes get_var32() { return get_bytes(get_u32()); }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return remaining() == 0; }
    void expect_done() const {
        if (!done()) throw Error(Errc::malformed, "trailing bytes after record");
    }

private:
    ByteSpan take(std::size_t n) {
        if (remaining() < n) throw Error(Errc::malformed, "truncated record");
        ByteSpan s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    ByteSpan data_;
    std::size_t pos_ = 0;
};

}  // namespace batm
