#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "batm/validate.hpp"

namespace batm {

inline constexpr char kChainMagic[4] = {'B', 'A', 'T', 'M'};
inline constexpr std::uint16_t kChainFormatVersion = 1;

// Chain file: "BATM" | format version u16 | block count u64 | per block a
// u32 length prefix and the canonical block bytes. Big-endian throughout.
inline Bytes encode_chain(const Chain& chain) {
    ByteWriter w;
    w.put_bytes(ByteSpan(reinterpret_cast<const std::uint8_t*>(kChainMagic), 4));
    w.put_u16(kChainFormatVersion);
    w.put_u64(chain.length());
    for (const auto& b : chain.blocks) {
        Bytes bb = encode_block(b);
        w.put_var32(ByteSpan(bb.data(), bb.size()));
    }
    return w.take();
}

inline void save_chain(const Chain& chain, const std::filesystem::path& path) {
    Bytes bytes = encode_chain(chain);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io_error, "short write to " + path.string());
}

// Parses and fully revalidates: every block must pass the validity check
// against its predecessor, so any byte flip surfaces as CorruptFile (parse
// level) or ValidationFailed (rule level) before a chain is returned.
inline Chain decode_chain(ByteSpan bytes) {
    ByteReader r(bytes);
    std::uint64_t count = 0;
    try {
        Bytes magic = r.get_bytes(4);
        if (!std::equal(magic.begin(), magic.end(),
                        reinterpret_cast<const std::uint8_t*>(kChainMagic)))
            throw Error(Errc::corrupt_file, "bad magic");
        if (r.get_u16() != kChainFormatVersion)
            throw Error(Errc::corrupt_file, "unsupported format version");
        count = r.get_u64();
        if (count == 0) throw Error(Errc::corrupt_file, "chain file holds no blocks");
    } catch (const Error& e) {
        if (e.code() == Errc::malformed) throw Error(Errc::corrupt_file, e.what());
        throw;
    }

    Chain chain;
    for (std::uint64_t h = 0; h < count; ++h) {
        Block block;
        try {
            Bytes bb = r.get_var32();
            block = decode_block(ByteSpan(bb.data(), bb.size()));
        } catch (const Error& e) {
            throw Error(Errc::corrupt_file, "block undecodable: " + std::string(e.what()), h);
        }
        if (h == 0) {
            CheckResult g = validate_genesis(block);
            if (!g) throw Error(Errc::validation_failed, g.joined(), 0);
            chain.params = decode_params(ByteSpan(block.params_record->data(),
                                                  block.params_record->size()));
            chain.blocks.push_back(block);
        } else {
            CheckResult b = validate_block(chain, block);
            if (!b) throw Error(Errc::validation_failed, b.joined(), h);
            chain.blocks.push_back(block);
        }
    }
    try {
        r.expect_done();
    } catch (const Error&) {
        throw Error(Errc::corrupt_file, "trailing bytes after last block");
    }
    return chain;
}

inline Chain load_chain(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty()) throw Error(Errc::corrupt_file, "empty chain file");
    return decode_chain(ByteSpan(bytes.data(), bytes.size()));
}

}  // namespace batm
