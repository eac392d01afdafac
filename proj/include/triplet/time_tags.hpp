#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace triplet {

// One timing tick is 156 ps. Internal continuous times are carried in integer
// picoseconds, which represents the tick grid exactly.
inline constexpr std::uint64_t kTickFs = 156000;
inline constexpr std::uint64_t kTickPs = 156;
inline constexpr double kTickNs = 0.156;

/// One detection record: channel in {1,2,3} and the tick count.
struct TimeTag {
    std::uint64_t tick = 0;
    std::uint8_t channel = 0;

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Stream order: tick, then channel for simultaneous tags.
inline bool tag_less(const TimeTag& a, const TimeTag& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.channel < b.channel;
}

inline bool is_tick_sorted(std::span<const TimeTag> tags) {
    for (std::size_t i = 1; i < tags.size(); ++i)
        if (tags[i].tick < tags[i - 1].tick) return false;
    return true;
}

// TTAG binary layout (little endian):
//   bytes 0..3   magic "TTAG"
//   byte  4      version (1)
//   bytes 5..12  tick resolution in femtoseconds (u64, 156000)
//   records      9 bytes each: u8 channel, u64 tick
inline constexpr char kTtagMagic[4] = {'T', 'T', 'A', 'G'};
inline constexpr std::uint8_t kTtagVersion = 1;
inline constexpr std::size_t kTtagHeaderSize = 13;
inline constexpr std::size_t kTtagRecordSize = 9;

namespace detail {

inline void put_u64_le(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void write_ttag_file(const std::string& path, std::span<const TimeTag> tags) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ttag: cannot open " + path + " for writing");
    unsigned char header[kTtagHeaderSize];
    std::memcpy(header, kTtagMagic, 4);
    header[4] = kTtagVersion;
    detail::put_u64_le(header + 5, kTickFs);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));

    std::vector<unsigned char> buf;
    buf.reserve(tags.size() * kTtagRecordSize);
    for (const TimeTag& t : tags) {
        unsigned char rec[kTtagRecordSize];
        rec[0] = t.channel;
        detail::put_u64_le(rec + 1, t.tick);
        buf.insert(buf.end(), rec, rec + kTtagRecordSize);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("ttag: write failed for " + path);
}

/// Read a TTAG file. Malformed input raises an error naming the byte offset.
inline std::vector<TimeTag> read_ttag_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("ttag: cannot open " + path);
    const std::streamsize size = in.tellg();
    in.seekg(0);

    auto fail = [&](std::size_t offset, const std::string& what) {
        throw std::runtime_error("ttag: " + path + ": " + what + " at byte offset " +
                                 std::to_string(offset));
    };

    if (size < static_cast<std::streamsize>(kTtagHeaderSize)) fail(0, "truncated header");
    unsigned char header[kTtagHeaderSize];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (std::memcmp(header, kTtagMagic, 4) != 0) fail(0, "bad magic (expected TTAG)");
    if (header[4] != kTtagVersion)
        fail(4, "unsupported version " + std::to_string(int(header[4])));
    const std::uint64_t res = detail::get_u64_le(header + 5);
    if (res != kTickFs)
        fail(5, "unexpected tick resolution " + std::to_string(res) + " fs (expected " +
                    std::to_string(kTickFs) + ")");

    const std::size_t payload = static_cast<std::size_t>(size) - kTtagHeaderSize;
    if (payload % kTtagRecordSize != 0)
        fail(kTtagHeaderSize + payload - payload % kTtagRecordSize, "truncated record");

    std::vector<TimeTag> tags(payload / kTtagRecordSize);
    std::vector<unsigned char> buf(payload);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(payload));
    if (!in) fail(kTtagHeaderSize, "short read");
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const unsigned char* rec = buf.data() + i * kTtagRecordSize;
        tags[i].channel = rec[0];
        tags[i].tick = detail::get_u64_le(rec + 1);
        if (tags[i].channel < 1 || tags[i].channel > 3)
            fail(kTtagHeaderSize + i * kTtagRecordSize,
                 "invalid channel " + std::to_string(int(tags[i].channel)));
    }
    return tags;
}

}  // namespace triplet
