#ifndef FLOWLAB_RECORDS_HPP
#define FLOWLAB_RECORDS_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowlab/errors.hpp"

namespace flowlab {

// ---------------------------------------------------------------------------
// Flow identity and records
// ---------------------------------------------------------------------------

/// Unidirectional 5-tuple. Addresses are IPv4 in host byte order.
struct FlowKey {
    std::uint32_t src_addr = 0;
    std::uint32_t dst_addr = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint8_t protocol = 0;

    friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const noexcept {
        // splitmix64 finalizer over the packed tuple
        std::uint64_t h = (std::uint64_t{k.src_addr} << 32) | k.dst_addr;
        h ^= (std::uint64_t{k.src_port} << 24) ^ (std::uint64_t{k.dst_port} << 8) ^ k.protocol;
        h += 0x9e3779b97f4a7c15ULL;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
        return static_cast<std::size_t>(h ^ (h >> 31));
    }
};

enum class Direction : std::uint8_t { unknown = 0, in = 1, out = 2 };

struct FlowRecord {
    FlowKey key;
    std::uint64_t first_ms = 0;
    std::uint64_t last_ms = 0;
    std::uint64_t packets = 0;
    std::uint64_t octets = 0;
    std::uint16_t in_iface = 0;
    std::uint16_t out_iface = 0;
    Direction direction = Direction::unknown;
    // Set by the NetFlow v5 parser when timestamps or counters look corrupt;
    // the cleaning stage decides what to do with it.
    bool suspect = false;

    std::uint64_t duration_ms() const noexcept { return last_ms >= first_ms ? last_ms - first_ms : 0; }

    friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

inline std::string format_ipv4(std::uint32_t addr) {
    return std::to_string(addr >> 24) + '.' + std::to_string((addr >> 16) & 0xff) + '.' +
           std::to_string((addr >> 8) & 0xff) + '.' + std::to_string(addr & 0xff);
}

inline std::optional<std::uint32_t> parse_ipv4(std::string_view s) {
    std::uint32_t addr = 0;
    const char* p = s.data();
    const char* end = s.data() + s.size();
    for (int octet = 0; octet < 4; ++octet) {
        unsigned v = 0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{} || next == p || v > 255 || next - p > 3) return std::nullopt;
        addr = (addr << 8) | v;
        p = next;
        if (octet < 3) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
    }
    if (p != end) return std::nullopt;
    return addr;
}

// ---------------------------------------------------------------------------
// CSV interchange format
// ---------------------------------------------------------------------------

inline constexpr std::string_view csv_header =
    "src_addr,dst_addr,src_port,dst_port,protocol,first_ms,last_ms,packets,octets,in_iface,out_iface";

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
std::optional<T> parse_uint(std::string_view s, T max = std::numeric_limits<T>::max()) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty() || v > max) return std::nullopt;
    return static_cast<T>(v);
}

} // namespace detail

/// Parses one CSV data row. Throws ParseError carrying `line`.
inline FlowRecord parse_csv_row(std::string_view row, std::size_t line) {
    auto f = detail::split(row);
    if (f.size() != 11 && f.size() != 12)
        throw ParseError(line, "expected 11 fields, got " + std::to_string(f.size()));

    FlowRecord r;
    auto need = [&](auto opt, const char* name) {
        if (!opt) throw ParseError(line, std::string("invalid ") + name);
        return *opt;
    };
    r.key.src_addr = need(parse_ipv4(f[0]), "src_addr");
    r.key.dst_addr = need(parse_ipv4(f[1]), "dst_addr");
    r.key.src_port = need(detail::parse_uint<std::uint16_t>(f[2]), "src_port");
    r.key.dst_port = need(detail::parse_uint<std::uint16_t>(f[3]), "dst_port");
    r.key.protocol = need(detail::parse_uint<std::uint8_t>(f[4]), "protocol");
    r.first_ms = need(detail::parse_uint<std::uint64_t>(f[5]), "first_ms");
    r.last_ms = need(detail::parse_uint<std::uint64_t>(f[6]), "last_ms");
    r.packets = need(detail::parse_uint<std::uint64_t>(f[7]), "packets");
    r.octets = need(detail::parse_uint<std::uint64_t>(f[8]), "octets");
    r.in_iface = need(detail::parse_uint<std::uint16_t>(f[9]), "in_iface");
    r.out_iface = need(detail::parse_uint<std::uint16_t>(f[10]), "out_iface");
    if (f.size() == 12) {
        if (f[11] == "in") r.direction = Direction::in;
        else if (f[11] == "out") r.direction = Direction::out;
        else if (f[11] == "unknown" || f[11].empty()) r.direction = Direction::unknown;
        else throw ParseError(line, "invalid direction");
    }

    if (r.packets < 1 || r.octets < 1) throw ParseError(line, "counter must be >= 1");
    if (r.octets < r.packets) throw ParseError(line, "octets must be >= packets");
    if (r.last_ms < r.first_ms) throw ParseError(line, "last_ms before first_ms");
    return r;
}

/// Streaming CSV reader. Blank and `#` lines are ignored; the first remaining
/// line must be the header (optionally followed by a `direction` column).
class CsvReader {
public:
    enum class OnError { abort, skip };

    explicit CsvReader(std::istream& in, OnError policy = OnError::abort) : in_(in), policy_(policy) {}

    std::optional<FlowRecord> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            auto view = detail::trim(line);
            if (view.empty() || view.front() == '#') continue;
            if (!header_seen_) {
                if (view != csv_header && view != std::string(csv_header) + ",direction")
                    throw ParseError(line_no_, "missing or unexpected header");
                header_seen_ = true;
                continue;
            }
            try {
                return parse_csv_row(view, line_no_);
            } catch (const ParseError&) {
                if (policy_ == OnError::abort) throw;
                ++skipped_;
            }
        }
        return std::nullopt;
    }

    std::size_t skipped() const noexcept { return skipped_; }
    std::size_t line() const noexcept { return line_no_; }

private:
    std::istream& in_;
    OnError policy_;
    std::size_t line_no_ = 0;
    std::size_t skipped_ = 0;
    bool header_seen_ = false;
};

inline std::vector<FlowRecord> parse_csv(std::istream& in) {
    std::vector<FlowRecord> out;
    CsvReader reader(in);
    while (auto r = reader.next()) out.push_back(*r);
    return out;
}

// ---------------------------------------------------------------------------
// NetFlow v5
// ---------------------------------------------------------------------------

namespace nfv5 {

inline constexpr std::size_t header_size = 24;
inline constexpr std::size_t record_size = 48;
inline constexpr std::size_t max_count = 30;

inline std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }
inline std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

} // namespace nfv5

/// Decodes one NetFlow v5 export datagram. Timestamps are rebased from
/// router uptime to Unix milliseconds. Records whose timestamps imply uptime
/// wraparound (or whose counters break FlowRecord invariants) are returned
/// with `suspect` set rather than rejected.
inline std::vector<FlowRecord> parse_netflow_v5(std::span<const std::uint8_t> buf) {
    using namespace nfv5;
    if (buf.size() < header_size)
        throw LengthError("netflow v5 datagram shorter than header (" + std::to_string(buf.size()) + " bytes)");
    const std::uint8_t* h = buf.data();
    auto version = be16(h);
    if (version != 5) throw VersionError("netflow version " + std::to_string(version) + ", expected 5");
    auto count = be16(h + 2);
    if (count < 1 || count > max_count) throw FormatError("netflow v5 count " + std::to_string(count) + " not in 1..30");
    std::size_t expected = header_size + record_size * count;
    if (buf.size() != expected)
        throw LengthError("netflow v5 datagram is " + std::to_string(buf.size()) + " bytes, header implies " +
                          std::to_string(expected));

    const std::int64_t sys_uptime = be32(h + 4);
    const std::int64_t unix_secs = be32(h + 8);
    const std::int64_t unix_nsecs = be32(h + 12);
    const std::int64_t boot_ms = unix_secs * 1000 + unix_nsecs / 1'000'000 - sys_uptime;

    std::vector<FlowRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t* p = h + header_size + i * record_size;
        FlowRecord r;
        r.key.src_addr = be32(p);
        r.key.dst_addr = be32(p + 4);
        r.in_iface = be16(p + 12);
        r.out_iface = be16(p + 14);
        r.packets = be32(p + 16);
        r.octets = be32(p + 20);
        const std::int64_t first = be32(p + 24);
        const std::int64_t last = be32(p + 28);
        r.key.src_port = be16(p + 32);
        r.key.dst_port = be16(p + 34);
        r.key.protocol = p[38];

        constexpr std::int64_t wrap_limit = std::int64_t{1} << 31;
        const std::int64_t first_abs = boot_ms + first;
        const std::int64_t last_abs = boot_ms + last;
        r.first_ms = static_cast<std::uint64_t>(std::max<std::int64_t>(first_abs, 0));
        r.last_ms = static_cast<std::uint64_t>(std::max<std::int64_t>(last_abs, 0));
        r.suspect = first - sys_uptime > wrap_limit || last - sys_uptime > wrap_limit || last < first ||
                    first_abs < 0 || r.packets == 0 || r.octets < r.packets;
        out.push_back(r);
    }
    return out;
}

/// Reads a file of concatenated v5 datagrams, invoking `sink` per record.
/// Returns the number of datagrams consumed.
inline std::size_t read_netflow_v5_stream(std::istream& in, const std::function<void(const FlowRecord&)>& sink) {
    std::size_t datagrams = 0;
    std::uint64_t offset = 0;
    std::vector<std::uint8_t> buf;
    while (true) {
        buf.resize(nfv5::header_size);
        in.read(reinterpret_cast<char*>(buf.data()), nfv5::header_size);
        auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) break;
        if (got < nfv5::header_size)
            throw LengthError("truncated netflow v5 header at byte offset " + std::to_string(offset));
        auto version = nfv5::be16(buf.data());
        if (version != 5) throw VersionError("netflow version " + std::to_string(version) + " at byte offset " +
                                             std::to_string(offset));
        std::size_t count = nfv5::be16(buf.data() + 2);
        if (count < 1 || count > nfv5::max_count)
            throw FormatError("netflow v5 count " + std::to_string(count) + " at byte offset " + std::to_string(offset));
        std::size_t body = count * nfv5::record_size;
        buf.resize(nfv5::header_size + body);
        in.read(reinterpret_cast<char*>(buf.data() + nfv5::header_size), static_cast<std::streamsize>(body));
        if (static_cast<std::size_t>(in.gcount()) != body)
            throw LengthError("truncated netflow v5 datagram at byte offset " + std::to_string(offset));
        for (const auto& r : parse_netflow_v5(buf)) sink(r);
        offset += buf.size();
        ++datagrams;
    }
    return datagrams;
}

// ---------------------------------------------------------------------------
// Binary pipeline format
// ---------------------------------------------------------------------------

namespace binfmt {

inline constexpr std::array<char, 8> magic = {'F', 'L', 'O', 'W', 'L', 'A', 'B', '1'};
inline constexpr std::uint32_t version = 1;
inline constexpr std::size_t header_size = 16;
// 4+4+2+2+1+1+8+8+8+8+2+2
inline constexpr std::size_t record_size = 50;
inline constexpr std::uint8_t suspect_flag = 0x80;

using RecordBytes = std::array<std::uint8_t, record_size>;

template <class T>
void put_le(std::uint8_t*& p, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) *p++ = static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
}

template <class T>
T get_le(const std::uint8_t*& p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{*p++} << (8 * i);
    return static_cast<T>(v);
}

inline RecordBytes encode(const FlowRecord& r) {
    RecordBytes b{};
    std::uint8_t* p = b.data();
    put_le(p, r.key.src_addr);
    put_le(p, r.key.dst_addr);
    put_le(p, r.key.src_port);
    put_le(p, r.key.dst_port);
    put_le(p, r.key.protocol);
    put_le(p, static_cast<std::uint8_t>(static_cast<std::uint8_t>(r.direction) | (r.suspect ? suspect_flag : 0)));
    put_le(p, r.first_ms);
    put_le(p, r.last_ms);
    put_le(p, r.packets);
    put_le(p, r.octets);
    put_le(p, r.in_iface);
    put_le(p, r.out_iface);
    return b;
}

inline FlowRecord decode(const std::uint8_t* p) {
    FlowRecord r;
    r.key.src_addr = get_le<std::uint32_t>(p);
    r.key.dst_addr = get_le<std::uint32_t>(p);
    r.key.src_port = get_le<std::uint16_t>(p);
    r.key.dst_port = get_le<std::uint16_t>(p);
    r.key.protocol = get_le<std::uint8_t>(p);
    auto flags = get_le<std::uint8_t>(p);
    r.direction = static_cast<Direction>(flags & 0x03);
    r.suspect = (flags & suspect_flag) != 0;
    r.first_ms = get_le<std::uint64_t>(p);
    r.last_ms = get_le<std::uint64_t>(p);
    r.packets = get_le<std::uint64_t>(p);
    r.octets = get_le<std::uint64_t>(p);
    r.in_iface = get_le<std::uint16_t>(p);
    r.out_iface = get_le<std::uint16_t>(p);
    return r;
}

} // namespace binfmt

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {
        std::array<std::uint8_t, binfmt::header_size> h{};
        std::memcpy(h.data(), binfmt::magic.data(), binfmt::magic.size());
        std::uint8_t* p = h.data() + 8;
        binfmt::put_le(p, binfmt::version);
        binfmt::put_le(p, static_cast<std::uint32_t>(binfmt::record_size));
        out_.write(reinterpret_cast<const char*>(h.data()), h.size());
    }

    void write(const FlowRecord& r) {
        auto b = binfmt::encode(r);
        out_.write(reinterpret_cast<const char*>(b.data()), b.size());
        ++count_;
    }

    std::size_t count() const noexcept { return count_; }

private:
    std::ostream& out_;
    std::size_t count_ = 0;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {
        std::array<std::uint8_t, binfmt::header_size> h{};
        in_.read(reinterpret_cast<char*>(h.data()), h.size());
        if (static_cast<std::size_t>(in_.gcount()) != h.size())
            throw TruncationError(static_cast<std::uint64_t>(in_.gcount()), "truncated file header");
        if (std::memcmp(h.data(), binfmt::magic.data(), binfmt::magic.size()) != 0)
            throw FormatError("not a flow record file (bad magic)");
        const std::uint8_t* p = h.data() + 8;
        auto version = binfmt::get_le<std::uint32_t>(p);
        auto rsize = binfmt::get_le<std::uint32_t>(p);
        if (version != binfmt::version) throw VersionError("record file version " + std::to_string(version));
        if (rsize != binfmt::record_size) throw FormatError("record size " + std::to_string(rsize));
        offset_ = binfmt::header_size;
    }

    std::optional<FlowRecord> next() {
        binfmt::RecordBytes b;
        in_.read(reinterpret_cast<char*>(b.data()), b.size());
        auto got = static_cast<std::size_t>(in_.gcount());
        if (got == 0) return std::nullopt;
        if (got != b.size()) throw TruncationError(offset_, "truncated trailing record");
        offset_ += b.size();
        ++count_;
        return binfmt::decode(b.data());
    }

    /// Reads up to `max` records into `out` (cleared first); returns count read.
    std::size_t next_batch(std::vector<FlowRecord>& out, std::size_t max) {
        out.clear();
        while (out.size() < max) {
            auto r = next();
            if (!r) break;
            out.push_back(*r);
        }
        return out.size();
    }

    std::size_t count() const noexcept { return count_; }

private:
    std::istream& in_;
    std::uint64_t offset_ = 0;
    std::size_t count_ = 0;
};

inline std::size_t write_binary(std::span<const FlowRecord> records, std::ostream& out) {
    BinaryWriter w(out);
    for (const auto& r : records) w.write(r);
    return w.count();
}

inline std::vector<FlowRecord> read_binary(std::istream& in) {
    BinaryReader reader(in);
    std::vector<FlowRecord> out;
    while (auto r = reader.next()) out.push_back(*r);
    return out;
}

/// Orders records into a RecordStream: by first_ms, ties by encoded bytes.
inline void sort_records(std::vector<FlowRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const FlowRecord& a, const FlowRecord& b) {
        if (a.first_ms != b.first_ms) return a.first_ms < b.first_ms;
        return binfmt::encode(a) < binfmt::encode(b);
    });
}

} // namespace flowlab

#endif // FLOWLAB_RECORDS_HPP
