#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <streambuf>

#include "flowlab/records.hpp"

using namespace flowlab;

namespace {

const std::string header = std::string(csv_header) + "\n";

FlowRecord random_record(std::mt19937_64& rng) {
    FlowRecord r;
    r.key = {static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()), static_cast<std::uint16_t>(rng()),
             static_cast<std::uint16_t>(rng()), static_cast<std::uint8_t>(rng())};
    r.first_ms = rng() >> 20;
    r.last_ms = r.first_ms + (rng() >> 40);
    r.packets = 1 + (rng() >> 30);
    r.octets = r.packets + (rng() >> 20);
    r.in_iface = static_cast<std::uint16_t>(rng());
    r.out_iface = static_cast<std::uint16_t>(rng());
    r.direction = static_cast<Direction>(rng() % 3);
    r.suspect = rng() % 5 == 0;
    return r;
}

// Builds NetFlow v5 datagrams byte by byte from the public field layout.
struct V5Builder {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v >> 8));
        u8(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void header(std::uint16_t version, std::uint16_t count, std::uint32_t uptime, std::uint32_t secs, std::uint32_t nsecs) {
        u16(version);
        u16(count);
        u32(uptime);
        u32(secs);
        u32(nsecs);
        u32(7);     // flow_sequence
        u8(0);      // engine_type
        u8(0);      // engine_id
        u16(0);     // sampling_interval
    }
    void record(std::uint32_t src, std::uint32_t dst, std::uint16_t in_if, std::uint16_t out_if, std::uint32_t pkts,
                std::uint32_t octets, std::uint32_t first, std::uint32_t last, std::uint16_t sport, std::uint16_t dport,
                std::uint8_t proto) {
        u32(src);
        u32(dst);
        u32(0);     // nexthop
        u16(in_if);
        u16(out_if);
        u32(pkts);
        u32(octets);
        u32(first);
        u32(last);
        u16(sport);
        u16(dport);
        u8(0);      // pad1
        u8(0x18);   // tcp_flags
        u8(proto);
        u8(0);      // tos
        u16(0);
        u16(0);     // src_as, dst_as
        u8(24);
        u8(24);     // masks
        u16(0);     // pad2
    }
};

class CountingBuf : public std::streambuf {
public:
    std::size_t count = 0;

protected:
    int_type overflow(int_type c) override {
        if (c != traits_type::eof()) ++count;
        return c;
    }
    std::streamsize xsputn(const char*, std::streamsize n) override {
        count += static_cast<std::size_t>(n);
        return n;
    }
};

} // namespace

TEST(Csv, SinglePacketRow) {
    auto r = parse_csv_row("10.0.0.1,10.0.0.2,1234,80,6,1000,1000,1,64,1,2", 2);
    EXPECT_EQ(r.packets, 1u);
    EXPECT_EQ(r.octets, 64u);
    EXPECT_EQ(r.duration_ms(), 0u);
    EXPECT_EQ(format_ipv4(r.key.src_addr), "10.0.0.1");
    EXPECT_EQ(format_ipv4(r.key.dst_addr), "10.0.0.2");
    EXPECT_EQ(r.key.src_port, 1234);
    EXPECT_EQ(r.key.dst_port, 80);
    EXPECT_EQ(r.key.protocol, 6);
    EXPECT_EQ(r.in_iface, 1);
    EXPECT_EQ(r.out_iface, 2);
    EXPECT_EQ(r.direction, Direction::unknown);
}

TEST(Csv, ZeroPacketsRejectedWithLine) {
    std::istringstream in(header + "10.0.0.1,10.0.0.2,1,2,6,0,0,1,64,1,2\n10.0.0.1,10.0.0.2,1,2,6,0,0,0,64,1,2\n");
    CsvReader reader(in);
    ASSERT_TRUE(reader.next());
    try {
        reader.next();
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("counter must be >= 1"), std::string::npos);
    }
}

TEST(Csv, InvariantViolations) {
    EXPECT_THROW(parse_csv_row("10.0.0.1,10.0.0.2,1,2,6,0,0,5,4,1,2", 1), ParseError);      // octets < packets
    EXPECT_THROW(parse_csv_row("10.0.0.1,10.0.0.2,1,2,6,10,9,1,64,1,2", 1), ParseError);    // last < first
    EXPECT_THROW(parse_csv_row("10.0.0.256,10.0.0.2,1,2,6,0,0,1,64,1,2", 1), ParseError);   // bad address
    EXPECT_THROW(parse_csv_row("10.0.0.1,10.0.0.2,70000,2,6,0,0,1,64,1,2", 1), ParseError); // port range
    EXPECT_THROW(parse_csv_row("10.0.0.1,10.0.0.2,1,2,6,0,0,1,64,1", 1), ParseError);       // field count
    EXPECT_THROW(parse_csv_row("10.0.0.1,10.0.0.2,1,2,6,0,0,1,64,1,2,sideways", 1), ParseError);
}

TEST(Csv, ThreeRowsInFileOrder) {
    std::istringstream in("# export\n" + header +
                          "10.0.0.1,10.0.0.2,1,2,6,300,400,3,300,1,2\n"
                          "\n"
                          "10.0.0.3,10.0.0.4,1,2,17,100,100,1,64,1,2\n"
                          "10.0.0.5,10.0.0.6,1,2,6,200,250,2,128,1,2\n");
    auto recs = parse_csv(in);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0].first_ms, 300u);
    EXPECT_EQ(recs[1].first_ms, 100u);
    EXPECT_EQ(recs[2].first_ms, 200u);
}

TEST(Csv, DirectionColumn) {
    std::istringstream in(std::string(csv_header) + ",direction\n10.0.0.1,10.0.0.2,1,2,6,0,0,1,64,1,2,out\n");
    auto recs = parse_csv(in);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].direction, Direction::out);
}

TEST(Csv, SkipPolicyCountsBadRows) {
    std::istringstream in(header + "bad\n10.0.0.1,10.0.0.2,1,2,6,0,0,1,64,1,2\n10.0.0.1,10.0.0.2,1,2,6,0,0,0,0,1,2\n");
    CsvReader reader(in, CsvReader::OnError::skip);
    int n = 0;
    while (reader.next()) ++n;
    EXPECT_EQ(n, 1);
    EXPECT_EQ(reader.skipped(), 2u);
}

TEST(Csv, MissingHeader) {
    std::istringstream in("10.0.0.1,10.0.0.2,1,2,6,0,0,1,64,1,2\n");
    EXPECT_THROW(parse_csv(in), ParseError);
}

TEST(NetflowV5, SingleRecordFieldByField) {
    V5Builder b;
    const std::uint32_t uptime = 3'600'000, secs = 1'700'000'000, nsecs = 250'000'000;
    b.header(5, 1, uptime, secs, nsecs);
    b.record(0xC0A80001, 0x08080808, 3, 4, 10, 5000, uptime - 20'000, uptime - 5'000, 51515, 443, 6);
    auto recs = parse_netflow_v5(b.bytes);
    ASSERT_EQ(recs.size(), 1u);
    const auto& r = recs[0];
    const std::uint64_t export_ms = std::uint64_t{secs} * 1000 + 250;
    EXPECT_EQ(r.packets, 10u);
    EXPECT_EQ(r.octets, 5000u);
    EXPECT_EQ(format_ipv4(r.key.src_addr), "192.168.0.1");
    EXPECT_EQ(format_ipv4(r.key.dst_addr), "8.8.8.8");
    EXPECT_EQ(r.key.src_port, 51515);
    EXPECT_EQ(r.key.dst_port, 443);
    EXPECT_EQ(r.key.protocol, 6);
    EXPECT_EQ(r.in_iface, 3);
    EXPECT_EQ(r.out_iface, 4);
    EXPECT_EQ(r.first_ms, export_ms - 20'000);
    EXPECT_EQ(r.last_ms, export_ms - 5'000);
    EXPECT_FALSE(r.suspect);
}

TEST(NetflowV5, SuspectRecordsAreFlagged) {
    V5Builder b;
    b.header(5, 3, 10'000, 1'700'000'000, 0);
    b.record(1, 2, 1, 2, 0, 0, 1'000, 2'000, 1, 2, 6);           // zero packets
    b.record(1, 2, 1, 2, 5, 100, 5'000, 4'000, 1, 2, 6);         // last before first
    b.record(1, 2, 1, 2, 5, 100, 0xFFFF0000u, 0xFFFF0000u, 1, 2, 6); // past the uptime: wrapped
    auto recs = parse_netflow_v5(b.bytes);
    ASSERT_EQ(recs.size(), 3u);
    for (const auto& r : recs) EXPECT_TRUE(r.suspect);
}

TEST(NetflowV5, HeaderErrors) {
    V5Builder v9;
    v9.header(9, 1, 0, 0, 0);
    v9.record(1, 2, 1, 2, 1, 64, 0, 0, 1, 2, 6);
    EXPECT_THROW(parse_netflow_v5(v9.bytes), VersionError);

    std::vector<std::uint8_t> short_buf(24 + 47, 0);
    short_buf[1] = 5;
    short_buf[3] = 1;
    EXPECT_THROW(parse_netflow_v5(short_buf), LengthError);

    EXPECT_THROW(parse_netflow_v5(std::vector<std::uint8_t>(10, 0)), LengthError);

    V5Builder zero;
    zero.header(5, 0, 0, 0, 0);
    EXPECT_THROW(parse_netflow_v5(zero.bytes), FormatError);
}

TEST(NetflowV5, ConcatenatedStream) {
    V5Builder b;
    b.header(5, 2, 1000, 100, 0);
    b.record(1, 2, 1, 2, 1, 64, 100, 200, 1, 2, 6);
    b.record(3, 4, 1, 2, 2, 128, 300, 400, 1, 2, 6);
    b.header(5, 1, 2000, 101, 0);
    b.record(5, 6, 1, 2, 3, 192, 1500, 1600, 1, 2, 17);
    std::istringstream in(std::string(b.bytes.begin(), b.bytes.end()));
    std::vector<FlowRecord> recs;
    EXPECT_EQ(read_netflow_v5_stream(in, [&](const FlowRecord& r) { recs.push_back(r); }), 2u);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[2].packets, 3u);

    std::string cut(b.bytes.begin(), b.bytes.end() - 5);
    std::istringstream trunc(cut);
    EXPECT_THROW(read_netflow_v5_stream(trunc, [](const FlowRecord&) {}), LengthError);
}

TEST(Binary, EmptyStreamIsHeaderOnly) {
    std::ostringstream out;
    write_binary({}, out);
    EXPECT_EQ(out.str().size(), 16u);
    std::istringstream in(out.str());
    EXPECT_TRUE(read_binary(in).empty());
}

TEST(Binary, RoundTripRandomStreams) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<FlowRecord> recs(rng() % 500);
        for (auto& r : recs) r = random_record(rng);
        std::stringstream buf;
        write_binary(recs, buf);
        EXPECT_EQ(read_binary(buf), recs);
    }
}

TEST(Binary, FileSizeForOneMillionRecords) {
    // header (8 magic + 4 version + 4 record size) + per record:
    // 4+4+2+2+1 key, 8+8 times, 8+8 counters, 2+2 ifaces, 1 direction
    constexpr std::size_t per_record = 4 + 4 + 2 + 2 + 1 + 8 + 8 + 8 + 8 + 2 + 2 + 1;
    CountingBuf sink;
    std::ostream out(&sink);
    BinaryWriter w(out);
    std::mt19937_64 rng(3);
    FlowRecord r = random_record(rng);
    for (int i = 0; i < 1'000'000; ++i) w.write(r);
    out.flush();
    EXPECT_EQ(sink.count, 16 + 1'000'000 * per_record);
}

TEST(Binary, LittleEndianLayout) {
    FlowRecord r;
    r.key = {0x01020304, 0x05060708, 0x090a, 0x0b0c, 6};
    r.first_ms = 0x1122334455667788ull;
    r.last_ms = r.first_ms;
    r.packets = 2;
    r.octets = 300;
    r.direction = Direction::in;
    r.suspect = true;
    std::ostringstream out;
    write_binary(std::vector<FlowRecord>{r}, out);
    const std::string s = out.str();
    ASSERT_EQ(s.size(), 16u + binfmt::record_size);
    EXPECT_EQ(s.substr(0, 8), "FLOWLAB1");
    EXPECT_EQ(static_cast<unsigned char>(s[16]), 0x04);
    EXPECT_EQ(static_cast<unsigned char>(s[19]), 0x01);
    EXPECT_EQ(static_cast<unsigned char>(s[16 + 13]), 0x81);  // direction in, suspect bit
    EXPECT_EQ(static_cast<unsigned char>(s[16 + 14]), 0x88);
    EXPECT_EQ(static_cast<unsigned char>(s[16 + 21]), 0x11);
}

TEST(Binary, TruncationReportsOffset) {
    std::mt19937_64 rng(5);
    std::vector<FlowRecord> recs(3);
    for (auto& r : recs) r = random_record(rng);
    std::ostringstream out;
    write_binary(recs, out);
    std::string s = out.str();
    s.resize(s.size() - 7);
    std::istringstream in(s);
    BinaryReader reader(in);
    EXPECT_TRUE(reader.next());
    EXPECT_TRUE(reader.next());
    try {
        reader.next();
        FAIL() << "expected TruncationError";
    } catch (const TruncationError& e) {
        EXPECT_EQ(e.offset(), 16u + 2 * binfmt::record_size);
    }
}

TEST(Binary, RejectsForeignFiles) {
    std::istringstream bad_magic(std::string(16, 'x'));
    EXPECT_THROW(BinaryReader{bad_magic}, FormatError);

    std::ostringstream out;
    write_binary({}, out);
    std::string s = out.str();
    s[8] = 2;
    std::istringstream bad_version(s);
    EXPECT_THROW(BinaryReader{bad_version}, VersionError);

    std::istringstream tiny("FLOW");
    EXPECT_THROW(BinaryReader{tiny}, TruncationError);
}

TEST(Binary, FuzzedInputNeverCrashes) {
    std::mt19937_64 rng(99);
    std::vector<FlowRecord> recs(20);
    for (auto& r : recs) r = random_record(rng);
    std::ostringstream out;
    write_binary(recs, out);
    const std::string good = out.str();
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s = good;
        int flips = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < flips; ++i) s[rng() % s.size()] = static_cast<char>(rng());
        s.resize(rng() % (s.size() + 1));
        std::istringstream in(s);
        try {
            auto got = read_binary(in);
            EXPECT_LE(got.size(), recs.size());
        } catch (const Error&) {
        }
    }
}

TEST(Records, SortIsStableAndDeterministic) {
    std::mt19937_64 rng(8);
    std::vector<FlowRecord> recs(1000);
    for (auto& r : recs) {
        r = random_record(rng);
        r.first_ms %= 50;
    }
    auto a = recs, b = recs;
    std::shuffle(b.begin(), b.end(), rng);
    sort_records(a);
    sort_records(b);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end(), [](auto& x, auto& y) { return x.first_ms < y.first_ms; }));
}
