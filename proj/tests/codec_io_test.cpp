#include "dle/io.hpp"
#include "dle/message_codec.hpp"
#include "dle/oracle.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace dle;
using namespace dle::testing;

TEST(Codec, RankRoundTrip) {
    const Message m = Rank{17, 0xDEADBEEFCAFEF00DULL, 64, id(123456789)};
    const auto bytes = encode_message(m);
    EXPECT_EQ(bytes.size(), (1 + 40 + 16 + 64 + 7) / 8U);
    EXPECT_EQ(decode_message(bytes, 64), m);
    EXPECT_EQ(wire_bits(m), 121U);
}

TEST(Codec, BeepLayoutExact) {
    const auto bytes = encode_message(Beep{id(1), 2});
    ASSERT_EQ(bytes.size(), 10U);
    EXPECT_EQ(to_hex(bytes), "80000000008000000100");
    EXPECT_EQ(decode_message(bytes, 64), (Message{Beep{id(1), 2}}));
}

TEST(Codec, NarrowUniformWidth) {
    const Message m = Rank{0, 5, 3, id(2)};
    const auto bytes = encode_message(m);
    EXPECT_EQ(bytes.size(), 8U); // 1 + 40 + 16 + 3 = 60 bits
    EXPECT_EQ(decode_message(bytes, 3), m);
}

TEST(Codec, OverflowingFieldsAreRangeErrors) {
    EXPECT_THROW(encode_message(Beep{NodeId{std::uint64_t{1} << 40}, 1}), RangeError);
    EXPECT_THROW(encode_message(Beep{id(1), Round{1} << 32}), RangeError);
    EXPECT_THROW(encode_message(Rank{1U << 16, 1, 64, id(1)}), RangeError);
    EXPECT_THROW(encode_message(Rank{0, 8, 3, id(1)}), RangeError);
}

TEST(Codec, TruncatedOrTrailingInputIsAParseError) {
    auto bytes = encode_message(Beep{id(9), 9});
    auto shorter = bytes;
    shorter.pop_back();
    EXPECT_THROW(decode_message(shorter, 64), ParseError);
    bytes.push_back(0);
    EXPECT_THROW(decode_message(bytes, 64), ParseError);
    EXPECT_THROW(from_hex("abc"), ParseError);
    EXPECT_THROW(from_hex("zz"), ParseError);
}

TEST(Codec, CompactWidthsAndBudget) {
    const auto s = build_lower_bound_schedule(16, 4, 32, 1);
    const auto w = bit_widths(s, 64);
    EXPECT_EQ(w.id_bits, 21U); // 16^5 = 2^20 needs 21 bits
    EXPECT_EQ(w.timestamp_bits, 8U);
    EXPECT_EQ(w.max_phase_count, 15U);
    EXPECT_EQ(w.phase_bits, 4U);
    EXPECT_EQ(w.budget(), 2 * 21 + 64 + 8U);
    EXPECT_EQ(compact_size(Rank{0, 1, 64, id(1)}, w), 1 + 21 + 4 + 64U);
    EXPECT_EQ(compact_size(Beep{id(1), 1}, w), 1 + 21 + 8U);
    EXPECT_TRUE(fits_widths(Beep{id(1), 128}, w));
    EXPECT_FALSE(fits_widths(Beep{id(1), 129}, w));
    EXPECT_FALSE(fits_widths(Rank{16, 1, 64, id(1)}, w));
    EXPECT_EQ(value_width(0), 1U);
    EXPECT_EQ(value_width(1), 1U);
    EXPECT_EQ(value_width(255), 8U);
    EXPECT_EQ(value_width(256), 9U);
}

TEST(ScheduleFile, RoundTripsEveryGenerator) {
    const std::vector<Schedule> schedules{
        build_lower_bound_schedule(6, 3, 5, 2),
        build_churn_schedule(ChurnParams{7, 4, 20, 0.5, EpochTopology::random_connected_at_epoch, 3}),
        build_static_schedule(5, 4, 6, ring_topology(5)),
    };
    for (const auto& s : schedules) {
        const auto text = schedule_to_string(s);
        EXPECT_EQ(schedule_from_string(text), s);
        EXPECT_EQ(schedule_to_string(schedule_from_string(text)), text);
    }
}

TEST(ScheduleFile, DocumentedLayout) {
    auto s = clique_schedule(2, {ids({1, 2}), ids({2})}, 9);
    EXPECT_EQ(schedule_to_string(*s),
              "dle-schedule v1\n"
              "n=2 D=2 horizon=2 generator=test seed=0 id_space=9\n"
              "round=1 vertices=1,2 edges=*\n"
              "round=2 vertices=2 edges=\n");
    const auto parsed = schedule_from_string(
        "dle-schedule v1\n"
        "n=3 D=1 horizon=1 generator=x seed=4 id_space=3\n"
        "round=1 vertices=1,2,3 edges=1-2,3-2\n");
    EXPECT_TRUE(parsed.snapshot_at(1).has_edge(id(2), id(3)));
    EXPECT_FALSE(parsed.snapshot_at(1).has_edge(id(1), id(3)));
}

TEST(ScheduleFile, CorruptInputIsAParseError) {
    const std::string good = "dle-schedule v1\nn=2 D=1 horizon=1 generator=x seed=0 id_space=2\nround=1 vertices=1,2 edges=*\n";
    EXPECT_NO_THROW(schedule_from_string(good));
    const std::vector<std::string> bad{
        "",
        "dle-schedule v2\n",
        "dle-schedule v1\nn=2 D=1 horizon=1 generator=x seed=0\n",
        "dle-schedule v1\nn=2 D=1 horizon=2 generator=x seed=0 id_space=2\nround=1 vertices=1,2 edges=*\n",
        "dle-schedule v1\nn=2 D=1 horizon=1 generator=x seed=0 id_space=2\nround=2 vertices=1,2 edges=*\n",
        "dle-schedule v1\nn=2 D=1 horizon=1 generator=x seed=0 id_space=2\nround=1 vertices=1,x edges=*\n",
        "dle-schedule v1\nn=2 D=1 horizon=1 generator=x seed=0 id_space=2\nround=1 vertices=1,2 edges=1-3\n",
        "dle-schedule v1\nn=2 D=1 horizon=1 generator=x seed=0 id_space=2\nround=1 vertices=1,2 edges=12\n",
        "dle-schedule v1\nn=1 D=1 horizon=1 generator=x seed=0 id_space=2\nround=1 vertices=1,2 edges=*\n",
        "dle-schedule v1\nn=2 D=0 horizon=1 generator=x seed=0 id_space=2\nround=1 vertices=1,2 edges=*\n",
        good + "round=2 vertices=1 edges=\n",
    };
    for (const auto& text : bad) {
        EXPECT_THROW(schedule_from_string(text), ParseError) << text;
    }
}

TEST(TraceFile, RoundTripsAndReverifies) {
    const auto s = share(build_churn_schedule(ChurnParams{10, 3, 60, 0.5, EpochTopology::complete_at_epoch, 4}));
    const auto t = run(s, 17);
    std::stringstream buf;
    write_trace(buf, t);
    const auto back = read_trace(buf);
    EXPECT_EQ(back, t);
    EXPECT_EQ(back.fingerprint(), t.fingerprint());
    EXPECT_TRUE(check_safety(back).empty());
}

TEST(TraceFile, CorruptRecordIsAParseError) {
    const auto s = share(build_static_schedule(2, 1, 4, complete_topology(2)));
    std::stringstream buf;
    write_trace(buf, run(s, 1));
    std::string text = buf.str();
    const auto pos = text.find("status=passive");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 14, "status=nothing");
    std::istringstream in(text);
    EXPECT_THROW(read_trace(in), ParseError);

    std::string truncated = buf.str();
    truncated.resize(truncated.size() - 40);
    std::istringstream in2(truncated);
    EXPECT_THROW(read_trace(in2), ParseError);
}
