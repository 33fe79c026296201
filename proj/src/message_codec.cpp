#include "dle/message_codec.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>

namespace dle {

unsigned value_width(std::uint64_t x) noexcept {
    return std::max(1U, static_cast<unsigned>(std::bit_width(x)));
}

BitWidths bit_widths(const Schedule& s, unsigned uniform_bits) {
    BitWidths w;
    w.id_space = s.id_space();
    w.horizon = s.horizon();
    w.max_phase_count = static_cast<std::uint64_t>((s.horizon() - 1) / (2 * s.diameter()));
    w.id_bits = value_width(w.id_space);
    w.phase_bits = value_width(w.max_phase_count);
    w.timestamp_bits = value_width(static_cast<std::uint64_t>(s.horizon()));
    w.uniform_bits = uniform_bits;
    return w;
}

unsigned compact_size(const Message& m, const BitWidths& w) noexcept {
    if (std::holds_alternative<Rank>(m)) {
        return 1 + w.id_bits + w.phase_bits + w.uniform_bits;
    }
    return 1 + w.id_bits + w.timestamp_bits;
}

bool fits_widths(const Message& m, const BitWidths& w) noexcept {
    if (const auto* r = std::get_if<Rank>(&m)) {
        const auto owner = to_underlying(r->owner);
        const bool uniform_ok =
            r->uniform >= 1 && (w.uniform_bits == 64 || r->uniform < (std::uint64_t{1} << w.uniform_bits));
        return owner >= 1 && owner <= w.id_space && r->phase_count <= w.max_phase_count &&
               r->uniform_bits == w.uniform_bits && uniform_ok;
    }
    const auto& b = std::get<Beep>(m);
    const auto leader = to_underlying(b.leader);
    return leader >= 1 && leader <= w.id_space && b.timestamp >= 1 && b.timestamp <= w.horizon;
}

std::size_t wire_bits(const Message& m) noexcept {
    if (const auto* r = std::get_if<Rank>(&m)) {
        return 1 + kWireIdBits + kWirePhaseBits + r->uniform_bits;
    }
    return 1 + kWireIdBits + kWireTimestampBits;
}

namespace {

class BitWriter {
public:
    void put(std::uint64_t value, unsigned bits) {
        for (unsigned i = bits; i-- > 0;) {
            if (used_ % 8 == 0) {
                bytes_.push_back(0);
            }
            if ((value >> i) & 1U) {
                bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (used_ % 8));
            }
            ++used_;
        }
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t used_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t get(unsigned bits) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < bits; ++i) {
            if (pos_ >= bytes_.size() * 8) {
                throw ParseError("message truncated");
            }
            const auto bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1U;
            v = (v << 1) | bit;
            ++pos_;
        }
        return v;
    }
    std::size_t consumed() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void require_width(std::uint64_t value, unsigned bits, const char* field) {
    if (bits < 64 && value >> bits != 0) {
        throw RangeError(fmt::format("{} = {} exceeds {} wire bits", field, value, bits));
    }
}

} // namespace

std::vector<std::uint8_t> encode_message(const Message& m) {
    BitWriter w;
    if (const auto* r = std::get_if<Rank>(&m)) {
        require_width(to_underlying(r->owner), kWireIdBits, "owner");
        require_width(r->phase_count, kWirePhaseBits, "phase count");
        require_width(r->uniform, r->uniform_bits, "uniform");
        w.put(0, 1);
        w.put(to_underlying(r->owner), kWireIdBits);
        w.put(r->phase_count, kWirePhaseBits);
        w.put(r->uniform, r->uniform_bits);
    } else {
        const auto& b = std::get<Beep>(m);
        if (b.timestamp < 0) {
            throw RangeError("negative beep timestamp");
        }
        require_width(to_underlying(b.leader), kWireIdBits, "leader");
        require_width(static_cast<std::uint64_t>(b.timestamp), kWireTimestampBits, "timestamp");
        w.put(1, 1);
        w.put(to_underlying(b.leader), kWireIdBits);
        w.put(static_cast<std::uint64_t>(b.timestamp), kWireTimestampBits);
    }
    return w.take();
}

Message decode_message(std::span<const std::uint8_t> bytes, unsigned uniform_bits) {
    if (uniform_bits < 1 || uniform_bits > 64) {
        throw ParameterError("decode_message: uniform_bits must be in [1, 64]");
    }
    BitReader rd(bytes);
    Message m;
    if (rd.get(1) == 0) {
        Rank r;
        r.owner = NodeId{rd.get(kWireIdBits)};
        r.phase_count = static_cast<std::uint32_t>(rd.get(kWirePhaseBits));
        r.uniform = rd.get(uniform_bits);
        r.uniform_bits = uniform_bits;
        m = r;
    } else {
        Beep b;
        b.leader = NodeId{rd.get(kWireIdBits)};
        b.timestamp = static_cast<Round>(rd.get(kWireTimestampBits));
        m = b;
    }
    if ((rd.consumed() + 7) / 8 != bytes.size()) {
        throw ParseError("trailing bytes after message");
    }
    return m;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) {
        throw ParseError("odd-length hex string");
    }
    std::vector<std::uint8_t> out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = nibble(hex[i]);
        const int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw ParseError(fmt::format("invalid hex digit in '{}'", hex));
        }
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

} // namespace dle
