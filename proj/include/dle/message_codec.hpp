#pragma once

// Message sizes and the stable binary wire encoding.
//
// Wire layout, most significant bit first, zero-padded to whole bytes:
//   tag (1 bit): 0 = rank, 1 = beep
//   rank: owner id (40) | phase count p (16) | uniform bits U (b)
//   beep: leader id (40) | timestamp (32)

#include "dle/protocol.hpp"
#include "dle/schedule.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dle {

inline constexpr unsigned kWireIdBits = 40;
inline constexpr unsigned kWirePhaseBits = 16;
inline constexpr unsigned kWireTimestampBits = 32;

/// Bits needed to write any value in [0, x]; at least 1.
unsigned value_width(std::uint64_t x) noexcept;

/// Field widths implied by a schedule: the minimal encoding a real
/// deployment would use, against which the one-message budget is checked.
struct BitWidths {
    unsigned id_bits = 0;        ///< width(id space)
    unsigned phase_bits = 0;     ///< width(largest phase count)
    unsigned timestamp_bits = 0; ///< width(horizon)
    unsigned uniform_bits = kDefaultUniformBits;
    std::uint64_t id_space = 0;
    std::uint64_t max_phase_count = 0;
    Round horizon = 0;

    /// 2 * id_bits + b + timestamp_bits.
    unsigned budget() const noexcept { return 2 * id_bits + uniform_bits + timestamp_bits; }
};

BitWidths bit_widths(const Schedule& s, unsigned uniform_bits);

/// Compact size in bits: 1 + id + p + b for ranks, 1 + id + timestamp for beeps.
unsigned compact_size(const Message& m, const BitWidths& w) noexcept;

/// Every field value is representable in its compact width.
bool fits_widths(const Message& m, const BitWidths& w) noexcept;

std::size_t wire_bits(const Message& m) noexcept;

/// Throws RangeError when a field exceeds its wire width.
std::vector<std::uint8_t> encode_message(const Message& m);

/// Throws ParseError on truncated or trailing input. The uniform width is not
/// carried on the wire, so the decoder is told it.
Message decode_message(std::span<const std::uint8_t> bytes, unsigned uniform_bits);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

} // namespace dle
