#include "dle/rng.hpp"

#include <bit>

namespace dle {

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) {
        throw ParameterError("Rng::uniform: empty range");
    }
    const std::uint64_t span = hi - lo;
    if (span == ~std::uint64_t{0}) {
        return engine_();
    }
    const unsigned width = static_cast<unsigned>(std::bit_width(span));
    const std::uint64_t mask = width == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
    for (;;) {
        const std::uint64_t candidate = engine_() & mask;
        if (candidate <= span) {
            return lo + candidate;
        }
    }
}

} // namespace dle
