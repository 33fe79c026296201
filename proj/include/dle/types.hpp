#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace dle {

/// Identifier of a network node. Unique for the lifetime of a schedule.
enum class NodeId : std::uint64_t {};

constexpr std::uint64_t to_underlying(NodeId id) noexcept {
    return static_cast<std::uint64_t>(id);
}

/// Global round counter, 1-based.
using Round = std::int64_t;

// Error taxonomy. Each maps to a distinct CLI exit code.

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Requested schedule cannot satisfy its own structural guarantees.
struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inbox content that no correct execution can produce.
struct MalformedInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A node was driven outside its membership interval.
struct LifecycleError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Raised when an invariant that the type system cannot express is broken.
struct InvariantError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace dle
