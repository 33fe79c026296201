#pragma once

// Text formats for schedules and traces.
//
// Schedule file:
//   dle-schedule v1
//   n=<n> D=<D> horizon=<H> generator=<name> seed=<s> id_space=<m>
//   round=<r> vertices=<id,id,...> edges=<a-b,a-b,...>     (one line per round)
// `edges=*` marks a complete snapshot; an empty list is edgeless.
//
// Trace file:
//   dle-trace v1
//   seed=<master seed> uniform_bits=<b>
//   <schedule file, verbatim>
//   records
//   r=<r> node=<id> status=<s> leader=<id|-> p=<p> my_rank=<rank> best_rank=<rank>
//     beep=<leader@ts|-> entry=<r> anchor=<r> election=<r> out=<hex|->
// where <rank> is `p:U:owner` or `-`, and out is the wire encoding of the
// round's broadcast. Records are ordered by (round, node).

#include "dle/schedule.hpp"
#include "dle/trace.hpp"

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dle {

void write_schedule(std::ostream& os, const Schedule& s);
std::string schedule_to_string(const Schedule& s);

/// Throws ParseError on malformed text, including well-formed text that
/// describes an invalid schedule.
Schedule read_schedule(std::istream& is);
Schedule schedule_from_string(std::string_view text);

void write_trace(std::ostream& os, const Trace& t);
Trace read_trace(std::istream& is);

/// Raised when a file cannot be opened, read or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

} // namespace dle
