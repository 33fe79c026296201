#include "dle/io.hpp"

#include "dle/message_codec.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dle {

namespace {

constexpr std::string_view kScheduleMagic = "dle-schedule v1";
constexpr std::string_view kTraceMagic = "dle-trace v1";
constexpr Round kMaxHorizon = 100'000'000;

class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    /// Next line; ParseError at end of input.
    std::string next(std::string_view what) {
        std::string line;
        if (!std::getline(is_, line)) {
            throw ParseError(fmt::format("line {}: unexpected end of input, expected {}", line_ + 1, what));
        }
        ++line_;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        return line;
    }

    void expect_end() {
        std::string line;
        while (std::getline(is_, line)) {
            ++line_;
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                throw ParseError(fmt::format("line {}: trailing content", line_));
            }
        }
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::istream& is_;
    std::size_t line_ = 0;
};

[[noreturn]] void fail(const LineReader& in, const std::string& msg) {
    throw ParseError(fmt::format("line {}: {}", in.line(), msg));
}

/// Splits `k1=v1 k2=v2 ...` and checks the keys against `keys`, in order.
std::vector<std::string_view> fields(const LineReader& in, std::string_view line,
                                     std::initializer_list<std::string_view> keys) {
    std::vector<std::string_view> values;
    std::size_t pos = 0;
    for (auto key : keys) {
        if (pos >= line.size()) {
            fail(in, fmt::format("missing field '{}'", key));
        }
        const std::size_t end = std::min(line.find(' ', pos), line.size());
        const std::string_view token = line.substr(pos, end - pos);
        const std::size_t eq = token.find('=');
        if (eq == std::string_view::npos || token.substr(0, eq) != key) {
            fail(in, fmt::format("expected field '{}', found '{}'", key, token));
        }
        values.push_back(token.substr(eq + 1));
        pos = end + 1;
    }
    if (pos < line.size()) {
        fail(in, fmt::format("unexpected trailing text '{}'", line.substr(pos)));
    }
    return values;
}

template <class T>
T number(const LineReader& in, std::string_view text, std::string_view what) {
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc{} || ptr != last) {
        fail(in, fmt::format("bad {} '{}'", what, text));
    }
    return value;
}

NodeId node_id(const LineReader& in, std::string_view text) {
    return NodeId{number<std::uint64_t>(in, text, "node id")};
}

template <class F>
void split(std::string_view text, char sep, F&& each) {
    if (text.empty()) {
        return;
    }
    std::size_t pos = 0;
    while (true) {
        const std::size_t end = text.find(sep, pos);
        each(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
        if (end == std::string_view::npos) {
            return;
        }
        pos = end + 1;
    }
}

Schedule read_schedule_body(LineReader& in) {
    if (in.next("schedule header") != kScheduleMagic) {
        fail(in, fmt::format("expected '{}'", kScheduleMagic));
    }
    const std::string head = in.next("schedule parameters");
    const auto h = fields(in, head, {"n", "D", "horizon", "generator", "seed", "id_space"});
    ScheduleHeader header;
    header.n = number<std::size_t>(in, h[0], "n");
    header.diameter = number<Round>(in, h[1], "D");
    header.horizon = number<Round>(in, h[2], "horizon");
    header.generator = std::string(h[3]);
    header.seed = number<std::uint64_t>(in, h[4], "seed");
    header.id_space = number<std::uint64_t>(in, h[5], "id_space");
    if (header.horizon < 1 || header.horizon > kMaxHorizon) {
        fail(in, fmt::format("horizon {} out of range", header.horizon));
    }
    if (header.generator.empty()) {
        fail(in, "empty generator name");
    }

    std::vector<GraphSnapshot> snapshots;
    snapshots.reserve(static_cast<std::size_t>(header.horizon));
    for (Round r = 1; r <= header.horizon; ++r) {
        const std::string line = in.next(fmt::format("round {}", r));
        const auto f = fields(in, line, {"round", "vertices", "edges"});
        if (number<Round>(in, f[0], "round") != r) {
            fail(in, fmt::format("expected round {}", r));
        }
        std::vector<NodeId> vertices;
        split(f[1], ',', [&](std::string_view v) { vertices.push_back(node_id(in, v)); });
        try {
            if (f[2] == "*") {
                snapshots.push_back(GraphSnapshot::complete(r, std::move(vertices)));
                continue;
            }
            std::vector<Edge> edges;
            split(f[2], ',', [&](std::string_view e) {
                const std::size_t dash = e.find('-');
                if (dash == std::string_view::npos) {
                    fail(in, fmt::format("bad edge '{}'", e));
                }
                edges.emplace_back(node_id(in, e.substr(0, dash)), node_id(in, e.substr(dash + 1)));
            });
            snapshots.emplace_back(r, std::move(vertices), std::move(edges));
        } catch (const ParameterError& e) {
            fail(in, e.what());
        }
    }
    try {
        return Schedule(std::move(header), std::move(snapshots));
    } catch (const ParameterError& e) {
        throw ParseError(fmt::format("invalid schedule: {}", e.what()));
    }
}

std::string id_or_dash(const std::optional<NodeId>& v) {
    return v ? std::to_string(to_underlying(*v)) : "-";
}

std::string rank_text(const std::optional<Rank>& r) {
    return r ? fmt::format("{}:{}:{}", r->phase_count, r->uniform, to_underlying(r->owner)) : "-";
}

std::optional<Rank> parse_rank(const LineReader& in, std::string_view text, unsigned bits) {
    if (text == "-") {
        return std::nullopt;
    }
    const std::size_t a = text.find(':');
    const std::size_t b = a == std::string_view::npos ? a : text.find(':', a + 1);
    if (b == std::string_view::npos) {
        fail(in, fmt::format("bad rank '{}'", text));
    }
    Rank r;
    r.phase_count = number<std::uint32_t>(in, text.substr(0, a), "phase count");
    r.uniform = number<std::uint64_t>(in, text.substr(a + 1, b - a - 1), "uniform");
    r.uniform_bits = bits;
    r.owner = node_id(in, text.substr(b + 1));
    return r;
}

Status parse_status(const LineReader& in, std::string_view text) {
    for (Status s : {Status::passive, Status::waiting, Status::active, Status::follower, Status::leader}) {
        if (text == to_string(s)) {
            return s;
        }
    }
    fail(in, fmt::format("bad status '{}'", text));
}

} // namespace

void write_schedule(std::ostream& os, const Schedule& s) {
    const auto& h = s.header();
    os << kScheduleMagic << '\n';
    os << fmt::format("n={} D={} horizon={} generator={} seed={} id_space={}\n", h.n, h.diameter,
                      h.horizon, h.generator, h.seed, h.id_space);
    std::string line;
    for (const auto& g : s.snapshots()) {
        line = fmt::format("round={} vertices=", g.round());
        bool first = true;
        for (NodeId v : g.vertices()) {
            line += first ? "" : ",";
            line += std::to_string(to_underlying(v));
            first = false;
        }
        line += " edges=";
        if (g.is_complete()) {
            line += '*';
        } else {
            first = true;
            for (const auto& [a, b] : g.explicit_edges()) {
                line += first ? "" : ",";
                line += fmt::format("{}-{}", to_underlying(a), to_underlying(b));
                first = false;
            }
        }
        line += '\n';
        os << line;
    }
}

std::string schedule_to_string(const Schedule& s) {
    std::ostringstream os;
    write_schedule(os, s);
    return os.str();
}

Schedule read_schedule(std::istream& is) {
    LineReader in(is);
    auto s = read_schedule_body(in);
    in.expect_end();
    return s;
}

Schedule schedule_from_string(std::string_view text) {
    std::istringstream is{std::string(text)};
    return read_schedule(is);
}

void write_trace(std::ostream& os, const Trace& t) {
    os << kTraceMagic << '\n';
    os << fmt::format("seed={} uniform_bits={}\n", t.master_seed(), t.uniform_bits());
    write_schedule(os, t.schedule());
    os << "records\n";
    for (const auto& round : t.rounds()) {
        for (const auto& rec : round.nodes) {
            const auto& s = rec.state;
            const std::string beep =
                s.freshest_beep
                    ? fmt::format("{}@{}", to_underlying(s.freshest_beep->leader), s.freshest_beep->timestamp)
                    : "-";
            const std::string out = rec.outbound ? to_hex(encode_message(*rec.outbound)) : "-";
            os << fmt::format(
                "r={} node={} status={} leader={} p={} my_rank={} best_rank={} beep={} entry={} "
                "anchor={} election={} out={}\n",
                round.round, to_underlying(s.self), to_string(s.status), id_or_dash(s.leader),
                s.phase_count, rank_text(s.my_rank), rank_text(s.best_rank), beep, s.entry_round,
                s.passive_anchor, s.election_start, out);
        }
    }
}

Trace read_trace(std::istream& is) {
    LineReader in(is);
    if (in.next("trace header") != kTraceMagic) {
        fail(in, fmt::format("expected '{}'", kTraceMagic));
    }
    const std::string head = in.next("trace parameters");
    const auto h = fields(in, head, {"seed", "uniform_bits"});
    const auto seed = number<std::uint64_t>(in, h[0], "seed");
    const auto bits = number<unsigned>(in, h[1], "uniform_bits");
    if (bits < 1 || bits > 64) {
        fail(in, "uniform_bits must be in [1, 64]");
    }
    auto schedule = std::make_shared<const Schedule>(read_schedule_body(in));
    if (in.next("records marker") != "records") {
        fail(in, "expected 'records'");
    }
    Trace trace(schedule, seed, bits);
    RoundRecord current{1, {}};
    std::size_t remaining = schedule->snapshot_at(1).size();
    auto flush = [&] {
        trace.append(std::move(current));
        current = RoundRecord{trace.last_round() + 1, {}};
        remaining = current.round <= schedule->horizon() ? schedule->snapshot_at(current.round).size() : 0;
    };
    while (current.round <= schedule->horizon()) {
        if (remaining == 0) {
            flush();
            continue;
        }
        const std::string line = in.next(fmt::format("record of round {}", current.round));
        const auto f = fields(in, line,
                              {"r", "node", "status", "leader", "p", "my_rank", "best_rank", "beep",
                               "entry", "anchor", "election", "out"});
        if (number<Round>(in, f[0], "round") != current.round) {
            fail(in, fmt::format("expected a record of round {}", current.round));
        }
        NodeRecord rec;
        auto& s = rec.state;
        s.self = node_id(in, f[1]);
        if (!schedule->alive(s.self, current.round)) {
            fail(in, fmt::format("node {} is not in round {}", to_underlying(s.self), current.round));
        }
        if (!current.nodes.empty() && !(current.nodes.back().state.self < s.self)) {
            fail(in, "records are not sorted by node id");
        }
        s.status = parse_status(in, f[2]);
        if (f[3] != "-") {
            s.leader = node_id(in, f[3]);
        }
        s.phase_count = number<std::uint32_t>(in, f[4], "p");
        s.my_rank = parse_rank(in, f[5], bits);
        s.best_rank = parse_rank(in, f[6], bits);
        if (f[7] != "-") {
            const std::size_t at = f[7].find('@');
            if (at == std::string_view::npos) {
                fail(in, fmt::format("bad beep '{}'", f[7]));
            }
            s.freshest_beep = Beep{node_id(in, f[7].substr(0, at)),
                                   number<Round>(in, f[7].substr(at + 1), "timestamp")};
        }
        s.entry_round = number<Round>(in, f[8], "entry");
        s.passive_anchor = number<Round>(in, f[9], "anchor");
        s.election_start = number<Round>(in, f[10], "election");
        s.last_step = current.round;
        if (f[11] != "-") {
            try {
                rec.outbound = decode_message(from_hex(f[11]), bits);
            } catch (const ParseError& e) {
                fail(in, e.what());
            }
        }
        current.nodes.push_back(std::move(rec));
        --remaining;
    }
    in.expect_end();
    return trace;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError(fmt::format("cannot open '{}' for reading", path));
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) {
        throw IoError(fmt::format("error reading '{}'", path));
    }
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError(fmt::format("cannot open '{}' for writing", path));
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) {
        throw IoError(fmt::format("error writing '{}'", path));
    }
}

} // namespace dle
