#include "putraffic/traffic_io.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "putraffic/errors.hpp"

namespace putraffic {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_header(std::ostream &os, const char *kind, const FileHeader &header) {
    os << "# putraffic " << kind << '\n';
    if (!header.empty()) {
        os << '#';
        for (const auto &[k, v] : header) os << ' ' << k << '=' << v;
        os << '\n';
    }
}

double parse_double(std::string_view s, int line) {
    // std::from_chars for double is available in libstdc++ 11.
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DomainError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

std::uint8_t parse_bit(std::string_view s, int line) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw DomainError("line " + std::to_string(line) + ": expected 0 or 1, got '" + std::string(s) + "'");
}

struct Row {
    double t;
    std::uint8_t bit;
};

// Reads header comments, the column line, and `t,bit` rows.
std::vector<Row> read_rows(std::istream &is, const char *kind, const char *columns, FileHeader *header) {
    std::vector<Row> rows;
    std::string line;
    int lineno = 0;
    bool saw_kind = false;
    bool saw_columns = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string tok;
            ss >> tok;
            if (tok == "putraffic") {
                ss >> tok;
                if (tok != kind)
                    throw DomainError("expected a putraffic " + std::string(kind) + " file, got " + tok);
                saw_kind = true;
                continue;
            }
            if (header) {
                std::istringstream kv(line.substr(1));
                while (kv >> tok) {
                    auto eq = tok.find('=');
                    if (eq != std::string::npos) (*header)[tok.substr(0, eq)] = tok.substr(eq + 1);
                }
            }
            continue;
        }
        if (!saw_columns) {
            if (line != columns)
                throw DomainError("line " + std::to_string(lineno) + ": expected column header '" +
                                  columns + "'");
            saw_columns = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DomainError("line " + std::to_string(lineno) + ": expected 'time,bit'");
        std::string_view sv(line);
        rows.push_back({parse_double(sv.substr(0, comma), lineno), parse_bit(sv.substr(comma + 1), lineno)});
    }
    if (!saw_kind) throw DomainError(std::string("missing '# putraffic ") + kind + "' header");
    return rows;
}

} // namespace

FileHeader params_header(const TrafficParams &p) {
    return {{"u", fmt_double(p.u())},
            {"lambda_f", fmt_double(p.lambda_f())},
            {"lambda_n", fmt_double(p.lambda_n())}};
}

void write_trajectory(std::ostream &os, const Trajectory &traj, const FileHeader &header) {
    FileHeader h = header;
    h["horizon"] = fmt_double(traj.horizon);
    write_header(os, "trajectory", h);
    os << "time,state\n";
    os << "0," << int(traj.initial_state) << '\n';
    std::uint8_t state = traj.initial_state;
    for (double t : traj.switch_times) {
        state ^= 1;
        os << fmt_double(t) << ',' << int(state) << '\n';
    }
}

Trajectory read_trajectory(std::istream &is, FileHeader *header) {
    FileHeader local;
    FileHeader *h = header ? header : &local;
    auto rows = read_rows(is, "trajectory", "time,state", h);
    if (rows.empty() || rows.front().t != 0.0) throw DomainError("trajectory must start with a t=0 row");
    auto it = h->find("horizon");
    if (it == h->end()) throw DomainError("trajectory header lacks horizon");
    Trajectory traj;
    traj.horizon = parse_double(it->second, 2);
    traj.initial_state = rows.front().bit;
    std::uint8_t state = traj.initial_state;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].bit == state) throw DomainError("trajectory states must alternate");
        if (!(rows[i].t > 0.0 && rows[i].t < traj.horizon))
            throw DomainError("switch time outside (0, horizon)");
        if (!traj.switch_times.empty() && rows[i].t <= traj.switch_times.back())
            throw DomainError("switch times must be strictly increasing");
        traj.switch_times.push_back(rows[i].t);
        state = rows[i].bit;
    }
    return traj;
}

void write_stream(std::ostream &os, const SampleStream &stream, const FileHeader &header) {
    FileHeader h = header;
    h["sensed"] = stream.sensed ? "1" : "0";
    write_header(os, "stream", h);
    os << "t_n,z_n\n";
    auto times = stream.schedule->sample_times();
    for (std::size_t i = 0; i < stream.values.size(); ++i)
        os << fmt_double(times[i]) << ',' << int(stream.values[i]) << '\n';
}

SampleStream read_stream(std::istream &is, FileHeader *header) {
    FileHeader local;
    FileHeader *h = header ? header : &local;
    auto rows = read_rows(is, "stream", "t_n,z_n", h);
    if (rows.empty()) throw DomainError("stream file has no samples");
    std::vector<double> gaps;
    std::vector<std::uint8_t> bits;
    gaps.reserve(rows.size() - 1);
    bits.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) {
            if (rows[i].t < rows[i - 1].t) throw DomainError("stream times must be non-decreasing");
            gaps.push_back(rows[i].t - rows[i - 1].t);
        }
        bits.push_back(rows[i].bit);
    }
    auto sched = std::make_shared<const SampleSchedule>(std::move(gaps), rows.front().t);
    auto it = h->find("sensed");
    const bool sensed = it != h->end() && it->second == "1";
    return SampleStream(std::move(bits), std::move(sched), sensed);
}

} // namespace putraffic
