#include "ringlwr/field_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace ringlwr {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError("bad " + std::string(what) + ": '" + std::string(s) + "'");
    }
    return v;
}

long long parse_int(std::string_view s, std::string_view what) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError("bad " + std::string(what) + ": '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return is;
}

/// Reads the next line, skipping blank and `#` comment lines.
bool next_data_line(std::istream& is, std::string& line) {
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        return true;
    }
    return false;
}

} // namespace

void write_field(std::ostream& os, const Field& field, std::string_view value_unit) {
    const RingGrid& g = field.grid();
    os << "# units: t=s, x=m, value=" << value_unit << "\n";
    os << "t,x,value\n";
    for (int i = 0; i < g.n_t; ++i) {
        std::string tstr = format_double(g.time_at(i));
        for (int j = 0; j < g.n_x; ++j) {
            os << tstr << ',' << format_double(g.x_at(j)) << ','
               << format_double(field(i, j)) << '\n';
        }
    }
}

void write_field(const std::string& path, const Field& field,
                 std::string_view value_unit) {
    auto os = open_out(path);
    write_field(os, field, value_unit);
    if (!os) throw IoError("write failed: " + path);
}

Field read_field(std::istream& is, const std::string& name) {
    std::string line;
    if (!next_data_line(is, line) || line != "t,x,value") {
        throw IoError(name + ": expected header 't,x,value'");
    }
    std::vector<double> ts, xs, vals;
    while (next_data_line(is, line)) {
        auto f = split_fields(line);
        if (f.size() != 3) throw IoError(name + ": expected 3 fields, got line '" + line + "'");
        ts.push_back(parse_double(f[0], "t"));
        xs.push_back(parse_double(f[1], "x"));
        vals.push_back(parse_double(f[2], "value"));
    }
    if (vals.size() < 4) throw IoError(name + ": too few rows for a field");

    // x resets to 0 at each new time row; count the first block to get n_x.
    std::size_t n_x = 1;
    while (n_x < ts.size() && ts[n_x] == ts[0]) ++n_x;
    if (ts.size() % n_x != 0) {
        throw IoError(name + ": row count not a multiple of block size");
    }
    std::size_t n_t = ts.size() / n_x;
    if (n_t < 2 || n_x < 2) throw IoError(name + ": need at least 2 times and 2 cells");
    double dx = xs[1];
    double dt = ts[n_x];
    if (ts[0] != 0.0 || xs[0] != 0.0 || !(dx > 0.0) || !(dt > 0.0)) {
        throw IoError(name + ": coordinates must start at (t,x)=(0,0) with positive steps");
    }
    RingGrid g(static_cast<int>(n_x) * dx, dt, dx,
               static_cast<int>(n_t), static_cast<int>(n_x));
    for (std::size_t i = 0; i < n_t; ++i) {
        for (std::size_t j = 0; j < n_x; ++j) {
            std::size_t r = i * n_x + j;
            if (ts[r] != g.time_at(static_cast<int>(i)) ||
                xs[r] != g.x_at(static_cast<int>(j))) {
                throw IoError(name + ": row " + std::to_string(r) +
                              " coordinates off the uniform grid");
            }
        }
    }
    return Field(g, std::move(vals));
}

Field read_field(const std::string& path) {
    auto is = open_in(path);
    return read_field(is, path);
}

void write_trajectories(const std::string& path, const TrajectorySet& traj,
                        double ring_length_m) {
    traj.validate(ring_length_m);
    auto os = open_out(path);
    os << "# units: t=s, x=m, v=m/s\n";
    os << "vehicle_id,t,x,v\n";
    for (const TrajectoryRecord& r : traj.records) {
        os << r.vehicle_id << ',' << format_double(r.t) << ','
           << format_double(r.x) << ',' << format_double(r.v) << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

TrajectorySet read_trajectories(const std::string& path, double ring_length_m) {
    auto is = open_in(path);
    std::string line;
    if (!next_data_line(is, line) || line != "vehicle_id,t,x,v") {
        throw IoError(path + ": expected header 'vehicle_id,t,x,v'");
    }
    TrajectorySet out;
    while (next_data_line(is, line)) {
        auto f = split_fields(line);
        if (f.size() != 4) throw IoError(path + ": expected 4 fields, got line '" + line + "'");
        TrajectoryRecord r;
        r.vehicle_id = static_cast<int>(parse_int(f[0], "vehicle_id"));
        r.t = parse_double(f[1], "t");
        r.x = parse_double(f[2], "x");
        r.v = parse_double(f[3], "v");
        out.records.push_back(r);
    }
    out.validate(ring_length_m);
    return out;
}

void write_text_file(const std::string& path, std::string_view content) {
    auto os = open_out(path);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    auto is = open_in(path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace ringlwr
