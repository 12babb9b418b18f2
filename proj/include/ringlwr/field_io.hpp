#ifndef RINGLWR_FIELD_IO_HPP
#define RINGLWR_FIELD_IO_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ringlwr/grid.hpp"

namespace ringlwr {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Strict full-token parse; `what` names the token in error messages.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

/// Long-format field file: `# units:` comment, header `t,x,value`, one line
/// per (t, x) cell, t-major. Coordinates and values round-trip bit-exactly.
void write_field(const std::string& path, const Field& field,
                 std::string_view value_unit);
void write_field(std::ostream& os, const Field& field,
                 std::string_view value_unit);

/// Rebuilds the grid from the coordinate columns; every coordinate must
/// equal its reconstructed i*dt / j*dx exactly.
Field read_field(const std::string& path);
Field read_field(std::istream& is, const std::string& name);

/// Trajectory file: `# units:` comment, header `vehicle_id,t,x,v`.
void write_trajectories(const std::string& path, const TrajectorySet& traj,
                        double ring_length_m);
TrajectorySet read_trajectories(const std::string& path, double ring_length_m);

/// Whole-file helpers used by the report writers.
void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

} // namespace ringlwr

#endif
