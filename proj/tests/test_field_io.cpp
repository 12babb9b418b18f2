#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "ringlwr/field_io.hpp"
#include "test_util.hpp"

using namespace ringlwr;
using ringlwr_test::TempDir;

TEST_CASE("format_double round-trips every value bit-exactly") {
    const double cases[] = {0.0,
                            1.0,
                            0.1,
                            1.0 / 3.0,
                            -123456789.123456,
                            1e-300,
                            1e308,
                            5e-324, // smallest denormal
                            std::nextafter(1.0, 2.0)};
    for (double v : cases) {
        double back = parse_double(format_double(v), "case");
        CHECK(back == v);
    }
    CHECK(format_double(1.0) == "1"); // shortest form, no trailing zeros
    CHECK(std::signbit(parse_double(format_double(-0.0), "case")));
}

TEST_CASE("strict parsers refuse partial tokens") {
    CHECK(parse_double("2.5e3", "x") == 2500.0);
    CHECK(parse_int("-42", "n") == -42);
    CHECK_THROWS_AS(parse_double("1.5x", "x"), IoError);
    CHECK_THROWS_AS(parse_double("", "x"), IoError);
    CHECK_THROWS_AS(parse_double(" 1", "x"), IoError);
    CHECK_THROWS_AS(parse_int("1.5", "n"), IoError);
}

TEST_CASE("split_fields keeps empty fields") {
    auto f = split_fields("a,b,c");
    REQUIRE(f.size() == 3);
    CHECK(f[1] == "b");
    CHECK(split_fields("a,,c").size() == 3);
    CHECK(split_fields("a,,c")[1].empty());
    CHECK(split_fields("").size() == 1);
    CHECK(split_fields("a,").size() == 2);
    CHECK(split_fields("1;2", ';').size() == 2);
}

namespace {

Field wavy_field() {
    RingGrid g = RingGrid::from_extent(12.0, 0.5, 2.0, 3.0);
    Field f(g);
    for (int t = 0; t < g.n_t; ++t)
        for (int j = 0; j < g.n_x; ++j)
            f(t, j) = 0.05 + 0.02 * std::sin(0.7 * t + 1.3 * j);
    return f;
}

} // namespace

TEST_CASE("field files round-trip values and grid bit-exactly") {
    TempDir dir;
    Field f = wavy_field();
    const std::string path = dir.file("field.csv");
    write_field(path, f, "veh/m");
    Field back = read_field(path);
    CHECK(back.grid() == f.grid());
    CHECK(back.values() == f.values());

    std::string text = read_text_file(path);
    CHECK(text.find("# units: t=s, x=m, value=veh/m") == 0);
    CHECK(text.find("t,x,value") != std::string::npos);
}

TEST_CASE("field reader rejects malformed inputs") {
    TempDir dir;
    auto write_and_read = [&](const std::string& body) {
        const std::string p = dir.file("bad.csv");
        write_text_file(p, body);
        return read_field(p);
    };
    CHECK_THROWS_AS(write_and_read(""), IoError);
    CHECK_THROWS_AS(write_and_read("wrong,header\n"), IoError);
    CHECK_THROWS_AS(write_and_read("t,x,value\n0,0,1\n0,1,1\n"), IoError); // one time row
    CHECK_THROWS_AS(write_and_read("t,x,value\n0,0,1\n0,1,1\n1,0,1\n"), IoError);
    // Coordinate off the uniform grid.
    CHECK_THROWS_AS(
        write_and_read("t,x,value\n0,0,1\n0,1,1\n1,0,1\n1,1.5,1\n"), IoError);
    // Non-numeric value.
    CHECK_THROWS_AS(
        write_and_read("t,x,value\n0,0,1\n0,1,x\n1,0,1\n1,1,1\n"), IoError);
    CHECK_THROWS_AS(read_field(dir.file("nothere.csv")), IoError);
}

TEST_CASE("comment and blank lines are skipped everywhere") {
    TempDir dir;
    const std::string p = dir.file("comments.csv");
    write_text_file(p, "# leading note\n\nt,x,value\n0,0,1\n# mid note\n0,1,2\n"
                       "1,0,3\n1,1,4\n");
    Field f = read_field(p);
    CHECK(f.n_t() == 2);
    CHECK(f.n_x() == 2);
    CHECK(f(0, 1) == 2.0);
    CHECK(f(1, 1) == 4.0);
}

TEST_CASE("trajectory files round-trip bit-exactly") {
    TempDir dir;
    TrajectorySet traj;
    traj.records = {
        {1, 0.0, 0.123456789123, 7.7},
        {1, 1.0, 12.0, 7.9},
        {2, 0.5, 99.999999, 0.0},
    };
    const std::string path = dir.file("traj.csv");
    write_trajectories(path, traj, 100.0);
    TrajectorySet back = read_trajectories(path, 100.0);
    REQUIRE(back.records.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.records[i].vehicle_id == traj.records[i].vehicle_id);
        CHECK(back.records[i].t == traj.records[i].t);
        CHECK(back.records[i].x == traj.records[i].x);
        CHECK(back.records[i].v == traj.records[i].v);
    }

    // The writer itself refuses invalid sets.
    TrajectorySet off_ring;
    off_ring.records = {{1, 0.0, 100.0, 1.0}};
    CHECK_THROWS_AS(write_trajectories(dir.file("x.csv"), off_ring, 100.0),
                    ConfigError);
}

TEST_CASE("whole-file helpers round-trip binary-ish content") {
    TempDir dir;
    const std::string p = dir.file("blob.txt");
    const std::string content = "line one\nline two\n\nend";
    write_text_file(p, content);
    CHECK(read_text_file(p) == content);
    CHECK_THROWS_AS(read_text_file(dir.file("absent.txt")), IoError);
}
