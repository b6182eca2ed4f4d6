// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "symphony/csv.hpp"
#include "symphony/errors.hpp"
#include "symphony/io.hpp"
#include "symphony/rng.hpp"

using namespace symphony;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("symphony_io_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string first_line(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

TEST_CASE("matrix files round-trip at 12 significant digits") {
    TempDir dir("matrix");
    RandomStream rng(3);
    Matrix m(4, 7);
    rng.fill_normal({m.data(), m.size()}, 3.0);
    save_matrix_file(m, dir.file("m.txt"));
    Matrix back = load_matrix_file(dir.file("m.txt"));
    REQUIRE(back.rows() == 4);
    REQUIRE(back.cols() == 7);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(back.data()[i] == doctest::Approx(m.data()[i]).epsilon(1e-11));

    CHECK_THROWS_AS(load_matrix_file(dir.file("missing.txt")), IoError);
    std::ofstream(dir.file("bad.txt")) << "rows 2 cols 2\n1 2 3\n";
    CHECK_THROWS_AS(load_matrix_file(dir.file("bad.txt")), IoError);
}

TEST_CASE("adjacency snapshot header is exactly the documented format") {
    TempDir dir("snapshot");
    AdjacencyState state(3, 0.9, NormMode::Sinkhorn);
    state.adjacency = Matrix::identity(3);
    state.update_count = 5;
    save_adjacency_snapshot(state, dir.file("a.txt"));
    CHECK(first_line(dir.file("a.txt")) == "M 3 mode Sinkhorn beta 0.9 updates 5");

    AdjacencyState back = load_adjacency_snapshot(dir.file("a.txt"));
    CHECK(back.experts() == 3);
    CHECK(back.beta == 0.9);
    CHECK(back.norm_mode == NormMode::Sinkhorn);
    CHECK(back.update_count == 5);
    CHECK(max_abs_diff(back.adjacency, state.adjacency) == 0.0);

    state.norm_mode = NormMode::RowNorm;
    save_adjacency_snapshot(state, dir.file("b.txt"));
    CHECK(first_line(dir.file("b.txt")) == "M 3 mode RowNorm beta 0.9 updates 5");
}

TEST_CASE("bundled fixtures parse") {
    const std::string root = SYMPHONY_SOURCE_DIR;
    AdjacencyState two = load_adjacency_snapshot(root + "/fixtures/adjacency_2x2.txt");
    CHECK(two.adjacency(0, 0) == 0.6);
    CHECK(two.adjacency(0, 1) == 0.4);
    CHECK(two.update_count == 1);

    RegionSpec circles = load_region_spec(root + "/fixtures/regions_two_unit_circles.txt");
    CHECK(circles.dim == 2);
    CHECK(circles.count() == 2);
    CHECK(circles.domain.lo[0] == -2.0);
    CHECK(circles.domain.hi[0] == 3.0);
    CHECK(circles.radii[0] == 1.0);
    CHECK(circles.domain.volume() == 20.0);
}

TEST_CASE("region spec round trip") {
    TempDir dir("region");
    RegionSpec spec;
    spec.dim = 3;
    spec.domain.lo = {-1.0, -2.0, 0.0};
    spec.domain.hi = {1.0, 2.0, 4.0};
    spec.centers = Matrix(2, 3, 0.25);
    spec.centers(1, 2) = 3.0;
    spec.radii = {0.5, 0.75};
    save_region_spec(spec, dir.file("r.txt"));
    RegionSpec back = load_region_spec(dir.file("r.txt"));
    CHECK(back.dim == 3);
    CHECK(back.centers == spec.centers);
    CHECK(back.radii == spec.radii);
}

TEST_CASE("csv writer: schema line, fixed width, dat mirror") {
    TempDir dir("csv");
    {
        CsvWriter csv(dir.file("out.csv"), "demo", {"a", "b"});
        csv.row({"1", "2"});
        CHECK_THROWS_AS(csv.row({"1"}), ArgumentError);
    }
    CHECK(first_line(dir.file("out.csv")) == "# schema demo v1");
    std::ifstream c(dir.file("out.csv"));
    std::string line;
    std::getline(c, line);
    std::getline(c, line);
    CHECK(line == "a,b");
    std::getline(c, line);
    CHECK(line == "1,2");
    CHECK(fs::exists(dir.file("out.dat")));
}

TEST_CASE("format_g12 keeps 12 significant digits") {
    CHECK(format_g12(0.9) == "0.9");
    CHECK(format_g12(1.0 / 3.0) == "0.333333333333");
    CHECK(format_g12(12345.0) == "12345");
}
