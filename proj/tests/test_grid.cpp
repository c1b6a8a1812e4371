#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rainstorm/grid.hpp"

using namespace rainstorm;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const char* name) {
    return fs::temp_directory_path() / name;
}

GridField random_field(int nx, int ny, int nt, uint64_t seed, double wet_fraction = 0.4) {
    GridGeometry geom;
    geom.nx = nx;
    geom.ny = ny;
    geom.dx_km = 12;
    geom.dy_km = 12;
    geom.dt_hours = 3;
    geom.lat0 = 38;
    geom.lon0 = -100;
    GridField f = GridField::zeros(geom, nt);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
            if (u(rng) < 0.08) f.mask(y, x) = false;
    for (auto& s : f.steps)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                if (f.mask(y, x) && u(rng) < wet_fraction)
                    s(y, x) = static_cast<float>(u(rng) * 8.0 + 0.05);
    return f;
}

}  // namespace

TEST_CASE("pgrid round-trip reproduces values bit-exactly") {
    const GridField f = random_field(17, 9, 5, 42);
    for (bool binary : {true, false}) {
        const fs::path p = tmp_file(binary ? "rt.pgrid" : "rt.pgrt");
        save_field(f, p, binary);
        const GridField g = load_field(p);
        CHECK(g.geom == f.geom);
        CHECK(g.nt() == f.nt());
        CHECK((g.mask == f.mask).all());
        for (int t = 0; t < f.nt(); ++t) CHECK((g.steps[t] == f.steps[t]).all());
        fs::remove(p);
    }
}

TEST_CASE("hand-written text field loads with exact values") {
    const fs::path p = tmp_file("hand.pgrt");
    {
        std::ofstream out(p);
        out << "PGRT1\nnx=1\nny=1\nnt=3\ndx_km=12\ndy_km=12\ndt_hours=3\n"
               "lat0=40\nlon0=-100\nunits=mm_per_step\nEND\n0 1.5 0\n";
    }
    const GridField f = load_field(p);
    REQUIRE(f.nt() == 3);
    CHECK(f.steps[0](0, 0) == 0.0f);
    CHECK(f.steps[1](0, 0) == 1.5f);
    CHECK(f.steps[2](0, 0) == 0.0f);
    CHECK(f.mask(0, 0));
    fs::remove(p);
}

TEST_CASE("header errors name the problem") {
    const fs::path p = tmp_file("bad.pgrt");
    auto write = [&](const char* text) {
        std::ofstream out(p);
        out << text;
    };

    write("PGRT1\nnx=0\nny=1\nnt=1\ndx_km=12\ndy_km=12\ndt_hours=3\n"
          "lat0=0\nlon0=0\nunits=mm_per_step\nEND\n1\n");
    CHECK_THROWS_WITH_AS(load_field(p), doctest::Contains("nx"), std::runtime_error);

    write("NOTMAGIC\n");
    CHECK_THROWS_WITH_AS(load_field(p), doctest::Contains("magic"), std::runtime_error);

    write("PGRT1\nnx=1\nny=1\nnt=2\ndx_km=12\ndy_km=12\ndt_hours=3\n"
          "lat0=0\nlon0=0\nunits=mm_per_step\nEND\n1\n");
    CHECK_THROWS_WITH_AS(load_field(p), doctest::Contains("truncation"), std::runtime_error);

    write("PGRT1\nnx=1\nny=1\nnt=1\ndx_km=12\ndy_km=12\ndt_hours=3\n"
          "lat0=0\nlon0=0\nunits=mm_per_step\nEND\n-2\n");
    CHECK_THROWS_WITH_AS(load_field(p), doctest::Contains("negative"), std::runtime_error);

    write("PGRT1\nnx=1\nny=1\nnt=2\ndx_km=12\ndy_km=12\ndt_hours=3\n"
          "lat0=0\nlon0=0\nunits=mm_per_step\nEND\n1 2 3\n");
    CHECK_THROWS_WITH_AS(load_field(p), doctest::Contains("count mismatch"), std::runtime_error);
    fs::remove(p);
}

TEST_CASE("apply_cutoff zeroes sub-cutoff intensities only") {
    GridGeometry geom;
    geom.nx = 2;
    geom.ny = 1;
    geom.dt_hours = 3;
    GridField f = GridField::zeros(geom, 1);
    f.steps[0](0, 0) = 0.09f;  // 0.03 mm/h
    f.steps[0](0, 1) = 0.12f;  // 0.04 mm/h
    const GridField cut = apply_cutoff(f, 0.033);
    CHECK(cut.steps[0](0, 0) == 0.0f);
    CHECK(cut.steps[0](0, 1) == 0.12f);

    const GridField same = apply_cutoff(f, 0.0);
    CHECK((same.steps[0] == f.steps[0]).all());

    const GridField zero = apply_cutoff(GridField::zeros(geom, 2), 0.5);
    for (const auto& s : zero.steps) CHECK((s == 0.0f).all());

    CHECK_THROWS_AS(apply_cutoff(f, -0.1), std::invalid_argument);
}

TEST_CASE("apply_cutoff is idempotent and never increases values") {
    const GridField f = random_field(30, 20, 4, 7);
    const double before = f.total_mm();
    const GridField once = apply_cutoff(f, 0.4);
    const GridField twice = apply_cutoff(once, 0.4);
    CHECK(once.total_mm() <= before);
    for (int t = 0; t < f.nt(); ++t) {
        CHECK((once.steps[t] <= f.steps[t]).all());
        CHECK((twice.steps[t] == once.steps[t]).all());
    }
}

TEST_CASE("intensity curve: hand-computed fractions") {
    GridGeometry geom;
    geom.nx = 3;
    geom.ny = 1;
    geom.dt_hours = 1;  // intensities equal depths
    GridField f = GridField::zeros(geom, 1);
    f.steps[0](0, 0) = 1.0f;
    f.steps[0](0, 1) = 1.0f;
    f.steps[0](0, 2) = 2.0f;
    const IntensityCurve c = intensity_curve(f);
    REQUIRE(c.thresholds.size() == 2);
    CHECK(c.thresholds[0] == doctest::Approx(1.0));
    CHECK(c.cumulative_fraction[0] == doctest::Approx(0.5));  // 2/4
    CHECK(c.thresholds[1] == doctest::Approx(2.0));
    CHECK(c.cumulative_fraction[1] == doctest::Approx(1.0));  // 4/4
}

TEST_CASE("intensity curve: degenerate and error cases") {
    GridGeometry geom;
    geom.nx = 4;
    geom.ny = 4;
    GridField f = GridField::zeros(geom, 2);
    for (auto& s : f.steps) s.setConstant(2.5f);
    const IntensityCurve c = intensity_curve(f);
    REQUIRE(c.thresholds.size() == 1);
    CHECK(c.cumulative_fraction[0] == 1.0);

    CHECK_THROWS_AS(intensity_curve(GridField::zeros(geom, 2)), std::runtime_error);
}

TEST_CASE("curve properties: nondecreasing, ends at one, cutoff excludes at most target") {
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const GridField f = random_field(25, 25, 6, seed);
        const IntensityCurve c = intensity_curve(f);
        for (size_t i = 1; i < c.thresholds.size(); ++i) {
            CHECK(c.thresholds[i] > c.thresholds[i - 1]);
            CHECK(c.cumulative_fraction[i] >= c.cumulative_fraction[i - 1]);
        }
        CHECK(c.cumulative_fraction.back() == doctest::Approx(1.0).epsilon(1e-12));

        // a cutoff at the 2% point of the curve excludes at most 2% of total
        const double cutoff = cutoff_for_excluded_fraction(c, 0.02);
        const double excluded = f.total_mm() - apply_cutoff(f, cutoff).total_mm();
        CHECK(excluded <= 0.02 * f.total_mm() + 1e-9);
    }
}

TEST_CASE("masked cells never count and survive round-trip") {
    GridField f = random_field(10, 10, 3, 99);
    f.mask(2, 3) = false;
    f.steps[0](2, 3) = 0.0f;  // in-memory convention: masked cells hold zero
    const fs::path p = tmp_file("mask.pgrid");
    save_field(f, p);
    const GridField g = load_field(p);
    CHECK_FALSE(g.mask(2, 3));
    CHECK(g.total_mm() == doctest::Approx(f.total_mm()));
    fs::remove(p);
}
