#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "mtk/image_io.hpp"
#include "mtk/rng.hpp"
#include "mtk/volume.hpp"
#include "oracle_helpers.hpp"

using namespace mtk;

namespace {

Volume4D random_volume(std::array<std::int64_t, 4> dims, std::uint64_t seed) {
    Volume4D v;
    v.dims = dims;
    v.data.resize(v.voxel_count());
    Rng rng(seed);
    for (auto& x : v.data) x = float(rng.uniform01());
    return v;
}

}  // namespace

TEST_CASE("Volume4D::validate rejects bad dims and payload mismatch") {
    Volume4D v;
    v.dims = {2, 0, 4, 4};
    v.data.assign(32, 0.0f);
    CHECK_THROWS_AS(v.validate(), DataError);
    v.dims = {2, 2, 4, 4};
    CHECK_THROWS_WITH_AS(v.validate(), doctest::Contains("payload length"), DataError);
    v.data.assign(v.voxel_count(), 0.0f);
    CHECK_NOTHROW(v.validate());
}

TEST_CASE("raw container round-trips a random 4x8x32x32 volume bit-identically") {
    const Volume4D v = random_volume({4, 8, 32, 32}, 21);
    oracle::TempDir tmp("vol_rt");
    write_raw(v, tmp / "v.mtkvol");
    const Volume4D r = read_raw(tmp / "v.mtkvol");
    CHECK(r.dims == v.dims);
    REQUIRE(r.data.size() == v.data.size());
    CHECK(std::memcmp(r.data.data(), v.data.data(), 4 * v.data.size()) == 0);
}

TEST_CASE("load_stack inverts write_raw on a normalized volume") {
    Volume4D v = random_volume({3, 2, 9, 7}, 4);
    v.data[17] = 1.0f;  // pin the global max so normalization is the identity
    oracle::TempDir tmp("vol_load");
    write_raw(v, tmp / "v.mtkvol");
    const Volume4D r = load_stack(tmp / "v.mtkvol");
    CHECK(r.dims == v.dims);
    CHECK(std::memcmp(r.data.data(), v.data.data(), 4 * v.data.size()) == 0);
}

TEST_CASE("1x1x1x1 volume round-trips") {
    Volume4D v;
    v.dims = {1, 1, 1, 1};
    v.data = {0.625f};
    oracle::TempDir tmp("vol_one");
    write_raw(v, tmp / "one.mtkvol");
    const Volume4D r = read_raw(tmp / "one.mtkvol");
    CHECK(r.dims == v.dims);
    CHECK(r.data == v.data);
}

TEST_CASE("corrupt containers are rejected") {
    const Volume4D v = random_volume({2, 2, 4, 4}, 9);
    oracle::TempDir tmp("vol_bad");

    SUBCASE("payload shorter than the dims promise") {
        write_raw(v, tmp / "t.mtkvol");
        std::filesystem::resize_file(tmp / "t.mtkvol", 8 + 32 + 10);
        CHECK_THROWS_WITH_AS(read_raw(tmp / "t.mtkvol"), doctest::Contains("payload"), DataError);
    }
    SUBCASE("wrong magic") {
        std::ofstream out(tmp / "junk.mtkvol", std::ios::binary);
        const char junk[24] = "NOTAVOL\0extra bytes her";
        out.write(junk, sizeof(junk));
        out.close();
        CHECK_THROWS_WITH_AS(read_raw(tmp / "junk.mtkvol"), doctest::Contains("magic"), DataError);
    }
    SUBCASE("negative intensity rejected by load_stack but not read_raw") {
        Volume4D neg = v;
        neg.data[3] = -0.5f;
        write_raw(neg, tmp / "neg.mtkvol");
        CHECK(read_raw(tmp / "neg.mtkvol").data[3] == -0.5f);  // verbatim reader
        CHECK_THROWS_WITH_AS(load_stack(tmp / "neg.mtkvol"), doctest::Contains("negative"),
                             DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(load_stack(tmp / "absent.mtkvol"), doctest::Contains("does not exist"),
                             DataError);
    }
}

TEST_CASE("directory stacks assemble in (t,z,y,x) order and normalize globally") {
    oracle::TempDir tmp("stack");
    const int h = 4, w = 5;
    // value marks its (t,z) slot; global max 200 lives at t=1,z=2
    for (int t = 0; t < 2; ++t) {
        for (int z = 0; z < 3; ++z) {
            std::vector<std::uint8_t> gray(h * w, 0);
            gray[0] = std::uint8_t(10 + t * 41 + z);
            if (t == 1 && z == 2) gray[h * w - 1] = 200;
            char name[32];
            std::snprintf(name, sizeof(name), "t%02d_z%02d.pgm", t, z);
            write_pgm8(tmp / name, h, w, gray);
        }
    }
    const Volume4D v = load_stack(tmp.dir, "t{t}_z{z}.pgm");
    CHECK(v.dims == std::array<std::int64_t, 4>{2, 3, 4, 5});
    for (int t = 0; t < 2; ++t)
        for (int z = 0; z < 3; ++z)
            CHECK(v.at(t, z, 0, 0) == doctest::Approx(double(10 + t * 41 + z) / 200.0));
    CHECK(v.at(1, 2, h - 1, w - 1) == 1.0f);  // global max normalized to 1
    const auto [lo, hi] = std::minmax_element(v.data.begin(), v.data.end());
    CHECK(*lo >= 0.0f);
    CHECK(*hi <= 1.0f);
}

TEST_CASE("directory stack error cases") {
    oracle::TempDir tmp("stack_err");
    SUBCASE("empty directory") {
        CHECK_THROWS_WITH_AS(load_stack(tmp.dir, "t{t}_z{z}.pgm"),
                             doctest::Contains("no slices found"), DataError);
    }
    SUBCASE("missing slice names the gap") {
        std::vector<std::uint8_t> gray(6, 50);
        write_pgm8(tmp / "t0_z0.pgm", 2, 3, gray);
        write_pgm8(tmp / "t0_z2.pgm", 2, 3, gray);
        CHECK_THROWS_WITH_AS(load_stack(tmp.dir, "t{t}_z{z}.pgm"),
                             doctest::Contains("missing slice t=0 z=1"), DataError);
    }
    SUBCASE("inconsistent slice dimensions name both shapes") {
        write_pgm8(tmp / "t0_z0.pgm", 2, 3, std::vector<std::uint8_t>(6, 50));
        write_pgm8(tmp / "t0_z1.pgm", 2, 4, std::vector<std::uint8_t>(8, 50));
        try {
            load_stack(tmp.dir, "t{t}_z{z}.pgm");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("2x4") != std::string::npos);
            CHECK(msg.find("2x3") != std::string::npos);
        }
    }
    SUBCASE("duplicate (t,z) from zero-padding variants") {
        std::vector<std::uint8_t> gray(6, 50);
        write_pgm8(tmp / "t1_z2.pgm", 2, 3, gray);
        write_pgm8(tmp / "t01_z02.pgm", 2, 3, gray);
        CHECK_THROWS_WITH_AS(load_stack(tmp.dir, "t{t}_z{z}.pgm"),
                             doctest::Contains("duplicate slice"), DataError);
    }
    SUBCASE("layout must carry both placeholders") {
        CHECK_THROWS_AS(load_stack(tmp.dir, "slice{t}.pgm"), ConfigError);
    }
}

TEST_CASE("RGB TIFF slices convert by channel average") {
    oracle::TempDir tmp("stack_rgb");
    // two pixels: (30,60,90) -> 60 and (255,255,255) -> 255
    const std::vector<std::uint8_t> rgb{30, 60, 90, 255, 255, 255};
    write_tiff_rgb8(tmp / "t0_z0.tif", 1, 2, rgb);
    const Volume4D v = load_stack(tmp.dir, "t{t}_z{z}.tif");
    CHECK(v.dims == std::array<std::int64_t, 4>{1, 1, 1, 2});
    CHECK(v.at(0, 0, 0, 0) == doctest::Approx(60.0 / 255.0));
    CHECK(v.at(0, 0, 0, 1) == 1.0f);
}

TEST_CASE("16-bit TIFF slices keep their dynamic range until global scaling") {
    oracle::TempDir tmp("stack_16");
    write_tiff_gray16(tmp / "t0_z0.tif", 1, 3, {0, 1000, 40000});
    const Volume4D v = load_stack(tmp.dir, "t{t}_z{z}.tif");
    CHECK(v.at(0, 0, 0, 0) == 0.0f);
    CHECK(v.at(0, 0, 0, 1) == doctest::Approx(1000.0 / 40000.0));
    CHECK(v.at(0, 0, 0, 2) == 1.0f);
}

TEST_CASE("paper-shaped stack of 63x41 slices assembles to dims (63,41,500,502)") {
    oracle::TempDir tmp("stack_paper");
    const int h = 500, w = 502;
    std::vector<std::uint8_t> gray(std::size_t(h) * w, 0);
    gray[std::size_t(1) * w + 1] = 255;  // fixed global max in every slice
    for (int t = 0; t < 63; ++t) {
        for (int z = 0; z < 41; ++z) {
            gray[0] = std::uint8_t((t * 41 + z) % 200 + 55);
            char name[32];
            std::snprintf(name, sizeof(name), "t%03d_z%03d.pgm", t, z);
            write_pgm8(tmp / name, h, w, gray);
        }
    }
    const Volume4D v = load_stack(tmp.dir, "t{t}_z{z}.pgm");
    CHECK(v.dims == std::array<std::int64_t, 4>{63, 41, 500, 502});
    for (auto [t, z] : {std::pair{0, 0}, {62, 40}, {17, 23}, {40, 0}})
        CHECK(v.at(t, z, 0, 0) == doctest::Approx(double((t * 41 + z) % 200 + 55) / 255.0));
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

TEST_CASE("zero cells with zero noise gives an all-zero volume and empty truth") {
    SynthSpec spec;
    spec.dims = {5, 6, 32, 32};
    spec.noise_sigma = 0.0;
    auto [volume, truth] = generate_synthetic(spec);
    CHECK(truth.trajectories.empty());
    for (float x : volume.data) CHECK(x == 0.0f);
}

TEST_CASE("single noiseless helix: volume centroid tracks the parametric path") {
    SynthSpec spec;
    spec.dims = {21, 16, 64, 64};
    spec.helical_count = 1;
    spec.noise_sigma = 0.0;
    spec.seed = 3;
    auto [volume, truth] = generate_synthetic(spec);
    REQUIRE(truth.trajectories.size() == 1);
    REQUIRE(std::int64_t(truth.trajectories[0].centers.size()) == spec.dims[0]);

    for (std::int64_t t = 0; t < spec.dims[0]; ++t) {
        double mass = 0, mx = 0, my = 0, mz = 0;
        for (std::int64_t z = 0; z < spec.dims[1]; ++z)
            for (std::int64_t y = 0; y < spec.dims[2]; ++y)
                for (std::int64_t x = 0; x < spec.dims[3]; ++x) {
                    const double v = volume.at(t, z, y, x);
                    mass += v;
                    mx += v * double(x);
                    my += v * double(y);
                    mz += v * double(z);
                }
        REQUIRE(mass > 0.0);
        const Vec3 c = truth.trajectories[0].centers[static_cast<std::size_t>(t)];
        CHECK(std::abs(mx / mass - c.x()) < 0.1);
        CHECK(std::abs(my / mass - c.y()) < 0.1);
        CHECK(std::abs(mz / mass - c.z()) < 0.1);
    }
}

TEST_CASE("generation is a pure function of the spec") {
    SynthSpec spec;
    spec.dims = {13, 12, 48, 48};
    spec.helical_count = 1;
    spec.erratic_count = 1;
    spec.corkscrew_count = 1;
    spec.noise_sigma = 0.02;
    spec.seed = 77;
    auto [v1, t1] = generate_synthetic(spec);
    auto [v2, t2] = generate_synthetic(spec);
    CHECK(std::memcmp(v1.data.data(), v2.data.data(), 4 * v1.data.size()) == 0);
    REQUIRE(t1.trajectories.size() == t2.trajectories.size());
    for (std::size_t i = 0; i < t1.trajectories.size(); ++i)
        for (std::size_t t = 0; t < t1.trajectories[i].centers.size(); ++t)
            CHECK((t1.trajectories[i].centers[t] - t2.trajectories[i].centers[t]).norm() == 0.0);

    spec.seed = 78;  // different seed must move at least one centroid
    auto [v3, t3] = generate_synthetic(spec);
    CHECK((t3.trajectories[0].centers[0] - t1.trajectories[0].centers[0]).norm() != 0.0);
}

TEST_CASE("every synthetic trajectory covers all frames inside the volume") {
    SynthSpec spec;
    spec.dims = {31, 20, 128, 128};
    spec.helical_count = 3;
    spec.erratic_count = 3;
    spec.corkscrew_count = 2;
    spec.seed = 12;
    auto [volume, truth] = generate_synthetic(spec);
    REQUIRE(truth.trajectories.size() == 8);
    for (const auto& traj : truth.trajectories) {
        REQUIRE(std::int64_t(traj.centers.size()) == spec.dims[0]);
        for (const Vec3& c : traj.centers) {
            CHECK(c.x() >= 0.0);
            CHECK(c.x() <= double(spec.dims[3] - 1));
            CHECK(c.y() >= 0.0);
            CHECK(c.y() <= double(spec.dims[2] - 1));
            CHECK(c.z() >= 0.0);
            CHECK(c.z() <= double(spec.dims[1] - 1));
        }
    }
    // all three phenotypes present, grouped in declaration order
    CHECK(truth.trajectories[0].phenotype == Phenotype::helical);
    CHECK(truth.trajectories[3].phenotype == Phenotype::erratic_semicircular);
    CHECK(truth.trajectories[6].phenotype == Phenotype::corkscrew_linear);
    const auto [lo, hi] = std::minmax_element(volume.data.begin(), volume.data.end());
    CHECK(*lo >= 0.0f);  // noise clipped
    CHECK(*hi <= 1.0f);
}

TEST_CASE("a volume too small for the blob footprint errors before rendering") {
    SynthSpec spec;
    spec.dims = {61, 4, 16, 16};  // margin 1 + 3*sigma leaves no z room
    spec.helical_count = 1;
    CHECK_THROWS_WITH_AS(generate_synthetic(spec), doctest::Contains("exit the volume"),
                         DataError);
}

TEST_CASE("spec validation") {
    SynthSpec spec;
    spec.helical_count = -1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = SynthSpec{};
    spec.blob_sigma = 0.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = SynthSpec{};
    spec.noise_sigma = -0.1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = SynthSpec{};
    spec.peak_intensity = 1.5;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("phenotype labels round-trip through their names") {
    for (Phenotype p : {Phenotype::helical, Phenotype::erratic_semicircular,
                        Phenotype::corkscrew_linear})
        CHECK(phenotype_from_string(to_string(p)) == p);
    CHECK(to_string(Phenotype::erratic_semicircular) == "erratic-semicircular");
    CHECK_THROWS_AS(phenotype_from_string("spiral"), DataError);
}
