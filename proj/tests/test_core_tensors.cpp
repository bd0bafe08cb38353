#include "bevkit/core/grid.hpp"
#include "bevkit/core/rng.hpp"
#include "bevkit/core/tensor.hpp"
#include "bevkit/core/tensor_file.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace bevkit;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    return fs::temp_directory_path() / (std::string("bevkit_test_") + name);
}

BevGridSpec paper_range_grid() {
    BevGridSpec spec;
    spec.x_min = spec.y_min = -51.2;
    spec.x_max = spec.y_max = 51.2;
    spec.cells_x = spec.cells_y = 128;
    return spec;
}

} // namespace

TEST_SUITE_BEGIN("core_tensors");

TEST_CASE("grid_index lower corner maps to cell (0,0)") {
    const BevGridSpec spec = paper_range_grid();
    const auto idx = spec.grid_index(-51.2, -51.2);
    REQUIRE(idx.has_value());
    CHECK(idx->first == 0);
    CHECK(idx->second == 0);
}

TEST_CASE("grid_index center point maps to cell (64,64)") {
    const BevGridSpec spec = paper_range_grid();
    const auto idx = spec.grid_index(0.0, 0.0);
    REQUIRE(idx.has_value());
    CHECK(idx->first == 64);
    CHECK(idx->second == 64);
}

TEST_CASE("grid_index upper boundary is excluded") {
    const BevGridSpec spec = paper_range_grid();
    CHECK_FALSE(spec.grid_index(51.2, 0.0).has_value());
    CHECK_FALSE(spec.grid_index(0.0, 51.2).has_value());
    CHECK_FALSE(spec.grid_index(-51.3, 0.0).has_value());
}

TEST_CASE("grid_index stays in range and cells contain their points") {
    BevGridSpec spec;
    spec.x_min = -13.0;
    spec.x_max = 7.5;
    spec.y_min = 2.0;
    spec.y_max = 31.0;
    spec.cells_x = 37;
    spec.cells_y = 11;
    Rng rng(42);
    for (int trial = 0; trial < 5000; ++trial) {
        const double x = rng.uniform(spec.x_min - 2.0, spec.x_max + 2.0);
        const double y = rng.uniform(spec.y_min - 2.0, spec.y_max + 2.0);
        const auto idx = spec.grid_index(x, y);
        const bool inside = x >= spec.x_min && x < spec.x_max && y >= spec.y_min && y < spec.y_max;
        REQUIRE(idx.has_value() == inside);
        if (!idx) continue;
        REQUIRE(idx->first >= 0);
        REQUIRE(idx->first < spec.cells_x);
        REQUIRE(idx->second >= 0);
        REQUIRE(idx->second < spec.cells_y);
        // The cell's metric bounds must contain the point.
        const double lo_x = spec.x_min + idx->first * spec.cell_size_x();
        const double lo_y = spec.y_min + idx->second * spec.cell_size_y();
        CHECK(x >= lo_x - 1e-9);
        CHECK(x < lo_x + spec.cell_size_x() + 1e-9);
        CHECK(y >= lo_y - 1e-9);
        CHECK(y < lo_y + spec.cell_size_y() + 1e-9);
    }
}

TEST_CASE("grid spec invariants are enforced") {
    BevGridSpec spec;
    spec.x_min = 1.0;
    spec.x_max = 1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = paper_range_grid();
    spec.cells_x = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("tensor file round trip is bit exact") {
    const auto path = temp_file("roundtrip.bdkt");
    const uint64_t dims[3] = {1, 2, 2};
    const float payload[4] = {1.0f, 2.0f, 3.0f, 4.0f};
    write_tensor(path.string(), dims, payload);
    const TensorData back = read_tensor(path.string());
    REQUIRE(back.dims == std::vector<uint64_t>({1, 2, 2}));
    REQUIRE(back.data.size() == 4);
    CHECK(std::memcmp(back.data.data(), payload, sizeof(payload)) == 0);
    fs::remove(path);
}

TEST_CASE("tensor file round trip preserves random payload bits") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<uint64_t> dims;
        uint64_t count = 1;
        const int rank = static_cast<int>(rng.uniform_int(1, 4));
        for (int r = 0; r < rank; ++r) {
            const uint64_t d = static_cast<uint64_t>(rng.uniform_int(1, 9));
            dims.push_back(d);
            count *= d;
        }
        std::vector<float> payload(count);
        for (float& v : payload) v = static_cast<float>(rng.normal(0.0, 10.0));
        if (!payload.empty()) payload[0] = -0.0f;

        const auto path = temp_file("roundtrip_rand.bdkt");
        write_tensor(path.string(), dims, payload);
        const TensorData back = read_tensor(path.string());
        REQUIRE(back.dims == dims);
        REQUIRE(back.data.size() == payload.size());
        CHECK(std::memcmp(back.data.data(), payload.data(), payload.size() * 4) == 0);
        fs::remove(path);
    }
}

TEST_CASE("zero-filled 256x200x200 map produces the exact file size") {
    const auto path = temp_file("bigzero.bdkt");
    const uint64_t dims[3] = {256, 200, 200};
    std::vector<float> payload(256ull * 200 * 200, 0.0f);
    write_tensor(path.string(), dims, payload);
    // 16-byte header + 3 dims + payload.
    const uint64_t expected = 16 + 3 * 8 + 4ull * 256 * 200 * 200;
    CHECK(fs::file_size(path) == expected);
    fs::remove(path);
}

TEST_CASE("truncated and corrupt tensor files are rejected") {
    const auto path = temp_file("corrupt.bdkt");
    const uint64_t dims[2] = {4, 4};
    std::vector<float> payload(16, 1.5f);
    write_tensor(path.string(), dims, payload);

    SUBCASE("truncated payload") {
        fs::resize_file(path, fs::file_size(path) - 8);
        CHECK_THROWS_WITH_AS(read_tensor(path.string()),
                             doctest::Contains("malformed tensor file"), TensorFileError);
    }
    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_WITH_AS(read_tensor(path.string()),
                             doctest::Contains("malformed tensor file"), TensorFileError);
    }
    SUBCASE("trailing bytes") {
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f.write("zz", 2);
        f.close();
        CHECK_THROWS_WITH_AS(read_tensor(path.string()),
                             doctest::Contains("malformed tensor file"), TensorFileError);
    }
    fs::remove(path);
}

TEST_CASE("feature map and mask shape validation") {
    BevGridSpec spec;
    spec.cells_x = 4;
    spec.cells_y = 3;
    BevFeatureMap map(spec, 2);
    CHECK(map.data.size() == 24);
    map.at(1, 3, 2) = 5.0f;
    CHECK(map.data[1 * 12 + 3 * 3 + 2] == 5.0f);

    const auto path = temp_file("shape.bdkt");
    write_feature_map(path.string(), map);
    SUBCASE("round trip") {
        const BevFeatureMap back = read_feature_map(path.string(), spec);
        CHECK(back.channels == 2);
        CHECK(back.data == map.data);
    }
    SUBCASE("grid mismatch is rejected") {
        BevGridSpec other = spec;
        other.cells_y = 4;
        CHECK_THROWS_AS(read_feature_map(path.string(), other), TensorFileError);
    }
    fs::remove(path);
}

TEST_SUITE_END();
