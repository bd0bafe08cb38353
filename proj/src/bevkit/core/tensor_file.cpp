#include "bevkit/core/tensor_file.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace bevkit {

namespace {

constexpr char kMagic[8] = {'B', 'D', 'K', 'T', '0', '0', '0', '1'};
constexpr uint8_t kDtypeF32 = 0;
constexpr size_t kMaxRank = 8;

void put_u64_le(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t get_u64_le(const unsigned char* b) {
    uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<uint64_t>(b[k]) << (8 * k);
    return v;
}

void put_f32_le(std::ostream& os, const float* src, size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(n * 4));
    } else {
        for (size_t k = 0; k < n; ++k) {
            uint32_t u;
            std::memcpy(&u, &src[k], 4);
            unsigned char b[4] = {static_cast<unsigned char>(u & 0xFF),
                                  static_cast<unsigned char>((u >> 8) & 0xFF),
                                  static_cast<unsigned char>((u >> 16) & 0xFF),
                                  static_cast<unsigned char>((u >> 24) & 0xFF)};
            os.write(reinterpret_cast<const char*>(b), 4);
        }
    }
}

} // namespace

void write_tensor(const std::string& path, std::span<const uint64_t> dims,
                  std::span<const float> payload) {
    if (dims.size() > kMaxRank) throw TensorFileError("tensor rank too large: " + path);
    uint64_t expected = 1;
    for (uint64_t d : dims) expected *= d;
    if (expected != payload.size())
        throw TensorFileError("payload size does not match dims: " + path);

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw TensorFileError("cannot open for write: " + path);
    os.write(kMagic, 8);
    const char dtype = static_cast<char>(kDtypeF32);
    const char rank = static_cast<char>(dims.size());
    os.put(dtype);
    os.put(rank);
    const char pad[6] = {0, 0, 0, 0, 0, 0};
    os.write(pad, 6);
    for (uint64_t d : dims) put_u64_le(os, d);
    if constexpr (std::endian::native == std::endian::little) {
        put_f32_le(os, payload.data(), payload.size());
    } else {
        put_f32_le(os, payload.data(), payload.size());
    }
    os.flush();
    if (!os) throw TensorFileError("write failed: " + path);
}

TensorData read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw TensorFileError("cannot open for read: " + path);

    unsigned char header[16];
    is.read(reinterpret_cast<char*>(header), 16);
    if (is.gcount() != 16) throw TensorFileError("malformed tensor file (truncated header): " + path);
    if (std::memcmp(header, kMagic, 8) != 0)
        throw TensorFileError("malformed tensor file (bad magic): " + path);
    if (header[8] != kDtypeF32)
        throw TensorFileError("malformed tensor file (unsupported dtype): " + path);
    const size_t rank = header[9];
    if (rank > kMaxRank) throw TensorFileError("malformed tensor file (rank too large): " + path);

    TensorData t;
    t.dims.resize(rank);
    uint64_t count = 1;
    for (size_t k = 0; k < rank; ++k) {
        unsigned char b[8];
        is.read(reinterpret_cast<char*>(b), 8);
        if (is.gcount() != 8) throw TensorFileError("malformed tensor file (truncated dims): " + path);
        t.dims[k] = get_u64_le(b);
        if (t.dims[k] != 0 && count > std::numeric_limits<uint64_t>::max() / t.dims[k])
            throw TensorFileError("malformed tensor file (dim overflow): " + path);
        count *= t.dims[k];
    }
    if (count > (1ull << 33))
        throw TensorFileError("malformed tensor file (payload too large): " + path);

    t.data.resize(count);
    is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(count * 4));
    if (static_cast<uint64_t>(is.gcount()) != count * 4)
        throw TensorFileError("malformed tensor file (truncated payload): " + path);
    is.peek();
    if (!is.eof()) throw TensorFileError("malformed tensor file (trailing bytes): " + path);

    if constexpr (std::endian::native != std::endian::little) {
        for (float& f : t.data) {
            uint32_t u;
            std::memcpy(&u, &f, 4);
            u = ((u & 0xFF) << 24) | ((u & 0xFF00) << 8) | ((u >> 8) & 0xFF00) | (u >> 24);
            std::memcpy(&f, &u, 4);
        }
    }
    for (float f : t.data)
        if (!std::isfinite(f)) throw TensorFileError("malformed tensor file (non-finite entry): " + path);
    return t;
}

void write_feature_map(const std::string& path, const BevFeatureMap& map) {
    const uint64_t dims[3] = {static_cast<uint64_t>(map.channels),
                              static_cast<uint64_t>(map.spec.cells_x),
                              static_cast<uint64_t>(map.spec.cells_y)};
    write_tensor(path, dims, map.data);
}

BevFeatureMap read_feature_map(const std::string& path, const BevGridSpec& spec) {
    TensorData t = read_tensor(path);
    if (t.dims.size() != 3) throw TensorFileError("expected rank-3 feature map: " + path);
    if (t.dims[1] != static_cast<uint64_t>(spec.cells_x) ||
        t.dims[2] != static_cast<uint64_t>(spec.cells_y))
        throw TensorFileError("feature map does not match grid spec: " + path);
    BevFeatureMap map(spec, static_cast<int>(t.dims[0]));
    map.data = std::move(t.data);
    return map;
}

void write_mask(const std::string& path, const WeightMask& mask) {
    const uint64_t dims[2] = {static_cast<uint64_t>(mask.spec.cells_x),
                              static_cast<uint64_t>(mask.spec.cells_y)};
    write_tensor(path, dims, mask.data);
}

WeightMask read_mask(const std::string& path, const BevGridSpec& spec) {
    TensorData t = read_tensor(path);
    if (t.dims.size() != 2) throw TensorFileError("expected rank-2 mask: " + path);
    if (t.dims[0] != static_cast<uint64_t>(spec.cells_x) ||
        t.dims[1] != static_cast<uint64_t>(spec.cells_y))
        throw TensorFileError("mask does not match grid spec: " + path);
    WeightMask mask(spec);
    mask.data = std::move(t.data);
    return mask;
}

void write_point_cloud(const std::string& path, const PointCloud& cloud) {
    const uint64_t dims[2] = {cloud.point_count(), cloud.stride()};
    write_tensor(path, dims, cloud.data);
}

PointCloud read_point_cloud(const std::string& path) {
    TensorData t = read_tensor(path);
    if (t.dims.size() != 2 || t.dims[1] < 3)
        throw TensorFileError("expected rank-2 point cloud with >= 3 columns: " + path);
    PointCloud cloud;
    cloud.extra_channels = static_cast<int>(t.dims[1] - 3);
    cloud.data = std::move(t.data);
    return cloud;
}

} // namespace bevkit
