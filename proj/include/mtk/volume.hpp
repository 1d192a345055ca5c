#pragma once

#include "mtk/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mtk {

/// Dense 4D grayscale video tensor, row-major in (t, z, y, x) order.
/// Loaded volumes are rescaled so intensities lie in [0, 1] with the global
/// maximum mapped to 1 (all-zero volumes stay zero).
struct Volume4D {
    std::array<std::int64_t, 4> dims{0, 0, 0, 0};  // T, Z, H, W
    std::vector<float> data;

    std::int64_t frames() const { return dims[0]; }
    std::int64_t depth() const { return dims[1]; }
    std::int64_t height() const { return dims[2]; }
    std::int64_t width() const { return dims[3]; }

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2] * dims[3];
    }
    std::size_t index(std::int64_t t, std::int64_t z, std::int64_t y, std::int64_t x) const {
        return ((static_cast<std::size_t>(t) * dims[1] + z) * dims[2] + y) * dims[3] + x;
    }
    float at(std::int64_t t, std::int64_t z, std::int64_t y, std::int64_t x) const {
        return data[index(t, z, y, x)];
    }
    float& at(std::int64_t t, std::int64_t z, std::int64_t y, std::int64_t x) {
        return data[index(t, z, y, x)];
    }
    const float* slice_ptr(std::int64_t t, std::int64_t z) const {
        return data.data() + index(t, z, 0, 0);
    }

    /// Throws DataError unless dims are all >= 1 and the payload length matches.
    void validate() const;
};

enum class Phenotype { helical, erratic_semicircular, corkscrew_linear };

std::string to_string(Phenotype p);
Phenotype phenotype_from_string(const std::string& s);

/// One true trajectory: a phenotype label plus the exact centroid at every frame.
struct TruthTrajectory {
    Phenotype phenotype;
    std::vector<Vec3> centers;  // centers[t] = (x, y, z) in voxel units
};

struct GroundTruth {
    std::vector<TruthTrajectory> trajectories;
};

/// Everything that defines a synthetic video; generation is a pure function
/// of this struct (seed included).
struct SynthSpec {
    std::array<std::int64_t, 4> dims{61, 24, 128, 128};  // T, Z, H, W
    int helical_count = 0;
    int erratic_count = 0;
    int corkscrew_count = 0;
    double blob_sigma = 1.3;       // isotropic Gaussian blob radius, voxels
    double peak_intensity = 0.9;   // blob peak before noise, in [0, 1]
    double noise_sigma = 0.02;     // additive Gaussian noise, in [0, 1]
    std::uint64_t seed = 0;

    void validate() const;
};

/// Load a 4D volume. `root` may be a directory of per-(t,z) slice images, in
/// which case `layout` is a filename pattern containing `{t}` and `{z}`
/// placeholders (zero-padded integers match naturally), or a raw container
/// file, in which case `layout` is ignored. Intensities are normalized to
/// [0, 1] by the global maximum.
Volume4D load_stack(const std::filesystem::path& root, const std::string& layout = "");

/// Write the raw container: 8-byte magic "MTK4VOL\0", four little-endian
/// uint64 dims (T, Z, H, W), then float32 little-endian voxels in (t,z,y,x)
/// row-major order.
void write_raw(const Volume4D& volume, const std::filesystem::path& path);

/// Read a raw container verbatim, without intensity normalization. Used for
/// containers that hold coordinate matrices rather than image intensities.
Volume4D read_raw(const std::filesystem::path& path);

/// Render a synthetic video with analytic ground truth: each requested
/// trajectory follows a parametric path (see Phenotype), drawn per frame as
/// an isotropic Gaussian blob, plus optional additive Gaussian noise, with
/// the result clipped to [0, 1]. Identical specs give identical outputs.
std::pair<Volume4D, GroundTruth> generate_synthetic(const SynthSpec& spec);

}  // namespace mtk
