#pragma once

#include <cstdint>
#include <vector>

#include "mtk/common.hpp"
#include "mtk/volume.hpp"

namespace mtk {

enum class ThresholdMode { otsu, fixed };

struct DetectParams {
    int median_radius = 1;           // pixels; 0 disables the filter
    ThresholdMode mode = ThresholdMode::otsu;
    double fixed_threshold = 0.5;    // used when mode == fixed
    int min_area = 4;                // minimum component size in pixels
    double z_link_radius = 3.0;      // max x-y centroid distance across adjacent slices

    void validate() const;
};

// Foreground mask for one (t, z) slice.
struct SliceMask {
    std::int64_t frame = 0;
    std::int64_t depth = 0;
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<std::uint8_t> bits;  // row-major, nonzero = foreground

    bool at(std::int64_t y, std::int64_t x) const {
        return bits[static_cast<std::size_t>(y * width + x)] != 0;
    }
};

// Connected component of a slice mask with its subpixel centroid.
struct Particle2D {
    double x = 0.0, y = 0.0;  // intensity-weighted centroid
    std::int64_t area = 0;
    std::int64_t depth = 0;
    std::int64_t frame = 0;
    double mass = 0.0;        // summed source intensity over the component
};

// Consolidated 3D center of mass for one particle in one frame.
struct Detection3D {
    Vec3 center{0, 0, 0};  // (x, y, z)
    std::int64_t frame = 0;
    double total_mass = 0.0;
    std::int64_t voxel_count = 0;
};

/// Median-filter (clamped borders) then binarize one slice. Otsu runs on a
/// 256-bin histogram of the filtered values; a slice with no between-class
/// separation (constant input) yields an empty mask. Comparison is strict >.
SliceMask preprocess_slice(const Volume4D& volume, std::int64_t t, std::int64_t z,
                           const DetectParams& params);

/// 8-connected components of the mask with area >= min_area. Centroids are
/// intensity-weighted over the source slice; zero-mass components fall back
/// to the unweighted pixel mean.
std::vector<Particle2D> extract_particles(const SliceMask& mask, const Volume4D& volume,
                                          const DetectParams& params);

/// Group one frame's particles across adjacent z-slices: particles whose x-y
/// centroids lie within z_link_radius of a particle in the neighboring slice
/// join the same group (transitively). Each group becomes one detection at
/// the mass-weighted mean of its member centroids.
std::vector<Detection3D> consolidate_3d(const std::vector<Particle2D>& particles,
                                        const DetectParams& params);

/// Full per-frame pass: preprocess + extract every z-slice, consolidate, and
/// sort by center (z, y, x). `workers` parallelizes across slices; output is
/// independent of the worker count.
std::vector<Detection3D> detect_frame(const Volume4D& volume, std::int64_t t,
                                      const DetectParams& params, int workers = 1);

}  // namespace mtk
