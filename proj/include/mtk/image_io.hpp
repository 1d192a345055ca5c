#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mtk {

/// One decoded 2D slice. Pixels are raw grayscale sample values (RGB inputs
/// already averaged across channels); scaling to [0,1] happens at volume
/// assembly against the global maximum.
struct SliceImage {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;  // row-major, height*width

    float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Decode a slice image by sniffing magic bytes. Supported containers:
///   - baseline TIFF, uncompressed, strip-based, 8/16-bit, 1 or 3 samples
///   - PGM (P2 ascii, P5 binary), 8/16-bit
SliceImage read_slice_image(const std::filesystem::path& path);

// Minimal writers, used by the synthetic test fixtures and the unit tests.
void write_pgm8(const std::filesystem::path& path, int height, int width,
                const std::vector<std::uint8_t>& gray);
void write_tiff_gray8(const std::filesystem::path& path, int height, int width,
                      const std::vector<std::uint8_t>& gray);
void write_tiff_gray16(const std::filesystem::path& path, int height, int width,
                       const std::vector<std::uint16_t>& gray);
void write_tiff_rgb8(const std::filesystem::path& path, int height, int width,
                     const std::vector<std::uint8_t>& rgb);  // interleaved, 3*height*width

}  // namespace mtk
