#pragma once

#include <cstdint>
#include <vector>

#include "geomsplat/camera.hpp"

namespace geomsplat {

enum class PixelFeatureMode { Handcrafted, RandomProjection };

// Per-pixel 2D feature extractor standing in for a pretrained backbone.
// Handcrafted mode: RGB (3) + per-axis Sobel gradient magnitudes of
// luminance (2) + 2D sinusoidal positional encoding (channels-5).
// Random-projection mode: a seeded channels x 3 matrix applied to RGB.
// Deterministic for fixed inputs and seed.
class PixelFeatureExtractor {
public:
    PixelFeatureExtractor(PixelFeatureMode mode, int channels, uint64_t seed = 0);

    int channels() const { return channels_; }
    PixelFeatureMode mode() const { return mode_; }

    // rgb: row-major H*W*3 in [0,1]; result row-major H*W*channels.
    std::vector<double> extract(const std::vector<double>& rgb, int width, int height) const;

    const std::vector<double>& projection() const { return projection_; }
    void set_projection(std::vector<double> p);  // channels x 3, row-major

private:
    PixelFeatureMode mode_;
    int channels_;
    std::vector<double> projection_;
};

}  // namespace geomsplat
