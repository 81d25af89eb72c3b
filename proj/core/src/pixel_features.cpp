#include "geomsplat/pixel_features.hpp"

#include <cmath>

#include "geomsplat/errors.hpp"
#include "geomsplat/rng.hpp"

namespace geomsplat {

PixelFeatureExtractor::PixelFeatureExtractor(PixelFeatureMode mode, int channels, uint64_t seed)
    : mode_(mode), channels_(channels) {
    if (mode_ == PixelFeatureMode::Handcrafted && channels_ < 5)
        throw ConfigError("pixel features: handcrafted mode needs at least 5 channels");
    if (channels_ < 1) throw ConfigError("pixel features: channel count must be positive");
    if (mode_ == PixelFeatureMode::RandomProjection) {
        Rng rng(seed);
        projection_.resize(static_cast<size_t>(channels_) * 3);
        const double s = 1.0 / std::sqrt(3.0);
        for (auto& v : projection_) v = rng.uniform(-s, s);
    }
}

void PixelFeatureExtractor::set_projection(std::vector<double> p) {
    if (p.size() != static_cast<size_t>(channels_) * 3)
        throw DimensionError("pixel features: projection must be channels x 3");
    projection_ = std::move(p);
}

std::vector<double> PixelFeatureExtractor::extract(const std::vector<double>& rgb, int width,
                                                   int height) const {
    if (rgb.size() != static_cast<size_t>(width) * height * 3)
        throw DimensionError("pixel features: rgb buffer size mismatch");
    std::vector<double> out(static_cast<size_t>(width) * height * channels_, 0.0);

    if (mode_ == PixelFeatureMode::RandomProjection) {
        for (int i = 0; i < width * height; ++i) {
            const double r = rgb[static_cast<size_t>(i) * 3];
            const double g = rgb[static_cast<size_t>(i) * 3 + 1];
            const double b = rgb[static_cast<size_t>(i) * 3 + 2];
            for (int c = 0; c < channels_; ++c)
                out[static_cast<size_t>(i) * channels_ + c] =
                    projection_[c * 3] * r + projection_[c * 3 + 1] * g + projection_[c * 3 + 2] * b;
        }
        return out;
    }

    // luminance for the gradient channels
    std::vector<double> lum(static_cast<size_t>(width) * height);
    for (int i = 0; i < width * height; ++i)
        lum[i] = 0.299 * rgb[static_cast<size_t>(i) * 3] + 0.587 * rgb[static_cast<size_t>(i) * 3 + 1] +
                 0.114 * rgb[static_cast<size_t>(i) * 3 + 2];
    auto lum_at = [&](int y, int x) {
        y = std::min(std::max(y, 0), height - 1);  // border replicate
        x = std::min(std::max(x, 0), width - 1);
        return lum[static_cast<size_t>(y) * width + x];
    };

    const int pos_channels = channels_ - 5;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double* f = &out[(static_cast<size_t>(y) * width + x) * channels_];
            f[0] = rgb[(static_cast<size_t>(y) * width + x) * 3];
            f[1] = rgb[(static_cast<size_t>(y) * width + x) * 3 + 1];
            f[2] = rgb[(static_cast<size_t>(y) * width + x) * 3 + 2];
            const double gx = (lum_at(y - 1, x + 1) + 2 * lum_at(y, x + 1) + lum_at(y + 1, x + 1)) -
                              (lum_at(y - 1, x - 1) + 2 * lum_at(y, x - 1) + lum_at(y + 1, x - 1));
            const double gy = (lum_at(y + 1, x - 1) + 2 * lum_at(y + 1, x) + lum_at(y + 1, x + 1)) -
                              (lum_at(y - 1, x - 1) + 2 * lum_at(y - 1, x) + lum_at(y - 1, x + 1));
            f[3] = std::fabs(gx);
            f[4] = std::fabs(gy);
            // sinusoidal position code, alternating axis and phase per channel
            const double u = width > 1 ? static_cast<double>(x) / (width - 1) : 0.0;
            const double v = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
            for (int k = 0; k < pos_channels; ++k) {
                const double freq = std::pow(2.0, k / 4) * M_PI;
                const double arg = (k % 2 == 0 ? u : v) * freq;
                f[5 + k] = (k % 4 < 2) ? std::sin(arg) : std::cos(arg);
            }
        }
    return out;
}

}  // namespace geomsplat
