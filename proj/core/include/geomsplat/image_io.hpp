#pragma once

#include <string>
#include <vector>

namespace geomsplat {

// Row-major H*W*3 image with values in [0,1].
struct Image {
    int width = 0, height = 0;
    std::vector<double> rgb;

    static Image filled(int w, int h, double r, double g, double b);
    double* at(int y, int x) { return &rgb[(static_cast<size_t>(y) * width + x) * 3]; }
    const double* at(int y, int x) const {
        return &rgb[(static_cast<size_t>(y) * width + x) * 3];
    }
};

// Binary P6 PPM, 8-bit; values clamped to [0,1] and rounded.
void write_ppm(const Image& img, const std::string& path);
Image read_ppm(const std::string& path);

// Depth raster: "DRAS1\n<width> <height>\n" followed by width*height
// little-endian float64 values in row-major order, meters, 0 = no return.
void write_depth_raster(const std::vector<double>& depth, int width, int height,
                        const std::string& path);
std::vector<double> read_depth_raster(const std::string& path, int& width, int& height);

}  // namespace geomsplat
