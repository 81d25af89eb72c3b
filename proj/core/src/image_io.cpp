#include "geomsplat/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "geomsplat/errors.hpp"

namespace geomsplat {

Image Image::filled(int w, int h, double r, double g, double b) {
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < img.rgb.size(); i += 3) {
        img.rgb[i] = r;
        img.rgb[i + 1] = g;
        img.rgb[i + 2] = b;
    }
    return img;
}

void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double* p = img.at(y, x);
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(p[c], 0.0, 1.0);
                row[static_cast<size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255) throw IoError("unsupported PPM: " + path);
    in.get();  // single whitespace after header
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(static_cast<size_t>(w) * h * 3);
    std::vector<unsigned char> raw(img.rgb.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw IoError("truncated PPM: " + path);
    for (size_t i = 0; i < raw.size(); ++i) img.rgb[i] = raw[i] / 255.0;
    return img;
}

void write_depth_raster(const std::vector<double>& depth, int width, int height,
                        const std::string& path) {
    if (static_cast<size_t>(width) * height != depth.size())
        throw DimensionError("depth raster: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "DRAS1\n" << width << ' ' << height << '\n';
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(depth.data()),
              static_cast<std::streamsize>(depth.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path);
}

std::vector<double> read_depth_raster(const std::string& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string magic;
    in >> magic >> width >> height;
    if (magic != "DRAS1" || width <= 0 || height <= 0)
        throw IoError("not a depth raster: " + path);
    in.get();
    std::vector<double> depth(static_cast<size_t>(width) * height);
    in.read(reinterpret_cast<char*>(depth.data()),
            static_cast<std::streamsize>(depth.size() * sizeof(double)));
    if (!in) throw IoError("truncated depth raster: " + path);
    return depth;
}

}  // namespace geomsplat
