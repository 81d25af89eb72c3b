#include "geomsplat/ply_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "geomsplat/errors.hpp"

namespace geomsplat {

void write_ply(const PointCloud& cloud, const std::string& path) {
    cloud.check_consistent();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    out.precision(9);
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        int r = 255, g = 255, b = 255;
        if (cloud.has_colors()) {
            r = static_cast<int>(std::lround(std::clamp(cloud.colors[i][0], 0.0, 1.0) * 255));
            g = static_cast<int>(std::lround(std::clamp(cloud.colors[i][1], 0.0, 1.0) * 255));
            b = static_cast<int>(std::lround(std::clamp(cloud.colors[i][2], 0.0, 1.0) * 255));
        }
        out << p[0] << ' ' << p[1] << ' ' << p[2] << ' ' << r << ' ' << g << ' ' << b << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

PointCloud read_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    size_t count = 0;
    bool header_done = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "element") {
            std::string kind;
            ss >> kind >> count;
            if (kind != "vertex") throw IoError("unsupported PLY element in " + path);
        } else if (tok == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw IoError("malformed PLY header: " + path);
    PointCloud cloud;
    cloud.points.reserve(count);
    cloud.colors.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        double x, y, z;
        int r, g, b;
        if (!(in >> x >> y >> z >> r >> g >> b)) throw IoError("truncated PLY: " + path);
        cloud.points.push_back({x, y, z});
        cloud.colors.push_back({r / 255.0, g / 255.0, b / 255.0});
    }
    return cloud;
}

}  // namespace geomsplat
