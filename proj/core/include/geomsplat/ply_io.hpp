#pragma once

#include <string>

#include "geomsplat/camera.hpp"

namespace geomsplat {

// ASCII PLY with "element vertex N" carrying x,y,z (float) and
// red,green,blue (uchar). Missing colors are written as white.
void write_ply(const PointCloud& cloud, const std::string& path);
PointCloud read_ply(const std::string& path);

}  // namespace geomsplat
