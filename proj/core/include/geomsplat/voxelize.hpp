#pragma once

#include <vector>

#include "geomsplat/camera.hpp"

namespace geomsplat {

inline constexpr int kOccupancyChannels = 10;

// Voxelized observation: a D^3 x 10 occupancy map and a D^3 x C feature map
// over the workspace box. Occupancy channel layout per voxel:
//   0     occupied flag (0/1)
//   1..3  mean RGB of contained points
//   4..6  mean offset from the voxel center, normalized to [-1,1] per axis
//   7     point count mapped to (0,1) as count/(count+1)
//   8..9  reserved, always zero
// An unoccupied voxel is all-zero.
struct VoxelGrid {
    int resolution = 0;
    int feature_channels = 0;
    Bounds bounds;
    std::vector<double> occupancy;  // D^3 * 10
    std::vector<double> feature;    // D^3 * C

    int cells() const { return resolution * resolution * resolution; }
    int cell_index(int ix, int iy, int iz) const {
        return (ix * resolution + iy) * resolution + iz;
    }
    double cell_size(int axis) const { return bounds.extent(axis) / resolution; }
    Vec3 cell_center(int ix, int iy, int iz) const {
        return {bounds.min(0) + (ix + 0.5) * cell_size(0),
                bounds.min(1) + (iy + 0.5) * cell_size(1),
                bounds.min(2) + (iz + 0.5) * cell_size(2)};
    }
};

// Buckets a featured+colored point cloud into the grid. Points outside the
// bounds are dropped; per-voxel aggregates are means, so the result is
// invariant to point order.
VoxelGrid voxelize(const PointCloud& cloud, int resolution, const Bounds& bounds);

}  // namespace geomsplat
