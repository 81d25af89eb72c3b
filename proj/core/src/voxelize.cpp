#include "geomsplat/voxelize.hpp"

#include <algorithm>
#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

VoxelGrid voxelize(const PointCloud& cloud, int resolution, const Bounds& bounds) {
    bounds.validate();
    cloud.check_consistent();
    if (cloud.points.empty()) throw EmptyCloudError("voxelize: empty cloud");
    if (resolution < 1) throw ConfigError("voxelize: resolution must be positive");

    VoxelGrid grid;
    grid.resolution = resolution;
    grid.bounds = bounds;
    grid.feature_channels = cloud.has_features() ? static_cast<int>(cloud.features[0].size()) : 0;
    grid.occupancy.assign(static_cast<size_t>(grid.cells()) * kOccupancyChannels, 0.0);
    grid.feature.assign(static_cast<size_t>(grid.cells()) * std::max(grid.feature_channels, 1), 0.0);

    std::vector<int> counts(grid.cells(), 0);
    const int fc = grid.feature_channels;

    for (size_t p = 0; p < cloud.points.size(); ++p) {
        const Vec3& pt = cloud.points[p];
        if (!bounds.contains(pt)) continue;
        int idx[3];
        for (int a = 0; a < 3; ++a) {
            const double t = (pt[a] - bounds.min(a)) / grid.cell_size(a);
            idx[a] = std::min(static_cast<int>(t), resolution - 1);  // max face joins last cell
        }
        const int cell = grid.cell_index(idx[0], idx[1], idx[2]);
        counts[cell] += 1;
        double* occ = &grid.occupancy[static_cast<size_t>(cell) * kOccupancyChannels];
        if (cloud.has_colors())
            for (int c = 0; c < 3; ++c) occ[1 + c] += cloud.colors[p][c];
        const Vec3 center = grid.cell_center(idx[0], idx[1], idx[2]);
        for (int a = 0; a < 3; ++a)
            occ[4 + a] += (pt[a] - center[a]) / (grid.cell_size(a) / 2.0);
        if (fc > 0) {
            double* feat = &grid.feature[static_cast<size_t>(cell) * fc];
            for (int c = 0; c < fc; ++c) feat[c] += cloud.features[p][c];
        }
    }

    for (int cell = 0; cell < grid.cells(); ++cell) {
        const int n = counts[cell];
        if (n == 0) continue;
        double* occ = &grid.occupancy[static_cast<size_t>(cell) * kOccupancyChannels];
        occ[0] = 1.0;
        for (int c = 1; c <= 6; ++c) occ[c] /= n;
        occ[7] = static_cast<double>(n) / (n + 1.0);
        if (fc > 0) {
            double* feat = &grid.feature[static_cast<size_t>(cell) * fc];
            for (int c = 0; c < fc; ++c) feat[c] /= n;
        }
    }
    return grid;
}

}  // namespace geomsplat
