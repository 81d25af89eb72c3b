#pragma once

#include <array>
#include <vector>

#include "geomsplat/camera.hpp"
#include "geomsplat/gaussians.hpp"
#include "geomsplat/tensor.hpp"

namespace geomsplat {

struct RenderTarget {
    int width = 64, height = 64;
    std::array<double, 3> background{0, 0, 0};
    double near_clip = 0.05, far_clip = 100.0;

    void validate() const;
};

struct RasterResult {
    Tensor image;               // [H, W, 3], differentiable
    std::vector<double> alpha;  // H*W coverage in [0,1]
    int skipped_degenerate = 0; // covariance condition number > 1e12
};

// Reference rasterizer: every in-frustum Gaussian is projected with the
// first-order (EWA) covariance transform, depth-sorted (ties by index), and
// alpha-composited front-to-back at every pixel. No spatial cutoffs, so the
// output is smooth in all parameters; gradients flow to mu, color, opacity,
// rotation and scale.
RasterResult rasterize(const GaussianSet& gaussians, const CameraModel& camera,
                       const RenderTarget& target);

}  // namespace geomsplat
