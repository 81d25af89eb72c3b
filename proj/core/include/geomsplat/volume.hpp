#pragma once

#include <string>

#include "geomsplat/mlp.hpp"
#include "geomsplat/optim.hpp"
#include "geomsplat/tensor.hpp"
#include "geomsplat/voxelize.hpp"

namespace geomsplat {

// Dense volumetric feature field over the workspace box: D^3 cells of C
// channels, differentiable through the producing network. Cell (ix,iy,iz)
// maps to row (ix*D + iy)*D + iz; cell centers follow VoxelGrid.
struct DenseVolume {
    int resolution = 0;
    int channels = 0;
    Bounds bounds;
    Tensor values;  // [D^3, C]

    int cells() const { return resolution * resolution * resolution; }
    double cell_size(int axis) const { return bounds.extent(axis) / resolution; }
};

struct FetchCounter {
    long long fetches = 0;
};

// Trilinear interpolation of the field at N world-space coordinates.
// Coordinates outside the cell-center hull clamp to the boundary cell (zero
// coordinate gradient there). Differentiable w.r.t. both the volume values
// and the coordinates. Each sampled location counts as one fetch.
Tensor sample_trilinear(const DenseVolume& volume, const Tensor& coords,
                        FetchCounter* counter = nullptr);

// ---- building blocks of the fusion network ----

// 3x3x3 zero-padded convolution over a D^3 grid stored as [D^3, Cin].
// weight: [27*Cin, Cout] (tap-major), bias: [1, Cout].
Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias, int resolution);

// Adaptive average pooling D -> d per axis; window i covers
// [floor(i*D/d), floor((i+1)*D/d)), so window sizes are floor(D/d) or
// ceil(D/d).
Tensor avg_pool3d(const Tensor& input, int in_res, int out_res);

// Nearest-neighbor upsampling d -> D per axis (inverse partition of
// avg_pool3d).
Tensor upsample_nearest3d(const Tensor& input, int in_res, int out_res);

// Two-level convolutional encoder-decoder with one skip connection that
// turns the voxelized observation into the dense volumetric feature.
struct FusionNet {
    int in_channels = 0;
    int channels = 0;
    Tensor w1, b1;  // in -> C at full resolution
    Tensor w2, b2;  // C -> C at half resolution
    Tensor w3, b3;  // C -> C at full resolution after the skip

    static FusionNet create(ParamStore& store, const std::string& prefix, int in_channels,
                            int channels, Rng& rng);
    static FusionNet attach(ParamStore& store, const std::string& prefix, int in_channels,
                            int channels);
};

// Requires an even grid resolution (one down/up level).
DenseVolume fuse(const VoxelGrid& grid, const FusionNet& net);

// Volume snapshot in the checkpoint container (values + metadata records).
void save_volume(const DenseVolume& volume, const std::string& path);
DenseVolume load_volume(const std::string& path);

// Per-z-slice PPM heatmaps of per-cell channel norms, for inspection.
void dump_volume_heatmaps(const DenseVolume& volume, const std::string& dir);

}  // namespace geomsplat
