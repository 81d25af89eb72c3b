#pragma once

#include "geomsplat/tensor.hpp"

namespace geomsplat {

// Error-magnitude-weighted squared error: mean over entries of |e|^gamma * e^2
// with e = pred - gt. gamma = 0 is exactly mean squared error; larger gamma
// up-weights high-error regions. Differentiable in pred.
Tensor focal_render_loss(const Tensor& pred, const Tensor& gt, double gamma);

struct ImageMetrics {
    double psnr_db;  // +infinity when the images are identical
    double ssim;
};

// PSNR = 10*log10(1/MSE) for values in [0,1]. SSIM uses an 11x11 Gaussian
// window (sigma 1.5), constants C1=0.01^2 / C2=0.03^2, valid windows only,
// averaged over channels.
ImageMetrics image_metrics(const std::vector<double>& pred, const std::vector<double>& gt,
                           int width, int height);

double mse(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace geomsplat
