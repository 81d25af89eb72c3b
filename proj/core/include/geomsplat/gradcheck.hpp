#pragma once

#include <functional>
#include <string>
#include <vector>

#include "geomsplat/optim.hpp"

namespace geomsplat {

struct GradCheckEntry {
    std::string id;
    double max_rel_err = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double worst = 0.0;
    bool all_pass = true;
};

// Compares reverse-mode gradients of the scalar f(store) against central
// finite differences with step h = 1e-4 * max(1, |theta|) per coordinate.
// Relative error is |analytic - fd| / max(1, |analytic|, |fd|). f must be
// deterministic; a non-finite f value raises NumericalError. When
// `only_prefix` is non-empty, only parameters whose id starts with it are
// probed (the rest still receive analytic gradients).
GradCheckReport check_gradients(ParamStore& store,
                                const std::function<Tensor(ParamStore&)>& f,
                                double tolerance, const std::string& only_prefix = "");

}  // namespace geomsplat
