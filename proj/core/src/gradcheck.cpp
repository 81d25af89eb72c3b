#include "geomsplat/gradcheck.hpp"

#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

GradCheckReport check_gradients(ParamStore& store,
                                const std::function<Tensor(ParamStore&)>& f,
                                double tolerance, const std::string& only_prefix) {
    store.zero_grad();
    Tensor loss = f(store);
    if (!std::isfinite(loss.value()))
        throw NumericalError("check_gradients: objective is not finite");
    backward(loss);

    // Snapshot analytic gradients before FD probing rebuilds graphs.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(store.size());
    for (const auto& e : store.entries()) {
        auto g = e.tensor.grad();
        analytic.emplace_back(g.begin(), g.end());
        analytic.back().resize(e.tensor.numel(), 0.0);
    }

    GradCheckReport report;
    size_t pi = 0;
    for (auto& e : store.entries()) {
        if (!only_prefix.empty() && !e.id.starts_with(only_prefix)) {
            ++pi;
            continue;
        }
        GradCheckEntry entry;
        entry.id = e.id;
        auto theta = e.tensor.mutable_data();
        for (size_t i = 0; i < theta.size(); ++i) {
            const double orig = theta[i];
            const double h = 1e-4 * std::max(1.0, std::fabs(orig));
            theta[i] = orig + h;
            const double fp = f(store).value();
            theta[i] = orig - h;
            const double fm = f(store).value();
            theta[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericalError("check_gradients: objective is not finite at probe");
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[pi][i];
            const double rel =
                std::fabs(an - fd) / std::max({1.0, std::fabs(an), std::fabs(fd)});
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        entry.pass = entry.max_rel_err < tolerance;
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.all_pass = report.all_pass && entry.pass;
        report.entries.push_back(std::move(entry));
        ++pi;
    }
    return report;
}

}  // namespace geomsplat
