#ifndef USGAN_TEST_HELPERS_HPP
#define USGAN_TEST_HELPERS_HPP

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "usgan/autograd.hpp"
#include "usgan/rng.hpp"

namespace usgan::test {

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.gaussian();
    return t;
}

// Central finite differences vs reverse-mode gradients for a scalar graph.
// `build` must construct the graph from the given leaves each call.
struct GradCheckResult {
    std::size_t checked = 0;
    std::size_t passed = 0;
    double worst_rel = 0.0;
};

inline GradCheckResult grad_check(
    std::vector<ad::Var>& leaves,
    const std::function<ad::Var(const std::vector<ad::Var>&)>& build,
    double h = 1e-5, double tol = 1e-3) {
    ad::Var root = build(leaves);
    for (auto& l : leaves) l.zero_grad();
    ad::backward(root);

    GradCheckResult res;
    for (auto& leaf : leaves) {
        if (!leaf.requires_grad()) continue;
        for (std::size_t i = 0; i < leaf.value().numel(); ++i) {
            const double orig = leaf.value()[i];
            leaf.value()[i] = orig + h;
            const double f_plus = build(leaves).scalar();
            leaf.value()[i] = orig - h;
            const double f_minus = build(leaves).scalar();
            leaf.value()[i] = orig;
            const double fd = (f_plus - f_minus) / (2.0 * h);
            const double ad_grad = leaf.grad().numel() ? leaf.grad()[i] : 0.0;
            const double denom = std::max({std::abs(fd), std::abs(ad_grad), 1e-6});
            const double rel = std::abs(fd - ad_grad) / denom;
            res.worst_rel = std::max(res.worst_rel, rel);
            ++res.checked;
            if (rel <= tol) ++res.passed;
        }
    }
    return res;
}

// Unique scratch directory under the build tree for filesystem tests.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("usgan_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace usgan::test

#endif
