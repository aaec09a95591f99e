#ifndef USGAN_OPTIM_HPP
#define USGAN_OPTIM_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "usgan/autograd.hpp"

namespace usgan {

// Adam over a fixed parameter list. Moments are kept per tensor and are
// checkpointable via state()/set_state().
class Adam {
public:
    Adam(std::vector<std::pair<std::string, ad::Var>> params, double beta1,
         double beta2, double eps = 1e-8);

    void zero_grad();
    void step(double lr);

    std::uint64_t step_count() const { return step_count_; }

    // Flat state for serialization: "m.<name>" and "v.<name>" tensors.
    std::vector<std::pair<std::string, Tensor>> state() const;
    void set_state(const std::vector<std::pair<std::string, Tensor>>& tensors,
                   std::uint64_t step_count);

    const std::vector<std::pair<std::string, ad::Var>>& params() const {
        return params_;
    }

private:
    std::vector<std::pair<std::string, ad::Var>> params_;
    std::vector<Tensor> m_, v_;
    double beta1_, beta2_, eps_;
    std::uint64_t step_count_ = 0;
};

}  // namespace usgan

#endif
