#include "usgan/optim.hpp"

#include <cmath>

#include "usgan/common.hpp"

namespace usgan {

Adam::Adam(std::vector<std::pair<std::string, ad::Var>> params, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& [name, p] : params_) {
        m_.push_back(Tensor::zeros(p.value().shape()));
        v_.push_back(Tensor::zeros(p.value().shape()));
    }
}

void Adam::zero_grad() {
    for (auto& [name, p] : params_) {
        ad::Var var = p;
        var.zero_grad();
    }
}

void Adam::step(double lr) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        ad::Var p = params_[i].second;
        const Tensor& g = p.grad();
        if (g.numel() == 0) continue;  // parameter untouched by this graph
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        Tensor& w = p.value();
        for (std::size_t j = 0; j < w.numel(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::vector<std::pair<std::string, Tensor>> Adam::state() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        out.emplace_back("m." + params_[i].first, m_[i]);
        out.emplace_back("v." + params_[i].first, v_[i]);
    }
    return out;
}

void Adam::set_state(const std::vector<std::pair<std::string, Tensor>>& tensors,
                     std::uint64_t step_count) {
    step_count_ = step_count;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        bool found_m = false, found_v = false;
        for (const auto& [name, t] : tensors) {
            if (name == "m." + params_[i].first) {
                if (!t.same_shape(m_[i])) throw DataError("optimizer state shape mismatch: " + name);
                m_[i] = t;
                found_m = true;
            } else if (name == "v." + params_[i].first) {
                if (!t.same_shape(v_[i])) throw DataError("optimizer state shape mismatch: " + name);
                v_[i] = t;
                found_v = true;
            }
        }
        if (!found_m || !found_v)
            throw DataError("optimizer state missing tensors for " + params_[i].first);
    }
}

}  // namespace usgan
