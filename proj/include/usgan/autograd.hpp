#ifndef USGAN_AUTOGRAD_HPP
#define USGAN_AUTOGRAD_HPP

#include <functional>
#include <memory>
#include <vector>

#include "usgan/tensor.hpp"

namespace usgan::ad {

// Minimal reverse-mode tape. Graphs are built define-by-run out of
// shared_ptr nodes; backward() topologically sorts the subgraph reachable
// from a scalar root and accumulates gradients into leaves. Everything runs
// in double precision so finite-difference checks are meaningful.

struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily, same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // pushes this->grad into parents

    Tensor& ensure_grad() {
        if (grad.numel() == 0) grad = Tensor::zeros(value.shape());
        return grad;
    }
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Var leaf(Tensor value, bool requires_grad = false) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        return Var(std::move(n));
    }

    const Tensor& value() const { return node_->value; }
    Tensor& value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool defined() const { return static_cast<bool>(node_); }
    const std::shared_ptr<Node>& node() const { return node_; }

    double scalar() const { return node_->value[0]; }

    void zero_grad() {
        if (node_->grad.numel()) node_->grad.fill(0.0);
    }

    // Cuts the graph: returns a constant leaf sharing no history.
    Var detach() const { return leaf(node_->value, false); }

private:
    std::shared_ptr<Node> node_;
};

// While a guard is alive every created op node is a constant: no parents,
// no backward closure. Used for discriminator-update forward passes where
// G(x) is treated as a fixed input, and for inference.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// Runs reverse-mode accumulation from a scalar root (numel()==1).
void backward(const Var& root);

// ---- ops -------------------------------------------------------------

// 2-D convolution, zero padding. x:(Cin,H,W) w:(Cout,Cin,k,k) b:(Cout).
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

// Transposed convolution. x:(Cin,H,W) w:(Cin,Cout,k,k) b:(Cout).
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride,
                     int pad, int output_pad);

// Reflection padding (mirror without edge repeat), pad < min(H,W).
Var pad_reflect(const Var& x, int pad);

// Per-channel normalization by the instance's own statistics.
Var instance_norm(const Var& x, const Var& gamma, const Var& beta,
                  double eps = 1e-5);

Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var tanh_op(const Var& x);
Var add(const Var& a, const Var& b);

// Scalar reductions used by the losses.
Var mean_abs_diff(const Var& a, const Var& b);
Var mean_squared_to_const(const Var& x, double target);   // mean((x-t)^2)
Var mean_softplus(const Var& x, double sign);             // mean(softplus(sign*x))
Var gram(const Var& f);                                   // (C,C), /(C*H*W)
Var frobenius_diff(const Var& a, const Var& b);           // ||a-b||_F
Var scaled_sum(const std::vector<std::pair<double, Var>>& terms);  // sum w_i * s_i

}  // namespace usgan::ad

#endif
