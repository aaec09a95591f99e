#include "usgan/autograd.hpp"

#include <Eigen/Core>

#include <cmath>
#include <unordered_set>

namespace usgan::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

thread_local bool g_grad_enabled = true;

Var make_op(Tensor value, std::vector<Var> inputs,
            std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (g_grad_enabled) {
        bool needs = false;
        for (const auto& in : inputs)
            if (in.requires_grad()) needs = true;
        if (needs) {
            n->requires_grad = true;
            for (auto& in : inputs) n->parents.push_back(in.node());
            n->backward_fn = std::move(backward_fn);
        }
    }
    return Var(std::move(n));
}

void accumulate(Node& parent, const Tensor& g) {
    Tensor& dst = parent.ensure_grad();
    const double* src = g.data();
    double* d = dst.data();
    for (std::size_t i = 0; i < g.numel(); ++i) d[i] += src[i];
}

int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// Gathers conv patches for output rows [row0,row1) into a (Cin*k*k, rows*Wout)
// column matrix. Out-of-range taps contribute zero.
void im2col(const Tensor& x, int k, int stride, int pad, int w_out, int row0,
            int row1, std::vector<double>& cols) {
    const int c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int n_cols = (row1 - row0) * w_out;
    cols.assign(static_cast<std::size_t>(c_in) * k * k * n_cols, 0.0);
    const double* xd = x.data();
    std::size_t r = 0;
    for (int c = 0; c < c_in; ++c) {
        for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw, ++r) {
                double* out_row = cols.data() + r * n_cols;
                for (int ho = row0; ho < row1; ++ho) {
                    const int hi = ho * stride - pad + kh;
                    double* dst = out_row + static_cast<std::size_t>(ho - row0) * w_out;
                    if (hi < 0 || hi >= h) continue;
                    const double* src = xd + (static_cast<std::size_t>(c) * h + hi) * w;
                    for (int wo = 0; wo < w_out; ++wo) {
                        const int wi = wo * stride - pad + kw;
                        if (wi >= 0 && wi < w) dst[wo] = src[wi];
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-adds columns back into the input gradient.
void col2im_add(const std::vector<double>& cols, int k, int stride, int pad,
                int w_out, int row0, int row1, Tensor& dx) {
    const int c_in = dx.dim(0), h = dx.dim(1), w = dx.dim(2);
    const int n_cols = (row1 - row0) * w_out;
    double* xd = dx.data();
    std::size_t r = 0;
    for (int c = 0; c < c_in; ++c) {
        for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw, ++r) {
                const double* in_row = cols.data() + r * n_cols;
                for (int ho = row0; ho < row1; ++ho) {
                    const int hi = ho * stride - pad + kh;
                    if (hi < 0 || hi >= h) continue;
                    const double* src = in_row + static_cast<std::size_t>(ho - row0) * w_out;
                    double* dst = xd + (static_cast<std::size_t>(c) * h + hi) * w;
                    for (int wo = 0; wo < w_out; ++wo) {
                        const int wi = wo * stride - pad + kw;
                        if (wi >= 0 && wi < w) dst[wi] += src[wo];
                    }
                }
            }
        }
    }
}

// Output rows per im2col strip, capped so the column buffer stays small.
int strip_rows(int c_in, int k, int w_out, int h_out) {
    const std::size_t budget = 4u << 20;  // doubles
    std::size_t per_row = static_cast<std::size_t>(c_in) * k * k * w_out;
    int rows = per_row ? static_cast<int>(budget / per_row) : h_out;
    if (rows < 1) rows = 1;
    return rows < h_out ? rows : h_out;
}

// Forward conv kernel shared by conv2d and the conv_transpose backward.
Tensor conv_forward_raw(const Tensor& x, const Tensor& w, const double* bias,
                        int stride, int pad) {
    const int c_out = w.dim(0), c_in = w.dim(1), k = w.dim(2);
    const int h_out = conv_out_dim(x.dim(1), k, stride, pad);
    const int w_out = conv_out_dim(x.dim(2), k, stride, pad);
    Tensor y({c_out, h_out, w_out});
    const int ck2 = c_in * k * k;
    ConstMatMap wm(w.data(), c_out, ck2);
    std::vector<double> cols;
    const int rows = strip_rows(c_in, k, w_out, h_out);
    for (int r0 = 0; r0 < h_out; r0 += rows) {
        const int r1 = std::min(r0 + rows, h_out);
        im2col(x, k, stride, pad, w_out, r0, r1, cols);
        ConstMatMap cm(cols.data(), ck2, (r1 - r0) * w_out);
        // y rows are strided by h_out*w_out per channel, so write per channel
        for (int co = 0; co < c_out; ++co) {
            Eigen::Map<Eigen::RowVectorXd> dst(
                y.data() + (static_cast<std::size_t>(co) * h_out + r0) * w_out,
                (r1 - r0) * w_out);
            dst.noalias() = wm.row(co) * cm;
            if (bias) dst.array() += bias[co];
        }
    }
    return y;
}

// dW and dX accumulation for a conv given the output gradient.
void conv_backward_raw(const Tensor& x, const Tensor& w, const Tensor& dy,
                       int stride, int pad, Tensor* dx, Tensor* dw, double* db) {
    const int c_out = w.dim(0), c_in = w.dim(1), k = w.dim(2);
    const int h_out = dy.dim(1), w_out = dy.dim(2);
    const int ck2 = c_in * k * k;
    ConstMatMap wm(w.data(), c_out, ck2);
    std::vector<double> cols, dcols;
    const int rows = strip_rows(c_in, k, w_out, h_out);
    for (int r0 = 0; r0 < h_out; r0 += rows) {
        const int r1 = std::min(r0 + rows, h_out);
        const int n = (r1 - r0) * w_out;
        RowMat dym(c_out, n);
        for (int co = 0; co < c_out; ++co)
            dym.row(co) = Eigen::Map<const Eigen::RowVectorXd>(
                dy.data() + (static_cast<std::size_t>(co) * h_out + r0) * w_out, n);
        if (dw) im2col(x, k, stride, pad, w_out, r0, r1, cols);
        if (dw) {
            ConstMatMap cm(cols.data(), ck2, n);
            MatMap dwm(dw->data(), c_out, ck2);
            dwm.noalias() += dym * cm.transpose();
        }
        if (dx) {
            dcols.assign(static_cast<std::size_t>(ck2) * n, 0.0);
            MatMap dcm(dcols.data(), ck2, n);
            dcm.noalias() = wm.transpose() * dym;
            col2im_add(dcols, k, stride, pad, w_out, r0, r1, *dx);
        }
        if (db) {
            for (int co = 0; co < c_out; ++co) db[co] += dym.row(co).sum();
        }
    }
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& root) {
    if (root.value().numel() != 1)
        throw ShapeError("backward() expects a scalar root");
    if (!root.requires_grad()) return;

    // Post-order DFS gives children-before-parents; reversed it is a valid
    // execution order for reverse-mode accumulation.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root.node()->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.numel()) n->backward_fn(*n);
    }
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const Tensor& xt = x.value();
    const Tensor& wt = w.value();
    if (xt.ndim() != 3 || wt.ndim() != 4)
        throw ShapeError("conv2d expects x:(C,H,W), w:(Cout,Cin,k,k)");
    if (xt.dim(0) != wt.dim(1))
        throw ShapeError("conv2d channel mismatch: input has " +
                         std::to_string(xt.dim(0)) + ", weight expects " +
                         std::to_string(wt.dim(1)));
    const int k = wt.dim(2);
    if (conv_out_dim(xt.dim(1), k, stride, pad) < 1 ||
        conv_out_dim(xt.dim(2), k, stride, pad) < 1)
        throw ShapeError("conv2d input " + Tensor::shape_str(xt.shape()) +
                         " too small for kernel " + std::to_string(k));
    Tensor y = conv_forward_raw(xt, wt, b.defined() ? b.value().data() : nullptr,
                                stride, pad);
    std::vector<Var> inputs{x, w};
    if (b.defined()) inputs.push_back(b);
    return make_op(std::move(y), inputs, [x, w, b, stride, pad](Node& n) {
        Node* xn = x.node().get();
        Node* wn = w.node().get();
        Tensor* dx = nullptr;
        Tensor* dw = nullptr;
        double* db = nullptr;
        if (xn->requires_grad) dx = &xn->ensure_grad();
        if (wn->requires_grad) dw = &wn->ensure_grad();
        if (b.defined() && b.node()->requires_grad) db = b.node()->ensure_grad().data();
        conv_backward_raw(x.value(), w.value(), n.grad, stride, pad, dx, dw, db);
    });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride,
                     int pad, int output_pad) {
    const Tensor& xt = x.value();
    const Tensor& wt = w.value();
    if (xt.ndim() != 3 || wt.ndim() != 4)
        throw ShapeError("conv_transpose2d expects x:(C,H,W), w:(Cin,Cout,k,k)");
    if (xt.dim(0) != wt.dim(0))
        throw ShapeError("conv_transpose2d channel mismatch");
    const int c_in = wt.dim(0), c_out = wt.dim(1), k = wt.dim(2);
    const int h_out = (xt.dim(1) - 1) * stride - 2 * pad + k + output_pad;
    const int w_out = (xt.dim(2) - 1) * stride - 2 * pad + k + output_pad;
    if (h_out < 1 || w_out < 1) throw ShapeError("conv_transpose2d output underflow");

    // Forward is the adjoint of a conv with weight viewed as (Cin->Cout):
    // scatter T^t * x into the (larger) output grid.
    Tensor y({c_out, h_out, w_out});
    {
        const int h_in = xt.dim(1), w_in = xt.dim(2);
        const int n = h_in * w_in;
        const int ck2 = c_out * k * k;
        ConstMatMap tm(wt.data(), c_in, ck2);
        ConstMatMap xm(xt.data(), c_in, n);
        std::vector<double> cols(static_cast<std::size_t>(ck2) * n);
        MatMap cm(cols.data(), ck2, n);
        cm.noalias() = tm.transpose() * xm;
        // reuse col2im with roles: "output rows" here are input rows of the
        // adjoint conv whose input is y
        col2im_add(cols, k, stride, pad, w_in, 0, h_in, y);
        if (b.defined()) {
            const double* bias = b.value().data();
            for (int co = 0; co < c_out; ++co) {
                double* p = y.data() + static_cast<std::size_t>(co) * h_out * w_out;
                for (int i = 0; i < h_out * w_out; ++i) p[i] += bias[co];
            }
        }
    }

    std::vector<Var> inputs{x, w};
    if (b.defined()) inputs.push_back(b);
    return make_op(std::move(y), inputs, [x, w, b, stride, pad](Node& n) {
        const Tensor& xt = x.value();
        const Tensor& wt = w.value();
        const int c_in = wt.dim(0), c_out = wt.dim(1), k = wt.dim(2);
        const int h_in = xt.dim(1), w_in = xt.dim(2);
        const int nn = h_in * w_in;
        const int ck2 = c_out * k * k;
        // im2col over the output gradient, sampled at input positions
        std::vector<double> cols;
        im2col(n.grad, k, stride, pad, w_in, 0, h_in, cols);
        ConstMatMap cm(cols.data(), ck2, nn);
        if (x.node()->requires_grad) {
            Tensor& dx = x.node()->ensure_grad();
            MatMap dxm(dx.data(), c_in, nn);
            ConstMatMap tm(wt.data(), c_in, ck2);
            dxm.noalias() += tm * cm;
        }
        if (w.node()->requires_grad) {
            Tensor& dw = w.node()->ensure_grad();
            MatMap dwm(dw.data(), c_in, ck2);
            ConstMatMap xm(xt.data(), c_in, nn);
            dwm.noalias() += xm * cm.transpose();
        }
        if (b.defined() && b.node()->requires_grad) {
            Tensor& db = b.node()->ensure_grad();
            const int hw = n.grad.dim(1) * n.grad.dim(2);
            for (int co = 0; co < c_out; ++co) {
                const double* p = n.grad.data() + static_cast<std::size_t>(co) * hw;
                double s = 0;
                for (int i = 0; i < hw; ++i) s += p[i];
                db[co] += s;
            }
        }
    });
}

Var pad_reflect(const Var& x, int pad) {
    const Tensor& xt = x.value();
    const int c = xt.dim(0), h = xt.dim(1), w = xt.dim(2);
    if (pad >= h || pad >= w)
        throw ShapeError("reflection pad " + std::to_string(pad) +
                         " too large for " + Tensor::shape_str(xt.shape()));
    auto mirror = [](int i, int n) {
        if (i < 0) return -i;
        if (i >= n) return 2 * n - 2 - i;
        return i;
    };
    Tensor y({c, h + 2 * pad, w + 2 * pad});
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < h + 2 * pad; ++i) {
            const int si = mirror(i - pad, h);
            for (int j = 0; j < w + 2 * pad; ++j)
                y.at(ci, i, j) = xt.at(ci, si, mirror(j - pad, w));
        }
    return make_op(std::move(y), {x}, [x, pad, mirror](Node& n) {
        Tensor& dx = x.node()->ensure_grad();
        const int c = dx.dim(0), h = dx.dim(1), w = dx.dim(2);
        for (int ci = 0; ci < c; ++ci)
            for (int i = 0; i < h + 2 * pad; ++i) {
                const int si = mirror(i - pad, h);
                for (int j = 0; j < w + 2 * pad; ++j)
                    dx.at(ci, si, mirror(j - pad, w)) += n.grad.at(ci, i, j);
            }
    });
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Tensor& xt = x.value();
    const int c = xt.dim(0);
    const std::size_t hw = static_cast<std::size_t>(xt.dim(1)) * xt.dim(2);
    if (gamma.value().numel() != static_cast<std::size_t>(c) ||
        beta.value().numel() != static_cast<std::size_t>(c))
        throw ShapeError("instance_norm affine parameters must have C entries");

    Tensor y(xt.shape());
    // cache per-channel stats for backward
    auto mean = std::make_shared<std::vector<double>>(c);
    auto istd = std::make_shared<std::vector<double>>(c);
    for (int ci = 0; ci < c; ++ci) {
        const double* xp = xt.data() + ci * hw;
        double m = 0;
        for (std::size_t i = 0; i < hw; ++i) m += xp[i];
        m /= static_cast<double>(hw);
        double v = 0;
        for (std::size_t i = 0; i < hw; ++i) {
            const double d = xp[i] - m;
            v += d * d;
        }
        v /= static_cast<double>(hw);
        const double is = 1.0 / std::sqrt(v + eps);
        (*mean)[ci] = m;
        (*istd)[ci] = is;
        const double g = gamma.value()[ci], bb = beta.value()[ci];
        double* yp = y.data() + ci * hw;
        for (std::size_t i = 0; i < hw; ++i) yp[i] = g * (xp[i] - m) * is + bb;
    }
    return make_op(std::move(y), {x, gamma, beta},
                   [x, gamma, beta, mean, istd](Node& n) {
        const Tensor& xt = x.value();
        const int c = xt.dim(0);
        const std::size_t hw = static_cast<std::size_t>(xt.dim(1)) * xt.dim(2);
        const double inv_n = 1.0 / static_cast<double>(hw);
        Tensor* dgamma = gamma.node()->requires_grad ? &gamma.node()->ensure_grad() : nullptr;
        Tensor* dbeta = beta.node()->requires_grad ? &beta.node()->ensure_grad() : nullptr;
        Tensor* dx = x.node()->requires_grad ? &x.node()->ensure_grad() : nullptr;
        for (int ci = 0; ci < c; ++ci) {
            const double* xp = xt.data() + ci * hw;
            const double* gp = n.grad.data() + ci * hw;
            const double m = (*mean)[ci], is = (*istd)[ci];
            const double g = gamma.value()[ci];
            double sum_dy = 0, sum_dy_xhat = 0;
            for (std::size_t i = 0; i < hw; ++i) {
                sum_dy += gp[i];
                sum_dy_xhat += gp[i] * (xp[i] - m) * is;
            }
            if (dgamma) (*dgamma)[ci] += sum_dy_xhat;
            if (dbeta) (*dbeta)[ci] += sum_dy;
            if (dx) {
                double* dxp = dx->data() + ci * hw;
                const double k1 = sum_dy * inv_n;
                const double k2 = sum_dy_xhat * inv_n;
                for (std::size_t i = 0; i < hw; ++i) {
                    const double xhat = (xp[i] - m) * is;
                    dxp[i] += g * is * (gp[i] - k1 - xhat * k2);
                }
            }
        }
    });
}

namespace {
Var elementwise(const Var& x, double (*f)(double, double), double p,
                double (*df)(double, double, double)) {
    Tensor y(x.value().shape());
    const double* xp = x.value().data();
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = f(xp[i], p);
    return make_op(std::move(y), {x}, [x, p, df](Node& n) {
        Tensor& dx = x.node()->ensure_grad();
        const double* xp = x.value().data();
        const double* yp = n.value.data();
        const double* gp = n.grad.data();
        for (std::size_t i = 0; i < dx.numel(); ++i)
            dx[i] += gp[i] * df(xp[i], yp[i], p);
    });
}
}  // namespace

Var relu(const Var& x) {
    return elementwise(
        x, [](double v, double) { return v > 0 ? v : 0.0; }, 0.0,
        [](double v, double, double) { return v > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& x, double slope) {
    return elementwise(
        x, [](double v, double s) { return v > 0 ? v : s * v; }, slope,
        [](double v, double, double s) { return v > 0 ? 1.0 : s; });
}

Var tanh_op(const Var& x) {
    return elementwise(
        x, [](double v, double) { return std::tanh(v); }, 0.0,
        [](double, double y, double) { return 1.0 - y * y; });
}

Var add(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value())) throw ShapeError("add: shape mismatch");
    Tensor y(a.value().shape());
    const double* ap = a.value().data();
    const double* bp = b.value().data();
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = ap[i] + bp[i];
    return make_op(std::move(y), {a, b}, [a, b](Node& n) {
        if (a.node()->requires_grad) accumulate(*a.node(), n.grad);
        if (b.node()->requires_grad) accumulate(*b.node(), n.grad);
    });
}

Var mean_abs_diff(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value()))
        throw ShapeError("mean_abs_diff: shape mismatch " +
                         Tensor::shape_str(a.value().shape()) + " vs " +
                         Tensor::shape_str(b.value().shape()));
    const std::size_t n = a.value().numel();
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a.value()[i] - b.value()[i]);
    s /= static_cast<double>(n);
    return make_op(Tensor::scalar(s), {a, b}, [a, b, n](Node& node) {
        const double g = node.grad[0] / static_cast<double>(n);
        Tensor* da = a.node()->requires_grad ? &a.node()->ensure_grad() : nullptr;
        Tensor* db = b.node()->requires_grad ? &b.node()->ensure_grad() : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = a.value()[i] - b.value()[i];
            const double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            if (da) (*da)[i] += g * sg;
            if (db) (*db)[i] -= g * sg;
        }
    });
}

Var mean_squared_to_const(const Var& x, double target) {
    const std::size_t n = x.value().numel();
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x.value()[i] - target;
        s += d * d;
    }
    s /= static_cast<double>(n);
    return make_op(Tensor::scalar(s), {x}, [x, target, n](Node& node) {
        Tensor& dx = x.node()->ensure_grad();
        const double g = 2.0 * node.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) dx[i] += g * (x.value()[i] - target);
    });
}

Var mean_softplus(const Var& x, double sign) {
    const std::size_t n = x.value().numel();
    auto softplus = [](double v) {
        // log(1+e^v), stable for large |v|
        return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    };
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += softplus(sign * x.value()[i]);
    s /= static_cast<double>(n);
    return make_op(Tensor::scalar(s), {x}, [x, sign, n](Node& node) {
        Tensor& dx = x.node()->ensure_grad();
        const double g = node.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = sign * x.value()[i];
            const double sig = 1.0 / (1.0 + std::exp(-z));
            dx[i] += g * sign * sig;
        }
    });
}

Var gram(const Var& f) {
    const Tensor& ft = f.value();
    if (ft.ndim() != 3) throw ShapeError("gram expects a (C,H,W) feature map");
    const int c = ft.dim(0);
    const std::size_t hw = static_cast<std::size_t>(ft.dim(1)) * ft.dim(2);
    const double norm = static_cast<double>(c) * static_cast<double>(hw);
    Tensor g({c, c});
    ConstMatMap fm(ft.data(), c, static_cast<Eigen::Index>(hw));
    MatMap gm(g.data(), c, c);
    gm.noalias() = fm * fm.transpose() / norm;
    return make_op(std::move(g), {f}, [f, c, hw, norm](Node& n) {
        Tensor& df = f.node()->ensure_grad();
        ConstMatMap fm(f.value().data(), c, static_cast<Eigen::Index>(hw));
        ConstMatMap dgm(n.grad.data(), c, c);
        MatMap dfm(df.data(), c, static_cast<Eigen::Index>(hw));
        dfm.noalias() += (dgm + dgm.transpose()) * fm / norm;
    });
}

Var frobenius_diff(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value()))
        throw ShapeError("frobenius_diff: shape mismatch");
    const std::size_t n = a.value().numel();
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.value()[i] - b.value()[i];
        s += d * d;
    }
    const double norm = std::sqrt(s);
    return make_op(Tensor::scalar(norm), {a, b}, [a, b, n](Node& node) {
        const double nv = node.value[0];
        if (nv <= 0) return;  // gradient of the norm is undefined at 0
        const double g = node.grad[0] / nv;
        Tensor* da = a.node()->requires_grad ? &a.node()->ensure_grad() : nullptr;
        Tensor* db = b.node()->requires_grad ? &b.node()->ensure_grad() : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = a.value()[i] - b.value()[i];
            if (da) (*da)[i] += g * d;
            if (db) (*db)[i] -= g * d;
        }
    });
}

Var scaled_sum(const std::vector<std::pair<double, Var>>& terms) {
    double s = 0;
    std::vector<Var> inputs;
    inputs.reserve(terms.size());
    for (const auto& [w, v] : terms) {
        if (v.value().numel() != 1) throw ShapeError("scaled_sum expects scalars");
        s += w * v.scalar();
        inputs.push_back(v);
    }
    auto weights = std::make_shared<std::vector<double>>();
    for (const auto& [w, v] : terms) weights->push_back(w);
    return make_op(Tensor::scalar(s), inputs, [inputs, weights](Node& n) {
        for (std::size_t i = 0; i < inputs.size(); ++i)
            if (inputs[i].node()->requires_grad)
                inputs[i].node()->ensure_grad()[0] += n.grad[0] * (*weights)[i];
    });
}

}  // namespace usgan::ad
