#include "usgan/nets.hpp"

#include <algorithm>

#include "usgan/rng.hpp"

namespace usgan {

using ad::Var;

Tensor image_to_net(const Image& img) {
    Tensor t({1, img.height, img.width});
    for (std::size_t i = 0; i < img.numel(); ++i) t[i] = 2.0 * img.pixels[i] - 1.0;
    return t;
}

Image net_to_image(const Tensor& t) {
    Image img(t.dim(1), t.dim(2));
    for (std::size_t i = 0; i < img.numel(); ++i)
        img.pixels[i] = std::clamp((t[i] + 1.0) * 0.5, 0.0, 1.0);
    return img;
}

namespace {

Var param(std::vector<int> shape) {
    return Var::leaf(Tensor::zeros(std::move(shape)), true);
}

void fill_gaussian(Var& v, Rng& rng, double std_dev) {
    for (std::size_t i = 0; i < v.value().numel(); ++i)
        v.value()[i] = std_dev * rng.gaussian();
}

Var norm_relu(const Var& x, const Var& gamma, const Var& beta) {
    return ad::relu(ad::instance_norm(x, gamma, beta));
}

}  // namespace

GeneratorNet::GeneratorNet(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
    const int nf = cfg_.base_filters;
    const int in = cfg_.in_channels;

    auto enc = [&](int cin, int cout, int k) {
        EncBlock b;
        b.conv.w = param({cout, cin, k, k});
        b.conv.b = param({cout});
        b.norm.gamma = param({cout});
        b.norm.beta = param({cout});
        return b;
    };
    encoder_.push_back(enc(in, nf, 7));
    encoder_.push_back(enc(nf, 2 * nf, 3));
    encoder_.push_back(enc(2 * nf, 4 * nf, 3));
    encoder_.push_back(enc(4 * nf, 4 * nf, 3));  // extra encoder block

    for (int i = 0; i < cfg_.residual_blocks; ++i) {
        ResBlock r;
        r.conv1.w = param({4 * nf, 4 * nf, 3, 3});
        r.conv1.b = param({4 * nf});
        r.norm1.gamma = param({4 * nf});
        r.norm1.beta = param({4 * nf});
        r.conv2.w = param({4 * nf, 4 * nf, 3, 3});
        r.conv2.b = param({4 * nf});
        r.norm2.gamma = param({4 * nf});
        r.norm2.beta = param({4 * nf});
        residual_.push_back(std::move(r));
    }

    auto dec = [&](int cin, int cout) {
        EncBlock b;
        b.conv.w = param({cin, cout, 3, 3});  // transpose layout (Cin,Cout,k,k)
        b.conv.b = param({cout});
        b.norm.gamma = param({cout});
        b.norm.beta = param({cout});
        return b;
    };
    decoder_.push_back(dec(4 * nf, 4 * nf));  // extra decoder block
    decoder_.push_back(dec(4 * nf, 2 * nf));
    decoder_.push_back(dec(2 * nf, nf));
    head_.w = param({in, nf, 7, 7});
    head_.b = param({in});
}

void GeneratorNet::init_parameters(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& [name, v] : named_params()) {
        Var var = v;
        if (name.ends_with(".w"))
            fill_gaussian(var, rng, 0.02);
        else if (name.ends_with(".gamma"))
            var.value().fill(1.0);
        else
            var.value().fill(0.0);  // biases and offsets
    }
}

GeneratorNet GeneratorNet::frozen_clone() const {
    GeneratorNet clone(cfg_);
    const auto src = named_params();
    auto dst = clone.named_params();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i].second.value() = src[i].second.value();
        dst[i].second.node()->requires_grad = false;
    }
    return clone;
}

Var GeneratorNet::run_encoder_block(int index, const Var& x) const {
    const EncBlock& b = encoder_[static_cast<std::size_t>(index)];
    if (index == 0) {
        Var y = ad::conv2d(ad::pad_reflect(x, 3), b.conv.w, b.conv.b, 1, 0);
        return norm_relu(y, b.norm.gamma, b.norm.beta);
    }
    Var y = ad::conv2d(x, b.conv.w, b.conv.b, 2, 1);
    return norm_relu(y, b.norm.gamma, b.norm.beta);
}

std::vector<Var> GeneratorNet::encoder_taps(const ad::Var& x) const {
    const int deepest = *std::max_element(cfg_.tap_layers.begin(), cfg_.tap_layers.end());
    std::vector<Var> taps;
    Var h = x;
    for (int i = 0; i < deepest; ++i) {
        h = run_encoder_block(i, h);
        if (std::find(cfg_.tap_layers.begin(), cfg_.tap_layers.end(), i + 1) !=
            cfg_.tap_layers.end())
            taps.push_back(h);
    }
    return taps;
}

GeneratorNet::ForwardResult GeneratorNet::forward(const ad::Var& x, bool want_taps,
                                                  bool want_content) const {
    const Tensor& xt = x.value();
    if (xt.ndim() != 3 || xt.dim(0) != cfg_.in_channels)
        throw ShapeError("generator expects a (" + std::to_string(cfg_.in_channels) +
                         ",H,W) input, got " + Tensor::shape_str(xt.shape()));
    if (xt.dim(1) % 8 != 0 || xt.dim(2) % 8 != 0)
        throw ShapeError("generator input dimensions must be divisible by 8, got " +
                         std::to_string(xt.dim(1)) + "x" + std::to_string(xt.dim(2)));

    ForwardResult res;
    Var h = x;
    for (int i = 0; i < 4; ++i) {
        h = run_encoder_block(i, h);
        if (want_taps && std::find(cfg_.tap_layers.begin(), cfg_.tap_layers.end(),
                                   i + 1) != cfg_.tap_layers.end())
            res.taps.push_back(h);
    }
    for (const auto& r : residual_) {
        Var y = ad::conv2d(ad::pad_reflect(h, 1), r.conv1.w, r.conv1.b, 1, 0);
        y = norm_relu(y, r.norm1.gamma, r.norm1.beta);
        y = ad::conv2d(ad::pad_reflect(y, 1), r.conv2.w, r.conv2.b, 1, 0);
        y = ad::instance_norm(y, r.norm2.gamma, r.norm2.beta);
        h = ad::add(h, y);
    }
    for (const auto& d : decoder_) {
        h = ad::conv_transpose2d(h, d.conv.w, d.conv.b, 2, 1, 1);
        h = norm_relu(h, d.norm.gamma, d.norm.beta);
    }
    if (want_content) res.content = h;
    h = ad::conv2d(ad::pad_reflect(h, 3), head_.w, head_.b, 1, 0);
    res.output = ad::tanh_op(h);
    return res;
}

std::vector<std::pair<std::string, Var>> GeneratorNet::named_params() const {
    std::vector<std::pair<std::string, Var>> out;
    auto add_enc = [&](const std::string& prefix, const EncBlock& b) {
        out.emplace_back(prefix + ".conv.w", b.conv.w);
        out.emplace_back(prefix + ".conv.b", b.conv.b);
        out.emplace_back(prefix + ".norm.gamma", b.norm.gamma);
        out.emplace_back(prefix + ".norm.beta", b.norm.beta);
    };
    for (std::size_t i = 0; i < encoder_.size(); ++i)
        add_enc("enc" + std::to_string(i + 1), encoder_[i]);
    for (std::size_t i = 0; i < residual_.size(); ++i) {
        const std::string p = "res" + std::to_string(i + 1);
        const ResBlock& r = residual_[i];
        out.emplace_back(p + ".conv1.w", r.conv1.w);
        out.emplace_back(p + ".conv1.b", r.conv1.b);
        out.emplace_back(p + ".norm1.gamma", r.norm1.gamma);
        out.emplace_back(p + ".norm1.beta", r.norm1.beta);
        out.emplace_back(p + ".conv2.w", r.conv2.w);
        out.emplace_back(p + ".conv2.b", r.conv2.b);
        out.emplace_back(p + ".norm2.gamma", r.norm2.gamma);
        out.emplace_back(p + ".norm2.beta", r.norm2.beta);
    }
    for (std::size_t i = 0; i < decoder_.size(); ++i)
        add_enc("dec" + std::to_string(i + 1), decoder_[i]);
    out.emplace_back("head.conv.w", head_.w);
    out.emplace_back("head.conv.b", head_.b);
    return out;
}

// --- discriminator ------------------------------------------------------

DiscriminatorNet::DiscriminatorNet(DiscriminatorConfig cfg) : cfg_(std::move(cfg)) {
    const int nd = cfg_.base_filters;
    auto layer = [&](int cin, int cout, int stride, bool norm, bool act) {
        Layer l;
        l.w = param({cout, cin, 4, 4});
        l.b = param({cout});
        if (norm) {
            l.gamma = param({cout});
            l.beta = param({cout});
        }
        l.stride = stride;
        l.norm = norm;
        l.activation = act;
        return l;
    };
    layers_.push_back(layer(cfg_.in_channels, nd, 2, false, true));
    layers_.push_back(layer(nd, 2 * nd, 2, true, true));
    layers_.push_back(layer(2 * nd, 4 * nd, 2, true, true));
    layers_.push_back(layer(4 * nd, 8 * nd, 1, true, true));
    layers_.push_back(layer(8 * nd, 1, 1, false, false));
}

int DiscriminatorNet::patch_extent(int input_extent) {
    int e = input_extent;
    for (int stride : {2, 2, 2, 1, 1}) e = (e + 2 * 1 - 4) / stride + 1;
    return e;
}

ad::Var DiscriminatorNet::forward(const ad::Var& x) const {
    const Tensor& xt = x.value();
    if (xt.ndim() != 3 || xt.dim(0) != cfg_.in_channels)
        throw ShapeError("discriminator expects a (" +
                         std::to_string(cfg_.in_channels) + ",H,W) input, got " +
                         Tensor::shape_str(xt.shape()));
    if (xt.dim(1) < 16 || xt.dim(2) < 16 || patch_extent(xt.dim(1)) < 1 ||
        patch_extent(xt.dim(2)) < 1)
        throw ShapeError("discriminator input " + std::to_string(xt.dim(1)) + "x" +
                         std::to_string(xt.dim(2)) +
                         " too small for the patch stack (needs >= 20x20)");
    Var h = x;
    for (const auto& l : layers_) {
        h = ad::conv2d(h, l.w, l.b, l.stride, 1);
        if (l.norm) h = ad::instance_norm(h, l.gamma, l.beta);
        if (l.activation) h = ad::leaky_relu(h, 0.2);
    }
    return h;
}

void DiscriminatorNet::init_parameters(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& [name, v] : named_params()) {
        Var var = v;
        if (name.ends_with(".w"))
            fill_gaussian(var, rng, 0.02);
        else if (name.ends_with(".gamma"))
            var.value().fill(1.0);
        else
            var.value().fill(0.0);
    }
}

std::vector<std::pair<std::string, Var>> DiscriminatorNet::named_params() const {
    std::vector<std::pair<std::string, Var>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::string p = "l" + std::to_string(i + 1);
        out.emplace_back(p + ".w", layers_[i].w);
        out.emplace_back(p + ".b", layers_[i].b);
        if (layers_[i].norm) {
            out.emplace_back(p + ".gamma", layers_[i].gamma);
            out.emplace_back(p + ".beta", layers_[i].beta);
        }
    }
    return out;
}

}  // namespace usgan
