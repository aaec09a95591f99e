#ifndef USGAN_NETS_HPP
#define USGAN_NETS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "usgan/autograd.hpp"
#include "usgan/image.hpp"

namespace usgan {

// [0,1] image <-> (1,H,W) network tensor in [-1,1].
Tensor image_to_net(const Image& img);
Image net_to_image(const Tensor& t);

struct GeneratorConfig {
    int in_channels = 1;
    int base_filters = 64;
    int residual_blocks = 9;
    std::vector<int> tap_layers = {1, 2, 3};  // 1-based encoder block indices

    bool operator==(const GeneratorConfig&) const = default;
};

// Encoder-transformer-decoder generator, 17 named blocks with the default
// residual count: 4 encoder (7x7 stem, two stride-2 downsamplers, one extra
// stride-2 conv), 9 residual, 4 decoder (one extra stride-2 transpose conv,
// two stride-2 transpose upsamplers, 7x7 tanh head). Fully convolutional;
// accepts any H,W divisible by 8.
class GeneratorNet {
public:
    explicit GeneratorNet(GeneratorConfig cfg);

    struct ForwardResult {
        ad::Var output;              // (in_channels,H,W), tanh range
        std::vector<ad::Var> taps;   // post-activation encoder taps
        ad::Var content;             // post-activation block before the head
    };

    ForwardResult forward(const ad::Var& x, bool want_taps = false,
                          bool want_content = false) const;

    // Truncated pass producing only the configured encoder taps.
    std::vector<ad::Var> encoder_taps(const ad::Var& x) const;

    void init_parameters(std::uint64_t seed);

    // Copy with identical weights marked constant. Feature-extraction passes
    // (content tap, Gram taps) run through such a copy so their gradients
    // reach the generator only through the translated image, never by
    // re-shaping the extractor itself.
    GeneratorNet frozen_clone() const;

    const GeneratorConfig& config() const { return cfg_; }
    int block_count() const { return 4 + cfg_.residual_blocks + 4; }
    std::vector<std::pair<std::string, ad::Var>> named_params() const;

private:
    struct Conv {
        ad::Var w, b;
    };
    struct Norm {
        ad::Var gamma, beta;
    };
    struct EncBlock {
        Conv conv;
        Norm norm;
    };
    struct ResBlock {
        Conv conv1, conv2;
        Norm norm1, norm2;
    };

    ad::Var run_encoder_block(int index, const ad::Var& x) const;

    GeneratorConfig cfg_;
    std::vector<EncBlock> encoder_;   // 4
    std::vector<ResBlock> residual_;  // cfg.residual_blocks
    std::vector<EncBlock> decoder_;   // 3 transpose blocks
    Conv head_;                       // final 7x7
};

enum class DiscriminatorRole { kDomainRealism, kContent };

struct DiscriminatorConfig {
    int in_channels = 1;
    int base_filters = 64;  // schedule is (1x, 2x, 4x, 8x)
    DiscriminatorRole role = DiscriminatorRole::kDomainRealism;

    bool operator==(const DiscriminatorConfig&) const = default;
};

// Patch discriminator: 4x4 stride-2 convs (no norm on the first), strides
// (2,2,2,1) and a stride-1 1-channel head; emits a raw score map.
class DiscriminatorNet {
public:
    explicit DiscriminatorNet(DiscriminatorConfig cfg);

    ad::Var forward(const ad::Var& x) const;

    // Patch-map H or W for a given input extent (shared stride arithmetic).
    static int patch_extent(int input_extent);

    void init_parameters(std::uint64_t seed);

    const DiscriminatorConfig& config() const { return cfg_; }
    std::vector<std::pair<std::string, ad::Var>> named_params() const;

private:
    struct Layer {
        ad::Var w, b;
        ad::Var gamma, beta;  // undefined on layers without normalization
        int stride = 2;
        bool norm = true;
        bool activation = true;
    };
    DiscriminatorConfig cfg_;
    std::vector<Layer> layers_;
};

}  // namespace usgan

#endif
