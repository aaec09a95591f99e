#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"
#include "usgan/nets.hpp"

using namespace usgan;
using ad::Var;
using test::random_tensor;

namespace {

GeneratorConfig small_gen(int bf) {
    GeneratorConfig cfg;
    cfg.base_filters = bf;
    return cfg;
}

DiscriminatorConfig small_disc(int bf) {
    DiscriminatorConfig cfg;
    cfg.base_filters = bf;
    return cfg;
}

// independent conv-shape arithmetic for the declared discriminator schedule
int patch_extent_oracle(int e) {
    const int strides[5] = {2, 2, 2, 1, 1};
    for (int s : strides) e = (e + 2 * 1 - 4) / s + 1;
    return e;
}

}  // namespace

TEST_CASE("generator has 17 named blocks in the default configuration") {
    GeneratorNet g(small_gen(4));
    CHECK(g.block_count() == 17);
    CHECK(g.config().residual_blocks == 9);
}

TEST_CASE("generator preserves spatial dims and tanh range for 64 and 128") {
    GeneratorNet g(small_gen(4));
    g.init_parameters(11);
    Rng rng(12);
    for (int size : {64, 128}) {
        ad::NoGradGuard no_grad;
        auto out = g.forward(Var::leaf(random_tensor({1, size, size}, rng, 0.5)));
        CHECK(out.output.value().shape() == std::vector<int>{1, size, size});
        for (std::size_t i = 0; i < out.output.value().numel(); ++i) {
            CHECK(out.output.value()[i] >= -1.0);
            CHECK(out.output.value()[i] <= 1.0);
        }
    }
}

TEST_CASE("tap and content shapes follow the stride/channel arithmetic") {
    // 64x64, base 8 -> taps (8,64,64), (16,32,32), (32,16,16); content (8,64,64)
    GeneratorNet g(small_gen(8));
    g.init_parameters(21);
    Rng rng(22);
    ad::NoGradGuard no_grad;
    auto out = g.forward(Var::leaf(random_tensor({1, 64, 64}, rng, 0.5)), true, true);
    REQUIRE(out.taps.size() == 3);
    CHECK(out.taps[0].value().shape() == std::vector<int>{8, 64, 64});
    CHECK(out.taps[1].value().shape() == std::vector<int>{16, 32, 32});
    CHECK(out.taps[2].value().shape() == std::vector<int>{32, 16, 16});
    CHECK(out.content.value().shape() == std::vector<int>{8, 64, 64});

    auto taps_only = g.encoder_taps(Var::leaf(random_tensor({1, 64, 64}, rng, 0.5)));
    REQUIRE(taps_only.size() == 3);
    CHECK(taps_only[2].value().shape() == std::vector<int>{32, 16, 16});
}

TEST_CASE("non-divisible input raises a dimension error naming the divisor") {
    GeneratorNet g(small_gen(4));
    g.init_parameters(31);
    Rng rng(32);
    CHECK_THROWS_WITH_AS(g.forward(Var::leaf(random_tensor({1, 60, 64}, rng))),
                         doctest::Contains("divisible by 8"), ShapeError);
}

TEST_CASE("zeroed residual blocks collapse to the identity path") {
    GeneratorConfig with_res = small_gen(4);
    with_res.residual_blocks = 3;
    GeneratorConfig no_res = small_gen(4);
    no_res.residual_blocks = 0;
    GeneratorNet a(with_res), b(no_res);
    a.init_parameters(41);
    b.init_parameters(41);

    // zero every residual conv weight in a; biases/offsets are already zero
    for (auto& [name, v] : a.named_params())
        if (name.starts_with("res") && name.ends_with(".w")) {
            Var var = v;
            var.value().fill(0.0);
        }
    // copy encoder/decoder/head parameters so only the residual path differs
    for (auto& [name, vb] : b.named_params())
        for (auto& [na, va] : a.named_params())
            if (na == name) {
                Var dst = vb;
                dst.value() = va.value();
            }

    Rng rng(42);
    const Tensor x = random_tensor({1, 32, 32}, rng, 0.5);
    ad::NoGradGuard no_grad;
    const Tensor ya = a.forward(Var::leaf(x)).output.value();
    const Tensor yb = b.forward(Var::leaf(x)).output.value();
    REQUIRE(ya.numel() == yb.numel());
    for (std::size_t i = 0; i < ya.numel(); ++i)
        CHECK(ya[i] == doctest::Approx(yb[i]).epsilon(1e-12));
}

TEST_CASE("same seed reproduces parameters bitwise; different seeds differ") {
    GeneratorNet a(small_gen(4)), b(small_gen(4)), c(small_gen(4));
    a.init_parameters(7);
    b.init_parameters(7);
    c.init_parameters(8);
    bool all_equal = true, any_diff_c = false;
    auto pa = a.named_params(), pb = b.named_params(), pc = c.named_params();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::size_t j = 0; j < pa[i].second.value().numel(); ++j) {
            if (pa[i].second.value()[j] != pb[i].second.value()[j]) all_equal = false;
            if (pa[i].second.value()[j] != pc[i].second.value()[j]) any_diff_c = true;
        }
    }
    CHECK(all_equal);
    CHECK(any_diff_c);
}

TEST_CASE("init draws weights with std 0.02 and sets norm scale/offset") {
    GeneratorNet g(small_gen(16));
    g.init_parameters(55);
    for (auto& [name, v] : g.named_params()) {
        if (name == "enc3.conv.w") {  // 64*32*9 = 18432 weights
            double mean = 0;
            for (std::size_t i = 0; i < v.value().numel(); ++i) mean += v.value()[i];
            mean /= static_cast<double>(v.value().numel());
            double var = 0;
            for (std::size_t i = 0; i < v.value().numel(); ++i) {
                const double d = v.value()[i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(v.value().numel());
            CHECK(std::sqrt(var) == doctest::Approx(0.02).epsilon(0.1));
            CHECK(std::abs(std::sqrt(var) - 0.02) < 0.002);
        }
        if (name.ends_with(".gamma"))
            CHECK(v.value()[0] == doctest::Approx(1.0));
        if (name.ends_with(".beta"))
            CHECK(v.value()[0] == doctest::Approx(0.0));
    }
}

TEST_CASE("discriminator patch-map shapes match the stride arithmetic") {
    CHECK(DiscriminatorNet::patch_extent(400) == 48);
    CHECK(DiscriminatorNet::patch_extent(64) == 6);
    CHECK(patch_extent_oracle(400) == 48);
    CHECK(patch_extent_oracle(64) == 6);
    // doubling the input roughly doubles the map (fully convolutional)
    CHECK(patch_extent_oracle(128) == DiscriminatorNet::patch_extent(128));
    CHECK(DiscriminatorNet::patch_extent(128) >= 2 * 6);

    DiscriminatorNet d(small_disc(4));
    d.init_parameters(61);
    Rng rng(62);
    ad::NoGradGuard no_grad;
    for (int size : {64, 128}) {
        Var y = d.forward(Var::leaf(random_tensor({1, size, size}, rng, 0.5)));
        const int expect = patch_extent_oracle(size);
        CHECK(y.value().shape() == std::vector<int>{1, expect, expect});
    }
}

TEST_CASE("discriminator rejects inputs below the minimum extent") {
    DiscriminatorNet d(small_disc(4));
    d.init_parameters(71);
    Rng rng(72);
    CHECK_THROWS_AS(d.forward(Var::leaf(random_tensor({1, 12, 12}, rng))), ShapeError);
    CHECK_THROWS_AS(d.forward(Var::leaf(random_tensor({1, 16, 16}, rng))), ShapeError);
}

TEST_CASE("every parameter receives a finite gradient from a scalar loss") {
    GeneratorNet g(small_gen(4));
    g.init_parameters(81);
    Rng rng(82);

    auto out = g.forward(Var::leaf(random_tensor({1, 16, 16}, rng, 0.5)), true, true);
    std::vector<std::pair<double, Var>> terms{{1.0, ad::mean_squared_to_const(out.output, 0.1)}};
    for (auto& t : out.taps) terms.emplace_back(0.5, ad::mean_squared_to_const(t, 0.0));
    Var loss = ad::scaled_sum(terms);
    for (auto& [name, v] : g.named_params()) {
        Var var = v;
        var.zero_grad();
    }
    ad::backward(loss);
    for (auto& [name, v] : g.named_params()) {
        REQUIRE_MESSAGE(v.grad().numel() == v.value().numel(), name);
        bool any_nonzero = false;
        for (std::size_t i = 0; i < v.grad().numel(); ++i) {
            REQUIRE_MESSAGE(std::isfinite(v.grad()[i]), name);
            if (v.grad()[i] != 0.0) any_nonzero = true;
        }
        CHECK_MESSAGE(any_nonzero, name);
    }

    DiscriminatorNet d(small_disc(4));
    d.init_parameters(83);
    Var dy = d.forward(Var::leaf(random_tensor({1, 32, 32}, rng, 0.5)));
    Var dloss = ad::mean_squared_to_const(dy, 1.0);
    ad::backward(dloss);
    for (auto& [name, v] : d.named_params()) {
        REQUIRE_MESSAGE(v.grad().numel() == v.value().numel(), name);
        for (std::size_t i = 0; i < v.grad().numel(); ++i)
            REQUIRE_MESSAGE(std::isfinite(v.grad()[i]), name);
    }
}
