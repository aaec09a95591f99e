#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"
#include "usgan/autograd.hpp"

using namespace usgan;
using ad::Var;
using test::grad_check;
using test::random_tensor;

TEST_CASE("conv2d matches a direct convolution loop") {
    Rng rng(1);
    Tensor x = random_tensor({2, 5, 6}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    ad::NoGradGuard no_grad;
    Var y = ad::conv2d(Var::leaf(x), Var::leaf(w), Var::leaf(b), 2, 1);

    const int h_out = (5 + 2 - 3) / 2 + 1, w_out = (6 + 2 - 3) / 2 + 1;
    REQUIRE(y.value().shape() == std::vector<int>{3, h_out, w_out});
    for (int co = 0; co < 3; ++co)
        for (int ho = 0; ho < h_out; ++ho)
            for (int wo = 0; wo < w_out; ++wo) {
                double acc = b[co];
                for (int ci = 0; ci < 2; ++ci)
                    for (int kh = 0; kh < 3; ++kh)
                        for (int kw = 0; kw < 3; ++kw) {
                            const int hi = ho * 2 - 1 + kh, wi = wo * 2 - 1 + kw;
                            if (hi < 0 || hi >= 5 || wi < 0 || wi >= 6) continue;
                            acc += w[((static_cast<std::size_t>(co) * 2 + ci) * 3 + kh) * 3 + kw] *
                                   x.at(ci, hi, wi);
                        }
                CHECK(y.value().at(co, ho, wo) == doctest::Approx(acc).epsilon(1e-12));
            }
}

TEST_CASE("conv_transpose2d doubles spatial dims with stride 2 / pad 1 / outpad 1") {
    Rng rng(2);
    ad::NoGradGuard no_grad;
    Var y = ad::conv_transpose2d(Var::leaf(random_tensor({4, 6, 7}, rng)),
                                 Var::leaf(random_tensor({4, 2, 3, 3}, rng)),
                                 Var::leaf(random_tensor({2}, rng)), 2, 1, 1);
    CHECK(y.value().shape() == std::vector<int>{2, 12, 14});
}

TEST_CASE("gradient check: conv2d") {
    Rng rng(3);
    std::vector<Var> leaves = {Var::leaf(random_tensor({2, 6, 6}, rng), true),
                               Var::leaf(random_tensor({3, 2, 3, 3}, rng), true),
                               Var::leaf(random_tensor({3}, rng), true)};
    auto build = [](const std::vector<Var>& l) {
        return ad::mean_squared_to_const(ad::conv2d(l[0], l[1], l[2], 2, 1), 0.3);
    };
    auto res = grad_check(leaves, build);
    CHECK(res.passed == res.checked);
}

TEST_CASE("gradient check: conv_transpose2d") {
    Rng rng(4);
    std::vector<Var> leaves = {Var::leaf(random_tensor({3, 4, 4}, rng), true),
                               Var::leaf(random_tensor({3, 2, 3, 3}, rng), true),
                               Var::leaf(random_tensor({2}, rng), true)};
    auto build = [](const std::vector<Var>& l) {
        return ad::mean_squared_to_const(ad::conv_transpose2d(l[0], l[1], l[2], 2, 1, 1), -0.1);
    };
    auto res = grad_check(leaves, build);
    CHECK(res.passed == res.checked);
}

TEST_CASE("gradient check: instance_norm") {
    Rng rng(5);
    std::vector<Var> leaves = {Var::leaf(random_tensor({3, 5, 5}, rng), true),
                               Var::leaf(random_tensor({3}, rng), true),
                               Var::leaf(random_tensor({3}, rng), true)};
    auto build = [](const std::vector<Var>& l) {
        return ad::mean_squared_to_const(ad::instance_norm(l[0], l[1], l[2]), 0.25);
    };
    auto res = grad_check(leaves, build, 1e-5, 2e-3);
    CHECK(static_cast<double>(res.passed) / res.checked >= 0.99);
}

TEST_CASE("gradient check: activations, pad, add") {
    Rng rng(6);
    std::vector<Var> leaves = {Var::leaf(random_tensor({2, 4, 4}, rng), true),
                               Var::leaf(random_tensor({2, 4, 4}, rng), true)};
    auto build = [](const std::vector<Var>& l) {
        Var a = ad::pad_reflect(ad::tanh_op(l[0]), 1);
        Var b = ad::pad_reflect(ad::leaky_relu(l[1], 0.2), 1);
        return ad::mean_abs_diff(a, b);
    };
    auto res = grad_check(leaves, build);
    CHECK(static_cast<double>(res.passed) / res.checked >= 0.99);
}

TEST_CASE("gradient check: gram + frobenius") {
    Rng rng(7);
    std::vector<Var> leaves = {Var::leaf(random_tensor({3, 4, 4}, rng), true),
                               Var::leaf(random_tensor({3, 4, 4}, rng), true)};
    auto build = [](const std::vector<Var>& l) {
        return ad::frobenius_diff(ad::gram(l[0]), ad::gram(l[1]));
    };
    auto res = grad_check(leaves, build);
    CHECK(res.passed == res.checked);
}

TEST_CASE("gradient check: softplus mean (both signs)") {
    Rng rng(8);
    std::vector<Var> leaves = {Var::leaf(random_tensor({1, 3, 3}, rng), true)};
    for (double sign : {+1.0, -1.0}) {
        auto build = [sign](const std::vector<Var>& l) {
            return ad::mean_softplus(l[0], sign);
        };
        auto res = grad_check(leaves, build);
        CHECK(res.passed == res.checked);
    }
}

TEST_CASE("backward accumulates through shared subgraphs") {
    // f(x) = mean((x+x) - 0)^2-ish: reuse the same node twice
    Tensor t({2, 2});
    t[0] = 1.0; t[1] = -2.0; t[2] = 0.5; t[3] = 3.0;
    Var x = Var::leaf(t, true);
    Var s = ad::add(x, x);
    Var loss = ad::mean_squared_to_const(s, 0.0);
    ad::backward(loss);
    // d/dx mean((2x)^2) = 8x/n
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(x.grad()[i] == doctest::Approx(8.0 * t[i] / 4.0));
}

TEST_CASE("NoGradGuard produces constant nodes") {
    Rng rng(9);
    Var x = Var::leaf(random_tensor({1, 4, 4}, rng), true);
    ad::Var y;
    {
        ad::NoGradGuard guard;
        y = ad::tanh_op(x);
    }
    CHECK_FALSE(y.requires_grad());
    // graph built under the guard cannot leak gradients
    Var z = ad::mean_squared_to_const(y, 0.0);
    CHECK_FALSE(z.requires_grad());
}

TEST_CASE("reflection padding mirrors without repeating the edge") {
    Tensor t({1, 3, 3});
    for (int i = 0; i < 9; ++i) t[static_cast<std::size_t>(i)] = i;
    ad::NoGradGuard no_grad;
    Var p = ad::pad_reflect(Var::leaf(t), 1);
    CHECK(p.value().shape() == std::vector<int>{1, 5, 5});
    CHECK(p.value().at(0, 0, 0) == doctest::Approx(4.0));  // (1,1) mirrored
    CHECK(p.value().at(0, 0, 1) == doctest::Approx(3.0));  // row -1 -> row 1
    CHECK(p.value().at(0, 1, 0) == doctest::Approx(1.0));  // col -1 -> col 1
    CHECK(p.value().at(0, 4, 4) == doctest::Approx(4.0));
}
