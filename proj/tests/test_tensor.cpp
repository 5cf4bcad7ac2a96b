#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ntnpred/errors.hpp"
#include "ntnpred/layers.hpp"
#include "ntnpred/optim.hpp"
#include "ntnpred/predictor.hpp"
#include "ntnpred/reference_kernels.hpp"

using namespace ntnpred;
using test::check_gradient;
using test::random_tensor;

namespace {

LayerSpec spec_named(const std::string& name) {
    for (const auto& s : default_architecture())
        if (s.name == name) return s;
    throw std::runtime_error("no layer " + name);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape() == b.shape());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Layer input shapes (batch of one) and input channel counts of the default stack.
struct ConvCase {
    const char* name;
    Shape input;
    std::size_t c_in;
};
const ConvCase kConvCases[] = {
    {"Conv2D_1", {48, 14, 2}, 2},
    {"Conv2D_S1", {48, 14, 2}, 2},
    {"Conv2D_S2", {4, 14, 8}, 8},
    {"Conv2D_2", {48, 14, 2}, 2},
};
const ConvCase kTconvCases[] = {
    {"TConv2D_1", {1, 14, 16}, 16},
    {"TConv2D_2", {4, 14, 8}, 8},
};

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("conv2d shape examples") {
    const auto c1 = spec_named("Conv2D_1");
    CHECK(conv2d_output_shape({48, 14, 2}, c1) == Shape{4, 14, 8});
    const Tensor w = random_tensor({8, 2, 6, 3}, 1), b({8});
    const Tensor y = conv2d_forward(Tensor({48, 14, 2}), c1, w, b);
    CHECK(y.shape() == Shape{4, 14, 8});
    for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("conv2d identity kernel selects one channel") {
    LayerSpec s{"id", LayerKind::Conv2D, 1, {1, 1}, {1, 1}, {0, 0, 0, 0}, Activation::None};
    const Tensor x = random_tensor({4, 14, 8}, 2);
    Tensor w({1, 8, 1, 1});
    w[5] = 1.0;
    const Tensor y = conv2d_forward(x, s, w, Tensor({1}));
    REQUIRE(y.shape() == Shape{4, 14, 1});
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == x[i * 8 + 5]);
}

TEST_CASE("conv2d rejects bad shapes") {
    const auto c1 = spec_named("Conv2D_1");
    CHECK_THROWS_AS(conv2d_forward(Tensor({48, 14, 2}), c1, Tensor({8, 3, 6, 3}), Tensor({8})), ConfigError);
    CHECK_THROWS_AS(conv2d_output_shape({4, 14, 2}, c1), ConfigError);
}

TEST_CASE("tconv2d shape examples and zero input") {
    const auto t1 = spec_named("TConv2D_1");
    const auto t2 = spec_named("TConv2D_2");
    CHECK(tconv2d_output_shape({1, 14, 16}, t1) == Shape{4, 14, 8});
    CHECK(tconv2d_output_shape({4, 14, 8}, t2) == Shape{48, 14, 2});
    Tensor bias({2});
    bias[0] = 0.5;
    bias[1] = -1.5;
    const Tensor y = tconv2d_forward(Tensor({4, 14, 8}), t2, random_tensor({8, 2, 12, 3}, 3), bias);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == bias[i % 2]);
    LayerSpec big = t1;
    big.pad_or_crop = {2, 2, 0, 0};
    CHECK_THROWS_AS(tconv2d_output_shape({1, 14, 16}, big), ConfigError);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
    const auto c1 = spec_named("Conv2D_1");
    const Tensor x = random_tensor({48, 14, 2}, 4);
    const auto g = conv2d_backward(Tensor({4, 14, 8}), x, c1, random_tensor({8, 2, 6, 3}, 5));
    for (double v : g.input.values()) CHECK(v == 0.0);
    for (const auto& p : g.params)
        for (double v : p.values()) CHECK(v == 0.0);
    CHECK_THROWS_AS(conv2d_backward(Tensor({4, 14, 8}), Tensor(), c1, random_tensor({8, 2, 6, 3}, 5)),
                    InternalError);
}

TEST_CASE("conv2d gradients match finite differences on default-architecture shapes") {
    for (const auto& cc : kConvCases) {
        CAPTURE(cc.name);
        const auto s = spec_named(cc.name);
        Tensor x = random_tensor(cc.input, 10);
        Tensor w = random_tensor({s.filters_or_units, cc.c_in, s.kernel.freq, s.kernel.time}, 11, 0.3);
        Tensor b = random_tensor({s.filters_or_units}, 12);
        const Tensor r = random_tensor(conv2d_output_shape(cc.input, s), 13);
        auto loss = [&] { return dot(conv2d_forward(x, s, w, b), r); };
        const auto g = conv2d_backward(r, x, s, w);
        for (auto* p : {&x, &w, &b}) {
            const auto& an = p == &x ? g.input.values() : p == &w ? g.params[0].values() : g.params[1].values();
            const auto res = check_gradient(*p, an, loss);
            CHECK(res.failed == 0);
            CHECK(res.worst_rel < 1e-4);
        }
    }
}

TEST_CASE("conv2d with LeakyReLU activation differentiates through the activation") {
    auto s = spec_named("Conv2D_S2");
    s.activation = Activation::LeakyReLU;
    Tensor x = random_tensor({4, 14, 8}, 20);
    Tensor w = random_tensor({8, 8, 1, 3}, 21, 0.3);
    const Tensor b = random_tensor({8}, 22);
    const Tensor r = random_tensor({4, 14, 8}, 23);
    auto loss = [&] { return dot(conv2d_forward(x, s, w, b), r); };
    const Tensor y = conv2d_forward(x, s, w, b);
    const auto g = conv2d_backward(r, x, s, w, &y);
    CHECK(check_gradient(x, g.input.values(), loss).failed == 0);
    CHECK(check_gradient(w, g.params[0].values(), loss).failed == 0);
    CHECK_THROWS_AS(conv2d_backward(r, x, s, w), InternalError);
}

TEST_CASE("tconv2d gradients match finite differences on default-architecture shapes") {
    for (const auto& tc : kTconvCases) {
        CAPTURE(tc.name);
        const auto s = spec_named(tc.name);
        Tensor x = random_tensor(tc.input, 30);
        Tensor w = random_tensor({tc.c_in, s.filters_or_units, s.kernel.freq, s.kernel.time}, 31, 0.3);
        Tensor b = random_tensor({s.filters_or_units}, 32);
        const Tensor r = random_tensor(tconv2d_output_shape(tc.input, s), 33);
        auto loss = [&] { return dot(tconv2d_forward(x, s, w, b), r); };
        const auto g = tconv2d_backward(r, x, s, w);
        CHECK(check_gradient(x, g.input.values(), loss).failed == 0);
        CHECK(check_gradient(w, g.params[0].values(), loss).failed == 0);
        CHECK(check_gradient(b, g.params[1].values(), loss).failed == 0);
    }
}

TEST_CASE("lstm examples") {
    CHECK(lstm_param_count(32, 16) == 3136);
    const Tensor y = lstm_forward(Tensor({14, 32}), 16, Tensor({64, 32}), Tensor({64, 16}), Tensor({64}));
    CHECK(y.shape() == Shape{14, 16});
    for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("lstm gradients match finite differences") {
    Tensor x = random_tensor({2, 14, 32}, 40);
    Tensor wi = random_tensor({64, 32}, 41, 0.25);
    Tensor wr = random_tensor({64, 16}, 42, 0.25);
    Tensor b = random_tensor({64}, 43, 0.5);
    const Tensor r = random_tensor({2, 14, 16}, 44);
    auto loss = [&] { return dot(lstm_forward(x, 16, wi, wr, b), r); };
    LstmCache cache;
    lstm_forward(x, 16, wi, wr, b, &cache);
    const auto g = lstm_backward(r, cache, wi, wr);
    CHECK(check_gradient(x, g.input.values(), loss).failed == 0);
    CHECK(check_gradient(wi, g.params[0].values(), loss).failed == 0);
    CHECK(check_gradient(wr, g.params[1].values(), loss).failed == 0);
    CHECK(check_gradient(b, g.params[2].values(), loss).failed == 0);
}

TEST_CASE("batchnorm examples") {
    SUBCASE("standardized batch is a fixed point") {
        Tensor x({4, 2});
        const double col[4] = {-1.5, -0.5, 0.5, 1.5};
        const double sd = std::sqrt(1.25);
        for (std::size_t i = 0; i < 4; ++i) x[i * 2] = x[i * 2 + 1] = col[i] / sd;
        Tensor rm({2}), rv({2}, 1.0);
        const Tensor y = batchnorm_forward(x, Tensor({2}, 1.0), Tensor({2}), rm, rv, BnMode::Train);
        CHECK(max_abs_diff(x, y) < 1e-5);
    }
    SUBCASE("constant channel maps to the shift") {
        Tensor x({5, 1}, 3.0);
        Tensor rm({1}), rv({1}, 1.0);
        const Tensor y = batchnorm_forward(x, Tensor({1}, 2.0), Tensor({1}, 0.25), rm, rv, BnMode::Train);
        for (double v : y.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("batchnorm gradients match finite differences in both modes") {
    for (BnMode mode : {BnMode::Train, BnMode::Infer}) {
        CAPTURE(static_cast<int>(mode));
        Tensor x = random_tensor({3, 4, 14, 8}, 50);
        Tensor gamma = random_tensor({8}, 51);
        Tensor beta = random_tensor({8}, 52);
        Tensor rm = random_tensor({8}, 53, 0.1), rv({8}, 1.3);
        const Tensor r = random_tensor(x.shape(), 54);
        auto loss = [&] {
            Tensor m = rm, v = rv;
            return dot(batchnorm_forward(x, gamma, beta, m, v, mode), r);
        };
        Tensor m = rm, v = rv;
        BnCache cache;
        batchnorm_forward(x, gamma, beta, m, v, mode, 0.1, &cache);
        const auto g = batchnorm_backward(r, cache, gamma);
        CHECK(check_gradient(x, g.input.values(), loss).failed == 0);
        CHECK(check_gradient(gamma, g.params[0].values(), loss).failed == 0);
        CHECK(check_gradient(beta, g.params[1].values(), loss).failed == 0);
    }
}

TEST_CASE("leaky relu, flatten, flip") {
    CHECK(leaky_relu(2.0, 0.01) == 2.0);
    CHECK(leaky_relu(-2.0, 0.01) == doctest::Approx(-0.02));

    const Tensor x = random_tensor({4, 14, 8}, 60);
    const Tensor f = frequency_flatten(x);
    CHECK(f.shape() == Shape{1, 14, 32});
    CHECK(frequency_flatten(Tensor({1, 1, 1})).shape() == Shape{1, 1, 1});
    CHECK(max_abs_diff(frequency_unflatten(f, 4).reshaped({4, 14, 8}), x) == 0.0);

    Tensor seq({1, 3, 1});
    seq[0] = 1;
    seq[1] = 2;
    seq[2] = 3;
    const Tensor r = time_flip(seq);
    CHECK(r[0] == 3);
    CHECK(r[1] == 2);
    CHECK(r[2] == 1);
    CHECK(max_abs_diff(time_flip(time_flip(x)), x) == 0.0);
    Tensor constant({2, 5, 3}, 7.0);
    CHECK(max_abs_diff(time_flip(constant), constant) == 0.0);

    Tensor lx = random_tensor({2, 3, 4, 5}, 61);
    const Tensor lr = random_tensor(lx.shape(), 62);
    auto loss = [&] { return dot(leaky_relu(lx), lr); };
    CHECK(check_gradient(lx, leaky_relu_backward(lr, lx).values(), loss).failed == 0);
}

TEST_CASE("mse loss examples") {
    const Tensor a = random_tensor({3, 4}, 70);
    CHECK(mse_loss(a, a) == 0.0);
    CHECK(mse_loss(Tensor({2}, 1.0), Tensor({2})) == 1.0);
    CHECK_THROWS_AS(mse_loss(Tensor({2}), Tensor({3})), UsageError);
    Tensor p = random_tensor({5, 2}, 71);
    const Tensor t = random_tensor({5, 2}, 72);
    auto loss = [&] { return mse_loss(p, t); };
    CHECK(check_gradient(p, mse_loss_grad(p, t).values(), loss).failed == 0);
}

TEST_CASE("conv2d and tconv2d are adjoint") {
    for (const char* name : {"TConv2D_1", "TConv2D_2"}) {
        CAPTURE(name);
        auto t = spec_named(name);
        LayerSpec c = t;
        c.kind = LayerKind::Conv2D;
        const std::size_t c_small = name == std::string("TConv2D_1") ? 16 : 8;
        const Shape big = name == std::string("TConv2D_1") ? Shape{4, 14, 8} : Shape{48, 14, 2};
        const Shape small = conv2d_output_shape(big, LayerSpec{c.name, c.kind, c_small, c.kernel, c.stride,
                                                               c.pad_or_crop, Activation::None});
        c.filters_or_units = c_small;
        // Shared kernel: conv (C_out=c_small, C_in=big C) and tconv (C_in=c_small, C_out=big C) agree in memory.
        const Tensor w = random_tensor({c_small, big[2], t.kernel.freq, t.kernel.time}, 80);
        const Tensor x = random_tensor(big, 81);
        const Tensor y = random_tensor(small, 82);
        const double lhs = dot(conv2d_forward(x, c, w, Tensor({c_small})), y);
        const double rhs = dot(x, tconv2d_forward(y, t, w, Tensor({big[2]})));
        CHECK(std::abs(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("OpenMP kernels agree with the serial reference") {
    for (const auto& cc : kConvCases) {
        CAPTURE(cc.name);
        const auto s = spec_named(cc.name);
        Shape batched{3};
        batched.insert(batched.end(), cc.input.begin(), cc.input.end());
        const Tensor x = random_tensor(batched, 90);
        const Tensor w = random_tensor({s.filters_or_units, cc.c_in, s.kernel.freq, s.kernel.time}, 91);
        const Tensor b = random_tensor({s.filters_or_units}, 92);
        const Tensor y = conv2d_forward(x, s, w, b);
        CHECK(max_abs_diff(y, reference::conv2d_forward(x, s, w, b)) < 1e-12);
        const Tensor r = random_tensor(y.shape(), 93);
        const auto g = conv2d_backward(r, x, s, w);
        const auto gr = reference::conv2d_backward(r, x, s, w);
        CHECK(max_abs_diff(g.input, gr.input) < 1e-12);
        CHECK(max_abs_diff(g.params[0], gr.params[0]) < 1e-10);
        CHECK(max_abs_diff(g.params[1], gr.params[1]) < 1e-10);
    }
    for (const auto& tc : kTconvCases) {
        CAPTURE(tc.name);
        const auto s = spec_named(tc.name);
        Shape batched{3};
        batched.insert(batched.end(), tc.input.begin(), tc.input.end());
        const Tensor x = random_tensor(batched, 94);
        const Tensor w = random_tensor({tc.c_in, s.filters_or_units, s.kernel.freq, s.kernel.time}, 95);
        const Tensor b = random_tensor({s.filters_or_units}, 96);
        const Tensor y = tconv2d_forward(x, s, w, b);
        CHECK(max_abs_diff(y, reference::tconv2d_forward(x, s, w, b)) < 1e-12);
        const Tensor r = random_tensor(y.shape(), 97);
        const auto g = tconv2d_backward(r, x, s, w);
        const auto gr = reference::tconv2d_backward(r, x, s, w);
        CHECK(max_abs_diff(g.input, gr.input) < 1e-12);
        CHECK(max_abs_diff(g.params[0], gr.params[0]) < 1e-10);
        CHECK(max_abs_diff(g.params[1], gr.params[1]) < 1e-10);
    }
    const Tensor x = random_tensor({3, 14, 32}, 98);
    const Tensor wi = random_tensor({64, 32}, 99, 0.3), wr = random_tensor({64, 16}, 100, 0.3);
    const Tensor b = random_tensor({64}, 101);
    CHECK(max_abs_diff(lstm_forward(x, 16, wi, wr, b), reference::lstm_forward(x, 16, wi, wr, b)) < 1e-12);
}

TEST_CASE("adam examples") {
    SUBCASE("zero gradient and zero l2 leave parameters unchanged") {
        ParamStore p;
        p.add_group("L");
        p.add("L", "w", random_tensor({3}, 110));
        const auto before = p.at("L")[0].values();
        Adam opt;
        opt.step(p, 0.1, 0.0);
        CHECK(p.at("L")[0].values() == before);
    }
    SUBCASE("first step has magnitude lr") {
        ParamStore p;
        p.add_group("L");
        p.add("L", "w", Tensor({1}, 1.0));
        p.at("L")[0].grad()[0] = 1.0;
        Adam opt;
        opt.step(p, 0.1, 0.0);
        CHECK(p.at("L")[0][0] == doctest::Approx(0.9).epsilon(1e-6));
    }
}

TEST_CASE("learning-rate schedule examples") {
    const LrSchedule s;
    CHECK(lr_at_epoch(s, 0) == doctest::Approx(0.001));
    CHECK(lr_at_epoch(s, 40) == doctest::Approx(0.03));
    CHECK(lr_at_epoch(s, 90) == doctest::Approx(0.0155));
    CHECK(lr_at_epoch(s, 140) == doctest::Approx(0.03));
    LrSchedule bad;
    bad.min_lr = 0.05;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}  // TEST_SUITE
