#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "edgeformer/autodiff.hpp"
#include "edgeformer/errors.hpp"
#include "edgeformer/grad_check.hpp"
#include "edgeformer/param_store.hpp"
#include "test_util.hpp"

using namespace edgeformer;
namespace ad = edgeformer::autodiff;
using testutil::op_gradient_max_rel_error;
using testutil::random_tensor;

TEST_CASE("affine matches direct arithmetic") {
    auto x = ad::constant(Tensor::matrix({{1.0, 2.0}}));
    auto w_id = ad::constant(Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}}));
    auto b0 = ad::constant(Tensor::vector({0.0, 0.0}));
    auto out = ad::affine(x, w_id, b0);
    CHECK(out.tensor().at(0, 0) == 1.0);
    CHECK(out.tensor().at(0, 1) == 2.0);

    auto x1 = ad::constant(Tensor::matrix({{1.0, 1.0}}));
    auto w = ad::constant(Tensor::matrix({{1.0, 2.0}, {3.0, 4.0}}));
    auto b = ad::constant(Tensor::vector({0.5, 0.5}));
    auto out2 = ad::affine(x1, w, b);
    CHECK(out2.tensor().at(0, 0) == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(out2.tensor().at(0, 1) == doctest::Approx(6.5).epsilon(1e-12));

    auto zeros = ad::constant(Tensor::zeros({3, 2}));
    auto out3 = ad::affine(zeros, w, b);
    for (std::int64_t i = 0; i < 3; ++i) {
        CHECK(out3.tensor().at(i, 0) == 0.5);
        CHECK(out3.tensor().at(i, 1) == 0.5);
    }
}

TEST_CASE("affine rejects mismatched shapes naming both") {
    auto x = ad::constant(Tensor::zeros({2, 3}));
    auto w = ad::constant(Tensor::zeros({4, 5}));
    auto b = ad::constant(Tensor::zeros({5}));
    try {
        ad::affine(x, w, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x5]") != std::string::npos);
    }
}

TEST_CASE("softmax rows: symmetry, closed form, shift invariance") {
    auto flat = ad::softmax_rows(ad::constant(Tensor::matrix({{0.0, 0.0}})));
    CHECK(flat.tensor().at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(flat.tensor().at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

    auto ratio = ad::softmax_rows(ad::constant(Tensor::matrix({{std::log(2.0), 0.0}})));
    CHECK(ratio.tensor().at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(ratio.tensor().at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = random_tensor({3, 5}, rng, 2.0);
        Tensor shifted = x;
        const double c = rng.normal(0.0, 10.0);
        for (std::int64_t i = 0; i < shifted.size(); ++i) shifted[i] += c;
        auto a = ad::softmax_rows(ad::constant(x));
        auto b = ad::softmax_rows(ad::constant(shifted));
        for (std::int64_t i = 0; i < a.tensor().size(); ++i) {
            CHECK(a.tensor()[i] == doctest::Approx(b.tensor()[i]).epsilon(1e-12));
        }
        // rows sum to one
        for (std::int64_t r = 0; r < 3; ++r) {
            double s = 0.0;
            for (std::int64_t col = 0; col < 5; ++col) s += a.tensor().at(r, col);
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("layer_norm examples") {
    auto gamma1 = ad::constant(Tensor::vector({1.0, 1.0}));
    auto beta0 = ad::constant(Tensor::vector({0.0, 0.0}));

    // constant row collapses to zero through eps
    auto flat = ad::layer_norm(ad::constant(Tensor::matrix({{3.0, 3.0}})), gamma1, beta0, 1e-5);
    CHECK(flat.tensor().at(0, 0) == 0.0);
    CHECK(flat.tensor().at(0, 1) == 0.0);

    // already standardized row passes through as eps -> 0
    auto passthrough =
        ad::layer_norm(ad::constant(Tensor::matrix({{1.0, -1.0}})), gamma1, beta0, 1e-12);
    CHECK(passthrough.tensor().at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(passthrough.tensor().at(0, 1) == doctest::Approx(-1.0).epsilon(1e-9));

    // gamma = 0 forces every row to beta
    auto gamma0 = ad::constant(Tensor::vector({0.0, 0.0}));
    auto beta = ad::constant(Tensor::vector({2.0, -7.0}));
    Rng rng(3);
    auto forced = ad::layer_norm(ad::constant(random_tensor({4, 2}, rng)), gamma0, beta, 1e-5);
    for (std::int64_t i = 0; i < 4; ++i) {
        CHECK(forced.tensor().at(i, 0) == 2.0);
        CHECK(forced.tensor().at(i, 1) == -7.0);
    }

    // row mean ~ 0 with beta = 0
    auto g = ad::constant(Tensor::full({8}, 1.3));
    auto z = ad::constant(Tensor::zeros({8}));
    auto normed = ad::layer_norm(ad::constant(random_tensor({5, 8}, rng, 3.0)), g, z, 1e-8);
    for (std::int64_t r = 0; r < 5; ++r) {
        double mean = 0.0;
        for (std::int64_t c = 0; c < 8; ++c) mean += normed.tensor().at(r, c);
        CHECK(std::abs(mean / 8.0) < 1e-10);
    }
}

TEST_CASE("gelu: zero, asymptote, normal CDF oracle") {
    auto at_zero = ad::gelu(ad::constant(Tensor::vector({0.0})));
    CHECK(at_zero.tensor()[0] == 0.0);

    auto at_ten = ad::gelu(ad::constant(Tensor::vector({10.0})));
    CHECK(std::abs(at_ten.tensor()[0] - 10.0) < 1e-6);

    // Independent oracle: Phi(1) = 0.5 + integral_0^1 pdf via Simpson's rule.
    const int steps = 2000;
    const double width = 1.0 / steps;
    auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
    double integral = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double a = i * width;
        const double b = a + width;
        integral += (pdf(a) + 4.0 * pdf(0.5 * (a + b)) + pdf(b)) * width / 6.0;
    }
    const double phi1 = 0.5 + integral;
    auto at_one = ad::gelu(ad::constant(Tensor::vector({1.0})));
    CHECK(at_one.tensor()[0] == doctest::Approx(1.0 * phi1).epsilon(1e-9));
    CHECK(at_one.tensor()[0] == doctest::Approx(0.8413).epsilon(1e-4));
}

TEST_CASE("bce_with_logits: ln2, saturation, symmetry mean, label validation") {
    auto both_zero = ad::bce_with_logits(ad::leaf(Tensor::vector({0.0})), Tensor::vector({1.0}));
    CHECK(both_zero.tensor()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    auto saturated = ad::bce_with_logits(ad::leaf(Tensor::vector({50.0})), Tensor::vector({1.0}));
    CHECK(saturated.tensor()[0] < 1e-20);
    CHECK(saturated.tensor()[0] >= 0.0);

    auto mean2 =
        ad::bce_with_logits(ad::leaf(Tensor::vector({0.0, 0.0})), Tensor::vector({0.0, 1.0}));
    CHECK(mean2.tensor()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(
        ad::bce_with_logits(ad::leaf(Tensor::vector({0.0})), Tensor::vector({0.5})),
        ValidationError);
}

TEST_CASE("mse_masked: zero loss, derived value, mask exclusion, empty mask") {
    Rng rng(7);
    Tensor same = random_tensor({3, 4}, rng);
    auto zero_loss = ad::mse_masked(ad::leaf(same), same, {true, true, false});
    CHECK(zero_loss.tensor()[0] == 0.0);

    auto derived = ad::mse_masked(ad::leaf(Tensor::matrix({{1.0, 2.0}})),
                                  Tensor::matrix({{0.0, 0.0}}), {true});
    CHECK(derived.tensor()[0] == doctest::Approx(2.5).epsilon(1e-15));

    Tensor pred = random_tensor({3, 4}, rng);
    Tensor target = random_tensor({3, 4}, rng);
    auto base = ad::mse_masked(ad::leaf(pred), target, {true, false, true});
    Tensor perturbed = pred;
    perturbed.at(1, 2) += 123.0;  // unmasked row
    auto perturbed_loss = ad::mse_masked(ad::leaf(perturbed), target, {true, false, true});
    CHECK(base.tensor()[0] == perturbed_loss.tensor()[0]);

    try {
        ad::mse_masked(ad::leaf(pred), target, {false, false, false});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("no masked tokens") != std::string::npos);
    }
}

TEST_CASE("ops are pure: identical inputs give bitwise-identical outputs") {
    Rng rng(21);
    Tensor x = random_tensor({4, 6}, rng);
    Tensor w = random_tensor({6, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    auto run = [&] {
        auto v = ad::affine(ad::constant(x), ad::constant(w), ad::constant(b));
        auto s = ad::softmax_rows(v);
        auto g = ad::gelu(s);
        return g.tensor();
    };
    CHECK(testutil::bitwise_equal(run(), run()));
}

TEST_CASE("every op passes finite-difference gradient checks on random instances") {
    Rng rng(1234);
    const double tol = 1e-4;

    auto dims = [&](std::int64_t lo, std::int64_t hi) {
        return static_cast<std::int64_t>(lo + rng.bounded(static_cast<std::uint64_t>(hi - lo + 1)));
    };

    for (int trial = 0; trial < 110; ++trial) {
        const std::int64_t n = dims(1, 4), k = dims(1, 5), m = dims(1, 4);

        // elementwise family
        {
            std::vector<Tensor> in = {random_tensor({n, k}, rng), random_tensor({n, k}, rng)};
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::add(v[0], v[1]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::sub(v[0], v[1]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::mul(v[0], v[1]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::scale(v[0], -1.7); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::gelu(v[0]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::softmax_rows(v[0]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::sum(v[0]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::dot(v[0], v[1]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::l2_norm(v[0]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in,
                      [n, k](const auto& v) { return ad::reshape(v[0], {n * k}); }, rng) < tol);
        }

        // relu away from the kink
        {
            Tensor x = random_tensor({n, k}, rng);
            for (std::int64_t i = 0; i < x.size(); ++i) {
                if (std::abs(x[i]) < 1e-3) x[i] = 0.5;
            }
            CHECK(op_gradient_max_rel_error(
                      {x}, [](const auto& v) { return ad::relu(v[0]); }, rng) < tol);
        }

        // matmul / transpose / affine
        {
            std::vector<Tensor> in = {random_tensor({n, k}, rng), random_tensor({k, m}, rng),
                                      random_tensor({m}, rng)};
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::matmul(v[0], v[1]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::transpose(v[0]); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::affine(v[0], v[1], v[2]); }, rng) < tol);
        }

        // layer_norm (eps large enough to keep finite differences honest)
        {
            std::vector<Tensor> in = {random_tensor({n, k}, rng), random_tensor({k}, rng),
                                      random_tensor({k}, rng)};
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::layer_norm(v[0], v[1], v[2], 1e-3); },
                      rng) < tol);
        }

        // concat / slice
        {
            std::vector<Tensor> in = {random_tensor({n, k}, rng), random_tensor({m, k}, rng)};
            CHECK(op_gradient_max_rel_error(
                      in, [](const auto& v) { return ad::concat_rows({v[0], v[1]}); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      in,
                      [n](const auto& v) { return ad::slice_rows(v[0], n - 1, 1); }, rng) < tol);
            std::vector<Tensor> inc = {random_tensor({n, k}, rng), random_tensor({n, m}, rng)};
            CHECK(op_gradient_max_rel_error(
                      inc, [](const auto& v) { return ad::concat_cols({v[0], v[1]}); }, rng) < tol);
            CHECK(op_gradient_max_rel_error(
                      inc,
                      [k](const auto& v) { return ad::slice_cols(v[0], k - 1, 1); }, rng) < tol);
        }

        // losses
        {
            Tensor labels = Tensor::zeros({n});
            for (std::int64_t i = 0; i < n; ++i) labels[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
            std::vector<Tensor> in = {random_tensor({n}, rng, 2.0)};
            CHECK(op_gradient_max_rel_error(
                      in, [&](const auto& v) { return ad::bce_with_logits(v[0], labels); },
                      rng) < tol);

            Tensor target = random_tensor({n, k}, rng);
            std::vector<bool> mask(static_cast<std::size_t>(n), false);
            mask[static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(n)))] = true;
            std::vector<Tensor> inm = {random_tensor({n, k}, rng)};
            CHECK(op_gradient_max_rel_error(
                      inm, [&](const auto& v) { return ad::mse_masked(v[0], target, mask); },
                      rng) < tol);
        }
    }
}

TEST_CASE("grad_check: affine + mse within 1e-6") {
    Rng rng(99);
    ParamStore params;
    params.add("w", random_tensor({3, 2}, rng));
    params.add("b", random_tensor({2}, rng));
    Tensor x = random_tensor({4, 3}, rng);
    Tensor target = random_tensor({4, 2}, rng);
    std::vector<bool> mask(4, true);

    auto fn = [&](const LiftedParams& p) {
        return ad::mse_masked(ad::affine(ad::constant(x), p.at("w"), p.at("b")), target, mask);
    };
    auto report = grad_check(params, fn, 1e-5);
    CHECK(report.max_rel_error < 1e-6);
    CHECK(report.checked_entries == 8);
}

TEST_CASE("grad_check: unused parameter has exactly zero gradient") {
    Rng rng(100);
    ParamStore params;
    params.add("used", random_tensor({2, 2}, rng));
    params.add("unused", random_tensor({3}, rng));
    Tensor cot = random_tensor({2, 2}, rng);

    LiftedParams lifted(params);
    auto loss = ad::dot(lifted.at("used"), ad::constant(cot));
    ad::backward(loss);
    for (std::int64_t i = 0; i < 3; ++i) CHECK(lifted.at("unused").grad()[i] == 0.0);

    auto fn = [&](const LiftedParams& p) { return ad::dot(p.at("used"), ad::constant(cot)); };
    auto report = grad_check(params, fn, 1e-5);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("grad_check rejects bad step sizes and non-deterministic functions") {
    ParamStore params;
    params.add("p", Tensor::vector({1.0}));
    auto fn = [](const LiftedParams& p) { return ad::sum(p.at("p")); };
    CHECK_THROWS_AS(grad_check(params, fn, 1e-2), ValidationError);
    CHECK_THROWS_AS(grad_check(params, fn, 1e-8), ValidationError);

    int calls = 0;
    auto noisy = [&](const LiftedParams& p) {
        ++calls;
        return ad::scale(ad::sum(p.at("p")), 1.0 + 0.001 * calls);
    };
    CHECK_THROWS_AS(grad_check(params, noisy, 1e-5), ValidationError);
}

TEST_CASE("backward accumulates through shared subexpressions") {
    // f = sum(x * x) has gradient 2x even though x feeds mul twice.
    auto x = ad::leaf(Tensor::vector({1.5, -2.0, 0.25}));
    auto loss = ad::sum(ad::mul(x, x));
    ad::backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(x.grad()[1] == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(x.grad()[2] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("non-finite forward values raise NumericError") {
    CHECK_THROWS_AS(ad::constant(Tensor::vector({std::nan("")})), NumericError);
    auto big = ad::constant(Tensor::vector({1e308}));
    CHECK_THROWS_AS(ad::mul(big, big), NumericError);
}

TEST_CASE("dropout: off by default semantics and inverted scaling") {
    Rng rng(5);
    Tensor x = random_tensor({4, 4}, rng);
    auto v = ad::constant(x);
    auto same = ad::dropout(v, 0.0, rng);
    CHECK(same.node().get() == v.node().get());

    // with rate r survivors are scaled by 1/(1-r)
    Rng drop_rng(42);
    auto dropped = ad::dropout(ad::constant(x), 0.5, drop_rng);
    for (std::int64_t i = 0; i < x.size(); ++i) {
        const double out = dropped.tensor()[i];
        CHECK((out == 0.0 || out == doctest::Approx(2.0 * x[i]).epsilon(1e-15)));
    }
}
