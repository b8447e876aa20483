#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "chatmine/autograd.hpp"
#include "chatmine/checkpoint.hpp"
#include "chatmine/error.hpp"
#include "chatmine/gradcheck.hpp"
#include "chatmine/gradcheck_suite.hpp"
#include "chatmine/optim.hpp"
#include "helpers.hpp"

using namespace chatmine;
using namespace chatmine::nn;

TEST_CASE("conv1d_maxpool on a hand example") {
    Tape t;
    const Var x = t.constant(Tensor::vector({1, 2, 3}));
    const Var K = t.constant(Tensor::matrix(1, 2, {1, 1}));
    const Var b = t.constant(Tensor::vector({0}));
    const Var y = conv1d_maxpool(t, x, K, b);
    REQUIRE(t.value(y).size() == 1);
    CHECK(t.value(y)[0] == 5.0);

    // Negative responses are clipped by the ReLU before pooling.
    const Var y2 = conv1d_maxpool(t, x, t.constant(Tensor::matrix(1, 2, {-1, -1})), b);
    CHECK(t.value(y2)[0] == 0.0);
}

TEST_CASE("elementwise ops match closed forms") {
    CHECK(softsign_value(1.0) == 0.5);
    CHECK(softsign_value(-3.0) == -0.75);
    CHECK(sigmoid_value(0.0) == 0.5);
    const auto p = softmax_values(std::vector<double>{0.0, std::log(3.0)});
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-15));

    Tape t;
    const Var l = t.constant(Tensor::vector({0.0, std::log(3.0)}));
    CHECK(t.value(softmax_cross_entropy(t, l, 0))[0] == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(t.value(cross_entropy(t, softmax(t, l), 1))[0] == doctest::Approx(-std::log(0.75)).epsilon(1e-14));
}

TEST_CASE("linear and matvec gradients by hand") {
    ParameterSet ps;
    auto& W = ps.add("W", {1, 2});
    W.value = Tensor::matrix(1, 2, {2.0, -1.0});
    auto& x = ps.add("x", {2});
    x.value = Tensor::vector({3.0, 4.0});
    Tape t;
    const Var y = matvec(t, t.parameter(W), t.parameter(x));
    CHECK(t.value(y)[0] == 2.0);
    t.backward(y);
    CHECK(W.grad.data == std::vector<double>{3.0, 4.0});
    CHECK(x.grad.data == std::vector<double>{2.0, -1.0});
}

TEST_CASE("dropout is identity at inference and inverted-scaled in training") {
    Rng rng(3);
    Tape t;
    const Var x = t.constant(Tensor(Shape{1000}, 1.0));
    CHECK(t.value(dropout(t, x, 0.6, rng, false)).data == std::vector<double>(1000, 1.0));
    const auto& y = t.value(dropout(t, x, 0.6, rng, true));
    std::size_t kept = 0;
    for (double v : y.data) {
        CHECK((v == 0.0 || std::abs(v - 2.5) < 1e-12));
        kept += v != 0.0;
    }
    CHECK(kept > 300);
    CHECK(kept < 500);
}

TEST_CASE("adam first step moves each weight by lr against its gradient sign") {
    ParameterSet ps;
    auto& p = ps.add("p", {3});
    p.value = Tensor::vector({1.0, 1.0, 1.0});
    p.grad = Tensor::vector({0.5, -2.0, 0.0});
    Adam opt(ps, AdamConfig{0.01, 0.9, 0.999, 1e-8});
    opt.step();
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    CHECK(p.value[1] == doctest::Approx(1.0 + 0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
    CHECK(p.value[2] == 1.0);
    CHECK(p.grad.data == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(opt.steps() == 1);
}

TEST_CASE("rng draws are reproducible") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng c(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(c.index(5) < 5);
    }
}

TEST_CASE("checkpoint layout and round trip") {
    ParameterSet ps;
    ps.add("a", {2, 2}).value = Tensor::matrix(2, 2, {1.5, -2.0, 0.25, 3.0});
    ps.add("b", {3}).value = Tensor::vector({0.1, 0.2, 0.3});
    const auto path = testing::temp_path("layout.ckpt");
    save_checkpoint(path, ps, {{"kind", "test"}});

    std::ifstream in(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() > 16);
    CHECK(bytes.substr(0, 8) == "CHMCKPT1");
    std::uint64_t len = 0;
    for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[8 + static_cast<std::size_t>(i)]);
    const auto manifest = nlohmann::json::parse(bytes.substr(16, len));
    CHECK(manifest.at("dtype") == "float32");
    CHECK(manifest.at("meta").at("kind") == "test");
    CHECK(bytes.size() == 16 + len + 7 * 4);
    const auto& pb = manifest.at("params").at(1);
    CHECK(pb.at("name") == "b");
    float first = 0.0f;
    std::memcpy(&first, bytes.data() + 16 + len + pb.at("offset").get<std::size_t>(), 4);
    CHECK(first == 0.1f);

    const auto ck = load_checkpoint(path);
    CHECK(ck.order == std::vector<std::string>{"a", "b"});
    CHECK(ck.tensors.at("a").data[1] == -2.0);
    CHECK(ck.tensors.at("b").data[2] == static_cast<double>(0.3f));

    ParameterSet other;
    other.add("a", {2, 2});
    other.add("b", {3});
    restore_parameters(ck, other);
    CHECK(other.get("a").value.data[3] == 3.0);

    ParameterSet wrong;
    wrong.add("a", {4});
    wrong.add("b", {3});
    CHECK_THROWS_AS(restore_parameters(ck, wrong), ConfigError);
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto path = testing::temp_path("bad.ckpt");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPT";
    }
    CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
    CHECK_THROWS_AS(load_checkpoint(testing::temp_path("missing.ckpt")), IoError);
}

TEST_CASE("finite differences flag a wrong backward pass") {
    ParameterSet ps;
    ps.add("x", {2}).value = Tensor::vector({0.7, -1.3});
    auto square_bad = [&](Tape& t) {
        const Var x = t.parameter(ps.get("x"));
        Tensor y({1});
        for (double v : t.value(x).data) y[0] += v * v;
        return t.push(std::move(y), [x, out = t.size()](Tape& tape) {
            const double g = tape.grad(Var{out}).data[0];
            const auto xv = tape.value(x).data;
            auto& gx = tape.grad(x);
            for (std::size_t i = 0; i < xv.size(); ++i) gx.data[i] += 3.0 * xv[i] * g;
        });
    };
    const auto bad = finite_difference_check(ps, square_bad, 1e-4);
    CHECK_FALSE(bad.passed());
    CHECK(bad.offending == std::vector<std::string>{"x"});
    CHECK(ps.get("x").value.data == std::vector<double>{0.7, -1.3});

    auto good = [&](Tape& t) { return softmax_cross_entropy(t, t.parameter(ps.get("x")), 1); };
    CHECK(finite_difference_check(ps, good, 1e-6).passed());
}

TEST_CASE("every shipped fragment passes at seed 1") {
    for (const auto& name : gradcheck_fragments()) {
        CAPTURE(name);
        const auto r = run_fragment(name, 1, 1e-4);
        CHECK(r.passed());
        CHECK(r.max_rel_error < 1e-4);
    }
    CHECK_THROWS_AS(run_fragment("nope", 1, 1e-4), ConfigError);
}
