#include <doctest.h>

#include <cmath>

#include "../common/heuristic_fixture.hpp"
#include "chatmine/dialog_embed.hpp"
#include "chatmine/error.hpp"
#include "helpers.hpp"

using namespace chatmine;
using namespace chatmine::embed;

namespace {

struct AttentionSetup {
    nn::ParameterSet ps;
    nn::Tensor window;
    AttentionSetup(std::size_t d, std::size_t delta) : window({3, d}) {
        ps.add("WQ", {delta, d});
        ps.add("WK", {delta, d});
        ps.add("WV", {delta, d});
    }
    AttentionTrace run(const std::vector<bool>& pad, std::vector<double>* ctx = nullptr) {
        nn::Tape t(false);
        AttentionTrace tr;
        const auto c = local_attention(t, t.view(window), pad, t.view(ps.get("WQ").value), t.view(ps.get("WK").value),
                                       t.view(ps.get("WV").value), &tr);
        if (ctx) *ctx = t.value(c).data;
        return tr;
    }
};

}  // namespace

TEST_CASE("dimensions of the fused representation") {
    CHECK(kTextualDim == 256);
    CHECK(kHeuristicDim == 29);
    CHECK(kContextDim == 128);
    CHECK(kFusedDim == 413);
    CHECK(heuristic_names().size() == 29);
    const auto fused = fuse_features(std::vector<double>(256, 1.0), {}, std::vector<double>(128, 2.0));
    CHECK(fused.size() == 413);
    CHECK(fused[255] == 1.0);
    CHECK(fused[256] == 0.0);
    CHECK(fused[285] == 2.0);
}

TEST_CASE("conv stack output width follows the last stage") {
    ConvStackSpec spec;
    CHECK(spec.output_dim() == 256);
    CHECK_NOTHROW(spec.validate(800));
    CHECK_THROWS_AS(spec.validate(2), ConfigError);
    ConvStackSpec tiny{{2, 1}, 3};
    CHECK_THROWS_AS(tiny.validate(5), ConfigError);  // second stage would see 2 values

    nn::ParameterSet ps;
    ConvStackSpec small{{6, 4, 3}, 3};
    add_conv_parameters(ps, small);
    nn::Rng rng(1);
    init_conv_parameters(ps, small, rng);
    CHECK(ps.get("conv1.K").value.shape == nn::Shape{6, 3});
    CHECK(ps.get("conv3.b").value.shape == nn::Shape{3});
    nn::Tape t(false);
    const LeafSource leaves{nullptr, &ps};
    const auto y = conv_stack(t, t.constant(nn::Tensor(nn::Shape{10}, 0.5)), small, leaves, 0.6, nullptr, false);
    CHECK(t.value(y).size() == 3);
}

TEST_CASE("gaussian factor is exactly 1 at the center") {
    CHECK(gaussian_factor(1, 1, 1) == 1.0);
    CHECK(gaussian_factor(5, 5, 3) == 1.0);
    CHECK(gaussian_factor(0, 1, 1) == std::exp(-0.5));
    CHECK(gaussian_factor(0, 2, 2) == std::exp(-0.5));
}

TEST_CASE("attention with equal dot products weights the center 1 / (1 + 2 e^-1/2)") {
    AttentionSetup a(2, 2);
    a.ps.get("WQ").value = nn::Tensor::matrix(2, 2, {1, 0, 0, 1});
    a.ps.get("WK").value = a.ps.get("WQ").value;
    a.ps.get("WV").value = a.ps.get("WQ").value;
    a.window = nn::Tensor::matrix(3, 2, {0.6, 0.8, 0.6, 0.8, 0.6, 0.8});
    std::vector<double> ctx;
    const auto tr = a.run({false, false, false}, &ctx);
    const double want = 1.0 / (1.0 + 2.0 * std::exp(-0.5));
    CHECK_FALSE(tr.uniform_fallback);
    CHECK(std::abs(tr.weights[1] - want) < 1e-9);
    CHECK(std::abs(tr.weights[0] - std::exp(-0.5) * want) < 1e-9);
    CHECK(std::abs(tr.weights[0] + tr.weights[1] + tr.weights[2] - 1.0) < 1e-9);
    // Every value row is [0.6, 0.8], so c = [0.6, 0.8] / sqrt(2).
    CHECK(ctx[0] == doctest::Approx(0.6 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(ctx[1] == doctest::Approx(0.8 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("attention ignores padding and normalizes over live slots") {
    nn::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        AttentionSetup a(5, 4);
        for (auto& p : a.ps)
            for (double& v : p->value.data) v = rng.uniform(-1, 1);
        for (double& v : a.window.data) v = rng.uniform(-1, 1);
        const std::vector<bool> pad = {trial % 2 == 0, false, trial % 3 == 0};
        const auto tr = a.run(pad);
        double sum = 0.0;
        for (std::size_t s = 0; s < 3; ++s) {
            if (pad[s]) CHECK(tr.weights[s] == 0.0);
            sum += tr.weights[s];
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        CHECK(tr.gauss[1] == 1.0);
    }
}

TEST_CASE("attention falls back to uniform weights when scores cancel") {
    AttentionSetup a(2, 2);
    a.ps.get("WQ").value = nn::Tensor::matrix(2, 2, {1, 0, 0, 1});
    a.ps.get("WK").value = a.ps.get("WQ").value;
    a.ps.get("WV").value = a.ps.get("WQ").value;
    // center . center = 1; neighbours give -e^{1/2} e^{-1/2} / 2 each, summing to 0
    const double s = std::exp(0.5) / 2.0;
    a.window = nn::Tensor::matrix(3, 2, {-s, 0, 1, 0, -s, 0});
    const auto tr = a.run({false, false, false});
    CHECK(tr.uniform_fallback);
    for (double w : tr.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("heuristic attributes reproduce the hand-labeled fixture") {
    const auto f = testing::HeuristicFixture::load(testing::fixture_dir() / "heuristics");
    REQUIRE(f.log.size() == 20);
    REQUIRE(f.expected.size() == 20);
    const auto bad = f.mismatches(1e-9);
    for (const auto& m : bad) {
        CAPTURE(m.utterance);
        CAPTURE(m.field);
        CAPTURE(m.got);
        CAPTURE(m.want);
        CHECK(false);
    }
    // AP = 2 in a 10-utterance dialog gives RP = 0.20.
    const TfIdfIndex tfidf(f.log);
    const auto h = f.compute(1, tfidf);
    CHECK(h[kAP] == 2.0);
    CHECK(h[kRP] == 0.2);
}

TEST_CASE("sentiment counts follow the lexicon") {
    Lexicons lex;
    lex.sentiment_words = {{"error", Polarity::kNegative}, {"fail", Polarity::kNegative}, {"great", Polarity::kPositive}};
    corpus::ChatLog log;
    log.utterances.push_back(testing::utt(0, 0, "a", "error fail great", {"error", "fail", "great"}));
    const auto d = disentangle::make_dialog(log, {0});
    const TfIdfIndex tfidf(log);
    const auto h = heuristic_attributes(log[0], {&log, &tfidf, &d, 1}, lex);
    CHECK(h[kSWPos] == 1.0);
    CHECK(h[kSWNeu] == 0.0);
    CHECK(h[kSWNeg] == 2.0);
    CHECK(h[kSSNeg] == doctest::Approx(2.0 / 3.0));
    CHECK(h[kDI] == 1.0);
    // A single-dialog chat has its head equal to the whole chat.
    CHECK(h[kTDH] == 0.0);
}

TEST_CASE("topic distance: symmetry and the empty-utterance case") {
    corpus::ChatLog log;
    log.utterances.push_back(testing::utt(0, 0, "a", "x", {"webpack", "build", "fail"}));
    log.utterances.push_back(testing::utt(1, 1, "b", "y", {"docker", "build"}));
    log.utterances.push_back(testing::utt(2, 2, "c", "?", {"?"}));
    const TfIdfIndex idx(log);
    const auto a = idx.scope_weights({&log.utterances[0].tokens});
    const auto b = idx.scope_weights({&log.utterances[1].tokens});
    CHECK(topic_distance(a, b) == topic_distance(b, a));
    const auto td = topic_deviation(idx, log[0], log[2]);
    double norm = 0.0;
    for (const auto& [_, w] : a) norm += w * w;
    CHECK(td.tdu == doctest::Approx(std::sqrt(norm)).epsilon(1e-12));
    // idf = ln(4 / 3) + 1 for "build" (in 2 of 3 documents)
    CHECK(idx.idf("build") == doctest::Approx(std::log(4.0 / 3.0) + 1.0).epsilon(1e-15));
    CHECK(idx.idf("unseen") == doctest::Approx(std::log(4.0) + 1.0).epsilon(1e-15));
}

TEST_CASE("top terms break ties lexicographically") {
    const TfIdfIndex::Weights w = {{"b", 1.0}, {"a", 1.0}, {"c", 2.0}, {"d", 0.5}};
    CHECK(top_terms(w, 3) == std::vector<std::string>{"c", "a", "b"});
}

TEST_CASE("standardizer: population statistics, constant columns untouched") {
    std::vector<std::array<double, kHeuristicDim>> rows(2);
    rows[0][kNT] = 2.0;
    rows[1][kNT] = 4.0;
    rows[0][kDI] = rows[1][kDI] = 1.0;
    const auto s = Standardizer::fit(rows);
    CHECK(s.mean[kNT] == 3.0);
    CHECK(s.stddev[kNT] == 1.0);
    CHECK(s.stddev[kDI] == 1.0);
    const auto z = s.apply(rows[1]);
    CHECK(z[kNT] == 1.0);
    CHECK(z[kDI] == 0.0);
    const auto back = Standardizer::from_json(s.to_json());
    CHECK(back.mean == s.mean);
    CHECK(back.stddev == s.stddev);
}
