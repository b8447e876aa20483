#include "chatmine/gradcheck_suite.hpp"

#include <chrono>

#include "chatmine/dialog_embed.hpp"
#include "chatmine/error.hpp"
#include "chatmine/pairmodel.hpp"

namespace chatmine::nn {

namespace {

void fill_uniform(Tensor& t, Rng& rng, double lo, double hi) {
    for (double& v : t.data) v = rng.uniform(lo, hi);
}

GradCheckReport check(const std::string& name, ParameterSet& ps, const LossFn& loss, double tol) {
    auto r = finite_difference_check(ps, loss, tol);
    r.fragment = name;
    return r;
}

GradCheckReport linear_fragment(std::uint64_t seed, double tol) {
    Rng rng(seed);
    ParameterSet ps;
    fill_uniform(ps.add("x", {6}).value, rng, -1, 1);
    fill_uniform(ps.add("W", {3, 6}).value, rng, -1, 1);
    fill_uniform(ps.add("b", {3}).value, rng, -0.5, 0.5);
    const std::size_t label = seed % 3;
    return check("linear", ps, [&](Tape& t) {
        return softmax_cross_entropy(t, linear(t, t.parameter(ps.get("x")), t.parameter(ps.get("W")),
                                               t.parameter(ps.get("b"))),
                                     label);
    }, tol);
}

GradCheckReport conv_fragment(std::uint64_t seed, double tol) {
    Rng rng(seed);
    ParameterSet ps;
    fill_uniform(ps.add("x", {9}).value, rng, -1, 1);
    fill_uniform(ps.add("K", {4, 3}).value, rng, -1, 1);
    fill_uniform(ps.add("b", {4}).value, rng, 0.1, 0.6);
    fill_uniform(ps.add("W", {2, 4}).value, rng, -1, 1);
    fill_uniform(ps.add("c", {2}).value, rng, -0.5, 0.5);
    return check("conv1d_maxpool", ps, [&](Tape& t) {
        Var y = conv1d_maxpool(t, t.parameter(ps.get("x")), t.parameter(ps.get("K")), t.parameter(ps.get("b")));
        return softmax_cross_entropy(t, linear(t, y, t.parameter(ps.get("W")), t.parameter(ps.get("c"))), 1);
    }, tol);
}

GradCheckReport softsign_fragment(std::uint64_t seed, double tol) {
    Rng rng(seed);
    ParameterSet ps;
    fill_uniform(ps.add("x", {5}).value, rng, -1, 1);
    fill_uniform(ps.add("W1", {4, 5}).value, rng, -1, 1);
    fill_uniform(ps.add("b1", {4}).value, rng, -0.5, 0.5);
    fill_uniform(ps.add("w2", {1, 4}).value, rng, -1, 1);
    fill_uniform(ps.add("b2", {1}).value, rng, -0.5, 0.5);
    return check("softsign", ps, [&](Tape& t) {
        Var h = softsign(t, linear(t, t.parameter(ps.get("x")), t.parameter(ps.get("W1")), t.parameter(ps.get("b1"))));
        Var z = linear(t, h, t.parameter(ps.get("w2")), t.parameter(ps.get("b2")));
        Var two = concat(t, {t.constant(Tensor::vector({0.0})), z});
        return sum(t, {softmax_cross_entropy(t, two, 1), sigmoid(t, z)});
    }, tol);
}

GradCheckReport softmax_fragment(std::uint64_t seed, double tol) {
    Rng rng(seed);
    ParameterSet ps;
    fill_uniform(ps.add("logits", {5}).value, rng, -2, 2);
    const std::size_t label = seed % 5;
    return check("softmax_ce", ps, [&](Tape& t) {
        Var l = t.parameter(ps.get("logits"));
        return sum(t, {cross_entropy(t, softmax(t, l), label), softmax_cross_entropy(t, l, (label + 1) % 5)});
    }, tol);
}

GradCheckReport attention_fragment(std::uint64_t seed, double tol, bool padded) {
    Rng rng(seed);
    ParameterSet ps;
    const std::size_t d = 5, delta = 4;
    // Rows near a shared direction and W^K near W^Q keep the score sum clearly positive.
    std::vector<double> base(d);
    for (double& v : base) v = rng.uniform(-1, 1);
    Tensor& win = ps.add("window", {3, d}).value;
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t j = 0; j < d; ++j) win.at(s, j) = base[j] + 0.3 * rng.uniform(-1, 1);
    Tensor& wq = ps.add("WQ", {delta, d}).value;
    fill_uniform(wq, rng, -1, 1);
    Tensor& wk = ps.add("WK", {delta, d}).value;
    for (std::size_t i = 0; i < wk.size(); ++i) wk.data[i] = wq.data[i] + 0.2 * rng.uniform(-1, 1);
    fill_uniform(ps.add("WV", {delta, d}).value, rng, -1, 1);
    fill_uniform(ps.add("W", {2, delta}).value, rng, -1, 1);
    std::vector<bool> pad = {padded, false, false};
    if (padded) win.row(0)[0] = 0.0;
    return check(padded ? "local_attention_padded" : "local_attention", ps, [&](Tape& t) {
        Var c = embed::local_attention(t, t.parameter(ps.get("window")), pad, t.parameter(ps.get("WQ")),
                                       t.parameter(ps.get("WK")), t.parameter(ps.get("WV")));
        return softmax_cross_entropy(t, matvec(t, t.parameter(ps.get("W")), c), 0);
    }, tol);
}

GradCheckReport head_fragment(std::uint64_t seed, double tol) {
    Rng rng(seed);
    pair::PairModel model(pair::Target::kIssue, pair::ModelConfig{}, 3);
    model.initialize(rng);
    ParameterSet ps;
    for (const char* n : {"fc1.W", "fc1.b", "fc2.W", "fc2.b"}) {
        auto& p = ps.add(n, model.params().get(n).value.shape);
        p.value = model.params().get(n).value;
    }
    fill_uniform(ps.get("fc1.b").value, rng, -0.1, 0.1);
    Tensor fused({model.config().fused_dim()});
    fill_uniform(fused, rng, -1, 1);
    const embed::LeafSource leaves{&ps, nullptr};
    return check("fc_head", ps, [&](Tape& t) {
        return softmax_cross_entropy(t, model.head(t, t.view(fused), leaves, false, nullptr), seed % 2);
    }, tol);
}

GradCheckReport small_model_fragment(std::uint64_t seed, double tol) {
    Rng rng(seed);
    pair::ModelConfig cfg;
    cfg.conv.kernels = {6, 4, 3};
    cfg.attention_dim = 4;
    cfg.hidden = 5;
    const std::size_t d = 8;
    pair::PairModel model(pair::Target::kSolution, cfg, d);
    model.initialize(rng);
    for (const char* n : {"conv1.b", "conv2.b", "conv3.b", "fc1.b"}) fill_uniform(model.params().get(n).value, rng, 0.05, 0.3);
    pair::Example ex;
    ex.window = Tensor({3, d});
    std::vector<double> base(d);
    for (double& v : base) v = rng.uniform(-1, 1);
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t j = 0; j < d; ++j) ex.window.at(s, j) = base[j] + 0.3 * rng.uniform(-1, 1);
    auto& wk = model.params().get("attn.WK").value;
    const auto& wq = model.params().get("attn.WQ").value;
    for (std::size_t i = 0; i < wk.size(); ++i) wk.data[i] = wq.data[i] + 0.1 * rng.uniform(-1, 1);
    ex.center.assign(ex.window.row(1).begin(), ex.window.row(1).end());
    ex.pad = {false, false, false};
    for (double& h : ex.heuristics) h = rng.uniform(-1, 1);
    ex.label = seed % 2;
    return check("pair_model_small", model.params(), [&](Tape& t) {
        return softmax_cross_entropy(t, model.logits(t, ex, false, nullptr), ex.label);
    }, tol);
}

}  // namespace

const std::vector<std::string>& gradcheck_fragments() {
    static const std::vector<std::string> names = {"linear",          "conv1d_maxpool",         "softsign", "softmax_ce",
                                                   "local_attention", "local_attention_padded", "fc_head",  "pair_model_small"};
    return names;
}

GradCheckReport run_fragment(const std::string& name, std::uint64_t seed, double tolerance) {
    if (name == "linear") return linear_fragment(seed, tolerance);
    if (name == "conv1d_maxpool") return conv_fragment(seed, tolerance);
    if (name == "softsign") return softsign_fragment(seed, tolerance);
    if (name == "softmax_ce") return softmax_fragment(seed, tolerance);
    if (name == "local_attention") return attention_fragment(seed, tolerance, false);
    if (name == "local_attention_padded") return attention_fragment(seed, tolerance, true);
    if (name == "fc_head") return head_fragment(seed, tolerance);
    if (name == "pair_model_small") return small_model_fragment(seed, tolerance);
    throw ConfigError("unknown gradient-check fragment: " + name);
}

bool SuiteResult::passed() const {
    for (const auto& [seed, r] : runs)
        if (!r.passed()) return false;
    return true;
}

nlohmann::json SuiteResult::to_json() const {
    nlohmann::json frags = nlohmann::json::array();
    for (const auto& [seed, r] : runs) {
        nlohmann::json params = nlohmann::json::array();
        for (const auto& p : r.params)
            params.push_back({{"name", p.name}, {"entries", p.entries_checked}, {"max_rel_error", p.max_rel_error}});
        frags.push_back({{"fragment", r.fragment},
                         {"seed", seed},
                         {"max_rel_error", r.max_rel_error},
                         {"passed", r.passed()},
                         {"offending", r.offending},
                         {"params", params}});
    }
    const double tol = runs.empty() ? 0.0 : runs.front().second.tolerance;
    return {{"passed", passed()}, {"tolerance", tol}, {"seconds", seconds}, {"fragments", frags}};
}

SuiteResult run_gradcheck_suite(double tolerance, const std::vector<std::uint64_t>& seeds) {
    CHATMINE_REQUIRE(tolerance > 0.0, "gradient-check tolerance must be positive");
    SuiteResult out;
    const auto start = std::chrono::steady_clock::now();
    for (auto seed : seeds)
        for (const auto& name : gradcheck_fragments()) out.runs.emplace_back(seed, run_fragment(name, seed, tolerance));
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace chatmine::nn
