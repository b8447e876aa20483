#include "chatmine/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chatmine/error.hpp"

namespace chatmine::nn {

namespace {

double evaluate(const LossFn& loss) {
    Tape tape(false);
    const Var out = loss(tape);
    const Tensor& v = tape.value(out);
    CHATMINE_REQUIRE(v.size() == 1, "gradient check needs a scalar loss");
    return v.data[0];
}

}  // namespace

GradCheckReport finite_difference_check(ParameterSet& params, const LossFn& loss, double tolerance,
                                        const GradCheckOptions& opts) {
    GradCheckReport report;
    report.tolerance = tolerance;

    params.zero_grad();
    {
        Tape tape(true);
        const Var out = loss(tape);
        CHATMINE_REQUIRE(tape.value(out).size() == 1, "gradient check needs a scalar loss");
        tape.backward(out);
    }
    std::vector<Tensor> analytic;
    for (const auto& p : params) analytic.push_back(p->grad);
    params.zero_grad();

    Rng sampler(opts.sample_seed);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = params[k];
        std::vector<std::size_t> idx(p.value.size());
        std::iota(idx.begin(), idx.end(), 0);
        if (opts.max_entries_per_param && idx.size() > opts.max_entries_per_param) {
            sampler.shuffle(idx);
            idx.resize(opts.max_entries_per_param);
            std::sort(idx.begin(), idx.end());
        }
        ParamCheck pc{p.name, idx.size(), 0.0};
        for (std::size_t i : idx) {
            const double orig = p.value.data[i];
            p.value.data[i] = orig + opts.step;
            const double up = evaluate(loss);
            p.value.data[i] = orig - opts.step;
            const double down = evaluate(loss);
            p.value.data[i] = orig;
            const double numeric = (up - down) / (2.0 * opts.step);
            const double a = analytic[k].data[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), opts.denominator_floor});
            pc.max_rel_error = std::max(pc.max_rel_error, std::abs(a - numeric) / denom);
        }
        report.max_rel_error = std::max(report.max_rel_error, pc.max_rel_error);
        if (pc.max_rel_error > tolerance) report.offending.push_back(p.name);
        report.params.push_back(std::move(pc));
    }
    return report;
}

}  // namespace chatmine::nn
