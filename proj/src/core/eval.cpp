#include "chatmine/eval.hpp"

#include <algorithm>

#include "chatmine/error.hpp"

namespace chatmine::eval {

using nlohmann::json;

void ConfusionCounts::add(bool predicted, bool gold) {
    if (predicted && gold) ++tp;
    else if (predicted) ++fp;
    else if (gold) ++fn;
    else ++tn;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

PRF compute_prf(const ConfusionCounts& c) {
    auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
    PRF r;
    r.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
    r.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
    r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
    return r;
}

std::vector<std::size_t> bootstrap_indices(const std::vector<bool>& positive, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < positive.size(); ++i) (positive[i] ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw DataError("bootstrap balancing needs both classes (" + std::to_string(pos.size()) + " positive, " +
                        std::to_string(neg.size()) + " negative)");
    std::vector<std::size_t> out(positive.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    const auto& minority = pos.size() < neg.size() ? pos : neg;
    const std::size_t deficit = std::max(pos.size(), neg.size()) - minority.size();
    nn::Rng rng(seed);
    for (std::size_t k = 0; k < deficit; ++k) out.push_back(minority[rng.index(minority.size())]);
    return out;
}

std::vector<pair::LabeledDialog> bootstrap_balance(const std::vector<pair::LabeledDialog>& dialogs,
                                                   std::uint64_t seed) {
    std::vector<bool> labels;
    for (const auto& d : dialogs) labels.push_back(d.issue);
    std::vector<pair::LabeledDialog> out;
    for (auto i : bootstrap_indices(labels, seed)) out.push_back(dialogs[i]);
    return out;
}

std::vector<Fold> cross_project_split(std::vector<std::string> projects) {
    std::sort(projects.begin(), projects.end());
    projects.erase(std::unique(projects.begin(), projects.end()), projects.end());
    if (projects.size() < 2)
        throw DataError("cross-project evaluation needs at least 2 projects, got " + std::to_string(projects.size()));
    std::vector<Fold> folds;
    for (const auto& test : projects) {
        Fold f{test, {}};
        for (const auto& p : projects)
            if (p != test) f.train_projects.push_back(p);
        folds.push_back(std::move(f));
    }
    return folds;
}

ProjectMetrics evaluate_dialogs(const pair::LabeledCorpus& corpus, const std::vector<pair::LabeledDialog>& dialogs,
                                const pair::Pipeline& p) {
    ProjectMetrics m;
    std::map<std::size_t, embed::TfIdfIndex> indexes;
    for (const auto& ld : dialogs) {
        const auto& log = corpus.log_of(ld);
        auto it = indexes.find(ld.log_index);
        if (it == indexes.end()) it = indexes.emplace(ld.log_index, embed::TfIdfIndex(log)).first;
        m.issue.add(pair::predict_issue(log, it->second, ld.dialog, p), ld.issue);
        if (!ld.issue) continue;
        const auto selected = pair::predict_solutions(log, it->second, ld.dialog, p);
        for (std::size_t i = 0; i < ld.dialog.body.size(); ++i) {
            const bool pred = std::any_of(selected.begin(), selected.end(),
                                          [&](const auto& s) { return s.index == ld.dialog.body[i]; });
            m.solution.add(pred, ld.solution[i]);
        }
    }
    return m;
}

namespace {

json prf_json(const PRF& r) { return {{"P", r.precision}, {"R", r.recall}, {"F1", r.f1}}; }

}  // namespace

json metrics_report(const std::map<std::string, ProjectMetrics>& per_project) {
    json per_fold = json::object();
    PRF issue_sum, sol_sum;
    for (const auto& [name, m] : per_project) {
        const auto pi = compute_prf(m.issue), ps = compute_prf(m.solution);
        per_fold[name] = {{"issue", prf_json(pi)},
                          {"solution", prf_json(ps)},
                          {"counts",
                           {{"issue", {{"tp", m.issue.tp}, {"fp", m.issue.fp}, {"fn", m.issue.fn}, {"tn", m.issue.tn}}},
                            {"solution",
                             {{"tp", m.solution.tp}, {"fp", m.solution.fp}, {"fn", m.solution.fn}, {"tn", m.solution.tn}}}}}};
        issue_sum.precision += pi.precision;
        issue_sum.recall += pi.recall;
        issue_sum.f1 += pi.f1;
        sol_sum.precision += ps.precision;
        sol_sum.recall += ps.recall;
        sol_sum.f1 += ps.f1;
    }
    const double n = per_project.empty() ? 1.0 : static_cast<double>(per_project.size());
    auto avg = [n](PRF r) {
        r.precision /= n;
        r.recall /= n;
        r.f1 /= n;
        return r;
    };
    return {{"per_fold", per_fold},
            {"macro_average", {{"issue", prf_json(avg(issue_sum))}, {"solution", prf_json(avg(sol_sum))}}}};
}

std::map<std::string, ProjectMetrics> evaluate_per_project(const pair::LabeledCorpus& corpus, const pair::Pipeline& p) {
    std::map<std::string, ProjectMetrics> out;
    for (const auto& name : corpus.communities()) out[name] = evaluate_dialogs(corpus, corpus.select({name}), p);
    return out;
}

std::map<std::string, ProjectMetrics> cross_project_evaluate(const pair::LabeledCorpus& corpus,
                                                             const pair::ModelConfig& cfg,
                                                             const encoder::Encoder& enc,
                                                             const embed::Lexicons& lex) {
    std::map<std::string, ProjectMetrics> out;
    pair::ModelConfig issue_cfg = cfg;
    issue_cfg.balance = true;  // training folds only; test folds keep their real class ratio
    for (const auto& fold : cross_project_split(corpus.communities())) {
        const auto train = corpus.select(fold.train_projects);
        const auto issue = pair::train_from_corpus(corpus, train, pair::Target::kIssue, issue_cfg, enc, lex);
        const auto solution = pair::train_from_corpus(corpus, train, pair::Target::kSolution, cfg, enc, lex);
        pair::Pipeline p{&issue, &solution, {&enc, &lex}, cfg.issue_threshold, cfg.solution_threshold};
        out[fold.test_project] = evaluate_dialogs(corpus, corpus.select({fold.test_project}), p);
    }
    return out;
}

}  // namespace chatmine::eval
