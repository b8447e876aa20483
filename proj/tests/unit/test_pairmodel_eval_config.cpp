#include <doctest.h>

#include <set>
#include <sstream>

#include <json.hpp>

#include "../common/synthetic.hpp"
#include "chatmine/config.hpp"
#include "chatmine/error.hpp"
#include "chatmine/eval.hpp"
#include "chatmine/pairmodel.hpp"
#include "helpers.hpp"

using namespace chatmine;

namespace {

const testing::SyntheticWorld& world() {
    static const testing::SyntheticWorld w(testing::resource_dir());
    return w;
}

pair::LabeledCorpus tiny_corpus() {
    synth::Options o;
    o.projects = 2;
    o.dialogs_per_project = 6;
    o.seed = 4;
    return world().corpus(o);
}

std::string load_error(const std::string& text) {
    std::istringstream in(text);
    try {
        pair::load_labeled_dialogs(in, world().pre);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("labeled dialog loading reports the offending line") {
    const std::string good =
        R"({"community_id":"c","issue":true,"utterances":[{"time":1,"id":"a","text":"it fails"}]})";
    CHECK(load_error("").find("no labeled dialogs") != std::string::npos);
    CHECK(load_error(good + "\nnot json\n").find("line 2: invalid json") != std::string::npos);
    CHECK(load_error(R"({"issue":true,"utterances":[]})").find("community_id") != std::string::npos);
    CHECK(load_error(R"({"community_id":"c","issue":true,"utterances":[]})").find("utterances") != std::string::npos);
    CHECK(load_error(R"({"community_id":"c","issue":true,"utterances":[{"time":-1,"id":"a","text":"x"}]})")
              .find("negative time") != std::string::npos);
    CHECK(load_error(R"({"community_id":"c","issue":false,"utterances":[{"time":1,"id":"a","text":"x","solution":true}]})")
              .find("non-issue") != std::string::npos);
    CHECK(load_error(good).empty());
}

TEST_CASE("labeled corpus builds one time-ordered log per community") {
    std::istringstream in(
        R"({"community_id":"b","dialog_id":"d1","issue":true,"utterances":[{"time":10,"id":"ann","text":"webpack build fails"},{"time":30,"id":"bo","text":"update the loader","solution":true}]})"
        "\n"
        R"({"community_id":"b","dialog_id":"d2","issue":false,"utterances":[{"time":20,"id":"cy","text":"release is out"}]})"
        "\n"
        R"({"community_id":"a","dialog_id":"d3","issue":false,"utterances":[{"time":5,"id":"cy","text":"hello"}]})");
    const auto c = pair::load_labeled_dialogs(in, world().pre);
    CHECK(c.communities() == std::vector<std::string>{"a", "b"});
    REQUIRE(c.dialogs.size() == 3);
    const auto& d1 = c.dialogs[0];
    CHECK(c.log_of(d1).size() == 3);
    CHECK(d1.dialog.members == std::vector<std::size_t>{0, 2});
    CHECK(d1.dialog.body == std::vector<std::size_t>{2});
    CHECK(d1.solution == std::vector<bool>{true});
    CHECK(c.select({"a"}).size() == 1);

    const auto links = pair::link_training_logs(c, 0, 1);
    REQUIRE(links.size() == 2);
    CHECK(links[1].gold_parent[2] == 0);
    CHECK(links[1].gold_parent[1] == disentangle::kSelf);
}

TEST_CASE("examples carry encoder-sized centers and windows") {
    const auto corpus = tiny_corpus();
    encoder::Encoder enc(testing::small_encoder_config());
    const pair::FeatureResources res{&enc, &world().lexicons};
    const auto issues = pair::build_examples(corpus, corpus.dialogs, pair::Target::kIssue, res);
    CHECK(issues.size() == corpus.dialogs.size());
    std::size_t bodies = 0;
    for (const auto& d : corpus.dialogs)
        if (d.issue) bodies += d.dialog.body.size();
    const auto sols = pair::build_examples(corpus, corpus.dialogs, pair::Target::kSolution, res);
    CHECK(sols.size() == bodies);
    for (const auto& ex : issues) {
        CHECK(ex.center.size() == 64);
        CHECK(ex.window.shape == nn::Shape{3, 64});
        CHECK(ex.pad[0]);  // the head has no predecessor
    }
}

TEST_CASE("single-class training data is rejected") {
    pair::PairModel m(pair::Target::kIssue, testing::small_model_config(), 64);
    pair::Example ex;
    ex.center.assign(64, 0.1);
    ex.window = nn::Tensor({3, 64});
    ex.pad = {true, false, true};
    CHECK_THROWS_AS(pair::train_model(m, {ex, ex}), DataError);
    CHECK_THROWS_AS(pair::train_model(m, {}), DataError);
}

TEST_CASE("trained models survive save and load with the same probabilities") {
    const auto corpus = tiny_corpus();
    encoder::Encoder enc(testing::small_encoder_config());
    auto cfg = testing::small_model_config();
    cfg.max_epochs = 3;
    pair::TrainReport rep;
    const auto model = pair::train_from_corpus(corpus, corpus.dialogs, pair::Target::kIssue, cfg, enc,
                                               world().lexicons, &rep);
    CHECK(rep.epochs_run >= 1);
    CHECK(rep.train_loss.size() == rep.epochs_run);
    CHECK(model.fused_values(pair::build_examples(corpus, {corpus.dialogs[0]}, pair::Target::kIssue,
                                                  {&enc, &world().lexicons})[0])
              .size() == cfg.fused_dim());

    const auto path = testing::temp_path("issue.ckpt");
    model.save(path);
    const auto back = pair::PairModel::load(path);
    CHECK(back.target() == pair::Target::kIssue);
    CHECK(back.config().hidden == cfg.hidden);
    CHECK(back.training_info() == model.training_info());
    for (const auto& ex : pair::build_examples(corpus, corpus.dialogs, pair::Target::kIssue, {&enc, &world().lexicons}))
        CHECK(back.probability(ex) == doctest::Approx(model.probability(ex)).epsilon(1e-5));

    CHECK_NOTHROW(pair::check_encoder(back, enc));
    auto other = testing::small_encoder_config();
    other.seed = 3;
    CHECK_THROWS_AS(pair::check_encoder(back, encoder::Encoder(other)), ConfigError);
    other = testing::small_encoder_config();
    other.dim = 32;
    CHECK_THROWS_AS(pair::check_encoder(back, encoder::Encoder(other)), ConfigError);
}

TEST_CASE("pairs are written as one JSON object per line") {
    pair::IssueSolutionPair a;
    a.community_id = "c";
    a.subject_id = 3;
    a.issue_text = "it fails";
    a.p_issue = 0.75;
    pair::IssueSolutionPair b = a;
    b.solutions.push_back({"try this", "bob", 42, 0.5});
    std::ostringstream os;
    pair::write_pairs(os, {a, b});
    std::istringstream in(os.str());
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    const auto j1 = nlohmann::json::parse(l1);
    const auto j2 = nlohmann::json::parse(l2);
    CHECK(j1.at("status") == "unresolved");
    CHECK(j1.at("solutions").empty());
    CHECK(j2.at("status") == "answered");
    CHECK(j2.at("solutions").at(0).at("author") == "bob");
    CHECK(j2.at("subject_id") == 3);
}

TEST_CASE("compute_prf closed forms and the 0/0 convention") {
    eval::ConfusionCounts c{3, 1, 2, 0};
    auto r = eval::compute_prf(c);
    CHECK(r.precision == 0.75);
    CHECK(r.recall == 0.6);
    CHECK(r.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    r = eval::compute_prf({});
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
    r = eval::compute_prf({5, 0, 0, 7});
    CHECK(r.f1 == 1.0);

    eval::ConfusionCounts acc;
    acc.add(true, true);
    acc.add(true, false);
    acc.add(false, true);
    acc.add(false, false);
    CHECK(acc.tp == 1);
    CHECK(acc.fp == 1);
    CHECK(acc.fn == 1);
    CHECK(acc.tn == 1);
}

TEST_CASE("bootstrap balancing keeps every original and equalizes classes") {
    const std::vector<bool> labels = {true, false, false, false, true, false};
    const auto idx = eval::bootstrap_indices(labels, 9);
    REQUIRE(idx.size() == 8);
    for (std::size_t i = 0; i < 6; ++i) CHECK(idx[i] == i);
    for (std::size_t i = 6; i < 8; ++i) CHECK(labels[idx[i]]);
    CHECK(eval::bootstrap_indices(labels, 9) == idx);
    CHECK_THROWS_AS(eval::bootstrap_indices({true, true}, 1), DataError);
}

TEST_CASE("cross-project split: one fold per project, sorted") {
    const auto folds = eval::cross_project_split({"zeta", "alpha", "mid"});
    REQUIRE(folds.size() == 3);
    CHECK(folds[0].test_project == "alpha");
    CHECK(folds[0].train_projects == std::vector<std::string>{"mid", "zeta"});
    const auto two = eval::cross_project_split({"b", "a"});
    CHECK(two[1].train_projects == std::vector<std::string>{"a"});
    CHECK_THROWS_AS(eval::cross_project_split({"only"}), DataError);
}

TEST_CASE("metrics report has per-fold entries and a macro average") {
    std::map<std::string, eval::ProjectMetrics> m;
    m["a"].issue = {1, 0, 0, 1};
    m["b"].issue = {0, 1, 1, 0};
    const auto j = eval::metrics_report(m);
    CHECK(j.at("per_fold").at("a").at("issue").at("F1") == 1.0);
    CHECK(j.at("macro_average").at("issue").at("F1") == 0.5);
}

TEST_CASE("settings: sections, quoting, unknown keys, layering") {
    config::Settings s;
    std::istringstream in("# comment\nseed = 7\n[model]\ndropout = 0.25\nconv_kernels = \"8, 4\"\n");
    s.parse(in, "inline");
    CHECK(s.seed() == 7);
    const auto m = s.model();
    CHECK(m.dropout == 0.25);
    CHECK(m.conv.kernels == std::vector<std::size_t>{8, 4});
    s.set("model.dropout", "0.5");
    CHECK(s.model().dropout == 0.5);
    CHECK_FALSE(s.has_encoder_settings());
    s.set("encoder.dim", "64");
    CHECK(s.has_encoder_settings());
    CHECK(s.encoder().dim == 64);

    CHECK_THROWS_AS(s.set("model.nope", "1"), ConfigError);
    std::istringstream bad("[model\n");
    CHECK_THROWS_AS(s.parse(bad, "bad"), ConfigError);
    std::istringstream novalue("seed\n");
    CHECK_THROWS_AS(s.parse(novalue, "bad"), ConfigError);
    s.set("model.dropout", "lots");
    CHECK_THROWS_AS(s.model(), ConfigError);
}
