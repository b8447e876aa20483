#include "chatmine/pairmodel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "chatmine/checkpoint.hpp"
#include "chatmine/error.hpp"
#include "chatmine/eval.hpp"

namespace chatmine::pair {

using corpus::ChatLog;
using disentangle::Dialog;
using nlohmann::json;
using nn::Tape;
using nn::Tensor;
using nn::Var;

std::string target_name(Target t) { return t == Target::kIssue ? "issue" : "solution"; }

Target target_from_name(const std::string& name) {
    if (name == "issue") return Target::kIssue;
    if (name == "solution") return Target::kSolution;
    throw ConfigError("unknown model target: " + name);
}

void ModelConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("early_stop_patience must be >= 1");
    if (!(issue_threshold >= 0.2 && issue_threshold <= 0.8)) throw ConfigError("issue_threshold must be in [0.2, 0.8]");
    if (!(solution_threshold >= 0.2 && solution_threshold <= 0.8))
        throw ConfigError("solution_threshold must be in [0.2, 0.8]");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation_fraction must be in [0, 1)");
    if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
        throw ConfigError("Adam betas must be in [0, 1)");
    if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (attention_dim < 1 || hidden < 1) throw ConfigError("layer widths must be >= 1");
    if (conv.kernels.empty()) throw ConfigError("conv stack needs at least one stage");
}

json ModelConfig::to_json() const {
    return {{"batch_size", batch_size},
            {"dropout", dropout},
            {"lr", adam.lr},
            {"beta1", adam.beta1},
            {"beta2", adam.beta2},
            {"epsilon", adam.epsilon},
            {"max_epochs", max_epochs},
            {"early_stop_patience", patience},
            {"issue_threshold", issue_threshold},
            {"solution_threshold", solution_threshold},
            {"validation_fraction", validation_fraction},
            {"balance", balance},
            {"seed", seed},
            {"conv_kernels", conv.kernels},
            {"kernel_size", conv.kernel_size},
            {"attention_dim", attention_dim},
            {"hidden", hidden}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.adam.lr = j.at("lr").get<double>();
    c.adam.beta1 = j.at("beta1").get<double>();
    c.adam.beta2 = j.at("beta2").get<double>();
    c.adam.epsilon = j.at("epsilon").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("early_stop_patience").get<std::size_t>();
    c.issue_threshold = j.at("issue_threshold").get<double>();
    c.solution_threshold = j.at("solution_threshold").get<double>();
    c.validation_fraction = j.at("validation_fraction").get<double>();
    c.balance = j.at("balance").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.conv.kernels = j.at("conv_kernels").get<std::vector<std::size_t>>();
    c.conv.kernel_size = j.at("kernel_size").get<std::size_t>();
    c.attention_dim = j.at("attention_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    return c;
}

// ---------------------------------------------------------------------------

std::vector<std::string> LabeledCorpus::communities() const {
    std::vector<std::string> out;
    for (const auto& l : logs) out.push_back(l.community_id);
    return out;
}

std::vector<LabeledDialog> LabeledCorpus::select(const std::vector<std::string>& communities) const {
    std::vector<LabeledDialog> out;
    for (const auto& d : dialogs)
        if (std::find(communities.begin(), communities.end(), logs[d.log_index].community_id) != communities.end())
            out.push_back(d);
    return out;
}

LabeledCorpus load_labeled_dialogs(std::istream& in, const corpus::Preprocessor& pre) {
    struct RawDialog {
        std::string community, id;
        bool issue = false;
        std::vector<corpus::RawMessage> messages;
        std::vector<bool> solution;
    };
    std::vector<RawDialog> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "labeled dialogs line " + std::to_string(line_no) + ": ";
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw DataError(where + "invalid json");
        RawDialog r;
        if (!j.contains("community_id") || !j["community_id"].is_string() || j["community_id"].get<std::string>().empty())
            throw DataError(where + "missing community_id");
        r.community = j["community_id"].get<std::string>();
        r.id = j.value("dialog_id", std::to_string(raw.size()));
        if (!j.contains("issue") || !j["issue"].is_boolean()) throw DataError(where + "missing boolean field: issue");
        r.issue = j["issue"].get<bool>();
        if (!j.contains("utterances") || !j["utterances"].is_array() || j["utterances"].empty())
            throw DataError(where + "dialog needs a nonempty utterances array");
        for (const auto& u : j["utterances"]) {
            if (!u.is_object() || !u.contains("time") || !u["time"].is_number_integer() || !u.contains("id") ||
                !u["id"].is_string() || u["id"].get<std::string>().empty() || !u.contains("text") || !u["text"].is_string())
                throw DataError(where + "utterance needs integer time, nonempty id and text");
            if (u["time"].get<std::int64_t>() < 0) throw DataError(where + "negative time");
            r.messages.push_back({u["time"].get<std::int64_t>(), u["id"].get<std::string>(), u["text"].get<std::string>()});
            r.solution.push_back(u.value("solution", false));
        }
        if (!r.issue && std::find(r.solution.begin(), r.solution.end(), true) != r.solution.end())
            throw DataError(where + "solution labels on a non-issue dialog");
        raw.push_back(std::move(r));
    }
    if (raw.empty()) throw DataError("no labeled dialogs");

    LabeledCorpus out;
    std::map<std::string, std::vector<std::size_t>> by_community;
    for (std::size_t i = 0; i < raw.size(); ++i) by_community[raw[i].community].push_back(i);

    struct Slot {
        std::size_t dialog, utterance;
    };
    std::vector<std::vector<std::size_t>> members(raw.size());
    std::vector<std::map<std::size_t, bool>> label_of(raw.size());
    std::vector<std::size_t> log_of(raw.size());
    for (const auto& [community, ids] : by_community) {
        std::vector<Slot> slots;
        for (auto di : ids)
            for (std::size_t ui = 0; ui < raw[di].messages.size(); ++ui) slots.push_back({di, ui});
        std::stable_sort(slots.begin(), slots.end(), [&](const Slot& a, const Slot& b) {
            return raw[a.dialog].messages[a.utterance].time < raw[b.dialog].messages[b.utterance].time;
        });
        ChatLog log;
        log.community_id = community;
        for (const auto& s : slots) {
            auto u = pre.preprocess(raw[s.dialog].messages[s.utterance]);
            u.index = log.utterances.size();
            members[s.dialog].push_back(u.index);
            label_of[s.dialog][u.index] = raw[s.dialog].solution[s.utterance];
            log.utterances.push_back(std::move(u));
        }
        for (auto di : ids) log_of[di] = out.logs.size();
        out.logs.push_back(std::move(log));
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        LabeledDialog ld;
        ld.dialog_id = raw[i].id;
        ld.log_index = log_of[i];
        ld.issue = raw[i].issue;
        ld.dialog = disentangle::make_dialog(out.logs[log_of[i]], members[i]);
        for (auto b : ld.dialog.body) ld.solution.push_back(label_of[i].at(b));
        out.dialogs.push_back(std::move(ld));
    }
    return out;
}

LabeledCorpus load_labeled_dialogs_file(const std::filesystem::path& path, const corpus::Preprocessor& pre) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read labeled dialogs: " + path.string());
    return load_labeled_dialogs(in, pre);
}

std::vector<disentangle::ThreadedLog> link_training_logs(const LabeledCorpus& corpus, std::size_t rounds,
                                                         std::uint64_t seed) {
    std::vector<disentangle::ThreadedLog> out;
    std::vector<std::vector<const LabeledDialog*>> per_log(corpus.logs.size());
    for (const auto& d : corpus.dialogs) per_log[d.log_index].push_back(&d);
    for (std::size_t li = 0; li < corpus.logs.size(); ++li) {
        disentangle::ThreadedLog tl;
        tl.log = corpus.logs[li];
        tl.gold_parent.assign(tl.log.size(), disentangle::kSelf);
        tl.thread_of.assign(tl.log.size(), 0);
        for (std::size_t k = 0; k < per_log[li].size(); ++k) {
            const auto& m = per_log[li][k]->dialog.members;
            for (std::size_t j = 0; j < m.size(); ++j) {
                tl.thread_of[m[j]] = k;
                if (j > 0) tl.gold_parent[m[j]] = m[j - 1];
            }
        }
        out.push_back(std::move(tl));
    }
    nn::Rng rng(seed);
    for (std::size_t r = 0; r < rounds; ++r) {
        for (std::size_t li = 0; li < corpus.logs.size(); ++li) {
            auto pool = per_log[li];
            rng.shuffle(pool);
            for (std::size_t at = 0; at < pool.size();) {
                const std::size_t take = std::min(pool.size() - at, 2 + rng.index(4));
                std::vector<std::vector<corpus::Utterance>> threads;
                for (std::size_t k = at; k < at + take; ++k) {
                    std::vector<corpus::Utterance> th;
                    for (auto m : pool[k]->dialog.members) th.push_back(corpus.logs[li][m]);
                    threads.push_back(std::move(th));
                }
                auto tl = disentangle::interleave_threads(threads, rng, corpus.logs[li].utterances.front().time);
                tl.log.community_id = corpus.logs[li].community_id;
                out.push_back(std::move(tl));
                at += take;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<encoder::UtteranceEncoding> dialog_encodings(const ChatLog& log, const Dialog& d,
                                                         const encoder::Encoder& enc) {
    std::vector<encoder::UtteranceEncoding> seq;
    seq.reserve(1 + d.body.size());
    seq.push_back(enc.encode(d.head));
    for (auto b : d.body) seq.push_back(enc.encode(log[b]));
    return seq;
}

namespace {

Example make_example(const std::vector<encoder::UtteranceEncoding>& seq, std::size_t at, std::size_t k,
                     const std::array<double, embed::kHeuristicDim>& heur, bool label) {
    Example ex;
    const auto win = encoder::build_local_window(seq, at, k);
    const std::size_t d = seq[at].vector.size();
    ex.center = seq[at].vector;
    ex.window = Tensor({win.vectors.size(), d});
    for (std::size_t s = 0; s < win.vectors.size(); ++s)
        std::copy(win.vectors[s].begin(), win.vectors[s].end(), ex.window.row(s).begin());
    ex.pad = win.pad_mask;
    ex.heuristics = heur;
    ex.label = label ? 1 : 0;
    return ex;
}

embed::DialogContext context_for(const ChatLog& log, const embed::TfIdfIndex& tfidf, const Dialog& d,
                                 std::size_t position) {
    return {&log, &tfidf, &d, position};
}

std::size_t member_position(const Dialog& d, std::size_t log_index) {
    auto it = std::find(d.members.begin(), d.members.end(), log_index);
    CHATMINE_REQUIRE(it != d.members.end(), "utterance is not a member of the dialog");
    return static_cast<std::size_t>(it - d.members.begin()) + 1;
}

}  // namespace

Example issue_example(const ChatLog& log, const embed::TfIdfIndex& tfidf, const Dialog& d,
                      const FeatureResources& res, bool label) {
    CHATMINE_REQUIRE(res.encoder && res.lexicons, "feature resources are incomplete");
    CHATMINE_REQUIRE(!d.head_sources.empty(), "dialog head is empty");
    const auto seq = dialog_encodings(log, d, *res.encoder);
    const auto heur = embed::heuristic_attributes(d.head, context_for(log, tfidf, d, 1), *res.lexicons);
    return make_example(seq, 0, res.encoder->config().window_radius, heur, label);
}

std::vector<Example> solution_examples(const ChatLog& log, const embed::TfIdfIndex& tfidf, const Dialog& d,
                                       const FeatureResources& res, const std::vector<bool>& labels) {
    CHATMINE_REQUIRE(res.encoder && res.lexicons, "feature resources are incomplete");
    CHATMINE_REQUIRE(labels.empty() || labels.size() == d.body.size(), "one solution label per body utterance");
    std::vector<Example> out;
    if (d.body.empty()) return out;
    const auto seq = dialog_encodings(log, d, *res.encoder);
    for (std::size_t i = 0; i < d.body.size(); ++i) {
        const auto& u = log[d.body[i]];
        const auto heur =
            embed::heuristic_attributes(u, context_for(log, tfidf, d, member_position(d, d.body[i])), *res.lexicons);
        out.push_back(make_example(seq, i + 1, res.encoder->config().window_radius, heur,
                                   !labels.empty() && labels[i]));
    }
    return out;
}

std::vector<Example> build_examples(const LabeledCorpus& corpus, const std::vector<LabeledDialog>& dialogs,
                                    Target target, const FeatureResources& res) {
    std::map<std::size_t, embed::TfIdfIndex> indexes;
    auto index_for = [&](std::size_t li) -> const embed::TfIdfIndex& {
        auto it = indexes.find(li);
        if (it == indexes.end()) it = indexes.emplace(li, embed::TfIdfIndex(corpus.logs.at(li))).first;
        return it->second;
    };
    std::vector<Example> out;
    for (const auto& ld : dialogs) {
        const auto& log = corpus.logs.at(ld.log_index);
        if (target == Target::kIssue) {
            out.push_back(issue_example(log, index_for(ld.log_index), ld.dialog, res, ld.issue));
        } else if (ld.issue) {
            auto ex = solution_examples(log, index_for(ld.log_index), ld.dialog, res, ld.solution);
            std::move(ex.begin(), ex.end(), std::back_inserter(out));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

PairModel::PairModel(Target target, ModelConfig cfg, std::size_t input_dim)
    : target_(target), cfg_(std::move(cfg)), input_dim_(input_dim) {
    cfg_.validate();
    cfg_.conv.validate(input_dim_);
    embed::add_conv_parameters(params_, cfg_.conv);
    params_.add("attn.WQ", {cfg_.attention_dim, input_dim_});
    params_.add("attn.WK", {cfg_.attention_dim, input_dim_});
    params_.add("attn.WV", {cfg_.attention_dim, input_dim_});
    params_.add("fc1.W", {cfg_.hidden, cfg_.fused_dim()});
    params_.add("fc1.b", {cfg_.hidden});
    params_.add("fc2.W", {2, cfg_.hidden});
    params_.add("fc2.b", {2});
}

void PairModel::initialize(nn::Rng& rng) {
    embed::init_conv_parameters(params_, cfg_.conv, rng);
    for (const char* n : {"attn.WQ", "attn.WK", "attn.WV"})
        nn::glorot_uniform(params_.get(n).value, input_dim_, cfg_.attention_dim, rng);
    nn::glorot_uniform(params_.get("fc1.W").value, cfg_.fused_dim(), cfg_.hidden, rng);
    params_.get("fc1.b").value.fill(0.0);
    nn::glorot_uniform(params_.get("fc2.W").value, cfg_.hidden, 2, rng);
    params_.get("fc2.b").value.fill(0.0);
}

void PairModel::stamp_encoder(const encoder::Encoder& enc) {
    const auto& c = enc.config();
    encoder_stamp_ = {{"provider", encoder::provider_name(c.provider)},
                      {"dim", c.dim},
                      {"seed", c.seed},
                      {"window_radius", c.window_radius},
                      {"fingerprint", enc.fingerprint()}};
}

void check_encoder(const PairModel& model, const encoder::Encoder& enc) {
    const auto& c = enc.config();
    if (model.input_dim() != c.dim)
        throw ConfigError("checkpoint expects encoder dim " + std::to_string(model.input_dim()) +
                          " but the runtime encoder has dim " + std::to_string(c.dim));
    const auto& stamp = model.encoder_stamp();
    if (stamp.empty()) return;
    if (stamp.value("window_radius", c.window_radius) != c.window_radius)
        throw ConfigError("checkpoint was trained with window radius " + stamp["window_radius"].dump() +
                          " but the runtime encoder uses " + std::to_string(c.window_radius));
    const auto fp = stamp.value("fingerprint", std::string());
    if (fp != enc.fingerprint())
        throw ConfigError("encoder mismatch: checkpoint was trained with " + stamp.value("provider", std::string("?")) +
                          " encoder (fingerprint " + fp + ") but the runtime encoder is " +
                          encoder::provider_name(c.provider) + " (fingerprint " + enc.fingerprint() + ")");
}

Var PairModel::fused(Tape& t, const Example& ex, const embed::LeafSource& leaves, bool training, nn::Rng* rng) const {
    CHATMINE_REQUIRE(ex.center.size() == input_dim_, "example dimension does not match the model");
    CHATMINE_REQUIRE(ex.window.rank() == 2 && ex.window.cols() == input_dim_, "window dimension does not match the model");
    Var x = t.constant(Tensor::vector(ex.center));
    Var textual = embed::conv_stack(t, x, cfg_.conv, leaves, cfg_.dropout, rng, training);
    const auto h = stats_.apply(ex.heuristics);
    Var heur = t.constant(Tensor::vector(std::vector<double>(h.begin(), h.end())));
    Var ctx = embed::local_attention(t, t.view(ex.window), ex.pad, leaves(t, "attn.WQ"), leaves(t, "attn.WK"),
                                     leaves(t, "attn.WV"));
    return nn::concat(t, {textual, heur, ctx});
}

Var PairModel::head(Tape& t, Var f, const embed::LeafSource& leaves, bool training, nn::Rng* rng) const {
    Var z = nn::relu(t, nn::linear(t, f, leaves(t, "fc1.W"), leaves(t, "fc1.b")));
    if (training && cfg_.dropout > 0.0) {
        CHATMINE_REQUIRE(rng != nullptr, "training needs a generator");
        z = nn::dropout(t, z, cfg_.dropout, *rng, true);
    }
    return nn::linear(t, z, leaves(t, "fc2.W"), leaves(t, "fc2.b"));
}

Var PairModel::logits(Tape& t, const Example& ex, bool training, nn::Rng* rng) {
    embed::LeafSource leaves{&params_, nullptr};
    return head(t, fused(t, ex, leaves, training, rng), leaves, training, rng);
}

double PairModel::probability(const Example& ex) const {
    Tape t(false);
    embed::LeafSource leaves{nullptr, &params_};
    Var z = head(t, fused(t, ex, leaves, false, nullptr), leaves, false, nullptr);
    return nn::softmax_values(t.value(z).data)[1];
}

std::vector<double> PairModel::fused_values(const Example& ex) const {
    Tape t(false);
    embed::LeafSource leaves{nullptr, &params_};
    return t.value(fused(t, ex, leaves, false, nullptr)).data;
}

void PairModel::save(const std::filesystem::path& path) const {
    json meta = {{"kind", "pairmodel"},
                 {"target", target_name(target_)},
                 {"input_dim", input_dim_},
                 {"model", cfg_.to_json()},
                 {"encoder", encoder_stamp_},
                 {"heuristic_stats", stats_.to_json()},
                 {"training", info_}};
    nn::save_checkpoint(path, params_, meta);
}

PairModel PairModel::load(const std::filesystem::path& path) {
    const auto ckpt = nn::load_checkpoint(path);
    const auto& m = ckpt.meta;
    if (m.value("kind", std::string()) != "pairmodel")
        throw ConfigError("checkpoint is not an issue/solution model: " + path.string());
    try {
        PairModel model(target_from_name(m.at("target").get<std::string>()), ModelConfig::from_json(m.at("model")),
                        m.at("input_dim").get<std::size_t>());
        nn::restore_parameters(ckpt, model.params_);
        model.stats_ = embed::Standardizer::from_json(m.at("heuristic_stats"));
        model.encoder_stamp_ = m.value("encoder", json::object());
        model.info_ = m.value("training", json::object());
        return model;
    } catch (const json::exception& e) {
        throw ConfigError("malformed checkpoint manifest in " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

namespace {

double mean_loss(PairModel& model, const std::vector<Example>& examples, const std::vector<std::size_t>& idx) {
    double total = 0.0;
    for (auto i : idx) {
        const double p = model.probability(examples[i]);
        const double q = examples[i].label == 1 ? p : 1.0 - p;
        total += -std::log(std::max(q, 1e-12));
    }
    return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

}  // namespace

TrainReport train_model(PairModel& model, const std::vector<Example>& examples) {
    const auto& cfg = model.config();
    std::size_t positives = 0;
    for (const auto& ex : examples) positives += ex.label;
    const std::string what = target_name(model.target());
    if (examples.empty()) throw DataError("no training examples for the " + what + " model");
    if (positives == 0 || positives == examples.size())
        throw DataError("training data for the " + what + " model has a single class (" + std::to_string(positives) +
                        " positive, " + std::to_string(examples.size() - positives) + " negative)");

    nn::Rng rng(cfg.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(examples.size()) + 0.5));
    if (n_val >= examples.size()) n_val = examples.size() - 1;
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());

    std::vector<std::array<double, embed::kHeuristicDim>> rows;
    for (auto i : train) rows.push_back(examples[i].heuristics);
    model.set_standardizer(embed::Standardizer::fit(rows));
    model.initialize(rng);

    nn::Adam adam(model.params(), cfg.adam);
    TrainReport report;
    report.train_examples = train.size();
    report.validation_examples = val.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<Tensor> snapshot;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(train);
        double total = 0.0;
        for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(train.size(), start + cfg.batch_size);
            Tape tape;
            std::vector<Var> losses;
            for (std::size_t k = start; k < end; ++k) {
                const auto& ex = examples[train[k]];
                losses.push_back(nn::softmax_cross_entropy(tape, model.logits(tape, ex, true, &rng), ex.label));
            }
            Var loss = nn::sum(tape, losses, 1.0 / static_cast<double>(losses.size()));
            total += tape.value(loss).data[0] * static_cast<double>(losses.size());
            tape.backward(loss);
            adam.step();
        }
        report.train_loss.push_back(total / static_cast<double>(train.size()));
        std::sort(train.begin(), train.end());
        const double vloss = val.empty() ? mean_loss(model, examples, train) : mean_loss(model, examples, val);
        report.validation_loss.push_back(vloss);
        report.epochs_run = epoch;
        if (vloss < best) {
            best = vloss;
            report.best_epoch = epoch;
            snapshot.clear();
            for (const auto& p : model.params()) snapshot.push_back(p->value);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            report.stopped_early = true;
            break;
        }
    }
    for (std::size_t i = 0; i < snapshot.size(); ++i) model.params()[i].value = snapshot[i];
    report.best_validation_loss = best;
    model.set_training_info({{"epochs_run", report.epochs_run},
                             {"best_epoch", report.best_epoch},
                             {"best_validation_loss", report.best_validation_loss},
                             {"train_examples", report.train_examples},
                             {"validation_examples", report.validation_examples},
                             {"stopped_early", report.stopped_early}});
    return report;
}

PairModel train_from_corpus(const LabeledCorpus& corpus, const std::vector<LabeledDialog>& dialogs, Target target,
                            const ModelConfig& cfg, const encoder::Encoder& enc, const embed::Lexicons& lex,
                            TrainReport* report) {
    std::vector<LabeledDialog> data = dialogs;
    if (target == Target::kIssue && cfg.balance) data = eval::bootstrap_balance(data, cfg.seed);
    const auto examples = build_examples(corpus, data, target, {&enc, &lex});
    PairModel model(target, cfg, enc.dim());
    model.stamp_encoder(enc);
    auto r = train_model(model, examples);
    if (report) *report = std::move(r);
    return model;
}

// ---------------------------------------------------------------------------

bool predict_issue(const ChatLog& log, const embed::TfIdfIndex& tfidf, const Dialog& d, const Pipeline& p,
                   Prediction* out) {
    CHATMINE_REQUIRE(p.issue != nullptr, "pipeline has no issue model");
    const double prob = p.issue->probability(issue_example(log, tfidf, d, p.resources));
    if (out) {
        out->p_issue = prob;
        out->issue_threshold = p.issue_threshold;
    }
    return prob >= p.issue_threshold;
}

std::vector<SelectedSolution> predict_solutions(const ChatLog& log, const embed::TfIdfIndex& tfidf, const Dialog& d,
                                                const Pipeline& p, Prediction* out) {
    CHATMINE_REQUIRE(p.solution != nullptr, "pipeline has no solution model");
    std::vector<SelectedSolution> selected;
    const auto examples = solution_examples(log, tfidf, d, p.resources);
    if (out) {
        out->p_solution.clear();
        out->solution_threshold = p.solution_threshold;
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const double prob = p.solution->probability(examples[i]);
        if (out) out->p_solution.push_back(prob);
        if (prob >= p.solution_threshold) selected.push_back({d.body[i], prob});
    }
    return selected;
}

std::vector<IssueSolutionPair> pairs_from_dialogs(const ChatLog& log, const std::vector<Dialog>& dialogs,
                                                  const Pipeline& p, std::size_t jobs) {
    CHATMINE_REQUIRE(p.issue && p.solution && p.resources.encoder && p.resources.lexicons,
                     "pipeline is missing a model or resources");
    check_encoder(*p.issue, *p.resources.encoder);
    check_encoder(*p.solution, *p.resources.encoder);
    const embed::TfIdfIndex tfidf(log);
    std::vector<std::optional<IssueSolutionPair>> results(dialogs.size());

    auto work = [&](std::size_t i) {
        const auto& d = dialogs[i];
        Prediction pred;
        if (!predict_issue(log, tfidf, d, p, &pred)) return;
        IssueSolutionPair pair;
        pair.community_id = log.community_id;
        pair.subject_id = d.subject_id;
        pair.issue_text = d.head.raw_text;
        pair.p_issue = pred.p_issue;
        for (const auto& s : predict_solutions(log, tfidf, d, p))
            pair.solutions.push_back({log[s.index].raw_text, log[s.index].author_id, log[s.index].time, s.probability});
        results[i] = std::move(pair);
    };

    jobs = std::max<std::size_t>(1, std::min(jobs, dialogs.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < dialogs.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mu;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < jobs; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < dialogs.size();) {
                    try {
                        work(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<IssueSolutionPair> out;
    for (auto& r : results)
        if (r) out.push_back(std::move(*r));
    return out;
}

std::vector<IssueSolutionPair> assemble_pairs(const ChatLog& log, const disentangle::LinkScorer& scorer,
                                              const Pipeline& p, std::size_t jobs) {
    return pairs_from_dialogs(log, disentangle::assemble_dialogs(log, scorer), p, jobs);
}

void write_pairs(std::ostream& out, const std::vector<IssueSolutionPair>& pairs) {
    for (const auto& pr : pairs) {
        json sols = json::array();
        for (const auto& s : pr.solutions)
            sols.push_back({{"text", s.text}, {"author", s.author}, {"time", s.time}, {"p", s.p}});
        out << json{{"community_id", pr.community_id},
                    {"subject_id", pr.subject_id},
                    {"issue_text", pr.issue_text},
                    {"solutions", sols},
                    {"status", pr.status()},
                    {"p_issue", pr.p_issue}}
                   .dump()
            << '\n';
    }
}

}  // namespace chatmine::pair
