#include "chatmine/chatmine.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>

#include <json.hpp>

#include "chatmine/config.hpp"
#include "chatmine/corpus.hpp"
#include "chatmine/dialog_embed.hpp"
#include "chatmine/disentangler.hpp"
#include "chatmine/encoder.hpp"
#include "chatmine/error.hpp"
#include "chatmine/eval.hpp"
#include "chatmine/gradcheck_suite.hpp"
#include "chatmine/pairmodel.hpp"

struct cm_config {
    chatmine::config::Settings settings;
};

struct cm_model {
    chatmine::pair::PairModel model;
};

namespace {

using namespace chatmine;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

struct ArgumentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

cm_status status_of(ErrorKind k) {
    switch (k) {
        case ErrorKind::kIo: return CM_ERR_IO;
        case ErrorKind::kData: return CM_ERR_DATA;
        case ErrorKind::kConfig: return CM_ERR_CONFIG;
        case ErrorKind::kContract: return CM_ERR_CONTRACT;
        case ErrorKind::kInternal: return CM_ERR_INTERNAL;
    }
    return CM_ERR_INTERNAL;
}

template <typename F>
cm_status guarded(F&& f) {
    try {
        g_last_error.clear();
        return f();
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const ArgumentError& e) {
        g_last_error = e.what();
        return CM_ERR_ARGUMENT;
    } catch (const nlohmann::json::exception& e) {
        g_last_error = std::string("malformed JSON: ") + e.what();
        return CM_ERR_DATA;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return CM_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CM_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return CM_ERR_INTERNAL;
    }
}

void need(const void* p, const char* name) {
    if (p == nullptr) throw ArgumentError(std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require_file(const char* path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw IoError(std::string("input file not found: ") + path);
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

std::string community_for(const char* input, const char* community) {
    if (community && *community) return community;
    return fs::path(input).stem().string();
}

corpus::ChatLog load_chat(const config::Settings& s, const char* input, const char* community,
                          std::vector<corpus::SkipRecord>* skipped = nullptr) {
    require_file(input);
    const auto pcfg = s.preprocess();
    const corpus::Preprocessor pre(pcfg);
    auto parsed = corpus::parse_chat_log(input, community_for(input, community), pre);
    if (skipped) *skipped = std::move(parsed.skipped);
    return corpus::ingest(std::move(parsed.log), pcfg);
}

pair::LabeledCorpus load_labeled(const config::Settings& s, const char* path) {
    require_file(path);
    const corpus::Preprocessor pre(s.preprocess());
    return pair::load_labeled_dialogs_file(path, pre);
}

disentangle::LinkScorer load_link(const config::Settings& s) {
    const auto path = s.link_checkpoint();
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw IoError("link-scorer checkpoint not found: " + path.string());
    return disentangle::LinkScorer::load(path);
}

double link_threshold(const config::Settings& s, const disentangle::LinkScorer& scorer) {
    return s.has("link.threshold") ? s.link().threshold : scorer.config().threshold;
}

// Without explicit encoder settings, the hash encoder is rebuilt from the model's stamp.
encoder::EncoderConfig encoder_for(const config::Settings& s, const pair::PairModel& model) {
    auto cfg = s.encoder();
    if (s.has_encoder_settings()) return cfg;
    const auto& stamp = model.encoder_stamp();
    if (stamp.value("provider", std::string("hash")) != "hash") return cfg;
    cfg.dim = stamp.value("dim", cfg.dim);
    cfg.seed = stamp.value("seed", cfg.seed);
    cfg.window_radius = stamp.value("window_radius", cfg.window_radius);
    cfg.validate();
    return cfg;
}

pair::PairModel load_model(const char* path, pair::Target expected) {
    require_file(path);
    auto m = pair::PairModel::load(path);
    if (m.target() != expected)
        throw ConfigError(std::string(path) + " holds a " + pair::target_name(m.target()) + " model, expected " +
                          pair::target_name(expected));
    return m;
}

nlohmann::json train_report_json(const pair::TrainReport& r) {
    return {{"epochs_run", r.epochs_run},
            {"best_epoch", r.best_epoch},
            {"best_validation_loss", r.best_validation_loss},
            {"train_examples", r.train_examples},
            {"validation_examples", r.validation_examples},
            {"stopped_early", r.stopped_early},
            {"train_loss", r.train_loss},
            {"validation_loss", r.validation_loss}};
}

void emit_json(const nlohmann::json& j, const char* output, char** report) {
    const std::string text = j.dump(2) + "\n";
    if (output) {
        auto out = open_output(output);
        out << text;
        finish(out, output);
    }
    if (report) *report = dup_string(text);
}

}  // namespace

extern "C" {

const char* cm_version(void) { return "0.1.0"; }

const char* cm_status_string(cm_status status) {
    switch (status) {
        case CM_OK: return "ok";
        case CM_ERR_ARGUMENT: return "argument";
        case CM_ERR_IO: return "io";
        case CM_ERR_DATA: return "data";
        case CM_ERR_CONFIG: return "config";
        case CM_ERR_CONTRACT: return "contract";
        case CM_ERR_INTERNAL: return "internal";
        case CM_ERR_GRADCHECK: return "gradcheck";
    }
    return "unknown";
}

const char* cm_last_error(void) { return g_last_error.c_str(); }

void cm_free(void* p) { std::free(p); }

cm_status cm_config_create(cm_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new cm_config();
        return CM_OK;
    });
}

void cm_config_destroy(cm_config* cfg) { delete cfg; }

cm_status cm_config_load_file(cm_config* cfg, const char* path) {
    return guarded([&] {
        need(cfg, "cfg");
        need(path, "path");
        require_file(path);
        cfg->settings.load_file(path);
        return CM_OK;
    });
}

cm_status cm_config_set(cm_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        cfg->settings.set(key, value);
        return CM_OK;
    });
}

cm_status cm_config_get(const cm_config* cfg, const char* key, char** value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        const auto v = cfg->settings.get(key);
        *value = v ? dup_string(*v) : nullptr;
        return CM_OK;
    });
}

cm_status cm_preprocess_file(const cm_config* cfg, const char* input, const char* community, const char* output,
                             const char* skip_report, size_t* n_utterances) {
    return guarded([&] {
        need(cfg, "cfg");
        need(input, "input");
        need(output, "output");
        std::vector<corpus::SkipRecord> skipped;
        const auto log = load_chat(cfg->settings, input, community, &skipped);
        auto out = open_output(output);
        corpus::write_preprocessed(out, log);
        finish(out, output);
        if (skip_report) {
            auto rep = open_output(skip_report);
            corpus::write_skip_report(rep, skipped);
            finish(rep, skip_report);
        }
        if (n_utterances) *n_utterances = log.utterances.size();
        return CM_OK;
    });
}

cm_status cm_disentangle_file(const cm_config* cfg, const char* input, const char* community, const char* output,
                              size_t* n_dialogs) {
    return guarded([&] {
        need(cfg, "cfg");
        need(input, "input");
        need(output, "output");
        const auto& s = cfg->settings;
        const auto log = load_chat(s, input, community);
        const auto scorer = load_link(s);
        const auto dialogs = disentangle::assemble_dialogs(log, scorer, link_threshold(s, scorer));
        auto out = open_output(output);
        disentangle::write_dialogs(out, dialogs);
        finish(out, output);
        if (n_dialogs) *n_dialogs = dialogs.size();
        return CM_OK;
    });
}

cm_status cm_train_file(const cm_config* cfg, const char* labeled, const char* target, const char* output,
                        char** report_json) {
    return guarded([&] {
        need(cfg, "cfg");
        need(labeled, "labeled");
        need(target, "target");
        need(output, "output");
        const auto& s = cfg->settings;
        const auto corpus = load_labeled(s, labeled);
        nlohmann::json report;
        if (std::string(target) == "link") {
            auto tcfg = s.link_training();
            const auto logs = pair::link_training_logs(corpus, s.link_rounds(), tcfg.seed);
            disentangle::LinkScorer scorer(s.link());
            nn::Rng rng(tcfg.seed);
            scorer.initialize(rng);
            const auto r = disentangle::train_link_scorer(scorer, logs, tcfg);
            scorer.save(output);
            report = {{"target", "link"}, {"logs", logs.size()}, {"examples", r.examples}, {"epoch_loss", r.epoch_loss}};
        } else {
            pair::Target t;
            try {
                t = pair::target_from_name(target);
            } catch (const std::exception&) {
                throw ArgumentError(std::string("unknown target: ") + target);
            }
            const encoder::Encoder enc(s.encoder());
            const auto lex = embed::Lexicons::from_resources(s.resource_dir());
            pair::TrainReport r;
            const auto model = pair::train_from_corpus(corpus, corpus.dialogs, t, s.model(), enc, lex, &r);
            model.save(output);
            report = train_report_json(r);
            report["target"] = pair::target_name(t);
        }
        if (report_json) *report_json = dup_string(report.dump(2) + "\n");
        return CM_OK;
    });
}

cm_status cm_extract_file(const cm_config* cfg, const char* input, const char* community, const char* issue_ckpt,
                          const char* solution_ckpt, const char* output, size_t jobs, size_t* n_pairs) {
    return guarded([&] {
        need(cfg, "cfg");
        need(input, "input");
        need(issue_ckpt, "issue_ckpt");
        need(solution_ckpt, "solution_ckpt");
        need(output, "output");
        const auto& s = cfg->settings;
        const auto log = load_chat(s, input, community);
        const auto scorer = load_link(s);
        const auto issue = load_model(issue_ckpt, pair::Target::kIssue);
        const auto solution = load_model(solution_ckpt, pair::Target::kSolution);
        const encoder::Encoder enc(encoder_for(s, issue));
        pair::check_encoder(issue, enc);
        pair::check_encoder(solution, enc);
        const auto lex = embed::Lexicons::from_resources(s.resource_dir());
        const auto mcfg = s.model();
        const pair::Pipeline p{&issue, &solution, {&enc, &lex}, mcfg.issue_threshold, mcfg.solution_threshold};
        const auto dialogs = disentangle::assemble_dialogs(log, scorer, link_threshold(s, scorer));
        const auto pairs = pair::pairs_from_dialogs(log, dialogs, p, jobs == 0 ? s.jobs() : jobs);
        auto out = open_output(output);
        pair::write_pairs(out, pairs);
        finish(out, output);
        if (n_pairs) *n_pairs = pairs.size();
        return CM_OK;
    });
}

cm_status cm_eval_file(const cm_config* cfg, const char* labeled, const char* issue_ckpt, const char* solution_ckpt,
                       const char* output, char** report_json) {
    return guarded([&] {
        need(cfg, "cfg");
        need(labeled, "labeled");
        need(issue_ckpt, "issue_ckpt");
        need(solution_ckpt, "solution_ckpt");
        const auto& s = cfg->settings;
        const auto corpus = load_labeled(s, labeled);
        const auto issue = load_model(issue_ckpt, pair::Target::kIssue);
        const auto solution = load_model(solution_ckpt, pair::Target::kSolution);
        const encoder::Encoder enc(encoder_for(s, issue));
        pair::check_encoder(issue, enc);
        pair::check_encoder(solution, enc);
        const auto lex = embed::Lexicons::from_resources(s.resource_dir());
        const auto mcfg = s.model();
        const pair::Pipeline p{&issue, &solution, {&enc, &lex}, mcfg.issue_threshold, mcfg.solution_threshold};
        emit_json(eval::metrics_report(eval::evaluate_per_project(corpus, p)), output, report_json);
        return CM_OK;
    });
}

cm_status cm_eval_cross_project_file(const cm_config* cfg, const char* labeled, const char* output,
                                     char** report_json) {
    return guarded([&] {
        need(cfg, "cfg");
        need(labeled, "labeled");
        const auto& s = cfg->settings;
        const auto corpus = load_labeled(s, labeled);
        const encoder::Encoder enc(s.encoder());
        const auto lex = embed::Lexicons::from_resources(s.resource_dir());
        emit_json(eval::metrics_report(eval::cross_project_evaluate(corpus, s.model(), enc, lex)), output,
                  report_json);
        return CM_OK;
    });
}

cm_status cm_gradcheck(double tolerance, const uint64_t* seeds, size_t n_seeds, char** report_json) {
    return guarded([&] {
        if (!(tolerance > 0.0)) throw ArgumentError("tolerance must be positive");
        if (n_seeds > 0) need(seeds, "seeds");
        std::vector<std::uint64_t> list(seeds, seeds + n_seeds);
        if (list.empty()) list = {1, 2, 3};
        const auto result = nn::run_gradcheck_suite(tolerance, list);
        if (report_json) *report_json = dup_string(result.to_json().dump(2) + "\n");
        if (!result.passed()) {
            g_last_error = "gradient check failed";
            return CM_ERR_GRADCHECK;
        }
        return CM_OK;
    });
}

cm_status cm_model_load(const char* path, cm_model** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        require_file(path);
        *out = new cm_model{pair::PairModel::load(path)};
        return CM_OK;
    });
}

cm_status cm_model_info(const cm_model* model, char** info_json) {
    return guarded([&] {
        need(model, "model");
        need(info_json, "info_json");
        const auto& m = model->model;
        const nlohmann::json j = {{"target", pair::target_name(m.target())},
                                  {"input_dim", m.input_dim()},
                                  {"fused_dim", m.config().fused_dim()},
                                  {"model", m.config().to_json()},
                                  {"encoder", m.encoder_stamp()},
                                  {"training", m.training_info()}};
        *info_json = dup_string(j.dump(2) + "\n");
        return CM_OK;
    });
}

void cm_model_destroy(cm_model* model) { delete model; }

}  // extern "C"
