#include <chatmine/chatmine.h>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace {

constexpr int kExitGradcheck = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

int exit_code(cm_status s) {
    switch (s) {
        case CM_OK: return 0;
        case CM_ERR_ARGUMENT: return kExitUsage;
        case CM_ERR_IO:
        case CM_ERR_DATA:
        case CM_ERR_CONFIG: return kExitData;
        case CM_ERR_GRADCHECK: return kExitGradcheck;
        default: return kExitInternal;
    }
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

int fail(cm_status s) {
    std::cerr << "chatmine: error: " << cm_status_string(s) << ": " << one_line(cm_last_error()) << "\n";
    return exit_code(s);
}

struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { cm_free(p); }
};

using ConfigPtr = std::unique_ptr<cm_config, decltype(&cm_config_destroy)>;

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mine issue-solution pairs from developer chat logs"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, resources;
    std::uint64_t seed = 0;
    std::size_t jobs = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Settings file (key = value, [section] headers)");
    auto* seed_opt = app.add_option("--seed", seed, "Seed for every random choice");
    app.add_option("--jobs", jobs, "Worker threads for extract")->check(CLI::PositiveNumber);
    app.add_option("--resources", resources, "Lexicon, rule and model directory");
    app.add_option("--set", overrides, "Override one setting, e.g. --set model.dropout=0.5");

    std::string input, output, community, skip_report, link_ckpt, data, target, report_out;
    std::string issue_ckpt, solution_ckpt;

    auto* pre = app.add_subcommand("preprocess", "Clean and merge a raw chat log");
    pre->add_option("--input", input, "Chat JSONL")->required();
    pre->add_option("--out", output, "Preprocessed JSONL")->required();
    pre->add_option("--community", community, "Community id (default: input file stem)");
    pre->add_option("--skip-report", skip_report, "JSONL list of skipped lines");

    auto* dis = app.add_subcommand("disentangle", "Split a chat log into dialogs");
    dis->add_option("--input", input, "Chat JSONL")->required();
    dis->add_option("--out", output, "Dialogs JSONL")->required();
    dis->add_option("--community", community, "Community id (default: input file stem)");
    dis->add_option("--link-ckpt", link_ckpt, "Link-scorer checkpoint");

    auto* train = app.add_subcommand("train", "Train a model on labeled dialogs");
    train->add_option("--data", data, "Labeled dialogs JSONL")->required();
    train->add_option("--target", target, "Model to train")
        ->required()
        ->check(CLI::IsMember({"issue", "solution", "link"}));
    train->add_option("--out", output, "Checkpoint path")->required();
    train->add_option("--report", report_out, "Write the training report JSON here");

    auto* extract = app.add_subcommand("extract", "Extract issue-solution pairs from a chat log");
    extract->add_option("--input", input, "Chat JSONL")->required();
    extract->add_option("--issue-ckpt", issue_ckpt, "Issue model checkpoint")->required();
    extract->add_option("--solution-ckpt", solution_ckpt, "Solution model checkpoint")->required();
    extract->add_option("--out", output, "Pairs JSONL")->required();
    extract->add_option("--community", community, "Community id (default: input file stem)");
    extract->add_option("--link-ckpt", link_ckpt, "Link-scorer checkpoint");

    bool cross_project = false;
    auto* ev = app.add_subcommand("eval", "Score models against labeled dialogs");
    ev->add_option("--data", data, "Labeled dialogs JSONL")->required();
    auto* ev_issue = ev->add_option("--issue-ckpt", issue_ckpt, "Issue model checkpoint");
    auto* ev_solution = ev->add_option("--solution-ckpt", solution_ckpt, "Solution model checkpoint");
    auto* ev_cross = ev->add_flag("--cross-project", cross_project, "Leave-one-project-out training and scoring");
    ev->add_option("--out", output, "Metrics JSON (default: standard output)");
    ev_cross->excludes(ev_issue)->excludes(ev_solution);
    ev_issue->needs(ev_solution);
    ev_solution->needs(ev_issue);

    double tol = 1e-4;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the shipped fragments");
    gc->add_option("--tol", tol, "Maximum relative error")->capture_default_str()->check(CLI::PositiveNumber);
    gc->add_option("--seeds", seeds, "Comma-separated seeds")->delimiter(',')->capture_default_str();
    gc->add_option("--out", output, "Report JSON (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "chatmine: error: usage: " << one_line(e.what()) << "\n";
        return kExitUsage;
    }

    if (ev->parsed() && !cross_project && issue_ckpt.empty()) {
        std::cerr << "chatmine: error: usage: eval needs --issue-ckpt and --solution-ckpt, or --cross-project\n";
        return kExitUsage;
    }

    if (gc->parsed()) {
        OwnedString report;
        const cm_status s = cm_gradcheck(tol, seeds.data(), seeds.size(), &report.p);
        if (report.p) {
            if (output.empty()) {
                std::cout << report.p;
            } else if (FILE* f = std::fopen(output.c_str(), "wb")) {
                std::fputs(report.p, f);
                std::fclose(f);
            } else {
                std::cerr << "chatmine: error: io: cannot write " << output << "\n";
                return kExitData;
            }
        }
        if (s == CM_ERR_GRADCHECK) std::cerr << "chatmine: gradient check failed at tol " << tol << "\n";
        return s == CM_OK ? 0 : fail(s);
    }

    cm_config* raw = nullptr;
    if (cm_status s = cm_config_create(&raw); s != CM_OK) return fail(s);
    ConfigPtr cfg(raw, cm_config_destroy);
    if (!config_path.empty())
        if (cm_status s = cm_config_load_file(cfg.get(), config_path.c_str()); s != CM_OK) return fail(s);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "chatmine: error: usage: --set expects key=value, got '" << kv << "'\n";
            return kExitUsage;
        }
        if (cm_status s = cm_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()); s != CM_OK)
            return fail(s);
    }
    auto set = [&](const char* key, const std::string& value) {
        return value.empty() ? CM_OK : cm_config_set(cfg.get(), key, value.c_str());
    };
    for (auto [key, value] : {std::pair<const char*, std::string>{"resources", resources},
                              {"seed", *seed_opt ? std::to_string(seed) : std::string()},
                              {"jobs", jobs ? std::to_string(jobs) : std::string()},
                              {"link.checkpoint", link_ckpt}})
        if (cm_status s = set(key, value); s != CM_OK) return fail(s);

    cm_status s = CM_OK;
    if (pre->parsed()) {
        std::size_t n = 0;
        s = cm_preprocess_file(cfg.get(), input.c_str(), opt(community), output.c_str(), opt(skip_report), &n);
        if (s == CM_OK) std::cerr << "chatmine: wrote " << n << " utterances to " << output << "\n";
    } else if (dis->parsed()) {
        std::size_t n = 0;
        s = cm_disentangle_file(cfg.get(), input.c_str(), opt(community), output.c_str(), &n);
        if (s == CM_OK) std::cerr << "chatmine: wrote " << n << " dialogs to " << output << "\n";
    } else if (train->parsed()) {
        OwnedString report;
        s = cm_train_file(cfg.get(), data.c_str(), target.c_str(), output.c_str(), &report.p);
        if (s == CM_OK) {
            if (!report_out.empty()) {
                FILE* f = std::fopen(report_out.c_str(), "wb");
                if (!f) {
                    std::cerr << "chatmine: error: io: cannot write " << report_out << "\n";
                    return kExitData;
                }
                std::fputs(report.p, f);
                std::fclose(f);
            }
            std::cerr << "chatmine: saved " << target << " checkpoint to " << output << "\n";
        }
    } else if (extract->parsed()) {
        std::size_t n = 0;
        s = cm_extract_file(cfg.get(), input.c_str(), opt(community), issue_ckpt.c_str(), solution_ckpt.c_str(),
                            output.c_str(), jobs, &n);
        if (s == CM_OK) std::cerr << "chatmine: wrote " << n << " pairs to " << output << "\n";
    } else if (ev->parsed()) {
        OwnedString report;
        s = cross_project ? cm_eval_cross_project_file(cfg.get(), data.c_str(), opt(output), &report.p)
                          : cm_eval_file(cfg.get(), data.c_str(), issue_ckpt.c_str(), solution_ckpt.c_str(),
                                         opt(output), &report.p);
        if (s == CM_OK && output.empty()) std::cout << report.p;
    }
    return s == CM_OK ? 0 : fail(s);
}
