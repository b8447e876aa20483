#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "chatmine/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate synthetic labeled developer-chat fixtures"};
    chatmine::synth::Options opts;
    std::string labeled, chat_dir;
    bool sequential = false;
    app.add_option("--projects", opts.projects, "Number of projects")->capture_default_str();
    app.add_option("--dialogs", opts.dialogs_per_project, "Dialogs per project")->capture_default_str();
    app.add_option("--issue-fraction", opts.issue_fraction, "Share of issue dialogs")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--seed", opts.seed, "Generator seed")->capture_default_str();
    app.add_flag("--sequential", sequential, "Do not overlap dialogs in time");
    app.add_option("--labeled", labeled, "Labeled dialogs JSONL")->required();
    app.add_option("--chat-dir", chat_dir, "Also write one raw chat log per project here");
    CLI11_PARSE(app, argc, argv);
    opts.interleave = !sequential;

    const auto dialogs = chatmine::synth::generate(opts);
    std::ofstream out(labeled, std::ios::binary);
    if (!out) {
        std::cerr << "chatmine-synth: error: io: cannot write " << labeled << "\n";
        return 3;
    }
    chatmine::synth::write_labeled(out, dialogs);
    if (!chat_dir.empty()) {
        std::filesystem::create_directories(chat_dir);
        std::set<std::string> communities;
        for (const auto& d : dialogs) communities.insert(d.community);
        for (const auto& c : communities) {
            std::ofstream chat(std::filesystem::path(chat_dir) / (c + ".jsonl"), std::ios::binary);
            chatmine::synth::write_chat(chat, dialogs, c);
        }
    }
    std::cerr << "chatmine-synth: wrote " << dialogs.size() << " dialogs\n";
    return 0;
}
