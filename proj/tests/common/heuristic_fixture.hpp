#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatmine/dialog_embed.hpp"
#include "chatmine/disentangler.hpp"

namespace testing {

/// The 20-utterance hand-labeled chat under tests/fixtures/heuristics with
/// the expected attribute vectors written by tests/oracles/heuristics_oracle.py.
struct HeuristicFixture {
    chatmine::corpus::ChatLog log;
    std::vector<chatmine::disentangle::Dialog> dialogs;
    std::vector<std::size_t> dialog_of;
    chatmine::embed::Lexicons lexicons;
    std::vector<std::map<std::string, double>> expected;

    static HeuristicFixture load(const std::filesystem::path& dir) {
        HeuristicFixture f;
        std::ifstream in(dir / "chat.json");
        const auto chat = nlohmann::json::parse(in);
        std::map<std::string, std::vector<std::size_t>> groups;
        std::vector<std::string> order;
        f.log.community_id = "fixture";
        for (const auto& row : chat.at("utterances")) {
            chatmine::corpus::Utterance u;
            u.index = f.log.size();
            u.time = 1'600'000'000'000 + static_cast<std::int64_t>(u.index) * 30'000;
            u.author_id = row.at("author");
            u.raw_text = u.clean_text = row.at("text");
            u.tokens = row.at("tokens").get<std::vector<std::string>>();
            const std::string d = row.at("dialog");
            if (!groups.count(d)) order.push_back(d);
            groups[d].push_back(u.index);
            f.log.utterances.push_back(std::move(u));
        }
        f.dialog_of.resize(f.log.size());
        for (const auto& d : order) {
            for (auto m : groups[d]) f.dialog_of[m] = f.dialogs.size();
            f.dialogs.push_back(chatmine::disentangle::make_dialog(f.log, groups[d]));
        }
        f.lexicons = chatmine::embed::Lexicons::from_files(dir / "greetings.txt", dir / "disapproval.txt",
                                                           dir / "sentiment_words.tsv", dir / "sentiment_emoji.tsv");
        std::ifstream ein(dir / "expected.json");
        const auto expected_json = nlohmann::json::parse(ein);
        for (const auto& row : expected_json.at("expected"))
            f.expected.push_back(row.get<std::map<std::string, double>>());
        return f;
    }

    std::array<double, chatmine::embed::kHeuristicDim> compute(std::size_t i,
                                                               const chatmine::embed::TfIdfIndex& tfidf) const {
        const auto& d = dialogs[dialog_of[i]];
        const auto pos = static_cast<std::size_t>(std::find(d.members.begin(), d.members.end(), i) - d.members.begin());
        const chatmine::embed::DialogContext ctx{&log, &tfidf, &d, pos + 1};
        return chatmine::embed::heuristic_attributes(log[i], ctx, lexicons);
    }

    struct Mismatch {
        std::size_t utterance;
        std::string field;
        double got;
        double want;
    };

    /// Every field of every utterance; TDH/TDU within `tol`, everything else exact.
    std::vector<Mismatch> mismatches(double tol) const {
        std::vector<Mismatch> out;
        const chatmine::embed::TfIdfIndex tfidf(log);
        const auto& names = chatmine::embed::heuristic_names();
        for (std::size_t i = 0; i < log.size(); ++i) {
            const auto h = compute(i, tfidf);
            for (std::size_t j = 0; j < names.size(); ++j) {
                const std::string name = names[j];
                const double want = expected[i].at(name);
                const bool topical = name == "TDH" || name == "TDU";
                const bool ok = topical ? std::abs(h[j] - want) <= tol : std::abs(h[j] - want) <= 1e-12;
                if (!ok) out.push_back({i, name, h[j], want});
            }
        }
        return out;
    }
};

}  // namespace testing
