#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chatmine/corpus.hpp"
#include "chatmine/disentangler.hpp"

namespace testing {

inline std::filesystem::path fixture_dir() { return CHATMINE_TEST_FIXTURES; }
inline std::filesystem::path resource_dir() { return CHATMINE_RESOURCE_DIR; }

inline chatmine::corpus::Utterance utt(std::size_t index, std::int64_t time, std::string author, std::string clean,
                                       std::vector<std::string> tokens) {
    chatmine::corpus::Utterance u;
    u.index = index;
    u.time = time;
    u.author_id = std::move(author);
    u.raw_text = clean;
    u.clean_text = std::move(clean);
    u.tokens = std::move(tokens);
    return u;
}

/// Log of `authors.size()` utterances one minute apart with single-word texts.
inline chatmine::corpus::ChatLog simple_log(const std::vector<std::string>& authors) {
    chatmine::corpus::ChatLog log;
    log.community_id = "test";
    for (std::size_t i = 0; i < authors.size(); ++i) {
        const std::string w = "word" + std::to_string(i);
        log.utterances.push_back(utt(i, 1'000'000 + static_cast<std::int64_t>(i) * 60'000, authors[i], w, {w}));
    }
    return log;
}

std::filesystem::path temp_path(const std::string& name);

}  // namespace testing
