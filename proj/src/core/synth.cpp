#include "chatmine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "chatmine/tensor.hpp"

namespace chatmine::synth {

namespace {

using Pool = std::vector<std::string>;

const Pool kProjects = {"angular-chat", "dl-toolkit", "docker-hub", "ethereum-dev",
                        "nodejs-help", "typescript", "gitter-api", "rust-users"};

const Pool kNames = {"alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi", "ivan", "judy",
                     "mallory", "niaj", "olivia", "peggy", "rupert", "sybil", "trent", "victor", "walter", "yuki"};

const Pool kPackages = {"webpack", "babel", "react-router", "numpy", "tensorflow", "docker-compose", "truffle",
                        "express", "tsc", "cargo", "jest", "nginx", "redis", "mongoose", "electron"};

const Pool kActions = {"install", "build", "run", "deploy", "compile", "upgrade", "configure", "start"};

const Pool kOs = {"ubuntu 20.04", "windows 10", "macos", "debian", "alpine", "centos"};

const Pool kErrors = {"a segmentation fault", "module not found", "permission denied", "a null pointer exception",
                      "an undefined symbol error", "a timeout error", "out of memory", "a syntax error",
                      "connection refused", "a version conflict"};

const Pool kFixes = {"delete node_modules and run `npm install` again",
                     "set `NODE_ENV=production` before running the build",
                     "add the missing dependency to your package.json",
                     "run the container with `--privileged`",
                     "downgrade to the previous release",
                     "clear the cache with `cargo clean`",
                     "increase the heap size with `--max-old-space-size=4096`",
                     "change the port in the config file",
                     "install the build tools first",
                     "use the absolute path in the import"};

const Pool kFeatures = {"faster startup", "a new plugin api", "better error messages", "typed configs",
                        "incremental builds", "dark mode", "streaming support", "a smaller bundle"};

const Pool kTopics = {"the meetup next month", "the new logo", "the conference talk", "the roadmap",
                      "the docs redesign", "the community call", "the hackathon"};

const std::string& pick(const Pool& p, nn::Rng& rng) { return p[rng.index(p.size())]; }

std::string version(nn::Rng& rng) {
    return std::to_string(1 + rng.index(4)) + "." + std::to_string(rng.index(10)) + "." + std::to_string(rng.index(20));
}

std::string fill(std::string s, const std::vector<std::pair<std::string, std::string>>& vars) {
    for (const auto& [k, v] : vars) {
        const std::string key = "{" + k + "}";
        for (std::size_t pos; (pos = s.find(key)) != std::string::npos;) s.replace(pos, key.size(), v);
    }
    return s;
}

struct Turn {
    int speaker;  // 0 initiator, 1 helper, 2 bystander
    std::string text;
    bool solution = false;
};

std::vector<Turn> issue_turns(nn::Rng& rng) {
    const std::vector<std::pair<std::string, std::string>> v = {
        {"pkg", pick(kPackages, rng)}, {"ver", version(rng)},      {"ver2", version(rng)},
        {"os", pick(kOs, rng)},        {"err", pick(kErrors, rng)}, {"act", pick(kActions, rng)},
        {"fix", pick(kFixes, rng)},    {"fix2", pick(kFixes, rng)}};
    std::vector<Turn> t;
    const Pool openers = {"hi guys, i tried to {act} {pkg} {ver} on {os} but it fails with {err}",
                          "hello, when i {act} {pkg} i get {err}, what am i doing wrong?",
                          "hey all, {pkg} {ver} keeps crashing with {err} after i {act} it",
                          "i can't {act} {pkg} on {os}, it breaks with {err}",
                          "good morning, does anyone know why {pkg} throws {err} when i {act} it?"};
    t.push_back({0, fill(pick(openers, rng), v)});
    if (rng.uniform() < 0.5) {
        const Pool seconds = {"any idea how to fix this?", "the error appears right after startup",
                              "i already reinstalled it twice, still broken", "here is the log ```Error: {err}```",
                              "has anyone seen this error before?"};
        t.push_back({0, fill(pick(seconds, rng), v)});
    }
    if (rng.uniform() < 0.6) {
        const Pool asks = {"which version of {pkg} are you using?", "can you share the full stack trace?",
                           "what does your config look like?", "did it work before the upgrade?"};
        const Pool answers = {"i am on {pkg} {ver} with node {ver2}", "yes it worked with {ver2}",
                              "here it is ```{pkg} --verbose```", "the config is the default one"};
        t.push_back({1, fill(pick(asks, rng), v)});
        t.push_back({0, fill(pick(answers, rng), v)});
    }
    const double r = rng.uniform();
    if (r < 0.85) {
        const Pool sols = {"you need to {fix}, that should fix it", "try to {fix}, it solved the same problem for me",
                           "this is a known bug in {ver}, {fix} and it will work",
                           "the fix is to {fix}", "you should {fix}, then restart"};
        t.push_back({1, fill(pick(sols, rng), v), true});
        if (rng.uniform() < 0.4) {
            const Pool more = {"also make sure to {fix2}", "and if it still fails, {fix2}",
                               "you might also need to {fix2}"};
            t.push_back({1, fill(pick(more, rng), v), true});
        }
        const Pool thanks = {"thanks, it works now!", "great, that did the trick :)", "thank you so much",
                             "awesome, problem solved thanks"};
        if (rng.uniform() < 0.8) t.push_back({0, pick(thanks, rng)});
    } else {
        const Pool shrug = {"no idea sorry", "i have the same error on {os}", "same here, following this"};
        t.push_back({2, fill(pick(shrug, rng), v)});
    }
    return t;
}

std::vector<Turn> chat_turns(nn::Rng& rng) {
    const std::vector<std::pair<std::string, std::string>> v = {
        {"pkg", pick(kPackages, rng)}, {"ver", version(rng)}, {"feat", pick(kFeatures, rng)},
        {"topic", pick(kTopics, rng)}};
    std::vector<Turn> t;
    switch (rng.index(3)) {
        case 0:
            t.push_back({0, fill("hello everyone, we just released {pkg} {ver} with {feat}", v)});
            t.push_back({1, "awesome, congrats on the release!"});
            if (rng.uniform() < 0.7) t.push_back({2, "nice work :)"});
            break;
        case 1:
            t.push_back({0, fill("hey, is anyone going to {topic}?", v)});
            t.push_back({1, "yes i will be there"});
            if (rng.uniform() < 0.7) t.push_back({0, "cool, see you there"});
            break;
        default:
            t.push_back({0, fill("just wanted to share my blog post about {pkg} and {feat} https://blog.example.com/{pkg}", v)});
            t.push_back({1, "great read, thanks for sharing"});
            if (rng.uniform() < 0.5) t.push_back({2, "bookmarked it, really nice"});
            break;
    }
    return t;
}

}  // namespace

std::string project_name(std::size_t i) {
    return i < kProjects.size() ? kProjects[i] : "project-" + std::to_string(i + 1);
}

std::vector<Dialog> generate(const Options& opts) {
    nn::Rng rng(opts.seed);
    std::vector<Dialog> out;
    for (std::size_t p = 0; p < opts.projects; ++p) {
        const std::string community = project_name(p);
        const std::size_t n = opts.dialogs_per_project;
        const auto n_issue = static_cast<std::size_t>(std::llround(opts.issue_fraction * static_cast<double>(n)));
        std::vector<bool> is_issue(n, false);
        for (std::size_t i = 0; i < std::min(n_issue, n); ++i) is_issue[i] = true;
        rng.shuffle(is_issue);

        std::int64_t clock = opts.start_time_ms + static_cast<std::int64_t>(p) * 86'400'000;
        for (std::size_t i = 0; i < n; ++i) {
            Dialog d;
            d.community = community;
            d.id = community + "-" + std::to_string(i + 1);
            d.issue = is_issue[i];
            // Three distinct speakers.
            std::vector<std::string> cast;
            while (cast.size() < 3) {
                const auto& name = pick(kNames, rng);
                if (std::find(cast.begin(), cast.end(), name) == cast.end()) cast.push_back(name);
            }
            const auto turns = d.issue ? issue_turns(rng) : chat_turns(rng);
            std::int64_t t = clock;
            for (std::size_t k = 0; k < turns.size(); ++k) {
                const auto& turn = turns[k];
                std::string text = turn.text;
                // Replies often address the previous speaker, as in Gitter rooms.
                if (k > 0 && turns[k - 1].speaker != turn.speaker && rng.uniform() < 0.5)
                    text = "@" + cast[static_cast<std::size_t>(turns[k - 1].speaker)] + " " + text;
                d.messages.push_back({t, cast[static_cast<std::size_t>(turn.speaker)], text, turn.solution});
                t += static_cast<std::int64_t>(20'000 + rng.index(100'000));
            }
            // Overlap with the next dialog when interleaving, otherwise leave a quiet gap.
            clock = opts.interleave ? clock + static_cast<std::int64_t>(30'000 + rng.index(90'000))
                                    : t + static_cast<std::int64_t>(3'600'000);
            out.push_back(std::move(d));
        }
    }
    return out;
}

void write_labeled(std::ostream& out, const std::vector<Dialog>& dialogs) {
    for (const auto& d : dialogs) {
        nlohmann::json utts = nlohmann::json::array();
        for (const auto& m : d.messages)
            utts.push_back({{"time", m.time}, {"id", m.author}, {"text", m.text}, {"solution", m.solution}});
        out << nlohmann::json{{"community_id", d.community}, {"dialog_id", d.id}, {"issue", d.issue}, {"utterances", utts}}
                   .dump()
            << '\n';
    }
}

void write_chat(std::ostream& out, const std::vector<Dialog>& dialogs, const std::string& community) {
    std::vector<const Message*> msgs;
    for (const auto& d : dialogs)
        if (d.community == community)
            for (const auto& m : d.messages) msgs.push_back(&m);
    std::stable_sort(msgs.begin(), msgs.end(), [](const Message* a, const Message* b) { return a->time < b->time; });
    for (const auto* m : msgs) out << nlohmann::json{{"time", m->time}, {"id", m->author}, {"text", m->text}}.dump() << '\n';
}

}  // namespace chatmine::synth
