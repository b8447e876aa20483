#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace chatmine::synth {

/// Synthetic developer-chat dialogs for fixtures, demos and link training.
/// Issue dialogs open with a problem report and usually carry labeled
/// solution replies; the others are announcements and small talk.

struct Message {
    std::int64_t time = 0;
    std::string author;
    std::string text;
    bool solution = false;
};

struct Dialog {
    std::string community;
    std::string id;
    bool issue = false;
    std::vector<Message> messages;
};

struct Options {
    std::size_t projects = 2;
    std::size_t dialogs_per_project = 20;
    double issue_fraction = 0.5;  // exact count per project: round(fraction * dialogs)
    std::uint64_t seed = 1;
    std::int64_t start_time_ms = 1'600'000'000'000;
    /// Dialogs of a project overlap in time, so the project log is interleaved.
    bool interleave = true;
};

/// Project names in a fixed order; more than the list yields "project-N".
std::string project_name(std::size_t i);

std::vector<Dialog> generate(const Options& opts);

/// Labeled JSONL: {"community_id","dialog_id","issue","utterances":[{"time","id","text","solution"}]}.
void write_labeled(std::ostream& out, const std::vector<Dialog>& dialogs);

/// Chat export of one community's messages, time-ordered: {"time","id","text"}.
void write_chat(std::ostream& out, const std::vector<Dialog>& dialogs, const std::string& community);

}  // namespace chatmine::synth
