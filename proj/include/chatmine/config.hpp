#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chatmine/corpus.hpp"
#include "chatmine/disentangler.hpp"
#include "chatmine/encoder.hpp"
#include "chatmine/pairmodel.hpp"

namespace chatmine::config {

/// Layered key=value settings.
///
/// Files use a small TOML-like syntax: `[section]` headers prefix the keys
/// that follow ("[model]" + "dropout = 0.6" -> "model.dropout"), `#` starts
/// a comment, values may be double-quoted. Later `set` calls override file
/// values. Unknown keys are rejected.
class Settings {
 public:
    void load_file(const std::filesystem::path& path);
    void parse(std::istream& in, const std::string& source);
    void set(const std::string& key, const std::string& value);

    std::optional<std::string> get(const std::string& key) const;
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    static const std::vector<std::string>& known_keys();

    /// `resources` key, then $CHATMINE_RESOURCES, then the compiled-in directory.
    std::filesystem::path resource_dir() const;

    corpus::PreprocessConfig preprocess() const;
    pair::ModelConfig model() const;
    encoder::EncoderConfig encoder() const;
    disentangle::LinkConfig link() const;
    disentangle::LinkTrainConfig link_training() const;
    std::filesystem::path link_checkpoint() const;
    /// Re-interleaving rounds used to build link-scorer training logs.
    std::size_t link_rounds() const;
    /// True when any `encoder.*` key was set explicitly.
    bool has_encoder_settings() const;

    std::uint64_t seed() const;
    std::size_t jobs() const;

 private:
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::filesystem::path get_path(const std::string& key, const std::filesystem::path& fallback) const;

    std::map<std::string, std::string> values_;
};

}  // namespace chatmine::config
