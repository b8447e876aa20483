#pragma once

#include <sstream>

#include "chatmine/config.hpp"
#include "chatmine/dialog_embed.hpp"
#include "chatmine/encoder.hpp"
#include "chatmine/pairmodel.hpp"
#include "chatmine/synth.hpp"

namespace testing {

/// Scaled-down architecture for tests that train many models.
inline chatmine::pair::ModelConfig small_model_config() {
    chatmine::pair::ModelConfig cfg;
    cfg.conv = {{32, 16, 8}, 3};
    cfg.attention_dim = 8;
    cfg.hidden = 8;
    cfg.max_epochs = 30;
    return cfg;
}

inline chatmine::encoder::EncoderConfig small_encoder_config() {
    chatmine::encoder::EncoderConfig cfg;
    cfg.dim = 64;
    return cfg;
}

struct SyntheticWorld {
    std::filesystem::path resources;
    chatmine::corpus::Preprocessor pre;
    chatmine::embed::Lexicons lexicons;

    explicit SyntheticWorld(const std::filesystem::path& res)
        : resources(res),
          pre(chatmine::corpus::PreprocessConfig::with_resources(res)),
          lexicons(chatmine::embed::Lexicons::from_resources(res)) {}

    chatmine::pair::LabeledCorpus corpus(const chatmine::synth::Options& opts) const {
        std::stringstream ss;
        chatmine::synth::write_labeled(ss, chatmine::synth::generate(opts));
        return chatmine::pair::load_labeled_dialogs(ss, pre);
    }
};

}  // namespace testing
