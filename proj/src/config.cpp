#include "edgeformer/config.hpp"

#include <string>

#include "edgeformer/errors.hpp"

namespace edgeformer {

void ModelConfig::validate() const {
    if (d_model < 1 || n_heads < 1 || n_encoder_layers < 0 || n_decoder_layers < 0 ||
        ffn_dim < 1 || dim_head_features < 1 || dim_edge_features < 1 || dim_tail_features < 1) {
        throw ConfigError("model dimensions must be positive");
    }
    if (d_model % n_heads != 0) {
        throw ConfigError("d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                          std::to_string(n_heads));
    }
    if (mask_ratio <= 0.0 || mask_ratio >= 1.0) {
        throw ConfigError("mask_ratio must lie in (0, 1), got " + std::to_string(mask_ratio));
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ConfigError("dropout must lie in [0, 1), got " + std::to_string(dropout));
    }
}

void TrainConfig::validate(std::size_t dataset_size) const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (static_cast<std::size_t>(batch_size) > dataset_size) {
        throw ConfigError("batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
                          std::to_string(dataset_size));
    }
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
        throw ConfigError("betas must lie in (0, 1)");
    }
    if (eps <= 0.0) throw ConfigError("eps must be positive");
    if (grad_clip && clip_norm <= 0.0) throw ConfigError("clip_norm must be positive");
}

}  // namespace edgeformer
