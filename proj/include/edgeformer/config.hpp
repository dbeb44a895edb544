#pragma once

#include <cstdint>
#include <string>

namespace edgeformer {

/// Architectural hyperparameters for the Edge Transformer and its
/// pretraining decoder.
struct ModelConfig {
    int d_model = 48;
    int n_heads = 3;
    int n_encoder_layers = 2;
    int n_decoder_layers = 1;
    int ffn_dim = 192;
    int dim_head_features = 16;
    int dim_edge_features = 4;
    int dim_tail_features = 16;
    double mask_ratio = 1.0 / 3.0;
    double dropout = 0.0;

    int head_dim() const { return d_model / n_heads; }
    void validate() const;
};

/// One optimization run. Defaults follow the pretraining recipe; the CLI
/// overrides per mode.
struct TrainConfig {
    double learning_rate = 1.5e-4;
    double weight_decay = 0.05;
    int batch_size = 256;
    int epochs = 20;
    std::uint64_t seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool grad_clip = true;
    double clip_norm = 1.0;

    void validate(std::size_t dataset_size) const;
};

}  // namespace edgeformer
