#pragma once

#include <cstdint>
#include <string>

#include "edgeformer/autodiff.hpp"
#include "edgeformer/config.hpp"
#include "edgeformer/edge_record.hpp"
#include "edgeformer/feature_stats.hpp"
#include "edgeformer/param_store.hpp"
#include "edgeformer/rng.hpp"

namespace edgeformer {

inline constexpr double kLayerNormEps = 1e-5;

/// Token matrix flowing through the encoder. Row order is fixed:
/// 0 = CLS, 1 = head, 2 = edge, 3 = tail.
struct TokenSequence {
    autodiff::Value rows;  // [4 x D]
};

/// Adds the shared encoder tensors (embedding MLPs, CLS, position
/// embeddings, encoder layers) to `params`. The same builder backs the
/// classifier and the pretraining model so their layouts stay
/// transfer-compatible.
void add_encoder_params(ParamStore& params, const ModelConfig& config, Rng& rng);

/// Encoder tensors plus the linear classification head.
ParamStore init_edge_transformer_params(const ModelConfig& config, Rng& rng);

std::int64_t encoder_parameter_count(const ModelConfig& config);
std::int64_t edge_transformer_parameter_count(const ModelConfig& config);

/// True for tensors that decoupled weight decay must skip: biases,
/// layer-norm scales/shifts, CLS, and position embeddings.
bool decay_exempt(const std::string& param_name);

/// Embeds one edge: per-token MLP, then position embeddings, CLS first.
TokenSequence embed_edge(const LiftedParams& params, const StdFeatures& features,
                         const ModelConfig& config);

/// Scaled dot-product attention over `tokens` [s x D] with the projection
/// tensors under `prefix` (e.g. "encoder.0.attn."). Scale is
/// 1/sqrt(D / n_heads).
autodiff::Value multi_head_attention(const autodiff::Value& tokens, const LiftedParams& params,
                                     const std::string& prefix, int n_heads);

/// Post-norm residual stack of `n_layers` blocks under `prefix`
/// ("encoder." or "decoder."). dropout_rng enables dropout when the
/// config rate is positive; pass nullptr for evaluation.
autodiff::Value transformer_stack(const autodiff::Value& tokens, const LiftedParams& params,
                                  const std::string& prefix, int n_layers,
                                  const ModelConfig& config, Rng* dropout_rng = nullptr);

/// Full encoder on an embedded sequence; returns all hidden states [4 x D].
autodiff::Value encoder_forward(const TokenSequence& tokens, const LiftedParams& params,
                                const ModelConfig& config, Rng* dropout_rng = nullptr);

/// Classification logit from the final CLS state, shape [1].
autodiff::Value classify_logit(const LiftedParams& params, const StdFeatures& features,
                               const ModelConfig& config, Rng* dropout_rng = nullptr);

struct EdgePrediction {
    double logit = 0.0;
    double probability = 0.0;
};

/// Inference entry point: standardizes the edge and runs the full model.
EdgePrediction classify_edge(const ParamStore& params, const EdgeRecord& edge,
                             const ModelConfig& config, const FeatureStats& stats);

namespace detail {

/// One post-norm block's tensors under `prefix` (attention, two norms, FFN).
void add_transformer_layer(ParamStore& params, const std::string& prefix,
                           const ModelConfig& config, Rng& rng);

/// Two-layer perceptron forward: fc2(relu(fc1(x))).
autodiff::Value token_mlp(const LiftedParams& params, const std::string& prefix,
                          const autodiff::Value& x);

}  // namespace detail

}  // namespace edgeformer
