#pragma once

#include <array>
#include <cstdint>

#include "edgeformer/model.hpp"

namespace edgeformer {

/// Which of the three edge tokens (head, edge, tail) are hidden from the
/// encoder. CLS is never maskable.
struct MaskPlan {
    std::array<bool, 3> masked{false, false, false};

    int masked_count() const {
        return (masked[0] ? 1 : 0) + (masked[1] ? 1 : 0) + (masked[2] ? 1 : 0);
    }
};

/// Draws round(mask_ratio * 3) distinct tokens uniformly; a rounded count
/// of zero is clamped to one with a warning on stderr.
MaskPlan sample_mask(double mask_ratio, Rng& rng);

/// Encoder tensors (same layout as the classifier) plus the mask token,
/// decoder stack, and per-token reconstruction projections.
ParamStore init_edge_mae_params(const ModelConfig& config, Rng& rng);

std::int64_t transformer_layer_parameter_count(const ModelConfig& config);
std::int64_t edge_mae_parameter_count(const ModelConfig& config);

/// Pre-training loss for one edge. The encoder sees CLS plus unmasked
/// tokens only; the decoder sees all four slots with masked slots holding
/// the shared mask token; position embeddings are added to every decoder
/// input row. The loss is the mean squared reconstruction error across
/// every masked feature value, and reads `targets` only at masked slots.
autodiff::Value mae_loss(const LiftedParams& params, const StdFeatures& inputs,
                         const StdFeatures& targets, const MaskPlan& plan,
                         const ModelConfig& config, Rng* dropout_rng = nullptr);

/// Common case: reconstruction targets are the model inputs.
autodiff::Value mae_loss(const LiftedParams& params, const StdFeatures& features,
                         const MaskPlan& plan, const ModelConfig& config,
                         Rng* dropout_rng = nullptr);

/// Number of rows the encoder sees under `plan`.
int visible_token_count(const MaskPlan& plan);

/// Copies the pretrained encoder tensors bitwise into a fresh classifier
/// ParamStore and initializes a new classification head. Throws
/// TransferError listing missing/extra names on layout mismatch.
ParamStore transfer_encoder(const ParamStore& pretrained, const ModelConfig& config, Rng& rng);

}  // namespace edgeformer
