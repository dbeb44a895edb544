#include "edgeformer/mae.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "edgeformer/errors.hpp"

namespace edgeformer {

namespace ad = autodiff;

namespace {

Tensor normal_init(std::vector<std::int64_t> shape, Rng& rng, double stddev = 0.02) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
    return t;
}

bool is_mae_only_name(const std::string& name) {
    return name == "mask_token" || name.rfind("decoder.", 0) == 0 || name.rfind("recon.", 0) == 0;
}

}  // namespace

MaskPlan sample_mask(double mask_ratio, Rng& rng) {
    if (mask_ratio <= 0.0 || mask_ratio >= 1.0) {
        throw ValidationError("mask_ratio must lie in (0, 1), got " + std::to_string(mask_ratio));
    }
    long count = std::lround(mask_ratio * 3.0);
    if (count == 0) {
        std::fprintf(stderr, "warning: mask_ratio %g rounds to zero masked tokens; clamping to 1\n",
                     mask_ratio);
        count = 1;
    }
    std::vector<int> indices{0, 1, 2};
    rng.shuffle(indices);
    MaskPlan plan;
    for (long i = 0; i < count; ++i) plan.masked[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])] = true;
    return plan;
}

ParamStore init_edge_mae_params(const ModelConfig& config, Rng& rng) {
    ParamStore params;
    add_encoder_params(params, config, rng);
    Rng mae_rng = rng.derive(0x3ae0dec0);
    params.add("mask_token", normal_init({1, config.d_model}, mae_rng));
    for (int i = 0; i < config.n_decoder_layers; ++i) {
        detail::add_transformer_layer(params, "decoder." + std::to_string(i), config, mae_rng);
    }
    const std::int64_t d = config.d_model;
    params.add("recon.head.weight", normal_init({d, config.dim_head_features}, mae_rng));
    params.add("recon.head.bias", Tensor::zeros({config.dim_head_features}));
    params.add("recon.edge.weight", normal_init({d, config.dim_edge_features}, mae_rng));
    params.add("recon.edge.bias", Tensor::zeros({config.dim_edge_features}));
    params.add("recon.tail.weight", normal_init({d, config.dim_tail_features}, mae_rng));
    params.add("recon.tail.bias", Tensor::zeros({config.dim_tail_features}));
    return params;
}

std::int64_t transformer_layer_parameter_count(const ModelConfig& c) {
    const std::int64_t d = c.d_model;
    const std::int64_t f = c.ffn_dim;
    return 4 * (d * d + d) + 4 * d + (d * f + f) + (f * d + d);
}

std::int64_t edge_mae_parameter_count(const ModelConfig& c) {
    const std::int64_t d = c.d_model;
    std::int64_t recon = 0;
    for (std::int64_t w : {static_cast<std::int64_t>(c.dim_head_features),
                           static_cast<std::int64_t>(c.dim_edge_features),
                           static_cast<std::int64_t>(c.dim_tail_features)}) {
        recon += d * w + w;
    }
    return encoder_parameter_count(c) + d + c.n_decoder_layers * transformer_layer_parameter_count(c) +
           recon;
}

int visible_token_count(const MaskPlan& plan) { return 4 - plan.masked_count(); }

ad::Value mae_loss(const LiftedParams& params, const StdFeatures& inputs,
                   const StdFeatures& targets, const MaskPlan& plan, const ModelConfig& config,
                   Rng* dropout_rng) {
    if (plan.masked_count() == 0) throw ValidationError("no masked tokens");

    const std::array<const Tensor*, 3> input_rows = {&inputs.head, &inputs.edge, &inputs.tail};
    const std::array<const Tensor*, 3> target_rows = {&targets.head, &targets.edge, &targets.tail};
    const std::array<std::string, 3> embed_names = {"embed.head", "embed.edge", "embed.tail"};
    const std::array<std::string, 3> recon_names = {"recon.head", "recon.edge", "recon.tail"};

    // Encoder input: CLS plus the unmasked tokens, in slot order.
    std::vector<ad::Value> visible;
    visible.push_back(ad::add(params.at("cls"), params.at("pos.0")));
    std::vector<int> visible_slot_of;  // slot index -> row in encoder output, -1 when masked
    visible_slot_of.assign(4, -1);
    visible_slot_of[0] = 0;
    for (int t = 0; t < 3; ++t) {
        if (plan.masked[static_cast<std::size_t>(t)]) continue;
        auto embedded = detail::token_mlp(params, embed_names[static_cast<std::size_t>(t)],
                                  ad::constant(*input_rows[static_cast<std::size_t>(t)]));
        visible_slot_of[static_cast<std::size_t>(t + 1)] = static_cast<int>(visible.size());
        visible.push_back(ad::add(embedded, params.at("pos." + std::to_string(t + 1))));
    }
    auto encoded = transformer_stack(ad::concat_rows(visible), params, "encoder.",
                                     config.n_encoder_layers, config, dropout_rng);

    // Decoder input: all four slots; masked slots hold the shared mask
    // token; every row gets its position embedding.
    std::vector<ad::Value> decoder_rows;
    decoder_rows.reserve(4);
    for (int slot = 0; slot < 4; ++slot) {
        const int visible_row = visible_slot_of[static_cast<std::size_t>(slot)];
        auto base = visible_row >= 0 ? ad::slice_rows(encoded, visible_row, 1)
                                     : params.at("mask_token");
        decoder_rows.push_back(ad::add(base, params.at("pos." + std::to_string(slot))));
    }
    auto decoded = transformer_stack(ad::concat_rows(decoder_rows), params, "decoder.",
                                     config.n_decoder_layers, config, dropout_rng);

    // Sum of squared errors over masked slots, normalized by the total
    // number of masked feature values.
    ad::Value total_sse;
    std::int64_t total_values = 0;
    for (int t = 0; t < 3; ++t) {
        if (!plan.masked[static_cast<std::size_t>(t)]) continue;
        const std::string& recon = recon_names[static_cast<std::size_t>(t)];
        auto projected = ad::affine(ad::slice_rows(decoded, t + 1, 1), params.at(recon + ".weight"),
                                    params.at(recon + ".bias"));
        auto diff = ad::sub(projected, ad::constant(*target_rows[static_cast<std::size_t>(t)]));
        auto sse = ad::dot(diff, diff);
        total_sse = total_sse.valid() ? ad::add(total_sse, sse) : sse;
        total_values += target_rows[static_cast<std::size_t>(t)]->size();
    }
    return ad::scale(total_sse, 1.0 / static_cast<double>(total_values));
}

ad::Value mae_loss(const LiftedParams& params, const StdFeatures& features, const MaskPlan& plan,
                   const ModelConfig& config, Rng* dropout_rng) {
    return mae_loss(params, features, features, plan, config, dropout_rng);
}

ParamStore transfer_encoder(const ParamStore& pretrained, const ModelConfig& config, Rng& rng) {
    Rng probe_rng(0);
    ParamStore expected;
    add_encoder_params(expected, config, probe_rng);

    std::string missing;
    for (const auto& name : expected.names()) {
        if (!pretrained.contains(name)) {
            missing += missing.empty() ? name : ", " + name;
        } else if (pretrained.at(name).shape() != expected.at(name).shape()) {
            throw TransferError("encoder tensor " + name + " has shape " +
                                pretrained.at(name).shape_str() + ", expected " +
                                expected.at(name).shape_str());
        }
    }
    std::string extra;
    for (const auto& name : pretrained.names()) {
        if (!expected.contains(name) && !is_mae_only_name(name)) {
            extra += extra.empty() ? name : ", " + name;
        }
    }
    if (!missing.empty() || !extra.empty()) {
        throw TransferError("encoder layout mismatch; missing: [" + missing + "], extra: [" +
                            extra + "]");
    }

    ParamStore result;
    for (const auto& name : expected.names()) result.add(name, pretrained.at(name));
    Rng head_rng = rng.derive(0x0e11c1a5);
    Tensor head_weight = Tensor::zeros({config.d_model, 1});
    for (std::int64_t i = 0; i < head_weight.size(); ++i) head_weight[i] = head_rng.normal(0.0, 0.02);
    result.add("head.weight", head_weight);
    result.add("head.bias", Tensor::zeros({1}));
    return result;
}

}  // namespace edgeformer
