#include "edgeformer/model.hpp"

#include <cmath>

#include "edgeformer/errors.hpp"

namespace edgeformer {

namespace ad = autodiff;

namespace {

Tensor normal_init(std::vector<std::int64_t> shape, Rng& rng, double stddev = 0.02) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
    return t;
}

void add_mlp(ParamStore& params, const std::string& prefix, std::int64_t in_dim,
             std::int64_t hidden_dim, std::int64_t out_dim, Rng& rng) {
    params.add(prefix + ".fc1.weight", normal_init({in_dim, hidden_dim}, rng));
    params.add(prefix + ".fc1.bias", Tensor::zeros({hidden_dim}));
    params.add(prefix + ".fc2.weight", normal_init({hidden_dim, out_dim}, rng));
    params.add(prefix + ".fc2.bias", Tensor::zeros({out_dim}));
}

void check_width(const Tensor& t, int expected, const char* field) {
    if (t.cols() != expected) {
        throw ValidationError(std::string("feature width mismatch for ") + field + ": got " +
                              std::to_string(t.cols()) + ", config expects " +
                              std::to_string(expected));
    }
}

}  // namespace

namespace detail {

void add_transformer_layer(ParamStore& params, const std::string& prefix, const ModelConfig& c,
                           Rng& rng) {
    const std::int64_t d = c.d_model;
    const std::int64_t f = c.ffn_dim;
    for (const char* proj : {"wq", "wk", "wv", "wo"}) {
        params.add(prefix + ".attn." + proj + ".weight", normal_init({d, d}, rng));
        params.add(prefix + ".attn." + proj + ".bias", Tensor::zeros({d}));
    }
    params.add(prefix + ".norm1.gamma", Tensor::full({d}, 1.0));
    params.add(prefix + ".norm1.beta", Tensor::zeros({d}));
    params.add(prefix + ".ffn.fc1.weight", normal_init({d, f}, rng));
    params.add(prefix + ".ffn.fc1.bias", Tensor::zeros({f}));
    params.add(prefix + ".ffn.fc2.weight", normal_init({f, d}, rng));
    params.add(prefix + ".ffn.fc2.bias", Tensor::zeros({d}));
    params.add(prefix + ".norm2.gamma", Tensor::full({d}, 1.0));
    params.add(prefix + ".norm2.beta", Tensor::zeros({d}));
}

ad::Value token_mlp(const LiftedParams& p, const std::string& prefix, const ad::Value& x) {
    auto hidden = ad::relu(ad::affine(x, p.at(prefix + ".fc1.weight"), p.at(prefix + ".fc1.bias")));
    return ad::affine(hidden, p.at(prefix + ".fc2.weight"), p.at(prefix + ".fc2.bias"));
}

}  // namespace detail

using detail::token_mlp;

void add_encoder_params(ParamStore& params, const ModelConfig& config, Rng& rng) {
    config.validate();
    const std::int64_t d = config.d_model;
    // Encoder tensors draw from a derived stream so that a classifier and a
    // pretraining model built from the same seed share their initialization.
    Rng enc_rng = rng.derive(0x0e11c0de);
    add_mlp(params, "embed.head", config.dim_head_features, d, d, enc_rng);
    add_mlp(params, "embed.edge", config.dim_edge_features, d, d, enc_rng);
    add_mlp(params, "embed.tail", config.dim_tail_features, d, d, enc_rng);
    params.add("cls", normal_init({1, d}, enc_rng));
    for (int i = 0; i < 4; ++i) {
        params.add("pos." + std::to_string(i), normal_init({1, d}, enc_rng));
    }
    for (int i = 0; i < config.n_encoder_layers; ++i) {
        detail::add_transformer_layer(params, "encoder." + std::to_string(i), config, enc_rng);
    }
}

ParamStore init_edge_transformer_params(const ModelConfig& config, Rng& rng) {
    ParamStore params;
    add_encoder_params(params, config, rng);
    Rng head_rng = rng.derive(0x0e11c1a5);
    params.add("head.weight", normal_init({config.d_model, 1}, head_rng));
    params.add("head.bias", Tensor::zeros({1}));
    return params;
}

std::int64_t encoder_parameter_count(const ModelConfig& c) {
    const std::int64_t d = c.d_model;
    const std::int64_t f = c.ffn_dim;
    std::int64_t embed = 0;
    for (std::int64_t w : {static_cast<std::int64_t>(c.dim_head_features),
                           static_cast<std::int64_t>(c.dim_edge_features),
                           static_cast<std::int64_t>(c.dim_tail_features)}) {
        embed += (w * d + d) + (d * d + d);
    }
    const std::int64_t cls_and_pos = d + 4 * d;
    const std::int64_t per_layer = 4 * (d * d + d)    // q, k, v, o projections
                                   + 4 * d            // two layer norms
                                   + (d * f + f)      // ffn in
                                   + (f * d + d);     // ffn out
    return embed + cls_and_pos + c.n_encoder_layers * per_layer;
}

std::int64_t edge_transformer_parameter_count(const ModelConfig& c) {
    return encoder_parameter_count(c) + c.d_model + 1;
}

bool decay_exempt(const std::string& name) {
    if (name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0) return true;
    if (name.find(".norm") != std::string::npos) return true;
    if (name == "cls") return true;
    if (name.rfind("pos.", 0) == 0) return true;
    return false;
}

TokenSequence embed_edge(const LiftedParams& params, const StdFeatures& features,
                         const ModelConfig& config) {
    check_width(features.head, config.dim_head_features, "x_head");
    check_width(features.edge, config.dim_edge_features, "x_edge");
    check_width(features.tail, config.dim_tail_features, "x_tail");

    auto cls_token = ad::add(params.at("cls"), params.at("pos.0"));
    auto h = ad::add(token_mlp(params, "embed.head", ad::constant(features.head)), params.at("pos.1"));
    auto r = ad::add(token_mlp(params, "embed.edge", ad::constant(features.edge)), params.at("pos.2"));
    auto t = ad::add(token_mlp(params, "embed.tail", ad::constant(features.tail)), params.at("pos.3"));
    return TokenSequence{ad::concat_rows({cls_token, h, r, t})};
}

ad::Value multi_head_attention(const ad::Value& tokens, const LiftedParams& params,
                               const std::string& prefix, int n_heads) {
    const std::int64_t d = tokens.cols();
    if (n_heads < 1 || d % n_heads != 0) {
        throw ConfigError("attention width " + std::to_string(d) + " not divisible by " +
                          std::to_string(n_heads) + " heads");
    }
    const std::int64_t dk = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    auto q = ad::affine(tokens, params.at(prefix + "wq.weight"), params.at(prefix + "wq.bias"));
    auto k = ad::affine(tokens, params.at(prefix + "wk.weight"), params.at(prefix + "wk.bias"));
    auto v = ad::affine(tokens, params.at(prefix + "wv.weight"), params.at(prefix + "wv.bias"));

    std::vector<ad::Value> heads;
    heads.reserve(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        auto qh = ad::slice_cols(q, h * dk, dk);
        auto kh = ad::slice_cols(k, h * dk, dk);
        auto vh = ad::slice_cols(v, h * dk, dk);
        auto weights = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), scale));
        heads.push_back(ad::matmul(weights, vh));
    }
    auto merged = n_heads == 1 ? heads[0] : ad::concat_cols(heads);
    return ad::affine(merged, params.at(prefix + "wo.weight"), params.at(prefix + "wo.bias"));
}

ad::Value transformer_stack(const ad::Value& tokens, const LiftedParams& params,
                            const std::string& prefix, int n_layers, const ModelConfig& config,
                            Rng* dropout_rng) {
    auto x = tokens;
    for (int i = 0; i < n_layers; ++i) {
        const std::string layer = prefix + std::to_string(i) + ".";
        auto attn = multi_head_attention(x, params, layer + "attn.", config.n_heads);
        if (dropout_rng && config.dropout > 0.0) attn = ad::dropout(attn, config.dropout, *dropout_rng);
        x = ad::layer_norm(ad::add(x, attn), params.at(layer + "norm1.gamma"),
                           params.at(layer + "norm1.beta"), kLayerNormEps);
        auto hidden = ad::gelu(
            ad::affine(x, params.at(layer + "ffn.fc1.weight"), params.at(layer + "ffn.fc1.bias")));
        auto ffn =
            ad::affine(hidden, params.at(layer + "ffn.fc2.weight"), params.at(layer + "ffn.fc2.bias"));
        if (dropout_rng && config.dropout > 0.0) ffn = ad::dropout(ffn, config.dropout, *dropout_rng);
        x = ad::layer_norm(ad::add(x, ffn), params.at(layer + "norm2.gamma"),
                           params.at(layer + "norm2.beta"), kLayerNormEps);
    }
    return x;
}

ad::Value encoder_forward(const TokenSequence& tokens, const LiftedParams& params,
                          const ModelConfig& config, Rng* dropout_rng) {
    return transformer_stack(tokens.rows, params, "encoder.", config.n_encoder_layers, config,
                             dropout_rng);
}

ad::Value classify_logit(const LiftedParams& params, const StdFeatures& features,
                         const ModelConfig& config, Rng* dropout_rng) {
    auto hidden = encoder_forward(embed_edge(params, features, config), params, config, dropout_rng);
    auto cls_state = ad::slice_rows(hidden, 0, 1);
    auto logit = ad::affine(cls_state, params.at("head.weight"), params.at("head.bias"));
    return ad::reshape(logit, {1});
}

EdgePrediction classify_edge(const ParamStore& params, const EdgeRecord& edge,
                             const ModelConfig& config, const FeatureStats& stats) {
    LiftedParams lifted(params);
    auto logit = classify_logit(lifted, stats.apply(edge), config);
    const double z = logit.tensor()[0];
    const double prob = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return EdgePrediction{z, prob};
}

}  // namespace edgeformer
