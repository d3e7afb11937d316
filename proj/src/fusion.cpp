#include "msa/fusion.hpp"

#include <random>

#include "msa/errors.hpp"
#include "msa/init.hpp"
#include "msa/ops.hpp"

namespace msa {

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::text: return "text";
        case Modality::audio: return "audio";
        case Modality::visual: return "visual";
    }
    throw ContractError("unknown modality");
}

Modality modality_from_name(const std::string& name) {
    if (name == "text") return Modality::text;
    if (name == "audio") return Modality::audio;
    if (name == "visual") return Modality::visual;
    throw ConfigError("unknown modality '" + name + "'");
}

const char* fusion_mode_name(FusionMode m) {
    switch (m) {
        case FusionMode::scalar_gate: return "scalar_gate";
        case FusionMode::hadamard: return "hadamard";
        case FusionMode::concat: return "concat";
    }
    throw ContractError("unknown fusion mode");
}

FusionMode fusion_mode_from_name(const std::string& name) {
    if (name == "scalar_gate") return FusionMode::scalar_gate;
    if (name == "hadamard") return FusionMode::hadamard;
    if (name == "concat") return FusionMode::concat;
    throw ConfigError("unknown fusion mode '" + name + "'");
}

std::size_t FusionConfig::fused_dim() const {
    return mode == FusionMode::concat ? 3 * d_model : d_model;
}

void FusionConfig::validate() const {
    if (num_classes != 7) {
        throw ConfigError("num_classes is fixed at 7, got " +
                          std::to_string(num_classes));
    }
    if (d_model == 0 || input_dim == 0) {
        throw ConfigError("d_model and input_dim must be positive");
    }
    if (heads == 0 || d_model % heads != 0) {
        throw ConfigError("d_model " + std::to_string(d_model) +
                          " is not divisible by heads " +
                          std::to_string(heads));
    }
    std::array<bool, 3> present{false, false, false};
    for (Modality m : order) present[static_cast<std::size_t>(m)] = true;
    if (!(present[0] && present[1] && present[2])) {
        throw ConfigError("fusion order must be a permutation of "
                          "text, audio, visual");
    }
}

ModelParams ModelParams::init(const FusionConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    ModelParams p;
    p.config = config;
    p.lstm_text = LstmParams::init(config.d_model, config.input_dim, rng);
    p.lstm_audio = LstmParams::init(config.d_model, config.input_dim, rng);
    p.lstm_visual = LstmParams::init(config.d_model, config.input_dim, rng);
    p.lstm_fused = LstmParams::init(config.d_model, config.fused_dim(), rng);
    p.mha = MhaParams::init(config.d_model, config.heads, rng);
    p.head_w = glorot_uniform({config.num_classes, config.d_model},
                              config.d_model, config.num_classes, rng);
    p.head_b = Tensor::zeros({config.num_classes});
    return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named_params()
    const {
    std::vector<std::pair<std::string, Tensor>> named;
    auto add_lstm = [&](const std::string& prefix, const LstmParams& l) {
        named.emplace_back(prefix + ".W", l.w);
        named.emplace_back(prefix + ".U", l.u);
        named.emplace_back(prefix + ".b", l.b);
    };
    add_lstm("lstm_text", lstm_text);
    add_lstm("lstm_audio", lstm_audio);
    add_lstm("lstm_visual", lstm_visual);
    add_lstm("lstm_fused", lstm_fused);
    for (std::size_t h = 0; h < mha.heads; ++h) {
        const std::string prefix = "mha.head" + std::to_string(h);
        named.emplace_back(prefix + ".W_Q", mha.w_q[h]);
        named.emplace_back(prefix + ".W_K", mha.w_k[h]);
        named.emplace_back(prefix + ".W_V", mha.w_v[h]);
    }
    named.emplace_back("mha.W_O", mha.w_o);
    named.emplace_back("head.W", head_w);
    named.emplace_back("head.b", head_b);
    return named;
}

void ModelParams::set_requires_grad(bool value) {
    for (auto& [name, tensor] : named_params()) {
        tensor.set_requires_grad(value);
    }
}

void ModelParams::zero_grad() {
    for (auto& [name, tensor] : named_params()) {
        if (tensor.requires_grad()) tensor.zero_grad();
    }
}

Tensor fuse_states(const Tensor& h_a, const Tensor& h_b, const Tensor& h_c,
                   FusionMode mode) {
    if (h_a.shape() != h_b.shape() || h_a.shape() != h_c.shape() ||
        h_a.rank() != 1) {
        throw DimensionError("fuse_states: state shapes differ: " +
                             shape_str(h_a.shape()) + ", " +
                             shape_str(h_b.shape()) + ", " +
                             shape_str(h_c.shape()));
    }
    switch (mode) {
        case FusionMode::scalar_gate:
            return mul(inner_product(h_a, h_b), h_c);
        case FusionMode::hadamard:
            return mul(mul(h_a, h_b), h_c);
        case FusionMode::concat: {
            const Tensor parts[] = {h_a, h_b, h_c};
            return concat(parts);
        }
    }
    throw ContractError("unknown fusion mode");
}

namespace {

Tensor feature_tensor(const std::vector<double>& values) {
    return Tensor::from_data({values.size()}, values);
}

}  // namespace

std::vector<Tensor> forward(const SequenceSample& sample,
                            const ModelParams& params) {
    const FusionConfig& cfg = params.config;
    cfg.validate();
    if (sample.utterances.empty()) {
        throw ContractError("forward: empty sample");
    }

    std::vector<Tensor> xs_text, xs_audio, xs_visual;
    for (const UtteranceRecord& r : sample.utterances) {
        if (r.text.size() != r.audio.size() ||
            r.text.size() != r.visual.size()) {
            throw AlignmentError(
                "forward: modality lengths differ in video '" +
                sample.video_id + "' utterance " +
                std::to_string(r.utterance_index));
        }
        if (r.text.size() != cfg.input_dim) {
            throw DimensionError(
                "forward: feature dimension " + std::to_string(r.text.size()) +
                " does not match model input_dim " +
                std::to_string(cfg.input_dim));
        }
        xs_text.push_back(feature_tensor(r.text));
        xs_audio.push_back(feature_tensor(r.audio));
        xs_visual.push_back(feature_tensor(r.visual));
    }

    std::vector<Tensor> h_text = lstm_sequence(xs_text, params.lstm_text);
    std::vector<Tensor> h_audio = lstm_sequence(xs_audio, params.lstm_audio);
    std::vector<Tensor> h_visual =
        lstm_sequence(xs_visual, params.lstm_visual);

    auto states_for = [&](Modality m) -> std::vector<Tensor>& {
        switch (m) {
            case Modality::text: return h_text;
            case Modality::audio: return h_audio;
            case Modality::visual: return h_visual;
        }
        throw ContractError("unknown modality");
    };
    std::vector<Tensor>& first = states_for(cfg.order[0]);
    std::vector<Tensor>& second = states_for(cfg.order[1]);
    std::vector<Tensor>& third = states_for(cfg.order[2]);

    const std::size_t steps = sample.utterances.size();
    std::vector<Tensor> fused;
    fused.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        fused.push_back(fuse_states(first[t], second[t], third[t], cfg.mode));
    }

    std::vector<Tensor> h_fused = lstm_sequence(fused, params.lstm_fused);
    std::vector<Tensor> attended = multi_head_attention(h_fused, params.mha);

    std::vector<Tensor> probs;
    probs.reserve(steps);
    for (const Tensor& a : attended) {
        probs.push_back(softmax(dense(a, params.head_w, params.head_b)));
    }
    return probs;
}

int argmax_class(const Tensor& probs) {
    const auto& v = probs.data();
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return static_cast<int>(best);
}

std::vector<int> predict(const SequenceSample& sample,
                         const ModelParams& params) {
    NoGradGuard no_grad;
    std::vector<Tensor> probs = forward(sample, params);
    std::vector<int> classes;
    classes.reserve(probs.size());
    for (const Tensor& p : probs) classes.push_back(argmax_class(p));
    return classes;
}

}  // namespace msa
