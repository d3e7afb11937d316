#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "msa/attention.hpp"
#include "msa/data.hpp"
#include "msa/lstm.hpp"
#include "msa/tensor.hpp"

namespace msa {

enum class Modality { text, audio, visual };

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);

// How the three first-layer hidden states are combined at each timestep.
//   scalar_gate: s = <h_a, h_b>, fused = s * h_c
//   hadamard:    fused = h_a . h_b . h_c (elementwise)
//   concat:      fused = [h_a ; h_b ; h_c]
enum class FusionMode { scalar_gate, hadamard, concat };

const char* fusion_mode_name(FusionMode m);
FusionMode fusion_mode_from_name(const std::string& name);

struct FusionConfig {
    FusionMode mode = FusionMode::scalar_gate;
    std::array<Modality, 3> order = {Modality::text, Modality::audio,
                                     Modality::visual};
    std::size_t d_model = 64;
    std::size_t heads = 4;
    std::size_t num_classes = 7;
    std::size_t input_dim = 300;

    // Input width of the second-layer LSTM: d_model, or 3*d_model in
    // concat mode.
    std::size_t fused_dim() const;

    void validate() const;

    bool operator==(const FusionConfig&) const = default;
};

// Complete parameter set: three per-modality LSTMs, the fused-sequence LSTM,
// multi-head attention, and the 7-class linear head.
struct ModelParams {
    LstmParams lstm_text;
    LstmParams lstm_audio;
    LstmParams lstm_visual;
    LstmParams lstm_fused;
    MhaParams mha;
    Tensor head_w;  // [num_classes, d_model]
    Tensor head_b;  // [num_classes]
    FusionConfig config;

    static ModelParams init(const FusionConfig& config, std::uint64_t seed);

    // All parameter tensors in a fixed order. Tensor is a shared handle, so
    // writes through the returned tensors update the model.
    std::vector<std::pair<std::string, Tensor>> named_params() const;

    void set_requires_grad(bool value);
    void zero_grad();
};

// Two-step state fusion. Inputs must already be ordered per config.order;
// the first two are fused first, then the result with the third.
Tensor fuse_states(const Tensor& h_a, const Tensor& h_b, const Tensor& h_c,
                   FusionMode mode);

// End-to-end forward pass: one 7-class probability vector per utterance.
std::vector<Tensor> forward(const SequenceSample& sample,
                            const ModelParams& params);

// Index of the largest probability; ties break toward the lowest class.
int argmax_class(const Tensor& probs);

// Predicted class per utterance. Runs without graph recording.
std::vector<int> predict(const SequenceSample& sample,
                         const ModelParams& params);

// Self-describing JSON model file with fields format_version, config and
// params[]; numbers are written with round-trip-exact formatting, so
// save -> load -> save is byte-identical.
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace msa
