#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msa/data.hpp"
#include "msa/fusion.hpp"
#include "msa/tensor.hpp"

namespace msa {

struct TrainConfig {
    std::size_t epochs = 100;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 42;
    bool shuffle_each_epoch = true;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;     // 1-based
    double mean_loss = 0.0;    // mean per-utterance cross-entropy
    double train_accuracy = 0.0;
    double seconds = 0.0;      // wall clock
};

using TrainHistory = std::vector<EpochStats>;

// epoch,mean_loss,train_accuracy,seconds as CSV.
void write_history(const TrainHistory& history,
                   const std::filesystem::path& path);

// Mean cross-entropy over the sequence: (1/T) sum_t CE(probs_t, labels_t).
Tensor sequence_loss(std::span<const Tensor> probs,
                     std::span<const int> labels);

// First/second moment estimates, one pair of buffers per parameter tensor.
struct AdamState {
    explicit AdamState(
        const std::vector<std::pair<std::string, Tensor>>& params);
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

// One bias-corrected update from the gradients currently on the parameter
// tensors: theta -= lr * m_hat / (sqrt(v_hat) + eps). Throws NumericError
// (naming the tensor) on a non-finite gradient.
void adam_step(std::vector<std::pair<std::string, Tensor>>& params,
               AdamState& state, const TrainConfig& cfg);

// Per-sequence stochastic training: every epoch walks the (optionally
// shuffled) sequences and applies forward -> sequence_loss -> backward ->
// adam_step. Deterministic given the seed.
TrainHistory train(const Corpus& corpus, ModelParams& params,
                   const TrainConfig& cfg);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

// Central finite-difference check of every parameter scalar against the
// analytic gradient of loss_fn. Relative error is
// |a - f| / max(|a|, |f|, 1e-8).
GradCheckResult grad_check_params(
    std::vector<std::pair<std::string, Tensor>>& params,
    const std::function<Tensor()>& loss_fn, double epsilon);

// Gradient check of the full model's mean cross-entropy on one sample.
GradCheckResult grad_check(ModelParams& params, const SequenceSample& sample,
                           double epsilon = 1e-5);

}  // namespace msa
