#include "msa/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "msa/errors.hpp"
#include "msa/ops.hpp"

namespace msa {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
        !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("adam betas must lie in (0, 1)");
    }
    if (!(adam_epsilon > 0.0)) {
        throw ConfigError("adam_epsilon must be positive");
    }
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

void write_history(const TrainHistory& history,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write history file " + path.string());
    }
    out << "epoch,mean_loss,train_accuracy,seconds\n";
    for (const EpochStats& e : history) {
        out << e.epoch << ',' << format_double(e.mean_loss) << ','
            << format_double(e.train_accuracy) << ','
            << format_double(e.seconds) << '\n';
    }
    if (!out) {
        throw IoError("failed while writing history file " + path.string());
    }
}

Tensor sequence_loss(std::span<const Tensor> probs,
                     std::span<const int> labels) {
    if (probs.empty() || probs.size() != labels.size()) {
        throw ContractError("sequence_loss: " + std::to_string(probs.size()) +
                            " probability vectors vs " +
                            std::to_string(labels.size()) + " labels");
    }
    Tensor total = cross_entropy(probs[0], static_cast<std::size_t>(labels[0]));
    for (std::size_t t = 1; t < probs.size(); ++t) {
        total = total + cross_entropy(probs[t],
                                      static_cast<std::size_t>(labels[t]));
    }
    return scale(total, 1.0 / static_cast<double>(probs.size()));
}

AdamState::AdamState(
    const std::vector<std::pair<std::string, Tensor>>& params) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& [name, tensor] : params) {
        m.emplace_back(tensor.size(), 0.0);
        v.emplace_back(tensor.size(), 0.0);
    }
}

void adam_step(std::vector<std::pair<std::string, Tensor>>& params,
               AdamState& state, const TrainConfig& cfg) {
    if (state.m.size() != params.size()) {
        throw ContractError("adam_step: state does not match parameter list");
    }
    ++state.step;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& [name, tensor] = params[p];
        const auto& g = tensor.grad();
        auto& m = state.m[p];
        auto& v = state.v[p];
        auto& theta = tensor.data();
        if (g.size() != theta.size()) {
            throw ContractError("adam_step: gradient size mismatch on '" +
                                name + "'");
        }
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = g[i];
            if (!std::isfinite(gi)) {
                throw NumericError("adam_step: non-finite gradient in '" +
                                   name + "' at index " + std::to_string(i));
            }
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            theta[i] -=
                cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
        }
    }
}

TrainHistory train(const Corpus& corpus, ModelParams& params,
                   const TrainConfig& cfg) {
    cfg.validate();
    if (corpus.sequences.empty()) {
        throw ContractError("train: empty corpus");
    }
    if (corpus.feature_dim != params.config.input_dim) {
        throw DimensionError("train: corpus feature dimension " +
                             std::to_string(corpus.feature_dim) +
                             " does not match model input_dim " +
                             std::to_string(params.config.input_dim));
    }

    params.set_requires_grad(true);
    auto named = params.named_params();
    AdamState adam(named);
    std::mt19937_64 shuffle_rng(cfg.seed);

    TrainHistory history;
    history.reserve(cfg.epochs);

    std::vector<std::size_t> order(corpus.sequences.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        if (cfg.shuffle_each_epoch) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
        }

        double loss_sum = 0.0;
        std::size_t utterances = 0;
        std::size_t correct = 0;
        for (std::size_t idx : order) {
            const SequenceSample& seq = corpus.sequences[idx];
            std::vector<int> labels;
            labels.reserve(seq.utterances.size());
            for (const auto& r : seq.utterances) {
                labels.push_back(bin_label(r.label));
            }

            std::vector<Tensor> probs = forward(seq, params);
            Tensor loss = sequence_loss(probs, labels);
            if (!std::isfinite(loss.item())) {
                throw NumericError(
                    "train: non-finite loss at epoch " +
                    std::to_string(epoch) + ", video '" + seq.video_id + "'");
            }
            loss_sum += loss.item() * static_cast<double>(labels.size());
            utterances += labels.size();
            for (std::size_t t = 0; t < probs.size(); ++t) {
                if (argmax_class(probs[t]) == labels[t]) ++correct;
            }

            params.zero_grad();
            backward(loss);
            adam_step(named, adam, cfg);
        }

        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - started;
        history.push_back({epoch, loss_sum / static_cast<double>(utterances),
                           static_cast<double>(correct) /
                               static_cast<double>(utterances),
                           elapsed.count()});
    }
    return history;
}

GradCheckResult grad_check_params(
    std::vector<std::pair<std::string, Tensor>>& params,
    const std::function<Tensor()>& loss_fn, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw ContractError("grad_check: epsilon must be positive");
    }

    for (auto& [name, tensor] : params) tensor.zero_grad();
    backward(loss_fn());
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& [name, tensor] : params) analytic.push_back(tensor.grad());

    GradCheckResult result;
    NoGradGuard no_grad;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& theta = params[p].second.data();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + epsilon;
            const double loss_plus = loss_fn().item();
            theta[i] = saved - epsilon;
            const double loss_minus = loss_fn().item();
            theta[i] = saved;

            const double fd = (loss_plus - loss_minus) / (2.0 * epsilon);
            const double a = analytic[p][i];
            const double rel = std::abs(a - fd) /
                               std::max({std::abs(a), std::abs(fd), 1e-8});
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = params[p].first;
                result.worst_index = i;
            }
        }
    }
    return result;
}

GradCheckResult grad_check(ModelParams& params, const SequenceSample& sample,
                           double epsilon) {
    params.set_requires_grad(true);
    auto named = params.named_params();
    std::vector<int> labels;
    for (const auto& r : sample.utterances) labels.push_back(bin_label(r.label));
    auto loss_fn = [&]() {
        std::vector<Tensor> probs = forward(sample, params);
        return sequence_loss(probs, labels);
    };
    return grad_check_params(named, loss_fn, epsilon);
}

}  // namespace msa
