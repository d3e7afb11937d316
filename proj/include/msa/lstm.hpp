#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "msa/tensor.hpp"

namespace msa {

// Weights of one LSTM cell. W, U and b each hold four stacked gate blocks
// in the fixed order: input i, forget f, output o, candidate g.
struct LstmParams {
    Tensor w;  // [4h, d] input weights
    Tensor u;  // [4h, h] recurrent weights
    Tensor b;  // [4h] bias, forget block starts at 1.0
    std::size_t hidden = 0;
    std::size_t input = 0;

    // Glorot-uniform weights, zero bias except the forget block.
    static LstmParams init(std::size_t hidden, std::size_t input,
                           std::mt19937_64& rng);

    void validate() const;
};

// One recurrence step:
//   i = sigmoid(W_i x + U_i h + b_i)      f, o likewise
//   g = tanh(W_g x + U_g h + b_g)
//   c' = f.c + i.g,  h' = o.tanh(c')
std::pair<Tensor, Tensor> lstm_step(const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev,
                                    const LstmParams& p);

// Left-to-right unroll from zero initial state; returns all hidden states.
std::vector<Tensor> lstm_sequence(std::span<const Tensor> xs,
                                  const LstmParams& p);

}  // namespace msa
