#pragma once

#include <random>
#include <span>
#include <vector>

#include "msa/tensor.hpp"

namespace msa {

// Per-head projection weights for scaled dot-product self-attention.
struct MhaParams {
    std::vector<Tensor> w_q;  // heads x [d_k, d_model]
    std::vector<Tensor> w_k;
    std::vector<Tensor> w_v;
    Tensor w_o;               // [d_model, heads * d_k]
    std::size_t heads = 0;
    std::size_t d_model = 0;
    std::size_t d_k = 0;

    // Throws ConfigError when d_model is not divisible by heads.
    static MhaParams init(std::size_t d_model, std::size_t heads,
                          std::mt19937_64& rng);

    void validate() const;
};

// Full (non-causal) multi-head self-attention over a sequence of d_model
// vectors. Per head: weights = softmax over keys of QK^T / sqrt(d_k); head
// outputs are concatenated and projected by w_o. Output length and dimension
// equal the input's. When attention_out is non-null it receives one [T,T]
// row-stochastic weight matrix per head.
std::vector<Tensor> multi_head_attention(
    std::span<const Tensor> seq, const MhaParams& p,
    std::vector<Tensor>* attention_out = nullptr);

// W x + b.
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace msa
