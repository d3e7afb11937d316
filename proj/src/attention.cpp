#include "msa/attention.hpp"

#include <cmath>
#include <string>

#include "msa/errors.hpp"
#include "msa/init.hpp"
#include "msa/ops.hpp"

namespace msa {

MhaParams MhaParams::init(std::size_t d_model, std::size_t heads,
                          std::mt19937_64& rng) {
    if (heads == 0 || d_model % heads != 0) {
        throw ConfigError("d_model " + std::to_string(d_model) +
                          " is not divisible by heads " +
                          std::to_string(heads));
    }
    MhaParams p;
    p.heads = heads;
    p.d_model = d_model;
    p.d_k = d_model / heads;
    for (std::size_t h = 0; h < heads; ++h) {
        p.w_q.push_back(glorot_uniform({p.d_k, d_model}, d_model, p.d_k, rng));
        p.w_k.push_back(glorot_uniform({p.d_k, d_model}, d_model, p.d_k, rng));
        p.w_v.push_back(glorot_uniform({p.d_k, d_model}, d_model, p.d_k, rng));
    }
    p.w_o = glorot_uniform({d_model, heads * p.d_k}, heads * p.d_k, d_model,
                           rng);
    return p;
}

void MhaParams::validate() const {
    if (heads == 0 || d_k * heads != d_model) {
        throw ConfigError("d_model " + std::to_string(d_model) +
                          " is not divisible by heads " +
                          std::to_string(heads));
    }
    if (w_q.size() != heads || w_k.size() != heads || w_v.size() != heads) {
        throw DimensionError("mha params: expected " + std::to_string(heads) +
                             " projection triples, got " +
                             std::to_string(w_q.size()));
    }
    const Shape proj{d_k, d_model};
    for (std::size_t h = 0; h < heads; ++h) {
        if (w_q[h].shape() != proj || w_k[h].shape() != proj ||
            w_v[h].shape() != proj) {
            throw DimensionError("mha params: head " + std::to_string(h) +
                                 " projection shape mismatch");
        }
    }
    if (w_o.shape() != Shape{d_model, heads * d_k}) {
        throw DimensionError("mha params: w_o shape " +
                             shape_str(w_o.shape()) + " expected " +
                             shape_str({d_model, heads * d_k}));
    }
}

std::vector<Tensor> multi_head_attention(std::span<const Tensor> seq,
                                         const MhaParams& p,
                                         std::vector<Tensor>* attention_out) {
    p.validate();
    if (seq.empty()) {
        throw ContractError("multi_head_attention: empty input sequence");
    }
    for (const Tensor& t : seq) {
        if (t.shape() != Shape{p.d_model}) {
            throw DimensionError("multi_head_attention: timestep shape " +
                                 shape_str(t.shape()) + " expected [" +
                                 std::to_string(p.d_model) + "]");
        }
    }

    Tensor x = stack_rows(seq);  // [T, d_model]
    const double inv_sqrt_dk =
        1.0 / std::sqrt(static_cast<double>(p.d_k));

    if (attention_out) attention_out->clear();
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(p.heads);
    for (std::size_t h = 0; h < p.heads; ++h) {
        Tensor q = matmul(x, transpose(p.w_q[h]));  // [T, d_k]
        Tensor k = matmul(x, transpose(p.w_k[h]));
        Tensor v = matmul(x, transpose(p.w_v[h]));
        Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt_dk);
        Tensor weights = softmax_rows(scores);  // [T, T]
        if (attention_out) attention_out->push_back(weights);
        head_outputs.push_back(matmul(weights, v));  // [T, d_k]
    }

    Tensor merged = concat_cols(head_outputs);       // [T, H*d_k]
    Tensor out = matmul(merged, transpose(p.w_o));   // [T, d_model]

    std::vector<Tensor> result;
    result.reserve(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) result.push_back(row(out, t));
    return result;
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
    return matvec(w, x) + b;
}

}  // namespace msa
