#include "msa/lstm.hpp"

#include <string>

#include "msa/errors.hpp"
#include "msa/init.hpp"
#include "msa/ops.hpp"

namespace msa {

LstmParams LstmParams::init(std::size_t hidden, std::size_t input,
                            std::mt19937_64& rng) {
    LstmParams p;
    p.hidden = hidden;
    p.input = input;
    p.w = glorot_uniform({4 * hidden, input}, input, 4 * hidden, rng);
    p.u = glorot_uniform({4 * hidden, hidden}, hidden, 4 * hidden, rng);
    std::vector<double> bias(4 * hidden, 0.0);
    for (std::size_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;
    p.b = Tensor::from_data({4 * hidden}, std::move(bias));
    return p;
}

void LstmParams::validate() const {
    const Shape w_want{4 * hidden, input};
    const Shape u_want{4 * hidden, hidden};
    const Shape b_want{4 * hidden};
    if (w.shape() != w_want || u.shape() != u_want || b.shape() != b_want) {
        throw DimensionError(
            "lstm params inconsistent with hidden=" + std::to_string(hidden) +
            " input=" + std::to_string(input) + ": W " + shape_str(w.shape()) +
            ", U " + shape_str(u.shape()) + ", b " + shape_str(b.shape()));
    }
}

std::pair<Tensor, Tensor> lstm_step(const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev,
                                    const LstmParams& p) {
    p.validate();
    const std::size_t h = p.hidden;
    if (x.shape() != Shape{p.input}) {
        throw DimensionError("lstm_step: input " + shape_str(x.shape()) +
                             " does not match expected [" +
                             std::to_string(p.input) + "]");
    }
    if (h_prev.shape() != Shape{h} || c_prev.shape() != Shape{h}) {
        throw DimensionError("lstm_step: state " + shape_str(h_prev.shape()) +
                             "/" + shape_str(c_prev.shape()) +
                             " does not match hidden size " +
                             std::to_string(h));
    }

    Tensor z = matvec(p.w, x) + matvec(p.u, h_prev) + p.b;
    Tensor gate_i = sigmoid(slice(z, 0, h));
    Tensor gate_f = sigmoid(slice(z, h, h));
    Tensor gate_o = sigmoid(slice(z, 2 * h, h));
    Tensor cand = tanh(slice(z, 3 * h, h));

    Tensor c_next = gate_f * c_prev + gate_i * cand;
    Tensor h_next = gate_o * tanh(c_next);
    return {h_next, c_next};
}

std::vector<Tensor> lstm_sequence(std::span<const Tensor> xs,
                                  const LstmParams& p) {
    if (xs.empty()) {
        throw ContractError("lstm_sequence: empty input sequence");
    }
    Tensor h = Tensor::zeros({p.hidden});
    Tensor c = Tensor::zeros({p.hidden});
    std::vector<Tensor> hs;
    hs.reserve(xs.size());
    for (const Tensor& x : xs) {
        auto [h_next, c_next] = lstm_step(x, h, c, p);
        h = h_next;
        c = c_next;
        hs.push_back(h);
    }
    return hs;
}

}  // namespace msa
