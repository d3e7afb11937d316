#include "msa/ops.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "msa/errors.hpp"

namespace msa {

namespace {

void require_rank(const Tensor& t, std::size_t r, const char* op) {
    if (t.rank() != r) {
        throw DimensionError(std::string(op) + ": expected rank " +
                             std::to_string(r) + " tensor, got shape " +
                             shape_str(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    if (a.shape()[1] != b.shape()[0]) {
        throw DimensionError("matmul: inner dimensions disagree, " +
                             shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(m * n, 0.0);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = av[i * k + l];
            for (std::size_t j = 0; j < n; ++j) {
                out[i * n + j] += ail * bv[l * n + j];
            }
        }
    }
    return make_op(
        "matmul", {m, n}, std::move(out), {a, b},
        [m, k, n](const std::vector<double>& g, const std::vector<double>&,
                  std::vector<Tensor>& in) {
            const auto& av = in[0].data();
            const auto& bv = in[1].data();
            if (auto* ga = grad_sink(in[0])) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const double gij = g[i * n + j];
                        for (std::size_t l = 0; l < k; ++l)
                            (*ga)[i * k + l] += gij * bv[l * n + j];
                    }
            }
            if (auto* gb = grad_sink(in[1])) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t l = 0; l < k; ++l) {
                        const double ail = av[i * k + l];
                        for (std::size_t j = 0; j < n; ++j)
                            (*gb)[l * n + j] += ail * g[i * n + j];
                    }
            }
        });
}

Tensor matvec(const Tensor& w, const Tensor& x) {
    require_rank(w, 2, "matvec");
    require_rank(x, 1, "matvec");
    if (w.shape()[1] != x.shape()[0]) {
        throw DimensionError("matvec: inner dimensions disagree, " +
                             shape_str(w.shape()) + " x " +
                             shape_str(x.shape()));
    }
    const std::size_t m = w.shape()[0], k = w.shape()[1];
    std::vector<double> out(m, 0.0);
    const auto& wv = w.data();
    const auto& xv = x.data();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) acc += wv[i * k + l] * xv[l];
        out[i] = acc;
    }
    return make_op(
        "matvec", {m}, std::move(out), {w, x},
        [m, k](const std::vector<double>& g, const std::vector<double>&,
               std::vector<Tensor>& in) {
            const auto& wv = in[0].data();
            const auto& xv = in[1].data();
            if (auto* gw = grad_sink(in[0])) {
                for (std::size_t i = 0; i < m; ++i) {
                    const double gi = g[i];
                    for (std::size_t l = 0; l < k; ++l)
                        (*gw)[i * k + l] += gi * xv[l];
                }
            }
            if (auto* gx = grad_sink(in[1])) {
                for (std::size_t i = 0; i < m; ++i) {
                    const double gi = g[i];
                    for (std::size_t l = 0; l < k; ++l)
                        (*gx)[l] += wv[i * k + l] * gi;
                }
            }
        });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.data()[i] + b.data()[i];
    return make_op("add", a.shape(), std::move(out), {a, b},
                   [](const std::vector<double>& g, const std::vector<double>&,
                      std::vector<Tensor>& in) {
                       if (auto* ga = grad_sink(in[0]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*ga)[i] += g[i];
                       if (auto* gb = grad_sink(in[1]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*gb)[i] += g[i];
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.data()[i] - b.data()[i];
    return make_op("sub", a.shape(), std::move(out), {a, b},
                   [](const std::vector<double>& g, const std::vector<double>&,
                      std::vector<Tensor>& in) {
                       if (auto* ga = grad_sink(in[0]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*ga)[i] += g[i];
                       if (auto* gb = grad_sink(in[1]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*gb)[i] -= g[i];
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    // Scalar-times-tensor broadcast (either side).
    if (a.rank() == 0 && b.rank() != 0) {
        const double s = a.item();
        std::vector<double> out(b.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * b.data()[i];
        return make_op(
            "mul_scalar", b.shape(), std::move(out), {a, b},
            [](const std::vector<double>& g, const std::vector<double>&,
               std::vector<Tensor>& in) {
                const double s = in[0].data()[0];
                const auto& bv = in[1].data();
                if (auto* ga = grad_sink(in[0])) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i)
                        acc += g[i] * bv[i];
                    (*ga)[0] += acc;
                }
                if (auto* gb = grad_sink(in[1]))
                    for (std::size_t i = 0; i < g.size(); ++i)
                        (*gb)[i] += g[i] * s;
            });
    }
    if (b.rank() == 0 && a.rank() != 0) return mul(b, a);

    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.data()[i] * b.data()[i];
    return make_op("mul", a.shape(), std::move(out), {a, b},
                   [](const std::vector<double>& g, const std::vector<double>&,
                      std::vector<Tensor>& in) {
                       const auto& av = in[0].data();
                       const auto& bv = in[1].data();
                       if (auto* ga = grad_sink(in[0]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*ga)[i] += g[i] * bv[i];
                       if (auto* gb = grad_sink(in[1]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*gb)[i] += g[i] * av[i];
                   });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a.data()[i];
    return make_op("scale", a.shape(), std::move(out), {a},
                   [c](const std::vector<double>& g, const std::vector<double>&,
                       std::vector<Tensor>& in) {
                       if (auto* ga = grad_sink(in[0]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*ga)[i] += c * g[i];
                   });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = 1.0 / (1.0 + std::exp(-a.data()[i]));
    return make_op("sigmoid", a.shape(), std::move(out), {a},
                   [](const std::vector<double>& g,
                      const std::vector<double>& y, std::vector<Tensor>& in) {
                       if (auto* ga = grad_sink(in[0]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*ga)[i] += g[i] * y[i] * (1.0 - y[i]);
                   });
}

Tensor tanh(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::tanh(a.data()[i]);
    return make_op("tanh", a.shape(), std::move(out), {a},
                   [](const std::vector<double>& g,
                      const std::vector<double>& y, std::vector<Tensor>& in) {
                       if (auto* ga = grad_sink(in[0]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
                   });
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    return make_op("sum", {}, {acc}, {a},
                   [](const std::vector<double>& g, const std::vector<double>&,
                      std::vector<Tensor>& in) {
                       if (auto* ga = grad_sink(in[0]))
                           for (std::size_t i = 0; i < ga->size(); ++i)
                               (*ga)[i] += g[0];
                   });
}

Tensor inner_product(const Tensor& a, const Tensor& b) {
    require_rank(a, 1, "inner_product");
    require_rank(b, 1, "inner_product");
    if (a.size() != b.size()) {
        throw DimensionError("inner_product: length mismatch " +
                             shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a.data()[i] * b.data()[i];
    return make_op("inner_product", {}, {acc}, {a, b},
                   [](const std::vector<double>& g, const std::vector<double>&,
                      std::vector<Tensor>& in) {
                       const auto& av = in[0].data();
                       const auto& bv = in[1].data();
                       if (auto* ga = grad_sink(in[0]))
                           for (std::size_t i = 0; i < av.size(); ++i)
                               (*ga)[i] += g[0] * bv[i];
                       if (auto* gb = grad_sink(in[1]))
                           for (std::size_t i = 0; i < av.size(); ++i)
                               (*gb)[i] += g[0] * av[i];
                   });
}

namespace {

// softmax of src[offset..offset+k) into dst, max-subtracted.
void softmax_span(const std::vector<double>& src, std::size_t offset,
                  std::size_t k, std::vector<double>& dst) {
    double mx = src[offset];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, src[offset + i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double e = std::exp(src[offset + i] - mx);
        dst[offset + i] = e;
        denom += e;
    }
    for (std::size_t i = 0; i < k; ++i) dst[offset + i] /= denom;
}

// dL/dv_i = y_i * (g_i - sum_j g_j y_j), one row.
void softmax_backward_span(const std::vector<double>& g,
                           const std::vector<double>& y, std::size_t offset,
                           std::size_t k, std::vector<double>& gv) {
    double dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) dot += g[offset + i] * y[offset + i];
    for (std::size_t i = 0; i < k; ++i)
        gv[offset + i] += y[offset + i] * (g[offset + i] - dot);
}

}  // namespace

Tensor softmax(const Tensor& v) {
    require_rank(v, 1, "softmax");
    const std::size_t k = v.size();
    std::vector<double> out(k);
    softmax_span(v.data(), 0, k, out);
    return make_op("softmax", v.shape(), std::move(out), {v},
                   [k](const std::vector<double>& g,
                       const std::vector<double>& y, std::vector<Tensor>& in) {
                       if (auto* gv = grad_sink(in[0]))
                           softmax_backward_span(g, y, 0, k, *gv);
                   });
}

Tensor softmax_rows(const Tensor& m) {
    require_rank(m, 2, "softmax_rows");
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        softmax_span(m.data(), r * cols, cols, out);
    return make_op("softmax_rows", m.shape(), std::move(out), {m},
                   [rows, cols](const std::vector<double>& g,
                                const std::vector<double>& y,
                                std::vector<Tensor>& in) {
                       if (auto* gm = grad_sink(in[0]))
                           for (std::size_t r = 0; r < rows; ++r)
                               softmax_backward_span(g, y, r * cols, cols,
                                                     *gm);
                   });
}

Tensor cross_entropy(const Tensor& probs, std::size_t target) {
    require_rank(probs, 1, "cross_entropy");
    if (target >= probs.size()) {
        throw IndexError("cross_entropy: target " + std::to_string(target) +
                         " out of range for " + std::to_string(probs.size()) +
                         " classes");
    }
    double total = 0.0;
    for (double p : probs.data()) total += p;
    if (std::abs(total - 1.0) > kProbSumTolerance) {
        throw ContractError("cross_entropy: probabilities sum to " +
                            std::to_string(total));
    }
    const double p = std::max(probs.data()[target], kCrossEntropyFloor);
    return make_op(
        "cross_entropy", {}, {-std::log(p)}, {probs},
        [target](const std::vector<double>& g, const std::vector<double>&,
                 std::vector<Tensor>& in) {
            if (auto* gp = grad_sink(in[0])) {
                const double pt = in[0].data()[target];
                if (pt >= kCrossEntropyFloor) (*gp)[target] -= g[0] / pt;
            }
        });
}

Tensor concat(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("concat: no inputs");
    std::vector<double> out;
    std::vector<Tensor> inputs;
    for (const Tensor& p : parts) {
        require_rank(p, 1, "concat");
        out.insert(out.end(), p.data().begin(), p.data().end());
        inputs.push_back(p);
    }
    const std::size_t total = out.size();
    return make_op("concat", {total}, std::move(out), std::move(inputs),
                   [](const std::vector<double>& g, const std::vector<double>&,
                      std::vector<Tensor>& in) {
                       std::size_t off = 0;
                       for (Tensor& part : in) {
                           if (auto* gp = grad_sink(part))
                               for (std::size_t i = 0; i < gp->size(); ++i)
                                   (*gp)[i] += g[off + i];
                           off += part.size();
                       }
                   });
}

Tensor slice(const Tensor& v, std::size_t offset, std::size_t length) {
    require_rank(v, 1, "slice");
    if (offset + length > v.size() || length == 0) {
        throw DimensionError("slice: [" + std::to_string(offset) + ", " +
                             std::to_string(offset + length) +
                             ") out of range for " + shape_str(v.shape()));
    }
    std::vector<double> out(v.data().begin() + offset,
                            v.data().begin() + offset + length);
    return make_op("slice", {length}, std::move(out), {v},
                   [offset](const std::vector<double>& g,
                            const std::vector<double>&,
                            std::vector<Tensor>& in) {
                       if (auto* gv = grad_sink(in[0]))
                           for (std::size_t i = 0; i < g.size(); ++i)
                               (*gv)[offset + i] += g[i];
                   });
}

Tensor stack_rows(std::span<const Tensor> rows) {
    if (rows.empty()) throw ContractError("stack_rows: no inputs");
    const std::size_t d = rows[0].size();
    std::vector<double> out;
    out.reserve(rows.size() * d);
    std::vector<Tensor> inputs;
    for (const Tensor& r : rows) {
        require_rank(r, 1, "stack_rows");
        if (r.size() != d) {
            throw DimensionError("stack_rows: row length mismatch " +
                                 shape_str(r.shape()) + " vs [" +
                                 std::to_string(d) + "]");
        }
        out.insert(out.end(), r.data().begin(), r.data().end());
        inputs.push_back(r);
    }
    return make_op("stack_rows", {rows.size(), d}, std::move(out),
                   std::move(inputs),
                   [d](const std::vector<double>& g, const std::vector<double>&,
                       std::vector<Tensor>& in) {
                       for (std::size_t t = 0; t < in.size(); ++t) {
                           if (auto* gr = grad_sink(in[t]))
                               for (std::size_t i = 0; i < d; ++i)
                                   (*gr)[i] += g[t * d + i];
                       }
                   });
}

Tensor row(const Tensor& m, std::size_t i) {
    require_rank(m, 2, "row");
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    if (i >= rows) {
        throw IndexError("row: index " + std::to_string(i) +
                         " out of range for " + shape_str(m.shape()));
    }
    std::vector<double> out(m.data().begin() + i * cols,
                            m.data().begin() + (i + 1) * cols);
    return make_op("row", {cols}, std::move(out), {m},
                   [i, cols](const std::vector<double>& g,
                             const std::vector<double>&,
                             std::vector<Tensor>& in) {
                       if (auto* gm = grad_sink(in[0]))
                           for (std::size_t j = 0; j < cols; ++j)
                               (*gm)[i * cols + j] += g[j];
                   });
}

Tensor transpose(const Tensor& m) {
    require_rank(m, 2, "transpose");
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out[c * rows + r] = m.data()[r * cols + c];
    return make_op("transpose", {cols, rows}, std::move(out), {m},
                   [rows, cols](const std::vector<double>& g,
                                const std::vector<double>&,
                                std::vector<Tensor>& in) {
                       if (auto* gm = grad_sink(in[0]))
                           for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < cols; ++c)
                                   (*gm)[r * cols + c] += g[c * rows + r];
                   });
}

Tensor concat_cols(std::span<const Tensor> mats) {
    if (mats.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t rows = mats[0].shape().empty() ? 0 : mats[0].shape()[0];
    std::size_t total_cols = 0;
    std::vector<Tensor> inputs;
    for (const Tensor& m : mats) {
        require_rank(m, 2, "concat_cols");
        if (m.shape()[0] != rows) {
            throw DimensionError("concat_cols: row count mismatch " +
                                 shape_str(m.shape()));
        }
        total_cols += m.shape()[1];
        inputs.push_back(m);
    }
    std::vector<double> out(rows * total_cols);
    std::size_t col_off = 0;
    for (const Tensor& m : mats) {
        const std::size_t cols = m.shape()[1];
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                out[r * total_cols + col_off + c] = m.data()[r * cols + c];
        col_off += cols;
    }
    return make_op(
        "concat_cols", {rows, total_cols}, std::move(out), std::move(inputs),
        [rows, total_cols](const std::vector<double>& g,
                           const std::vector<double>&,
                           std::vector<Tensor>& in) {
            std::size_t col_off = 0;
            for (Tensor& m : in) {
                const std::size_t cols = m.shape()[1];
                if (auto* gm = grad_sink(m))
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < cols; ++c)
                            (*gm)[r * cols + c] +=
                                g[r * total_cols + col_off + c];
                col_off += cols;
            }
        });
}

}  // namespace msa
