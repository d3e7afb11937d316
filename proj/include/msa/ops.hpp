#pragma once

#include <cstddef>
#include <span>

#include "msa/tensor.hpp"

namespace msa {

// Matrix product [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

// Matrix-vector product [m,k] x [k] -> [m].
Tensor matvec(const Tensor& w, const Tensor& x);

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);

// Hadamard product. The single broadcast in the library: one operand may be
// a scalar (rank 0), which then scales the other.
Tensor mul(const Tensor& a, const Tensor& b);

// Multiply by a plain constant.
Tensor scale(const Tensor& a, double c);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

// Sum of all elements -> scalar.
Tensor sum(const Tensor& a);

// <a, b> of two equal-length vectors -> scalar.
Tensor inner_product(const Tensor& a, const Tensor& b);

// Numerically stable softmax of a vector. Output is strictly positive and
// sums to 1 within 1e-12.
Tensor softmax(const Tensor& v);

// Row-wise softmax of a matrix; every output row sums to 1.
Tensor softmax_rows(const Tensor& m);

// -ln(probs[target]), with probs[target] floored at kCrossEntropyFloor.
// Expects probs to sum to 1 within kProbSumTolerance.
inline constexpr double kCrossEntropyFloor = 1e-12;
inline constexpr double kProbSumTolerance = 1e-3;
Tensor cross_entropy(const Tensor& probs, std::size_t target);

// Vector concatenation -> one vector.
Tensor concat(std::span<const Tensor> parts);

// Contiguous vector slice [offset, offset+length).
Tensor slice(const Tensor& v, std::size_t offset, std::size_t length);

// T vectors of length d -> matrix [T,d].
Tensor stack_rows(std::span<const Tensor> rows);

// Row i of a matrix -> vector.
Tensor row(const Tensor& m, std::size_t i);

Tensor transpose(const Tensor& m);

// Matrices with equal row counts stacked side by side -> [T, sum(cols)].
Tensor concat_cols(std::span<const Tensor> mats);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace msa
