#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace msa {

// Shape of a dense tensor. Rank 0 (empty shape) is a scalar holding one
// element; every dimension must be positive.
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

// Backward rule of one graph node. Receives the node's accumulated output
// gradient, the node's forward output values, and the node's inputs, and
// accumulates into the inputs' gradients.
using BackwardFn = std::function<void(const std::vector<double>& out_grad,
                                      const std::vector<double>& out_data,
                                      std::vector<Tensor>& inputs)>;

// Dense n-dimensional array of doubles with an optional gradient record.
// Copying a Tensor shares the underlying node, so gradients accumulated by
// backward() are visible through every copy. Values without graph linkage
// are safe to share read-only across threads; a graph under construction
// is single-threaded.
class Tensor {
public:
    // Default-constructs a scalar zero.
    Tensor();

    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data,
                            bool requires_grad = false);

    const Shape& shape() const;
    std::size_t rank() const;
    std::size_t size() const;

    std::vector<double>& data();
    const std::vector<double>& data() const;

    // Value of a single-element tensor.
    double item() const;

    bool requires_grad() const;
    // Only valid on leaves (tensors not produced by an operation).
    void set_requires_grad(bool value);

    bool has_grad() const;
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    // Operation tag that produced this tensor, or nullptr for leaves.
    const char* op() const;
    bool is_leaf() const;

    // True when both tensors share one node.
    bool same_node(const Tensor& other) const;

    friend void backward(const Tensor& loss);
    friend Tensor make_op(const char* tag, Shape shape,
                          std::vector<double> data, std::vector<Tensor> inputs,
                          BackwardFn backward_fn);
    friend std::vector<double>* grad_sink(Tensor& t);

private:
    struct Node;
    explicit Tensor(std::shared_ptr<Node> node);
    std::shared_ptr<Node> node_;
};

// Registers a new graph node. When gradients are disabled or no input
// requires them, the result is a plain value with no graph linkage.
// This is the primitive every operation in ops.hpp is built from.
Tensor make_op(const char* tag, Shape shape, std::vector<double> data,
               std::vector<Tensor> inputs, BackwardFn backward_fn);

// Gradient buffer of a tensor that wants one, nullptr otherwise.
// Allocates (zero-filled) on first use. Intended for backward rules.
std::vector<double>* grad_sink(Tensor& t);

// Reverse-mode sweep from a scalar loss. Visits every reachable node exactly
// once in reverse topological order, accumulates d(loss)/d(leaf) into each
// leaf's grad, and consumes the graph (interior nodes drop their inputs,
// backward rules and gradients).
void backward(const Tensor& loss);

// RAII switch that disables graph recording on this thread. Used for
// evaluation and finite-difference probes.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

}  // namespace msa
