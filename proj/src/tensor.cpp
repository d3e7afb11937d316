#include "msa/tensor.hpp"

#include <algorithm>
#include <unordered_set>
#include <utility>

#include "msa/errors.hpp"

namespace msa {

namespace {
thread_local int g_no_grad_depth = 0;
}

bool grad_enabled() { return g_no_grad_depth == 0; }

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

struct Tensor::Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;

    // graph record; empty on leaves
    const char* op = nullptr;
    std::vector<Tensor> inputs;
    BackwardFn backward_fn;
};

Tensor::Tensor() : Tensor(scalar(0.0)) {}

Tensor::Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({}, {value}, requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return from_data(std::move(shape), std::vector<double>(n, value),
                     requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
    for (std::size_t d : shape) {
        if (d == 0) {
            throw DimensionError("tensor shape " + shape_str(shape) +
                                 " has a zero dimension");
        }
    }
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("tensor shape " + shape_str(shape) +
                             " does not match data length " +
                             std::to_string(data.size()));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::rank() const { return node_->shape.size(); }
std::size_t Tensor::size() const { return node_->data.size(); }

std::vector<double>& Tensor::data() { return node_->data; }
const std::vector<double>& Tensor::data() const { return node_->data; }

double Tensor::item() const {
    if (size() != 1) {
        throw ContractError("item() called on tensor of shape " +
                            shape_str(shape()));
    }
    return node_->data[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
    if (!is_leaf()) {
        throw ContractError(
            "set_requires_grad is only valid on leaf tensors");
    }
    node_->requires_grad = value;
    if (!value) node_->grad.clear();
}

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::vector<double>& Tensor::grad() {
    if (node_->grad.empty()) {
        throw ContractError("tensor has no gradient recorded");
    }
    return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty()) {
        throw ContractError("tensor has no gradient recorded");
    }
    return node_->grad;
}

void Tensor::zero_grad() {
    node_->grad.assign(node_->data.size(), 0.0);
}

const char* Tensor::op() const { return node_->op; }
bool Tensor::is_leaf() const { return node_->op == nullptr; }

bool Tensor::same_node(const Tensor& other) const {
    return node_ == other.node_;
}

Tensor make_op(const char* tag, Shape shape, std::vector<double> data,
               std::vector<Tensor> inputs, BackwardFn backward_fn) {
    bool track = grad_enabled() &&
                 std::any_of(inputs.begin(), inputs.end(),
                             [](const Tensor& t) { return t.requires_grad(); });
    Tensor out = Tensor::from_data(std::move(shape), std::move(data));
    if (track) {
        out.node_->requires_grad = true;
        out.node_->op = tag;
        out.node_->inputs = std::move(inputs);
        out.node_->backward_fn = std::move(backward_fn);
    }
    return out;
}

std::vector<double>* grad_sink(Tensor& t) {
    auto& node = *t.node_;
    if (!node.requires_grad) return nullptr;
    if (node.grad.empty()) node.grad.assign(node.data.size(), 0.0);
    return &node.grad;
}

void backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw ContractError("backward expects a scalar loss, got shape " +
                            shape_str(loss.shape()));
    }

    // Iterative DFS post-order: inputs land before their consumers.
    std::vector<Tensor> topo;
    std::unordered_set<const Tensor::Node*> visited;
    struct Frame {
        Tensor tensor;
        std::size_t next_input;
    };
    std::vector<Frame> stack;
    stack.push_back({loss, 0});
    visited.insert(loss.node_.get());
    while (!stack.empty()) {
        Frame& top = stack.back();
        auto& inputs = top.tensor.node_->inputs;
        if (top.next_input < inputs.size()) {
            Tensor next = inputs[top.next_input++];
            if (visited.insert(next.node_.get()).second) {
                stack.push_back({std::move(next), 0});
            }
        } else {
            topo.push_back(top.tensor);
            stack.pop_back();
        }
    }

    loss.node_->grad.assign(1, 1.0);

    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        auto& node = *it->node_;
        if (!node.backward_fn) continue;
        if (node.grad.empty()) node.grad.assign(node.data.size(), 0.0);
        node.backward_fn(node.grad, node.data, node.inputs);
        // Consume: interior nodes release their record and gradient.
        node.backward_fn = nullptr;
        node.op = nullptr;
        node.inputs.clear();
        node.grad.clear();
        node.grad.shrink_to_fit();
    }
}

}  // namespace msa
