#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ewpf/error.hpp"
#include "ewpf/rng.hpp"

namespace ewpf {

using Shape = std::vector<int>;

std::string shape_to_string(const Shape& shape);
int shape_numel(const Shape& shape);

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation; same length as value once set
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
    }
};

}  // namespace detail

// Dense row-major f64 tensor. Value-semantics handle to shared storage: copies
// alias the same buffer, which is what parameter tying relies on.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double fill, bool requires_grad = false);
    static Tensor from_vector(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int size() const { return static_cast<int>(node_->value.size()); }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
    // 2-D accessors; throw ContractError on other ranks
    int rows() const;
    int cols() const;

    std::span<const double> data() const { return node_->value; }
    std::span<double> data_mut() { return node_->value; }
    double value() const;  // scalar tensors only
    double at(int i) const { return node_->value[static_cast<size_t>(i)]; }
    double at(int i, int j) const { return node_->value[static_cast<size_t>(i) * cols() + j]; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool rg) { node_->requires_grad = rg; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const;       // throws ContractError if absent
    std::span<double> grad_mut();               // allocates zero-filled if absent
    void zero_grad();

    // Deep copy of values (fresh storage, no grad, no tape link).
    Tensor clone() const;

    bool same_storage(const Tensor& other) const { return node_ == other.node_; }

    std::shared_ptr<detail::TensorNode> node() const { return node_; }

    // Internal: adopts existing storage. Used by op implementations.
    static Tensor wrap(std::shared_ptr<detail::TensorNode> node) {
        return Tensor(std::move(node));
    }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::TensorNode> node_;
};

// Reverse-mode tape. Forward ops append nodes in execution order, which is a
// topological order by construction; backward() replays them once, in reverse.
// A tape and the graph recorded on it belong to a single thread.
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }
    void set_recording(bool r) { recording_ = r; }

    // Appends a backward rule. The rule reads output->grad and accumulates
    // into the inputs it captured. Called by ops, not by user code.
    void record(std::shared_ptr<detail::TensorNode> output, std::function<void()> backward);

    // Seeds d(loss)/d(loss) = 1 and propagates through the tape in reverse.
    // Gradients accumulate; the caller zeros parameter grads between steps.
    void backward(const Tensor& loss);

    size_t node_count() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        std::shared_ptr<detail::TensorNode> output;
        std::function<void()> backward;
    };
    std::vector<Node> nodes_;
    bool recording_ = true;
};

// ---- forward ops (all record their backward rule when the tape is recording
//      and some input requires grad; outputs inherit requires_grad) ----

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& x);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);      // same shape
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);      // same shape
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);      // elementwise, same shape
Tensor scale(Tape& tape, const Tensor& x, double c);
// The only broadcast in the library: bias added across the last dimension.
Tensor add_rowwise(Tape& tape, const Tensor& x, const Tensor& bias);
Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh_op(Tape& tape, const Tensor& x);
Tensor softmax_lastdim(Tape& tape, const Tensor& x);
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps);
// Inverted dropout: training scales survivors by 1/(1-p); inference is identity.
Tensor dropout(Tape& tape, const Tensor& x, double p, bool training, Rng& rng);
Tensor sum(Tape& tape, const Tensor& x);  // scalar
Tensor slice_cols(Tape& tape, const Tensor& x, int col0, int ncols);  // 2-D
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);     // 2-D
// Stacks equal-shaped tensors into shape {N, ...}.
Tensor stack(Tape& tape, const std::vector<Tensor>& parts);

void backward(const Tensor& loss, Tape& tape);

// ---- parameters ----

struct Parameter {
    std::string name;  // unique path, e.g. "encoder.0.attn.w_q"
    Tensor tensor;     // requires_grad = true
};

// Named parameter collection; iteration order is insertion order, which keeps
// optimizer updates and checkpoints deterministic.
class ModelParameters {
public:
    Tensor& add(const std::string& name, Tensor tensor);
    Tensor& get(const std::string& name);              // throws ContractError if absent
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;

    size_t count() const { return items_.size(); }
    int64_t total_scalars() const;
    void zero_grad();

    std::vector<Parameter>& items() { return items_; }
    const std::vector<Parameter>& items() const { return items_; }

private:
    std::vector<Parameter> items_;
};

// Central-difference gradient check. `f` rebuilds the forward graph on the
// given tape and returns the scalar loss; it must be deterministic (dropout
// off). Samples up to `max_samples` parameter entries and returns
// max |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
double finite_diff_check(const std::function<Tensor(Tape&)>& f, ModelParameters& params,
                         double eps, int max_samples, Rng& rng);

}  // namespace ewpf
