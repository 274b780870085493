#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "gradforge/errors.hpp"

namespace gradforge {

using Shape = std::vector<int>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

// Shaped real-valued array, row-major. The data buffer is shared so that tape
// nodes and tensor handles alias the same storage without copies. A tensor with
// tape == nullptr is detached: it participates in no graph and never receives
// gradients.
struct Tensor {
    Shape shape;
    std::shared_ptr<std::vector<double>> data;
    Tape* tape = nullptr;
    int node = -1;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> values);

    static Tensor zeros(Shape s);
    static Tensor full(Shape s, double v);
    static Tensor scalar(double v);

    std::int64_t size() const { return data ? static_cast<std::int64_t>(data->size()) : 0; }
    bool attached() const { return tape != nullptr && node >= 0; }
    bool is_scalar() const { return size() == 1; }

    // Scalar extraction; throws on size != 1.
    double value() const;

    double& at(std::int64_t i) { return (*data)[static_cast<std::size_t>(i)]; }
    double at(std::int64_t i) const { return (*data)[static_cast<std::size_t>(i)]; }

    // Shares the buffer but drops the tape link.
    Tensor detached() const;
    // Deep copy, detached.
    Tensor clone() const;
};

// Backward closure of one node: receives the tape (to reach input gradient
// buffers) and the node's own output gradient.
using BackwardFn = std::function<void(Tape&, const std::vector<double>&)>;

// Append-only record of one forward pass. Node ids are topologically ordered by
// construction; backward visits them in strict reverse order, so gradient
// accumulation is additive and deterministic. One backward per tape.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Registers a leaf whose gradient will be tracked. Watching the same buffer
    // twice yields the same node, so fan-out accumulates into one gradient.
    Tensor watch(const Tensor& t);

    // Reverse sweep from a scalar loss recorded on this tape. Errors on
    // non-scalar loss, foreign tensors, and repeated invocation.
    void backward(const Tensor& loss);

    bool has_grad(const Tensor& t) const;
    // Gradient of the loss w.r.t. a watched/attached tensor, as a detached
    // tensor of identical shape. Throws if the tensor is unknown to this tape.
    Tensor grad_of(const Tensor& t) const;

    // --- op-implementation interface ---
    int add_node(const char* op, const Tensor& result, std::vector<int> inputs, BackwardFn fn);
    std::vector<double>& grad_buffer(int node);
    std::size_t num_nodes() const { return nodes_.size(); }
    bool ran_backward() const { return ran_backward_; }

private:
    struct Node {
        const char* op;
        std::int64_t size;
        std::shared_ptr<std::vector<double>> value;
        std::vector<double> grad;
        std::vector<int> inputs;
        BackwardFn fn;
    };

    int node_for(const Tensor& t) const;

    std::vector<Node> nodes_;
    std::unordered_map<const std::vector<double>*, int> leaf_of_;
    bool ran_backward_ = false;
};

// ---------------------------------------------------------------------------
// Differentiable ops. Each op computes eagerly; when any input is attached to a
// tape the result is recorded there with a backward closure. Mixing tensors
// from two different tapes is an error.
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);

// Same-padded 2D convolution, NHWC activations and [kh,kw,Cin,Cout] kernels.
// kh == kw in {1,3}, stride in {1,2}; H' = ceil(H/stride) with zero padding
// p = (kh-1)/2 on all sides.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride);

// [N,H,W,C] -> [N,C] spatial mean.
Tensor global_avg_pool(const Tensor& x);

// Row softmax of [N,K] logits, max-subtracted for stability.
Tensor softmax(const Tensor& logits);

// Mean over the batch of -log(probs[n, labels[n]]), probabilities floored at
// 1e-12 before the log.
Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels);

// probs[n, labels[n]] as a length-N vector.
Tensor select_labels(const Tensor& probs, const std::vector<int>& labels);

// Sum of squares; for rank >= 2 tensors the leading dim is treated as the batch
// and the result is averaged over it.
Tensor l2_norm_sq(const Tensor& x);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

constexpr double kProbFloor = 1e-12;

}  // namespace gradforge
