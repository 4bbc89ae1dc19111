#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reloss/tensor.hpp"

namespace reloss::ad {

using NodeId = std::uint32_t;

enum class Op : std::uint8_t {
    Input,       // leaf fed by bindings (data)
    Parameter,   // leaf holding trainable weights
    Constant,
    MatMul,      // op(a) * op(b), optional transposes
    AddBias,     // [m,n] + [1,n] broadcast over rows
    Add,
    Sub,
    Mul,
    ScaleShift,  // a*x + b
    Elu,
    EluGrad,     // derivative of elu; level 2+ is the (constant) higher derivative
    Sigmoid,
    Exp,
    Log,
    Square,
    Sqrt,
    InvGuarded,  // 1/x with 1/0 := 0
    Abs,
    Sign,
    Sum,         // all elements -> [1,1]
    Mean,        // all elements -> [1,1]
    RowSum,      // [m,n] -> [m,1]
    ColSum,      // [m,n] -> [1,n]
    Broadcast,   // [1,1] -> shape
    RepeatCols,  // [m,1] -> [m,n]
    RepeatRows,  // [1,n] -> [m,n]
    Reshape,
    SelectCols,  // [m,n], idx[m] -> [m,1]
    ScatterCols, // [m,1], idx[m] -> [m,n]
    LogSoftmaxRows,
    Custom,
};

std::string_view op_name(Op op);

template <typename T>
class Graph;

// Extension point for kernels that are cheaper to write with a hand-derived
// vector-Jacobian product than as a composition of primitives.
template <typename T>
class CustomOp {
public:
    virtual ~CustomOp() = default;
    virtual std::string_view name() const = 0;
    virtual Shape output_shape(std::span<const Shape> inputs) const = 0;
    virtual Tensor<T> forward(std::span<const Tensor<T>* const> inputs) const = 0;
    // One entry per input; std::nullopt means no gradient flows to that input.
    virtual std::vector<std::optional<NodeId>> backward(Graph<T>& graph, NodeId self,
                                                        NodeId grad) const = 0;
};

template <typename T>
using Bindings = std::unordered_map<NodeId, Tensor<T>>;

// Define-by-run tape. Nodes are evaluated eagerly whenever all their inputs
// carry values; placeholders (inputs created without a value) defer evaluation
// until evaluate() binds them. gradient() appends the backward pass to the same
// tape, so its results can be differentiated again.
template <typename T>
class Graph {
public:
    struct Node {
        Op op = Op::Constant;
        std::vector<NodeId> inputs;
        Shape shape;
        Tensor<T> value;
        bool has_value = false;
        T a = T(0);
        T b = T(0);
        int level = 0;
        bool trans_a = false;
        bool trans_b = false;
        std::shared_ptr<const std::vector<std::uint32_t>> index;
        std::shared_ptr<const CustomOp<T>> custom;
    };

    NodeId input(Tensor<T> value);
    NodeId placeholder(Shape shape);
    NodeId parameter(Tensor<T> value);
    NodeId constant(Tensor<T> value);
    NodeId constant(Shape shape, T fill) { return constant(Tensor<T>(shape, fill)); }

    NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
    NodeId add_bias(NodeId x, NodeId bias);
    // x * w^T + bias with w stored as [out, in] and bias as [1, out].
    NodeId affine(NodeId x, NodeId w, NodeId bias);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale_shift(NodeId x, T scale, T shift = T(0));
    NodeId neg(NodeId x) { return scale_shift(x, T(-1)); }
    NodeId elu(NodeId x);
    NodeId elu_grad(NodeId x, int level = 1);
    NodeId sigmoid(NodeId x);
    NodeId exp(NodeId x);
    NodeId log(NodeId x);
    NodeId square(NodeId x);
    NodeId sqrt(NodeId x);
    NodeId inv_guarded(NodeId x);
    NodeId abs(NodeId x);
    NodeId sign(NodeId x);
    NodeId sum(NodeId x);
    NodeId mean(NodeId x);
    NodeId row_sum(NodeId x);
    NodeId col_sum(NodeId x);
    NodeId row_mean(NodeId x);
    NodeId broadcast(NodeId scalar, Shape shape);
    NodeId repeat_cols(NodeId column, std::size_t cols);
    NodeId repeat_rows(NodeId row, std::size_t rows);
    NodeId reshape(NodeId x, Shape shape);
    NodeId select_cols(NodeId x, std::shared_ptr<const std::vector<std::uint32_t>> index);
    NodeId scatter_cols(NodeId x, std::shared_ptr<const std::vector<std::uint32_t>> index,
                        std::size_t cols);
    NodeId log_softmax_rows(NodeId x);
    // Euclidean norm of each row: [m,n] -> [m,1].
    NodeId row_l2norm(NodeId x);
    NodeId custom(std::shared_ptr<const CustomOp<T>> op, std::vector<NodeId> inputs);

    // Gradients of a scalar node with respect to leaves. The returned ids are
    // nodes on this tape.
    std::vector<NodeId> gradient(NodeId output, std::span<const NodeId> wrt);
    NodeId gradient(NodeId output, NodeId wrt) {
        const NodeId ids[] = {wrt};
        return gradient(output, std::span<const NodeId>(ids))[0];
    }

    // Rebinds the given leaves and recomputes every node up to and including
    // root. Throws if root depends on a placeholder that has no value.
    const Tensor<T>& evaluate(NodeId root, const Bindings<T>& bindings = {});

    const Tensor<T>& value(NodeId id) const;
    const Shape& shape(NodeId id) const { return node(id).shape; }
    const Node& node(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }
    bool is_leaf(NodeId id) const;

private:
    NodeId push(Node n);
    void compute(Node& n) const;
    std::vector<std::optional<NodeId>> backward(NodeId id, NodeId grad);
    void check_id(NodeId id) const;

    std::vector<Node> nodes_;
};

// Shared numeric kernels, also used by the graph-free fast paths.
template <typename T>
void matmul_into(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b,
                 Tensor<T>& out);

template <typename T>
inline T elu_value(T x) {
    return x >= T(0) ? x : std::expm1(x);
}

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace reloss::ad
