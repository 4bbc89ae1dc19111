#include "reloss/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace reloss {

std::string to_string(const Shape& s) {
    return "[" + std::to_string(s.rows) + "," + std::to_string(s.cols) + "]";
}

}  // namespace reloss

namespace reloss::ad {

std::string_view op_name(Op op) {
    switch (op) {
        case Op::Input: return "input";
        case Op::Parameter: return "parameter";
        case Op::Constant: return "constant";
        case Op::MatMul: return "matmul";
        case Op::AddBias: return "add_bias";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::ScaleShift: return "scale_shift";
        case Op::Elu: return "elu";
        case Op::EluGrad: return "elu_grad";
        case Op::Sigmoid: return "sigmoid";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Square: return "square";
        case Op::Sqrt: return "sqrt";
        case Op::InvGuarded: return "inv_guarded";
        case Op::Abs: return "abs";
        case Op::Sign: return "sign";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::RowSum: return "row_sum";
        case Op::ColSum: return "col_sum";
        case Op::Broadcast: return "broadcast";
        case Op::RepeatCols: return "repeat_cols";
        case Op::RepeatRows: return "repeat_rows";
        case Op::Reshape: return "reshape";
        case Op::SelectCols: return "select_cols";
        case Op::ScatterCols: return "scatter_cols";
        case Op::LogSoftmaxRows: return "log_softmax_rows";
        case Op::Custom: return "custom";
    }
    return "unknown";
}

template <typename T>
void matmul_into(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b,
                 Tensor<T>& out) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Map = Eigen::Map<const Mat>;
    Map ma(a.data().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
    Map mb(b.data().data(), static_cast<Eigen::Index>(b.rows()), static_cast<Eigen::Index>(b.cols()));
    const std::size_t m = trans_a ? a.cols() : a.rows();
    const std::size_t n = trans_b ? b.rows() : b.cols();
    if (out.shape() != Shape{m, n}) out = Tensor<T>({m, n});
    Eigen::Map<Mat> mc(out.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    if (!trans_a && !trans_b) {
        mc.noalias() = ma * mb;
    } else if (!trans_a && trans_b) {
        mc.noalias() = ma * mb.transpose();
    } else if (trans_a && !trans_b) {
        mc.noalias() = ma.transpose() * mb;
    } else {
        mc.noalias() = ma.transpose() * mb.transpose();
    }
}

template void matmul_into<float>(const Tensor<float>&, const Tensor<float>&, bool, bool,
                                 Tensor<float>&);
template void matmul_into<double>(const Tensor<double>&, const Tensor<double>&, bool, bool,
                                  Tensor<double>&);

namespace {

[[noreturn]] void shape_fail(std::string_view op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                     to_string(b));
}

template <typename T, typename F>
void map_unary(const Tensor<T>& x, Tensor<T>& out, F f) {
    out = Tensor<T>(x.shape());
    auto src = x.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
}

template <typename T, typename F>
void map_binary(const Tensor<T>& x, const Tensor<T>& y, Tensor<T>& out, F f) {
    out = Tensor<T>(x.shape());
    auto a = x.data();
    auto b = y.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) dst[i] = f(a[i], b[i]);
}

bool is_leaf_op(Op op) {
    return op == Op::Input || op == Op::Parameter || op == Op::Constant;
}

}  // namespace

template <typename T>
void Graph<T>::check_id(NodeId id) const {
    if (id >= nodes_.size()) {
        throw Error("node id " + std::to_string(id) + " is not in the graph");
    }
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::node(NodeId id) const {
    check_id(id);
    return nodes_[id];
}

template <typename T>
const Tensor<T>& Graph<T>::value(NodeId id) const {
    const Node& n = node(id);
    if (!n.has_value) throw Error("node " + std::to_string(id) + " has not been evaluated");
    return n.value;
}

template <typename T>
bool Graph<T>::is_leaf(NodeId id) const {
    return is_leaf_op(node(id).op);
}

template <typename T>
NodeId Graph<T>::push(Node n) {
    for (NodeId in : n.inputs) check_id(in);
    const bool ready = std::all_of(n.inputs.begin(), n.inputs.end(),
                                   [&](NodeId i) { return nodes_[i].has_value; });
    if (ready && !is_leaf_op(n.op)) {
        compute(n);
        n.has_value = true;
    }
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

template <typename T>
NodeId Graph<T>::input(Tensor<T> value) {
    Node n;
    n.op = Op::Input;
    n.shape = value.shape();
    n.value = std::move(value);
    n.has_value = true;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::placeholder(Shape shape) {
    Node n;
    n.op = Op::Input;
    n.shape = shape;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::parameter(Tensor<T> value) {
    Node n;
    n.op = Op::Parameter;
    n.shape = value.shape();
    n.value = std::move(value);
    n.has_value = true;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::constant(Tensor<T> value) {
    Node n;
    n.op = Op::Constant;
    n.shape = value.shape();
    n.value = std::move(value);
    n.has_value = true;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
    const Shape& sa = shape(a);
    const Shape& sb = shape(b);
    const std::size_t inner_a = trans_a ? sa.rows : sa.cols;
    const std::size_t inner_b = trans_b ? sb.cols : sb.rows;
    if (inner_a != inner_b) shape_fail("matmul", sa, sb);
    Node n;
    n.op = Op::MatMul;
    n.inputs = {a, b};
    n.trans_a = trans_a;
    n.trans_b = trans_b;
    n.shape = {trans_a ? sa.cols : sa.rows, trans_b ? sb.rows : sb.cols};
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::add_bias(NodeId x, NodeId bias) {
    const Shape& sx = shape(x);
    const Shape& sb = shape(bias);
    if (sb.rows != 1 || sb.cols != sx.cols) shape_fail("add_bias", sx, sb);
    Node n;
    n.op = Op::AddBias;
    n.inputs = {x, bias};
    n.shape = sx;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::affine(NodeId x, NodeId w, NodeId bias) {
    return add_bias(matmul(x, w, false, true), bias);
}

template <typename T>
NodeId Graph<T>::add(NodeId a, NodeId b) {
    if (shape(a) != shape(b)) shape_fail("add", shape(a), shape(b));
    Node n;
    n.op = Op::Add;
    n.inputs = {a, b};
    n.shape = shape(a);
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::sub(NodeId a, NodeId b) {
    if (shape(a) != shape(b)) shape_fail("sub", shape(a), shape(b));
    Node n;
    n.op = Op::Sub;
    n.inputs = {a, b};
    n.shape = shape(a);
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::mul(NodeId a, NodeId b) {
    if (shape(a) != shape(b)) shape_fail("mul", shape(a), shape(b));
    Node n;
    n.op = Op::Mul;
    n.inputs = {a, b};
    n.shape = shape(a);
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::scale_shift(NodeId x, T scale, T shift) {
    Node n;
    n.op = Op::ScaleShift;
    n.inputs = {x};
    n.shape = shape(x);
    n.a = scale;
    n.b = shift;
    return push(std::move(n));
}

#define RELOSS_UNARY(fn, OPK)                 \
    template <typename T>                     \
    NodeId Graph<T>::fn(NodeId x) {           \
        Node n;                               \
        n.op = Op::OPK;                       \
        n.inputs = {x};                       \
        n.shape = shape(x);                   \
        return push(std::move(n));            \
    }

RELOSS_UNARY(elu, Elu)
RELOSS_UNARY(sigmoid, Sigmoid)
RELOSS_UNARY(exp, Exp)
RELOSS_UNARY(log, Log)
RELOSS_UNARY(square, Square)
RELOSS_UNARY(sqrt, Sqrt)
RELOSS_UNARY(inv_guarded, InvGuarded)
RELOSS_UNARY(abs, Abs)
RELOSS_UNARY(sign, Sign)
RELOSS_UNARY(log_softmax_rows, LogSoftmaxRows)
#undef RELOSS_UNARY

template <typename T>
NodeId Graph<T>::elu_grad(NodeId x, int level) {
    Node n;
    n.op = Op::EluGrad;
    n.inputs = {x};
    n.shape = shape(x);
    n.level = std::min(std::max(level, 1), 2);
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::sum(NodeId x) {
    Node n;
    n.op = Op::Sum;
    n.inputs = {x};
    n.shape = {1, 1};
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::mean(NodeId x) {
    if (shape(x).numel() == 0) throw ShapeError("mean of empty tensor");
    Node n;
    n.op = Op::Mean;
    n.inputs = {x};
    n.shape = {1, 1};
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::row_sum(NodeId x) {
    Node n;
    n.op = Op::RowSum;
    n.inputs = {x};
    n.shape = {shape(x).rows, 1};
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::col_sum(NodeId x) {
    Node n;
    n.op = Op::ColSum;
    n.inputs = {x};
    n.shape = {1, shape(x).cols};
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::row_mean(NodeId x) {
    const std::size_t cols = shape(x).cols;
    if (cols == 0) throw ShapeError("row_mean of empty rows");
    return scale_shift(row_sum(x), T(1) / static_cast<T>(cols));
}

template <typename T>
NodeId Graph<T>::broadcast(NodeId scalar, Shape target) {
    if (shape(scalar) != Shape{1, 1}) shape_fail("broadcast", shape(scalar), target);
    Node n;
    n.op = Op::Broadcast;
    n.inputs = {scalar};
    n.shape = target;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::repeat_cols(NodeId column, std::size_t cols) {
    if (shape(column).cols != 1) shape_fail("repeat_cols", shape(column), Shape{0, cols});
    Node n;
    n.op = Op::RepeatCols;
    n.inputs = {column};
    n.shape = {shape(column).rows, cols};
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::repeat_rows(NodeId row, std::size_t rows) {
    if (shape(row).rows != 1) shape_fail("repeat_rows", shape(row), Shape{rows, 0});
    Node n;
    n.op = Op::RepeatRows;
    n.inputs = {row};
    n.shape = {rows, shape(row).cols};
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::reshape(NodeId x, Shape target) {
    if (shape(x).numel() != target.numel()) shape_fail("reshape", shape(x), target);
    Node n;
    n.op = Op::Reshape;
    n.inputs = {x};
    n.shape = target;
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::select_cols(NodeId x, std::shared_ptr<const std::vector<std::uint32_t>> index) {
    const Shape& sx = shape(x);
    if (!index || index->size() != sx.rows) shape_fail("select_cols", sx, Shape{index ? index->size() : 0, 1});
    for (auto c : *index) {
        if (c >= sx.cols) throw ShapeError("select_cols: column index out of range");
    }
    Node n;
    n.op = Op::SelectCols;
    n.inputs = {x};
    n.shape = {sx.rows, 1};
    n.index = std::move(index);
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::scatter_cols(NodeId x, std::shared_ptr<const std::vector<std::uint32_t>> index,
                              std::size_t cols) {
    const Shape& sx = shape(x);
    if (sx.cols != 1 || !index || index->size() != sx.rows) shape_fail("scatter_cols", sx, Shape{0, cols});
    for (auto c : *index) {
        if (c >= cols) throw ShapeError("scatter_cols: column index out of range");
    }
    Node n;
    n.op = Op::ScatterCols;
    n.inputs = {x};
    n.shape = {sx.rows, cols};
    n.index = std::move(index);
    return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::row_l2norm(NodeId x) {
    return sqrt(row_sum(square(x)));
}

template <typename T>
NodeId Graph<T>::custom(std::shared_ptr<const CustomOp<T>> op, std::vector<NodeId> inputs) {
    std::vector<Shape> shapes;
    for (NodeId in : inputs) shapes.push_back(shape(in));
    Node n;
    n.op = Op::Custom;
    n.shape = op->output_shape(shapes);
    n.inputs = std::move(inputs);
    n.custom = std::move(op);
    return push(std::move(n));
}

template <typename T>
void Graph<T>::compute(Node& n) const {
    auto in = [&](std::size_t k) -> const Tensor<T>& { return nodes_[n.inputs[k]].value; };
    switch (n.op) {
        case Op::Input:
        case Op::Parameter:
        case Op::Constant:
            return;
        case Op::MatMul:
            matmul_into(in(0), in(1), n.trans_a, n.trans_b, n.value);
            return;
        case Op::AddBias: {
            const auto& x = in(0);
            const auto& b = in(1);
            n.value = x;
            for (std::size_t r = 0; r < x.rows(); ++r)
                for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, c) += b[c];
            return;
        }
        case Op::Add: map_binary(in(0), in(1), n.value, [](T a, T b) { return a + b; }); return;
        case Op::Sub: map_binary(in(0), in(1), n.value, [](T a, T b) { return a - b; }); return;
        case Op::Mul: map_binary(in(0), in(1), n.value, [](T a, T b) { return a * b; }); return;
        case Op::ScaleShift: {
            const T s = n.a, t = n.b;
            map_unary(in(0), n.value, [s, t](T x) { return s * x + t; });
            return;
        }
        case Op::Elu: map_unary(in(0), n.value, [](T x) { return elu_value(x); }); return;
        case Op::EluGrad: {
            const T above = n.level == 1 ? T(1) : T(0);
            map_unary(in(0), n.value, [above](T x) { return x >= T(0) ? above : std::exp(x); });
            return;
        }
        case Op::Sigmoid:
            map_unary(in(0), n.value, [](T x) {
                if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
                const T e = std::exp(x);
                return e / (T(1) + e);
            });
            return;
        case Op::Exp: map_unary(in(0), n.value, [](T x) { return std::exp(x); }); return;
        case Op::Log: map_unary(in(0), n.value, [](T x) { return std::log(x); }); return;
        case Op::Square: map_unary(in(0), n.value, [](T x) { return x * x; }); return;
        case Op::Sqrt: map_unary(in(0), n.value, [](T x) { return std::sqrt(x); }); return;
        case Op::InvGuarded:
            map_unary(in(0), n.value, [](T x) { return x == T(0) ? T(0) : T(1) / x; });
            return;
        case Op::Abs: map_unary(in(0), n.value, [](T x) { return std::abs(x); }); return;
        case Op::Sign:
            map_unary(in(0), n.value, [](T x) { return T((x > T(0)) - (x < T(0))); });
            return;
        case Op::Sum:
        case Op::Mean: {
            T acc = T(0);
            for (T v : in(0).data()) acc += v;
            if (n.op == Op::Mean) acc /= static_cast<T>(in(0).numel());
            n.value = Tensor<T>::scalar(acc);
            return;
        }
        case Op::RowSum: {
            const auto& x = in(0);
            n.value = Tensor<T>(n.shape);
            for (std::size_t r = 0; r < x.rows(); ++r) {
                T acc = T(0);
                for (std::size_t c = 0; c < x.cols(); ++c) acc += x(r, c);
                n.value[r] = acc;
            }
            return;
        }
        case Op::ColSum: {
            const auto& x = in(0);
            n.value = Tensor<T>(n.shape);
            for (std::size_t r = 0; r < x.rows(); ++r)
                for (std::size_t c = 0; c < x.cols(); ++c) n.value[c] += x(r, c);
            return;
        }
        case Op::Broadcast:
            n.value = Tensor<T>(n.shape, in(0)[0]);
            return;
        case Op::RepeatCols: {
            const auto& x = in(0);
            n.value = Tensor<T>(n.shape);
            for (std::size_t r = 0; r < n.shape.rows; ++r)
                for (std::size_t c = 0; c < n.shape.cols; ++c) n.value(r, c) = x[r];
            return;
        }
        case Op::RepeatRows: {
            const auto& x = in(0);
            n.value = Tensor<T>(n.shape);
            for (std::size_t r = 0; r < n.shape.rows; ++r)
                for (std::size_t c = 0; c < n.shape.cols; ++c) n.value(r, c) = x[c];
            return;
        }
        case Op::Reshape:
            n.value = in(0).reshaped(n.shape);
            return;
        case Op::SelectCols: {
            const auto& x = in(0);
            n.value = Tensor<T>(n.shape);
            for (std::size_t r = 0; r < x.rows(); ++r) n.value[r] = x(r, (*n.index)[r]);
            return;
        }
        case Op::ScatterCols: {
            const auto& x = in(0);
            n.value = Tensor<T>(n.shape);
            for (std::size_t r = 0; r < x.rows(); ++r) n.value(r, (*n.index)[r]) = x[r];
            return;
        }
        case Op::LogSoftmaxRows: {
            const auto& x = in(0);
            n.value = Tensor<T>(x.shape());
            for (std::size_t r = 0; r < x.rows(); ++r) {
                T hi = x(r, 0);
                for (std::size_t c = 1; c < x.cols(); ++c) hi = std::max(hi, x(r, c));
                T acc = T(0);
                for (std::size_t c = 0; c < x.cols(); ++c) acc += std::exp(x(r, c) - hi);
                const T lse = hi + std::log(acc);
                for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, c) = x(r, c) - lse;
            }
            return;
        }
        case Op::Custom: {
            std::vector<const Tensor<T>*> ptrs;
            for (NodeId id : n.inputs) ptrs.push_back(&nodes_[id].value);
            n.value = n.custom->forward(ptrs);
            return;
        }
    }
}

template <typename T>
std::vector<std::optional<NodeId>> Graph<T>::backward(NodeId id, NodeId g) {
    // Copy out what we need: push() may reallocate nodes_.
    const Op op = nodes_[id].op;
    const std::vector<NodeId> in = nodes_[id].inputs;
    const Shape out_shape = nodes_[id].shape;
    const T a = nodes_[id].a;
    const int level = nodes_[id].level;
    const bool ta = nodes_[id].trans_a;
    const bool tb = nodes_[id].trans_b;
    auto index = nodes_[id].index;
    auto custom_op = nodes_[id].custom;
    const Shape in0 = in.empty() ? Shape{} : nodes_[in[0]].shape;

    switch (op) {
        case Op::Input:
        case Op::Parameter:
        case Op::Constant:
            return {};
        case Op::MatMul: {
            const NodeId A = in[0], B = in[1];
            if (!ta && !tb) return {matmul(g, B, false, true), matmul(A, g, true, false)};
            if (!ta && tb) return {matmul(g, B, false, false), matmul(g, A, true, false)};
            if (ta && !tb) return {matmul(B, g, false, true), matmul(A, g, false, false)};
            return {matmul(B, g, true, true), matmul(g, A, true, true)};
        }
        case Op::AddBias:
            return {g, col_sum(g)};
        case Op::Add:
            return {g, g};
        case Op::Sub:
            return {g, neg(g)};
        case Op::Mul:
            return {mul(g, in[1]), mul(g, in[0])};
        case Op::ScaleShift:
            return {scale_shift(g, a)};
        case Op::Elu:
            return {mul(g, elu_grad(in[0], 1))};
        case Op::EluGrad:
            return {mul(g, elu_grad(in[0], level + 1))};
        case Op::Sigmoid:
            return {mul(g, mul(id, scale_shift(id, T(-1), T(1))))};
        case Op::Exp:
            return {mul(g, id)};
        case Op::Log:
            return {mul(g, inv_guarded(in[0]))};
        case Op::Square:
            return {mul(g, scale_shift(in[0], T(2)))};
        case Op::Sqrt:
            return {mul(g, scale_shift(inv_guarded(id), T(0.5)))};
        case Op::InvGuarded:
            return {mul(g, scale_shift(square(id), T(-1)))};
        case Op::Abs:
            return {mul(g, sign(in[0]))};
        case Op::Sign:
            return {std::nullopt};
        case Op::Sum:
            return {broadcast(g, in0)};
        case Op::Mean:
            return {broadcast(scale_shift(g, T(1) / static_cast<T>(in0.numel())),
                              in0)};
        case Op::RowSum:
            return {repeat_cols(g, in0.cols)};
        case Op::ColSum:
            return {repeat_rows(g, in0.rows)};
        case Op::Broadcast:
            return {sum(g)};
        case Op::RepeatCols:
            return {row_sum(g)};
        case Op::RepeatRows:
            return {col_sum(g)};
        case Op::Reshape:
            return {reshape(g, in0)};
        case Op::SelectCols:
            return {scatter_cols(g, index, in0.cols)};
        case Op::ScatterCols:
            return {select_cols(g, index)};
        case Op::LogSoftmaxRows: {
            const NodeId probs = exp(id);
            return {sub(g, mul(probs, repeat_cols(row_sum(g), out_shape.cols)))};
        }
        case Op::Custom:
            return custom_op->backward(*this, id, g);
    }
    return {};
}

template <typename T>
std::vector<NodeId> Graph<T>::gradient(NodeId output, std::span<const NodeId> wrt) {
    check_id(output);
    if (shape(output).numel() != 1) {
        throw ShapeError("gradient: output must be scalar, got " + to_string(shape(output)));
    }
    const std::size_t count = static_cast<std::size_t>(output) + 1;
    std::vector<char> needs(count, 0);
    std::vector<char> target(nodes_.size(), 0);
    for (NodeId w : wrt) {
        check_id(w);
        const Op op = nodes_[w].op;
        if (op != Op::Input && op != Op::Parameter) {
            throw Error("gradient: node " + std::to_string(w) + " is not a differentiable leaf");
        }
        target[w] = 1;
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (target[i]) {
            needs[i] = 1;
            continue;
        }
        for (NodeId in : nodes_[i].inputs) {
            if (needs[in]) {
                needs[i] = 1;
                break;
            }
        }
    }

    std::vector<std::optional<NodeId>> adjoint(count);
    adjoint[output] = constant(shape(output), T(1));
    for (std::size_t i = count; i-- > 0;) {
        if (!adjoint[i] || !needs[i] || is_leaf(static_cast<NodeId>(i))) continue;
        const auto id = static_cast<NodeId>(i);
        const std::vector<NodeId> inputs = nodes_[i].inputs;
        auto contrib = backward(id, *adjoint[i]);
        for (std::size_t k = 0; k < inputs.size() && k < contrib.size(); ++k) {
            const NodeId src = inputs[k];
            if (!contrib[k] || !needs[src]) continue;
            adjoint[src] = adjoint[src] ? add(*adjoint[src], *contrib[k]) : *contrib[k];
        }
    }

    std::vector<NodeId> result;
    result.reserve(wrt.size());
    for (NodeId w : wrt) {
        if (w < count && adjoint[w]) {
            result.push_back(*adjoint[w]);
        } else {
            result.push_back(constant(shape(w), T(0)));
        }
    }
    return result;
}

template <typename T>
const Tensor<T>& Graph<T>::evaluate(NodeId root, const Bindings<T>& bindings) {
    check_id(root);
    for (const auto& [id, tensor] : bindings) {
        check_id(id);
        Node& n = nodes_[id];
        if (n.op != Op::Input && n.op != Op::Parameter) {
            throw Error("evaluate: node " + std::to_string(id) + " is not a bindable leaf");
        }
        if (tensor.shape() != n.shape) shape_fail("evaluate binding", n.shape, tensor.shape());
        n.value = tensor;
        n.has_value = true;
    }
    std::vector<char> live(static_cast<std::size_t>(root) + 1, 0);
    live[root] = 1;
    for (std::size_t i = root + 1; i-- > 0;) {
        if (!live[i]) continue;
        for (NodeId in : nodes_[i].inputs) live[in] = 1;
    }
    for (std::size_t i = 0; i <= root; ++i) {
        if (!live[i]) continue;
        Node& n = nodes_[i];
        if (is_leaf(static_cast<NodeId>(i))) {
            if (!n.has_value) throw Error("evaluate: unbound leaf " + std::to_string(i));
            continue;
        }
        compute(n);
        n.has_value = true;
    }
    return nodes_[root].value;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace reloss::ad
