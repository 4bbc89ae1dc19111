#include "reloss/softrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace reloss {

namespace {

template <typename T>
T logistic(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

// Odd-even transposition: layer l compares (i, i+1) for i = l mod 2, l mod 2 + 2, ...
template <typename F>
void for_each_comparator(std::size_t n, F&& f) {
    for (std::size_t layer = 0; layer < n; ++layer) {
        for (std::size_t i = layer % 2; i + 1 < n; i += 2) f(layer, i);
    }
}

// Forward sweep of the relaxed network over the values. Records every swap
// probability and the value pair seen by each comparator, in network order.
template <typename T>
struct Sweep {
    std::vector<T> swap;
    std::vector<T> lo;
    std::vector<T> hi;
};

template <typename T>
Sweep<T> run_network(std::span<const T> values, T steepness) {
    const std::size_t n = values.size();
    std::vector<T> x(values.begin(), values.end());
    Sweep<T> sweep;
    const std::size_t comparators = n < 2 ? 0 : n * (n - 1) / 2;
    sweep.swap.reserve(comparators);
    sweep.lo.reserve(comparators);
    sweep.hi.reserve(comparators);
    for_each_comparator(n, [&](std::size_t, std::size_t i) {
        const T a = x[i];
        const T b = x[i + 1];
        const T s = logistic(steepness * (a - b));
        sweep.swap.push_back(s);
        sweep.lo.push_back(a);
        sweep.hi.push_back(b);
        x[i] = a + s * (b - a);
        x[i + 1] = b + s * (a - b);
    });
    return sweep;
}

}  // namespace

std::vector<double> hard_rank(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw Error("hard_rank: empty vector");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && values[order[end]] == values[order[start]]) ++end;
        // positions start..end-1 hold ranks start+1..end
        const double avg = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t k = start; k < end; ++k) ranks[order[k]] = avg;
        start = end;
    }
    return ranks;
}

template <typename T>
Tensor<T> relaxed_permutation(std::span<const T> values, T steepness) {
    if (!(steepness > T(0))) throw Error("relaxed_permutation: steepness must be positive");
    const std::size_t n = values.size();
    Tensor<T> perm({n, n});
    for (std::size_t k = 0; k < n; ++k) perm(k, k) = T(1);
    std::vector<T> x(values.begin(), values.end());
    for_each_comparator(n, [&](std::size_t, std::size_t i) {
        const T a = x[i];
        const T b = x[i + 1];
        const T s = logistic(steepness * (a - b));
        x[i] = a + s * (b - a);
        x[i + 1] = b + s * (a - b);
        for (std::size_t m = 0; m < n; ++m) {
            const T p = perm(i, m);
            const T q = perm(i + 1, m);
            perm(i, m) = p + s * (q - p);
            perm(i + 1, m) = q + s * (p - q);
        }
    });
    return perm;
}

// The rank vector is c^T C_L ... C_1 with c = (1..n). Each comparator matrix is
// symmetric in its 2x2 block, so the row vector is propagated through the
// comparators in reverse network order using the same mixing rule.
template <typename T>
std::vector<T> soft_rank(std::span<const T> values, T steepness) {
    if (!(steepness > T(0))) throw Error("soft_rank: steepness must be positive");
    const std::size_t n = values.size();
    const Sweep<T> sweep = run_network(values, steepness);
    std::vector<T> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = static_cast<T>(k + 1);
    std::vector<std::size_t> slots;
    slots.reserve(sweep.swap.size());
    for_each_comparator(n, [&](std::size_t, std::size_t i) { slots.push_back(i); });
    for (std::size_t c = slots.size(); c-- > 0;) {
        const std::size_t i = slots[c];
        const T s = sweep.swap[c];
        const T p = w[i];
        const T q = w[i + 1];
        w[i] = p + s * (q - p);
        w[i + 1] = q + s * (p - q);
    }
    return w;
}

template <typename T>
std::vector<T> soft_rank_vjp(std::span<const T> values, T steepness, std::span<const T> upstream) {
    const std::size_t n = values.size();
    if (upstream.size() != n) throw ShapeError("soft_rank_vjp: upstream length mismatch");
    const Sweep<T> sweep = run_network(values, steepness);
    std::vector<std::size_t> slots;
    slots.reserve(sweep.swap.size());
    for_each_comparator(n, [&](std::size_t, std::size_t i) { slots.push_back(i); });
    const std::size_t count = slots.size();

    // Replay the rank propagation, keeping the pair each comparator consumed.
    std::vector<T> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = static_cast<T>(k + 1);
    std::vector<T> w_lo(count);
    std::vector<T> w_hi(count);
    for (std::size_t c = count; c-- > 0;) {
        const std::size_t i = slots[c];
        const T s = sweep.swap[c];
        w_lo[c] = w[i];
        w_hi[c] = w[i + 1];
        const T p = w[i];
        const T q = w[i + 1];
        w[i] = p + s * (q - p);
        w[i + 1] = q + s * (p - q);
    }

    // Adjoint of the rank propagation (runs comparators in network order),
    // accumulating d/ds for every comparator.
    std::vector<T> gw(upstream.begin(), upstream.end());
    std::vector<T> gswap(count);
    for (std::size_t c = 0; c < count; ++c) {
        const std::size_t i = slots[c];
        const T s = sweep.swap[c];
        const T gi = gw[i];
        const T gj = gw[i + 1];
        gswap[c] = (gi - gj) * (w_hi[c] - w_lo[c]);
        gw[i] = gi + s * (gj - gi);
        gw[i + 1] = gj + s * (gi - gj);
    }

    // Adjoint of the value sweep (reverse network order).
    std::vector<T> gx(n, T(0));
    for (std::size_t c = count; c-- > 0;) {
        const std::size_t i = slots[c];
        const T s = sweep.swap[c];
        const T a = sweep.lo[c];
        const T b = sweep.hi[c];
        const T gi = gx[i];
        const T gj = gx[i + 1];
        const T gs = gswap[c] + (gi - gj) * (b - a);
        const T dz = gs * steepness * s * (T(1) - s);
        gx[i] = gi + s * (gj - gi) + dz;
        gx[i + 1] = gj + s * (gi - gj) - dz;
    }
    return gx;
}

template Tensor<float> relaxed_permutation<float>(std::span<const float>, float);
template Tensor<double> relaxed_permutation<double>(std::span<const double>, double);
template std::vector<float> soft_rank<float>(std::span<const float>, float);
template std::vector<double> soft_rank<double>(std::span<const double>, double);
template std::vector<float> soft_rank_vjp<float>(std::span<const float>, float, std::span<const float>);
template std::vector<double> soft_rank_vjp<double>(std::span<const double>, double,
                                                   std::span<const double>);

namespace ad {

namespace {

template <typename T>
class SoftRankVjpOp final : public CustomOp<T> {
public:
    explicit SoftRankVjpOp(T steepness) : steepness_(steepness) {}
    std::string_view name() const override { return "soft_rank_vjp"; }
    Shape output_shape(std::span<const Shape> in) const override { return in[0]; }
    Tensor<T> forward(std::span<const Tensor<T>* const> in) const override {
        const Tensor<T>& x = *in[0];
        const Tensor<T>& g = *in[1];
        Tensor<T> out(x.shape());
        const std::size_t n = x.cols();
        for (std::size_t r = 0; r < x.rows(); ++r) {
            auto row = x.data().subspan(r * n, n);
            auto up = g.data().subspan(r * n, n);
            auto grad = soft_rank_vjp<T>(row, steepness_, up);
            std::copy(grad.begin(), grad.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * n));
        }
        return out;
    }
    std::vector<std::optional<NodeId>> backward(Graph<T>&, NodeId, NodeId) const override {
        throw Error("soft_rank supports first-order gradients only");
    }

private:
    T steepness_;
};

template <typename T>
class SoftRankOp final : public CustomOp<T> {
public:
    explicit SoftRankOp(T steepness) : steepness_(steepness) {}
    std::string_view name() const override { return "soft_rank"; }
    Shape output_shape(std::span<const Shape> in) const override { return in[0]; }
    Tensor<T> forward(std::span<const Tensor<T>* const> in) const override {
        const Tensor<T>& x = *in[0];
        Tensor<T> out(x.shape());
        const std::size_t n = x.cols();
        for (std::size_t r = 0; r < x.rows(); ++r) {
            auto ranks = soft_rank<T>(x.data().subspan(r * n, n), steepness_);
            std::copy(ranks.begin(), ranks.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * n));
        }
        return out;
    }
    std::vector<std::optional<NodeId>> backward(Graph<T>& graph, NodeId self,
                                                NodeId grad) const override {
        const NodeId x = graph.node(self).inputs[0];
        return {graph.custom(std::make_shared<SoftRankVjpOp<T>>(steepness_), {x, grad})};
    }

private:
    T steepness_;
};

}  // namespace

template <typename T>
NodeId soft_rank_rows(Graph<T>& graph, NodeId x, T steepness) {
    if (!(steepness > T(0))) throw Error("soft_rank: steepness must be positive");
    return graph.custom(std::make_shared<SoftRankOp<T>>(steepness), {x});
}

template NodeId soft_rank_rows<float>(Graph<float>&, NodeId, float);
template NodeId soft_rank_rows<double>(Graph<double>&, NodeId, double);

}  // namespace ad

}  // namespace reloss
