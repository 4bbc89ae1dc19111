#include "reloss/correlation.hpp"

#include <cmath>
#include <string>

#include "reloss/softrank.hpp"

namespace reloss {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("correlation: length mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    if (a.size() < 2) throw Error("correlation: need at least 2 samples");
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b);
    const auto n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    cov /= (n - 1.0);
    const double std_a = std::sqrt(var_a / (n - 1.0));
    const double std_b = std::sqrt(var_b / (n - 1.0));
    return cov / ((std_a + kCorrelationEpsilon) * (std_b + kCorrelationEpsilon));
}

CorrelationCoefficient spearman_hard(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b);
    const auto ra = hard_rank(a);
    const auto rb = hard_rank(b);
    return {pearson(ra, rb), CorrelationKind::SpearmanHard};
}

CorrelationCoefficient spearman_soft(std::span<const double> a, std::span<const double> b,
                                     double steepness) {
    check_pair(a, b);
    const auto ra = soft_rank<double>(a, steepness);
    const auto rb = soft_rank<double>(b, steepness);
    return {pearson(ra, rb), CorrelationKind::SpearmanSoft};
}

CorrelationCoefficient kendall_tau(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b);
    const std::size_t n = a.size();
    long long score = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[j] - a[i];
            const double db = b[j] - b[i];
            const int sa = (da > 0) - (da < 0);
            const int sb = (db > 0) - (db < 0);
            score += sa * sb;
        }
    }
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return {static_cast<double>(score) / pairs, CorrelationKind::Kendall};
}

namespace ad {

template <typename T>
NodeId pearson_rows(Graph<T>& graph, NodeId a, NodeId b) {
    const Shape sa = graph.shape(a);
    if (sa.rows != 1 || graph.shape(b) != sa) throw ShapeError("pearson_rows: expects equal [1,n] rows");
    if (sa.cols < 2) throw Error("correlation: need at least 2 samples");
    const T dof = static_cast<T>(sa.cols - 1);
    auto centered = [&](NodeId v) { return graph.sub(v, graph.broadcast(graph.mean(v), sa)); };
    const NodeId ca = centered(a);
    const NodeId cb = centered(b);
    const NodeId cov = graph.scale_shift(graph.sum(graph.mul(ca, cb)), T(1) / dof);
    auto guarded_std = [&](NodeId c) {
        const NodeId var = graph.scale_shift(graph.sum(graph.square(c)), T(1) / dof);
        return graph.scale_shift(graph.sqrt(var), T(1), static_cast<T>(kCorrelationEpsilon));
    };
    const NodeId denom = graph.mul(guarded_std(ca), guarded_std(cb));
    return graph.mul(cov, graph.inv_guarded(denom));
}

template <typename T>
NodeId spearman_soft_vs_ranks(Graph<T>& graph, NodeId values, NodeId ranks, T steepness) {
    return pearson_rows(graph, soft_rank_rows(graph, values, steepness), ranks);
}

template NodeId pearson_rows<float>(Graph<float>&, NodeId, NodeId);
template NodeId pearson_rows<double>(Graph<double>&, NodeId, NodeId);
template NodeId spearman_soft_vs_ranks<float>(Graph<float>&, NodeId, NodeId, float);
template NodeId spearman_soft_vs_ranks<double>(Graph<double>&, NodeId, NodeId, double);

}  // namespace ad

}  // namespace reloss
