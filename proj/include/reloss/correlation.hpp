#pragma once

#include <span>

#include "reloss/graph.hpp"

namespace reloss {

enum class CorrelationKind { SpearmanHard, SpearmanSoft, Kendall };

struct CorrelationCoefficient {
    double value = 0.0;
    CorrelationKind kind = CorrelationKind::SpearmanHard;
};

// Added to both standard deviations so constant inputs give 0 instead of NaN.
inline constexpr double kCorrelationEpsilon = 1e-8;

/// Sample Pearson correlation (n-1 normalization) with the epsilon guard.
double pearson(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of average-tie ranks.
CorrelationCoefficient spearman_hard(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of soft ranks of both vectors.
CorrelationCoefficient spearman_soft(std::span<const double> a, std::span<const double> b,
                                     double steepness);

/// (concordant - discordant) / (n(n-1)/2). Pairs tied in either vector count
/// as neither.
CorrelationCoefficient kendall_tau(std::span<const double> a, std::span<const double> b);

namespace ad {

/// Guarded Pearson correlation between two [1, n] rows, as tape nodes.
template <typename T>
NodeId pearson_rows(Graph<T>& graph, NodeId a, NodeId b);

/// Spearman correlation between the soft ranks of row `values` and a constant
/// [1, n] row of precomputed ranks. Differentiable with respect to `values`.
template <typename T>
NodeId spearman_soft_vs_ranks(Graph<T>& graph, NodeId values, NodeId ranks, T steepness);

}  // namespace ad

}  // namespace reloss
