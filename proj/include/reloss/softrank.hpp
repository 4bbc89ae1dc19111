#pragma once

#include <span>
#include <vector>

#include "reloss/graph.hpp"

namespace reloss {

/// Ascending ranks in [1, n]; tied values share the average of the ranks they span.
std::vector<double> hard_rank(std::span<const double> values);

/// Doubly stochastic matrix produced by a relaxed odd-even transposition
/// network with n layers. Entry (k, m) is the weight with which input m lands
/// in sorted position k. Each comparator on (i, j), i < j, swaps with
/// probability sigmoid(steepness * (v_i - v_j)).
template <typename T>
Tensor<T> relaxed_permutation(std::span<const T> values, T steepness);

/// Differentiable ranks: transpose(relaxed_permutation) applied to (1..n).
/// Computed in O(n^2) without materializing the permutation matrix.
template <typename T>
std::vector<T> soft_rank(std::span<const T> values, T steepness);

/// Vector-Jacobian product of soft_rank: returns d<upstream, soft_rank(v)>/dv.
template <typename T>
std::vector<T> soft_rank_vjp(std::span<const T> values, T steepness, std::span<const T> upstream);

namespace ad {

/// Row-wise soft ranks as a tape node: [m, n] -> [m, n]. Differentiable once.
template <typename T>
NodeId soft_rank_rows(Graph<T>& graph, NodeId x, T steepness);

}  // namespace ad

}  // namespace reloss
