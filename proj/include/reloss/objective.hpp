#pragma once

#include "reloss/graph.hpp"
#include "reloss/lossnet.hpp"

namespace reloss::ad {

/// Surrogate loss per sub-batch. `inputs` stacks `groups` sub-batches of equal
/// size row-wise ([groups * per_group, width]); each group's loss is the mean
/// of the network outputs over its rows. Returns [groups, 1].
template <typename T>
NodeId grouped_loss(Graph<T>& graph, const LossNetNodes& net, NodeId inputs, std::size_t groups);

/// Per-group gradient penalty (||d l_i / d y_i||_2 - 1)^2 where y_i are the
/// rows of group i. Built from the backward pass of sum(l), so it can itself
/// be differentiated with respect to the network weights. Returns [groups, 1].
template <typename T>
NodeId penalty_terms(Graph<T>& graph, NodeId group_losses, NodeId inputs, std::size_t groups);

}  // namespace reloss::ad
