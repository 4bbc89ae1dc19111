#include "reloss/objective.hpp"

namespace reloss::ad {

template <typename T>
NodeId grouped_loss(Graph<T>& graph, const LossNetNodes& net, NodeId inputs, std::size_t groups) {
    const Shape in = graph.shape(inputs);
    if (groups == 0 || in.rows % groups != 0) {
        throw ShapeError("grouped_loss: " + std::to_string(in.rows) + " rows do not split into " +
                         std::to_string(groups) + " groups");
    }
    const NodeId per_row = lossnet_forward(graph, net, inputs);  // [rows, 1]
    const std::size_t per_group = in.rows / groups;
    if (per_group == 1) return per_row;
    return graph.row_mean(graph.reshape(per_row, {groups, per_group}));
}

template <typename T>
NodeId penalty_terms(Graph<T>& graph, NodeId group_losses, NodeId inputs, std::size_t groups) {
    const Shape in = graph.shape(inputs);
    const NodeId grad = graph.gradient(graph.sum(group_losses), inputs);
    const NodeId per_group = graph.reshape(grad, {groups, in.numel() / groups});
    const NodeId norm = graph.row_l2norm(per_group);
    return graph.square(graph.scale_shift(norm, T(1), T(-1)));
}

template NodeId grouped_loss<float>(Graph<float>&, const LossNetNodes&, NodeId, std::size_t);
template NodeId grouped_loss<double>(Graph<double>&, const LossNetNodes&, NodeId, std::size_t);
template NodeId penalty_terms<float>(Graph<float>&, NodeId, NodeId, std::size_t);
template NodeId penalty_terms<double>(Graph<double>&, NodeId, NodeId, std::size_t);

}  // namespace reloss::ad
