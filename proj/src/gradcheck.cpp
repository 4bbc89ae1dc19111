#include "reloss/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "reloss/correlation.hpp"
#include "reloss/lossnet.hpp"
#include "reloss/objective.hpp"
#include "reloss/random.hpp"
#include "reloss/softrank.hpp"

namespace reloss {

using ad::Graph;
using ad::NodeId;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double lo, double hi) {
    Tensor<double> t(shape);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

// Uniform magnitude in [lo, hi] with random sign.
Tensor<double> signed_tensor(Shape shape, Rng& rng, double lo, double hi) {
    Tensor<double> t(shape);
    for (double& v : t.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(lo, hi);
    return t;
}

// Projects an arbitrary-shaped node to a scalar with fixed random weights so
// every output entry contributes a distinct amount.
NodeId project(Graph<double>& g, NodeId out, Rng& rng) {
    const NodeId w = g.constant(signed_tensor(g.shape(out), rng, 0.5, 1.5));
    return g.sum(g.mul(out, w));
}

class FaultyEluOp final : public ad::CustomOp<double> {
public:
    std::string_view name() const override { return "faulty_elu"; }
    Shape output_shape(std::span<const Shape> in) const override { return in[0]; }
    Tensor<double> forward(std::span<const Tensor<double>* const> in) const override {
        Tensor<double> out(in[0]->shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ad::elu_value((*in[0])[i]);
        return out;
    }
    std::vector<std::optional<NodeId>> backward(Graph<double>& g, NodeId self, NodeId grad) const override {
        const NodeId x = g.node(self).inputs[0];
        // correct slope is 1 above zero
        const NodeId slope = g.scale_shift(g.elu_grad(x, 1), 0.9);
        return {g.mul(grad, slope)};
    }
};

ScalarBuilder builder_for(CheckKind kind, std::uint64_t seed) {
    return [kind, seed](Graph<double>& g, NodeId x) -> NodeId {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(kind), 77}));
        const Shape s = g.shape(x);
        switch (kind) {
            case CheckKind::Affine: {
                const NodeId w = g.constant(random_tensor({3, s.cols}, rng, -1.0, 1.0));
                const NodeId b = g.constant(random_tensor({1, 3}, rng, -1.0, 1.0));
                return project(g, g.affine(x, w, b), rng);
            }
            case CheckKind::Elu: return project(g, g.elu(x), rng);
            case CheckKind::Sigmoid: return project(g, g.sigmoid(x), rng);
            case CheckKind::Mean: return g.scale_shift(g.mean(g.mul(x, g.constant(signed_tensor(s, rng, 0.5, 1.5)))), 3.0);
            case CheckKind::Sum: return g.sum(g.mul(x, g.constant(signed_tensor(s, rng, 0.5, 1.5))));
            case CheckKind::Add: return project(g, g.add(x, g.constant(random_tensor(s, rng, -1.0, 1.0))), rng);
            case CheckKind::Sub: return project(g, g.sub(g.constant(random_tensor(s, rng, -1.0, 1.0)), x), rng);
            case CheckKind::Mul: return project(g, g.mul(x, g.constant(signed_tensor(s, rng, 0.5, 1.5))), rng);
            case CheckKind::Square: return project(g, g.square(x), rng);
            case CheckKind::Sqrt: return project(g, g.sqrt(x), rng);
            case CheckKind::L2Norm: return project(g, g.row_l2norm(x), rng);
            case CheckKind::LogSoftmax: return project(g, g.log_softmax_rows(x), rng);
            case CheckKind::SoftRank: return project(g, ad::soft_rank_rows(g, x, 1.0), rng);
            case CheckKind::SpearmanSoft: {
                std::vector<double> target(s.cols);
                for (double& v : target) v = rng.normal();
                const auto ranks = hard_rank(target);
                const NodeId r = g.constant(Tensor<double>::row(std::span<const double>(ranks)));
                return ad::spearman_soft_vs_ranks(g, x, r, 2.0);
            }
            case CheckKind::LossNetInput: {
                const auto net = build_lossnet(LossNetSpec::classification(8, 4), derive_seed(seed, {3}));
                const auto nodes = ad::place_lossnet(g, net, false);
                return g.mean(ad::lossnet_forward(g, nodes, x));
            }
            case CheckKind::SecondOrderSquare: {
                // h(x) = sum_i (|| d/dx_i sum(sigmoid(x) * c) ||_2 - 1)^2 over rows
                const NodeId c = g.constant(signed_tensor(s, rng, 0.5, 1.5));
                const NodeId inner = g.sum(g.mul(g.sigmoid(g.square(x)), c));
                const NodeId grad = g.gradient(inner, x);
                const NodeId norm = g.row_l2norm(grad);
                return g.sum(g.square(g.scale_shift(norm, 1.0, -1.0)));
            }
            case CheckKind::GradientPenalty: {
                // x is the first-layer weight matrix [hidden, 1] of a small
                // classification loss net; remaining layers are fixed.
                auto net = build_lossnet(LossNetSpec::classification(s.rows, 3), derive_seed(seed, {5}));
                auto nodes = ad::place_lossnet(g, net, false);
                nodes.weights[0] = x;
                const std::size_t groups = 3, per_group = 4;
                Tensor<double> y({groups * per_group, 1});
                for (double& v : y.data()) v = rng.uniform(0.05, 0.95);
                const NodeId inputs = g.input(std::move(y));
                const NodeId losses = ad::grouped_loss(g, nodes, inputs, groups);
                return g.mean(ad::penalty_terms(g, losses, inputs, groups));
            }
        }
        throw Error("unknown check");
    };
}

}  // namespace

std::string check_name(CheckKind kind) {
    switch (kind) {
        case CheckKind::Affine: return "affine";
        case CheckKind::Elu: return "elu";
        case CheckKind::Sigmoid: return "sigmoid";
        case CheckKind::Mean: return "mean";
        case CheckKind::Sum: return "sum";
        case CheckKind::Add: return "add";
        case CheckKind::Sub: return "sub";
        case CheckKind::Mul: return "mul";
        case CheckKind::Square: return "square";
        case CheckKind::Sqrt: return "sqrt";
        case CheckKind::L2Norm: return "l2norm";
        case CheckKind::LogSoftmax: return "log_softmax";
        case CheckKind::SoftRank: return "soft_rank";
        case CheckKind::SpearmanSoft: return "spearman_soft";
        case CheckKind::LossNetInput: return "lossnet_input";
        case CheckKind::SecondOrderSquare: return "second_order";
        case CheckKind::GradientPenalty: return "gradient_penalty";
    }
    return "unknown";
}

std::vector<CheckKind> all_checks() {
    return {CheckKind::Affine,       CheckKind::Elu,          CheckKind::Sigmoid,
            CheckKind::Mean,         CheckKind::Sum,          CheckKind::Add,
            CheckKind::Sub,          CheckKind::Mul,          CheckKind::Square,
            CheckKind::Sqrt,         CheckKind::L2Norm,       CheckKind::LogSoftmax,
            CheckKind::SoftRank,     CheckKind::SpearmanSoft, CheckKind::LossNetInput,
            CheckKind::SecondOrderSquare, CheckKind::GradientPenalty};
}

double check_tolerance(CheckKind kind) {
    switch (kind) {
        case CheckKind::SpearmanSoft:
        case CheckKind::SecondOrderSquare:
        case CheckKind::GradientPenalty:
            return 1e-3;
        default:
            return 1e-4;
    }
}

Tensor<double> check_point(CheckKind kind, std::uint64_t seed) {
    Rng rng(seed);
    switch (kind) {
        case CheckKind::Elu:
            return signed_tensor({3, 4}, rng, 0.1, 2.0);
        case CheckKind::Sqrt:
            return random_tensor({3, 4}, rng, 0.1, 3.0);
        case CheckKind::L2Norm: {
            // every row keeps norm >= 0.1
            Tensor<double> t = signed_tensor({3, 4}, rng, 0.1, 1.5);
            return t;
        }
        case CheckKind::SoftRank:
            return random_tensor({2, 6}, rng, -2.0, 2.0);
        case CheckKind::SpearmanSoft:
            return random_tensor({1, 8}, rng, -2.0, 2.0);
        case CheckKind::LossNetInput:
            return random_tensor({5, 1}, rng, 0.0, 1.0);
        case CheckKind::SecondOrderSquare:
            return signed_tensor({2, 3}, rng, 0.2, 1.2);
        case CheckKind::GradientPenalty:
            return random_tensor({6, 1}, rng, -1.0, 1.0);
        default:
            return random_tensor({3, 4}, rng, -2.0, 2.0);
    }
}

void finite_diff_check(const ScalarBuilder& builder, const Tensor<double>& point, double eps,
                       GradCheckReport& report) {
    if (!(eps > 0.0)) throw Error("finite_diff_check: eps must be positive");
    Graph<double> g;
    const NodeId x = g.placeholder(point.shape());
    ad::Bindings<double> bind{{x, point}};
    g.evaluate(x, bind);
    const NodeId out = builder(g, x);
    const NodeId grad = g.gradient(out, x);
    const Tensor<double> analytic = g.evaluate(grad, bind);

    Tensor<double> probe = point;
    for (std::size_t i = 0; i < point.numel(); ++i) {
        probe[i] = point[i] + eps;
        const double up = g.evaluate(out, {{x, probe}}).item();
        probe[i] = point[i] - eps;
        const double down = g.evaluate(out, {{x, probe}}).item();
        probe[i] = point[i];
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic[i] - numeric) / denom);
    }
    report.eps = eps;
    report.points += 1;
}

GradCheckReport finite_diff_check(CheckKind kind, const Tensor<double>& point, double eps,
                                  std::uint64_t seed) {
    GradCheckReport report;
    report.op = check_name(kind);
    report.tolerance = check_tolerance(kind);
    finite_diff_check(builder_for(kind, seed), point, eps, report);
    return report;
}

NodeId faulty_elu(Graph<double>& graph, NodeId x) {
    return graph.custom(std::make_shared<FaultyEluOp>(), {x});
}

std::vector<GradCheckReport> run_gradcheck_suite(const GradCheckOptions& options) {
    std::vector<GradCheckReport> reports;
    for (CheckKind kind : all_checks()) {
        GradCheckReport report;
        report.op = check_name(kind);
        report.tolerance = check_tolerance(kind);
        ScalarBuilder builder = builder_for(kind, options.seed);
        if (kind == CheckKind::Elu && options.corrupt_elu) {
            builder = [](Graph<double>& g, NodeId x) { return g.sum(faulty_elu(g, x)); };
        }
        for (std::size_t p = 0; p < options.points; ++p) {
            const auto point = check_point(kind, derive_seed(options.seed, {static_cast<std::uint64_t>(kind), p}));
            finite_diff_check(builder, point, options.eps, report);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace reloss
