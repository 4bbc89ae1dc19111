#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reloss/graph.hpp"

namespace reloss {

struct GradCheckReport {
    std::string op;
    double max_rel_error = 0.0;  // max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
    double eps = 0.0;
    double tolerance = 0.0;
    std::size_t points = 0;

    bool passed() const { return max_rel_error <= tolerance; }
};

enum class CheckKind {
    Affine,
    Elu,
    Sigmoid,
    Mean,
    Sum,
    Add,
    Sub,
    Mul,
    Square,
    Sqrt,
    L2Norm,
    LogSoftmax,
    SoftRank,
    SpearmanSoft,
    LossNetInput,
    SecondOrderSquare,   // scalar of a gradient of a smooth function
    GradientPenalty,     // (||d loss/d y|| - 1)^2 differentiated w.r.t. loss-net weights
};

std::string check_name(CheckKind kind);
std::vector<CheckKind> all_checks();

/// Builds a scalar from the leaf `x` on the given graph.
using ScalarBuilder = std::function<ad::NodeId(ad::Graph<double>&, ad::NodeId x)>;

/// Central-difference check of d builder(x)/dx at one point. Folds into `report`.
void finite_diff_check(const ScalarBuilder& builder, const Tensor<double>& point, double eps,
                       GradCheckReport& report);

/// Check of one named op at one point. Random companions of the op (second
/// operands, projection weights) are derived from `seed`.
GradCheckReport finite_diff_check(CheckKind kind, const Tensor<double>& point, double eps,
                                  std::uint64_t seed = 0);

/// Stated tolerance for a check: 1e-4 first order, 1e-3 for soft Spearman and
/// second-order checks.
double check_tolerance(CheckKind kind);

/// A random point for the check that stays at least 0.1 away from kinks and
/// domain boundaries.
Tensor<double> check_point(CheckKind kind, std::uint64_t seed);

struct GradCheckOptions {
    std::size_t points = 100;
    double eps = 1e-4;
    std::uint64_t seed = 0;
    bool corrupt_elu = false;  // negative control: elu with a wrong derivative
};

std::vector<GradCheckReport> run_gradcheck_suite(const GradCheckOptions& options);

/// An elu whose backward pass is deliberately wrong (slope 0.9 on the positive side).
ad::NodeId faulty_elu(ad::Graph<double>& graph, ad::NodeId x);

}  // namespace reloss
