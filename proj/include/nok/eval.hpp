#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nok/grf.hpp"
#include "nok/model.hpp"

namespace nok {

/// Any Field -> Field map under test (a layer, a model, an oracle...).
using FieldOp = std::function<Field(const Field&)>;

/// Model prediction in physical units: standardize input, forward,
/// destandardize output with the training-set statistics.
Field predict(const Model& model, const ChannelStats& in_stats, const ChannelStats& out_stats,
              const Field& input);
FieldOp model_op(const Model& model, const ChannelStats& in_stats, const ChannelStats& out_stats);

struct SweepRow {
    std::int64_t resolution;
    std::string model;
    double rel_l2_mean, rel_l2_std;
    std::int64_t n_samples;
};

/// Mean/std of relative L2 over the test split at each resolution
/// (resolutions are stride subsamples of the dataset's native grid).
std::vector<SweepRow> resolution_sweep(const FieldOp& op, const Dataset& test,
                                       const std::vector<std::int64_t>& resolutions,
                                       const std::string& model_name);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

struct DriftRow {
    int level;
    std::int64_t n;    // size of the coarser discretization of the pair
    double drift_l2;
};

struct DriftReport {
    std::vector<DriftRow> rows;
    /// d_{k+1} <= (1 + slack) * d_k for every consecutive pair.
    bool nonincreasing(double slack = 0.1) const;
};

/// Drift d_k = || op(f|X_{k+1}) - op(f|X_k) ||_L2 on the coarser level's
/// points (exact by chain nestedness). `sample` evaluates the test function
/// on a given discretization.
DriftReport discretization_convergence_test(const FieldOp& op,
                                            const std::function<Field(const DiscPtr&)>& sample,
                                            const RefinementChain& chain);
void write_drift_csv(const std::string& path, const std::vector<DriftRow>& rows);

struct CollapseReport {
    std::vector<DriftRow> stencil_gap;  // || stencil(f|X_n) - f * sum(taps) ||
    std::vector<DriftRow> operator_gap; // || box conv operator(f|X_n) - analytic ||
    double limit_separation;            // distance between the two n->inf limits
};

/// Fixed-tap index stencil vs a box-kernel convolution operator of matching
/// DC gain on f = sin(2*pi*x), along a torus1d resolution sweep. The stencil
/// output collapses to the pointwise map f * sum(taps); the operator tends to
/// the windowed average, a genuinely different limit.
CollapseReport receptive_field_collapse_demo(const std::vector<double>& taps, double radius,
                                             const std::vector<std::int64_t>& resolutions);

struct DecompositionRow {
    double eps_train;   // relative L2 at the training resolution
    double eps_query;   // relative L2 at the query resolution
    double drift_train; // || op(f|X) - op(f|X_fine) || / || u|X ||
    double drift_query; // same at the query resolution
    bool holds;         // eps_query <= (1 + slack) * (eps_train + both drifts)
};

std::vector<DecompositionRow> error_decomposition(const FieldOp& op, const Dataset& test,
                                                  std::int64_t train_res, std::int64_t query_res,
                                                  double slack = 0.2);

} // namespace nok
