#include "nok/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nok/baselines.hpp"
#include "nok/losses.hpp"

namespace nok {

namespace {
constexpr double kPi = 3.14159265358979323846;

double weighted_l2(const Tensor& a, const Tensor& b, const std::vector<double>& w) {
    const auto& av = a.rdata();
    const auto& bv = b.rdata();
    const std::int64_t n = a.dim(0), c = a.dim(1);
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < c; ++j) {
            const double d = av[static_cast<std::size_t>(i * c + j)] - bv[static_cast<std::size_t>(i * c + j)];
            s += d * d * w[static_cast<std::size_t>(i)];
        }
    return std::sqrt(s);
}

double weighted_norm(const Tensor& a, const std::vector<double>& w) {
    return weighted_l2(a, Tensor::zeros(a.shape()), w);
}

double rel_l2_scalar(const Field& pred, const Field& truth) {
    return relative_l2(pred.values.detached(), truth.values.detached(), *truth.disc).item();
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("eval: cannot open '" + path + "' for writing");
    return out;
}
} // namespace

Field predict(const Model& model, const ChannelStats& in_stats, const ChannelStats& out_stats,
              const Field& input) {
    Field pred = model.forward(standardize(input, in_stats));
    return destandardize(pred, out_stats);
}

FieldOp model_op(const Model& model, const ChannelStats& in_stats, const ChannelStats& out_stats) {
    return [&model, in_stats, out_stats](const Field& f) { return predict(model, in_stats, out_stats, f); };
}

std::vector<SweepRow> resolution_sweep(const FieldOp& op, const Dataset& test,
                                       const std::vector<std::int64_t>& resolutions,
                                       const std::string& model_name) {
    const std::int64_t native = test.grid->grid_shape.at(0);
    std::vector<SweepRow> rows;
    for (auto res : resolutions) {
        if (res > native) throw invalid_argument_error("eval: sweep resolution exceeds the dataset grid");
        double sum = 0.0, sum2 = 0.0;
        for (std::int64_t i = 0; i < test.count(); ++i) {
            Field f = test.forcing[static_cast<std::size_t>(i)];
            Field u = test.solution[static_cast<std::size_t>(i)];
            if (res != native) {
                f = subsample(f, res * res, 0);
                u = subsample(u, res * res, 0);
            }
            const double e = rel_l2_scalar(op(f), u);
            sum += e;
            sum2 += e * e;
        }
        const double n = static_cast<double>(test.count());
        const double mean = sum / n;
        const double var = std::max(0.0, sum2 / n - mean * mean);
        rows.push_back({res, model_name, mean, std::sqrt(var), test.count()});
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    auto out = open_csv(path);
    out << "resolution,model,rel_l2_mean,rel_l2_std,n_samples\n";
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%lld,%s,%.12g,%.12g,%lld\n", static_cast<long long>(r.resolution),
                      r.model.c_str(), r.rel_l2_mean, r.rel_l2_std, static_cast<long long>(r.n_samples));
        out << buf;
    }
}

bool DriftReport::nonincreasing(double slack) const {
    // drifts at the rounding floor fluctuate without signal; treat them as
    // converged rather than comparing their noise.
    constexpr double kFloor = 1e-12;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].drift_l2 < kFloor) continue;
        if (rows[i].drift_l2 > (1.0 + slack) * rows[i - 1].drift_l2) return false;
    }
    return true;
}

DriftReport discretization_convergence_test(const FieldOp& op,
                                            const std::function<Field(const DiscPtr&)>& sample,
                                            const RefinementChain& chain) {
    if (chain.levels.size() < 2) throw invalid_argument_error("drift: chain needs at least two levels");
    DriftReport report;
    std::vector<Field> outputs;
    for (const auto& disc : chain.levels) outputs.push_back(op(sample(disc)));
    for (std::size_t k = 0; k + 1 < chain.levels.size(); ++k) {
        const auto& coarse = *chain.levels[k];
        const Field& fine_out = outputs[k + 1];
        Tensor fine_on_coarse;
        if (coarse.is_grid() && fine_out.disc->is_grid()) {
            fine_on_coarse = subsample(fine_out, coarse.size(), 0).values;
        } else {
            // nested chain: the coarse points are a row prefix of the finer level
            fine_on_coarse = Tensor::from_real(
                {coarse.size(), fine_out.channels()},
                std::vector<double>(fine_out.values.rdata().begin(),
                                    fine_out.values.rdata().begin() + coarse.size() * fine_out.channels()));
        }
        report.rows.push_back({static_cast<int>(k), coarse.size(),
                               weighted_l2(outputs[k].values, fine_on_coarse, coarse.weights)});
    }
    return report;
}

void write_drift_csv(const std::string& path, const std::vector<DriftRow>& rows) {
    auto out = open_csv(path);
    out << "level,n,drift_l2\n";
    for (const auto& r : rows) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%lld,%.12g\n", r.level, static_cast<long long>(r.n), r.drift_l2);
        out << buf;
    }
}

CollapseReport receptive_field_collapse_demo(const std::vector<double>& taps, double radius,
                                             const std::vector<std::int64_t>& resolutions) {
    if (taps.size() % 2 == 0) throw invalid_argument_error("collapse: taps must have odd length");
    if (radius <= 0.0 || radius >= 0.5) throw invalid_argument_error("collapse: radius must lie in (0, 0.5)");
    if (resolutions.empty()) throw invalid_argument_error("collapse: need at least one resolution");

    double tap_sum = 0.0;
    for (double t : taps) tap_sum += t;
    const double box_height = tap_sum / (2.0 * radius); // matches the stencil's DC gain

    auto tap_param = std::make_shared<Param>(
        Param{"collapse.taps",
              Tensor::from_real({static_cast<std::int64_t>(taps.size()), 1}, std::vector<double>(taps)),
              Tensor{}});
    DiscreteConvLayer stencil(tap_param, 1);

    auto sample_sin = [](const DiscPtr& disc) {
        std::vector<double> v(static_cast<std::size_t>(disc->size()));
        const auto& pts = disc->points.rdata();
        for (std::int64_t i = 0; i < disc->size(); ++i) v[static_cast<std::size_t>(i)] = std::sin(2.0 * kPi * pts[static_cast<std::size_t>(i)]);
        Field f;
        f.disc = disc;
        f.values = Tensor::from_real({disc->size(), 1}, std::move(v));
        return f;
    };
    // box kernel convolution: g(y) = box_height * integral over |x-y| <= r
    auto box_op = [&](const Field& f) {
        const auto& pts = f.disc->points.rdata();
        const auto& fv = f.values.rdata();
        const std::int64_t n = f.disc->size();
        std::vector<double> g(static_cast<std::size_t>(n), 0.0);
        for (std::int64_t j = 0; j < n; ++j)
            for (std::int64_t i = 0; i < n; ++i) {
                double d = std::fabs(pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]);
                d = std::min(d, 1.0 - d);
                if (d <= radius + 1e-12)
                    g[static_cast<std::size_t>(j)] += box_height * fv[static_cast<std::size_t>(i)] *
                                                      f.disc->weights[static_cast<std::size_t>(i)];
            }
        Field out;
        out.disc = f.disc;
        out.values = Tensor::from_real({n, 1}, std::move(g));
        return out;
    };
    // analytic box-convolution of sin(2 pi x): windowed average times tap_sum
    const double window_gain = tap_sum * std::sin(2.0 * kPi * radius) / (2.0 * kPi * radius);

    CollapseReport report;
    int level = 0;
    for (auto n : resolutions) {
        auto disc = uniform_grid(Domain::torus1d(), n);
        Field f = sample_sin(disc);

        Tensor pointwise_limit = Tensor::from_real(f.values.shape(), [&] {
            std::vector<double> v(f.values.rdata());
            for (auto& x : v) x *= tap_sum;
            return v;
        }());
        report.stencil_gap.push_back({level, n, weighted_l2(stencil.forward(f).values, pointwise_limit, disc->weights)});

        Tensor analytic = Tensor::from_real(f.values.shape(), [&] {
            std::vector<double> v(f.values.rdata());
            for (auto& x : v) x *= window_gain / tap_sum;
            return v;
        }());
        report.operator_gap.push_back({level, n, weighted_l2(box_op(f).values, analytic, disc->weights)});
        ++level;
    }
    // distance between the two limit functions, measured on the finest grid
    {
        auto disc = uniform_grid(Domain::torus1d(), resolutions.back());
        Field f = sample_sin(disc);
        std::vector<double> a(f.values.rdata()), b(f.values.rdata());
        for (auto& x : a) x *= tap_sum;
        for (auto& x : b) x *= window_gain;
        report.limit_separation = weighted_l2(Tensor::from_real(f.values.shape(), std::move(a)),
                                              Tensor::from_real(f.values.shape(), std::move(b)), disc->weights);
    }
    return report;
}

std::vector<DecompositionRow> error_decomposition(const FieldOp& op, const Dataset& test,
                                                  std::int64_t train_res, std::int64_t query_res,
                                                  double slack) {
    if (train_res == query_res) throw invalid_argument_error("decomposition: query resolution must differ from train");
    const std::int64_t native = test.grid->grid_shape.at(0);
    if (train_res > native || query_res > native)
        throw invalid_argument_error("decomposition: resolution exceeds the dataset grid");

    std::vector<DecompositionRow> rows;
    for (std::int64_t i = 0; i < test.count(); ++i) {
        const Field& f_fine = test.forcing[static_cast<std::size_t>(i)];
        Field out_fine = op(f_fine);

        auto at_res = [&](std::int64_t res, double& eps, double& drift) {
            Field f = f_fine, u = test.solution[static_cast<std::size_t>(i)];
            if (res != native) {
                f = subsample(f, res * res, 0);
                u = subsample(u, res * res, 0);
            }
            Field out = op(f);
            eps = rel_l2_scalar(out, u);
            Tensor fine_here = res != native ? subsample(out_fine, res * res, 0).values : out_fine.values;
            drift = weighted_l2(out.values, fine_here, u.disc->weights) / weighted_norm(u.values, u.disc->weights);
        };
        DecompositionRow row{};
        at_res(train_res, row.eps_train, row.drift_train);
        at_res(query_res, row.eps_query, row.drift_query);
        row.holds = row.eps_query <= (1.0 + slack) * (row.eps_train + row.drift_train + row.drift_query);
        rows.push_back(row);
    }
    return rows;
}

} // namespace nok
