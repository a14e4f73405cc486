#include "nok/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "nok/losses.hpp"
#include "nok/ops.hpp"

namespace nok {

void TrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1) throw invalid_argument_error("train: epochs and batch_size must be positive");
    if (lr <= 0.0 || weight_decay < 0.0) throw invalid_argument_error("train: lr must be positive, weight_decay nonnegative");
    if (lr_halve_every < 0 || checkpoint_every < 0) throw invalid_argument_error("train: schedule intervals must be nonnegative");
    if (resolutions.empty()) throw invalid_argument_error("train: resolution schedule must be non-empty");
    for (auto r : resolutions)
        if (r < 2) throw invalid_argument_error("train: scheduled resolutions must be at least 2");
}

std::vector<std::pair<std::int64_t, int>> multires_schedule(const TrainConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::int64_t, int>> out;
    for (std::size_t p = 0; p < cfg.resolutions.size(); ++p)
        out.emplace_back(cfg.resolutions[p], static_cast<int>(p));
    return out;
}

namespace {
std::string hexf(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", x);
    return buf;
}

std::string join_hexf(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += hexf(v[i]);
    }
    return s;
}

std::vector<double> split_hexf(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(std::strtod(tok.c_str(), nullptr));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}
} // namespace

std::map<std::string, std::string> Trainer::stats_meta(const ChannelStats& in, const ChannelStats& out) {
    return {{"stats.in.mu", join_hexf(in.mu)},
            {"stats.in.sigma", join_hexf(in.sigma)},
            {"stats.out.mu", join_hexf(out.mu)},
            {"stats.out.sigma", join_hexf(out.sigma)}};
}

std::pair<ChannelStats, ChannelStats> Trainer::stats_from_meta(const std::map<std::string, std::string>& meta) {
    ChannelStats in{split_hexf(meta.at("stats.in.mu")), split_hexf(meta.at("stats.in.sigma"))};
    ChannelStats out{split_hexf(meta.at("stats.out.mu")), split_hexf(meta.at("stats.out.sigma"))};
    return {in, out};
}

Trainer::Trainer(Model& model, const Dataset& data, TrainConfig cfg)
    : model_(model), cfg_(std::move(cfg)),
      opt_(model.params(), AdamConfig{cfg_.lr, 0.9, 0.999, 1e-8, cfg_.weight_decay}) {
    cfg_.validate();
    if (data.count() < 1) throw invalid_argument_error("train: empty dataset");
    const std::int64_t native = data.grid->grid_shape.at(0);
    for (auto r : cfg_.resolutions)
        if (r > native) throw invalid_argument_error("train: scheduled resolution exceeds the dataset's native grid");

    in_stats_ = dataset_stats(data.forcing);
    out_stats_ = dataset_stats(data.solution);

    for (auto r : cfg_.resolutions) {
        if (by_resolution_.count(r)) continue;
        auto& pairs = by_resolution_[r];
        for (std::int64_t i = 0; i < data.count(); ++i) {
            Field f = data.forcing[static_cast<std::size_t>(i)];
            Field u = data.solution[static_cast<std::size_t>(i)];
            if (r != native) {
                f = subsample(f, r * r, 0);
                u = subsample(u, r * r, 0);
            }
            pairs.emplace_back(standardize(f, in_stats_), standardize(u, out_stats_));
        }
    }
}

double Trainer::lr_at(int epoch) const {
    if (cfg_.lr_halve_every <= 0) return cfg_.lr;
    return cfg_.lr * std::pow(0.5, static_cast<double>(epoch / cfg_.lr_halve_every));
}

double Trainer::train_epoch(int epoch) {
    const double lr = lr_at(epoch);
    double total = 0.0;
    std::int64_t batches = 0;
    for (const auto& [res, pass] : multires_schedule(cfg_)) {
        const auto& pairs = by_resolution_.at(res);
        const std::size_t n = pairs.size();
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng shuffle_rng(cfg_.seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(epoch) + 1) +
                                     static_cast<std::uint64_t>(pass)));
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);

        for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg_.batch_size)) {
            const std::size_t end = std::min(n, b + static_cast<std::size_t>(cfg_.batch_size));
            Tape tape;
            model_.params().bind(tape);
            Tensor loss;
            for (std::size_t j = b; j < end; ++j) {
                const auto& [fin, uout] = pairs[order[j]];
                Field pred = model_.forward(fin);
                Tensor l = relative_l2(pred.values, uout.values, *uout.disc);
                loss = loss.defined() ? ops::add(loss, l) : l;
            }
            loss = ops::scale(loss, 1.0 / static_cast<double>(end - b));
            if (!std::isfinite(loss.item()))
                throw error("train: non-finite loss in batch " + std::to_string(batches) + " of epoch " +
                            std::to_string(epoch));
            tape.backward(loss);
            opt_.step(tape, lr);
            model_.params().unbind();
            total += loss.item();
            ++batches;
        }
    }
    return total / static_cast<double>(batches);
}

void Trainer::log_row(int epoch, std::int64_t resolution, double loss, double lr) {
    if (cfg_.log_path.empty()) return;
    const bool fresh = !std::filesystem::exists(cfg_.log_path) || std::filesystem::file_size(cfg_.log_path) == 0;
    std::ofstream out(cfg_.log_path, std::ios::app);
    if (!out) throw io_error("train: cannot open log file '" + cfg_.log_path + "'");
    if (fresh) out << "epoch,resolution,train_loss,lr\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%lld,%.12g,%.12g\n", epoch, static_cast<long long>(resolution), loss, lr);
    out << buf;
}

void Trainer::run(int start_epoch) {
    for (int e = start_epoch; e < cfg_.epochs; ++e) {
        const double loss = train_epoch(e);
        for (auto r : cfg_.resolutions) log_row(e, r, loss, lr_at(e));
        const bool last = e + 1 == cfg_.epochs;
        const bool periodic = cfg_.checkpoint_every > 0 && (e + 1) % cfg_.checkpoint_every == 0;
        if (!cfg_.checkpoint_path.empty() && (last || periodic)) {
            auto meta = cfg_.extra_meta;
            meta.merge(stats_meta(in_stats_, out_stats_));
            meta["epoch"] = std::to_string(e + 1);
            checkpoint_save(cfg_.checkpoint_path, model_, opt_, meta);
        }
    }
}

} // namespace nok
