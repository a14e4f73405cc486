#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nok/grf.hpp"
#include "nok/model.hpp"
#include "nok/optim.hpp"

namespace nok {

struct TrainConfig {
    int epochs = 60;
    int batch_size = 8;
    double lr = 1e-3;
    int lr_halve_every = 20; // epochs; 0 disables decay
    double weight_decay = 1e-4;
    std::vector<std::int64_t> resolutions = {32}; // every sample is visited once per entry per epoch
    std::uint64_t seed = 0;
    std::string log_path;        // CSV epoch,resolution,train_loss,lr ("" = no log)
    std::string checkpoint_path; // "" = no checkpoints
    int checkpoint_every = 0;    // epochs; 0 = final epoch only (when path set)
    std::map<std::string, std::string> extra_meta; // forwarded into checkpoints

    void validate() const;
};

/// The (resolution, pass) visits of one epoch.
std::vector<std::pair<std::int64_t, int>> multires_schedule(const TrainConfig& cfg);

/// Single-threaded seed-deterministic optimization loop. Inputs and targets
/// are standardized with training-set statistics computed once here (and
/// stored in checkpoints); the loss is the quadrature-weighted relative L2
/// on the standardized pair.
class Trainer {
public:
    Trainer(Model& model, const Dataset& data, TrainConfig cfg);

    /// One epoch (all schedule passes); returns the mean batch loss.
    double train_epoch(int epoch);

    /// Epochs [start_epoch, cfg.epochs); logs and checkpoints along the way.
    void run(int start_epoch = 0);

    double lr_at(int epoch) const;
    Adam& optimizer() { return opt_; }
    const ChannelStats& input_stats() const { return in_stats_; }
    const ChannelStats& output_stats() const { return out_stats_; }

    /// Bit-exact stats round-trip through checkpoint meta strings.
    static std::map<std::string, std::string> stats_meta(const ChannelStats& in, const ChannelStats& out);
    static std::pair<ChannelStats, ChannelStats> stats_from_meta(const std::map<std::string, std::string>& meta);

private:
    void log_row(int epoch, std::int64_t resolution, double loss, double lr);

    Model& model_;
    TrainConfig cfg_;
    Adam opt_;
    ChannelStats in_stats_, out_stats_;
    // training pairs subsampled once per scheduled resolution (standardized)
    std::map<std::int64_t, std::vector<std::pair<Field, Field>>> by_resolution_;
};

} // namespace nok
