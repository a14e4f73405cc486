#include "nok/model.hpp"

namespace nok {

void ModelConfig::validate() const {
    if (kind != "fno" && kind != "conv") throw invalid_argument_error("model: kind must be 'fno' or 'conv'");
    if (width < 1 || modes < 1 || blocks < 1) throw invalid_argument_error("model: width, modes and blocks must be positive");
    if (pos_frequencies < 1) throw invalid_argument_error("model: pos_frequencies must be positive");
    if (taps_half_width < 1) throw invalid_argument_error("model: taps_half_width must be positive");
    if (in_channels < 1 || out_channels < 1) throw invalid_argument_error("model: channel counts must be positive");
}

namespace {

class Fno2d final : public Model {
public:
    Fno2d(ModelConfig cfg, std::uint64_t seed) : Model(std::move(cfg)) {
        Rng rng(seed);
        const std::int64_t lifted_in = cfg_.in_channels + 4 * cfg_.pos_frequencies; // + sin/cos per axis
        lift_.emplace("lift", std::vector<std::int64_t>{lifted_in, cfg_.width}, store_, rng);
        for (int b = 0; b < cfg_.blocks; ++b)
            blocks_.emplace_back("block" + std::to_string(b), 2, cfg_.width, cfg_.modes,
                                 std::vector<std::int64_t>{cfg_.width}, store_, rng);
        proj_.emplace("proj", std::vector<std::int64_t>{cfg_.width, cfg_.width, cfg_.out_channels}, store_, rng);
    }

    Field forward(const Field& input) const override {
        Field h = concat_to_field(input, positional_encoding(input.disc->points, cfg_.pos_frequencies));
        h = lift_->forward(h);
        for (const auto& blk : blocks_) h = blk.forward(h);
        return proj_->forward(h);
    }

private:
    std::optional<PointwiseLayer> lift_, proj_;
    std::vector<FnoBlock> blocks_;
};

class ConvNet2d final : public Model {
public:
    ConvNet2d(ModelConfig cfg, std::uint64_t seed) : Model(std::move(cfg)) {
        Rng rng(seed);
        const std::int64_t lifted_in = cfg_.in_channels + 4 * cfg_.pos_frequencies;
        lift_.emplace("lift", std::vector<std::int64_t>{lifted_in, cfg_.width}, store_, rng);
        for (int b = 0; b < cfg_.blocks; ++b)
            blocks_.emplace_back("block" + std::to_string(b), cfg_.width, cfg_.taps_half_width,
                                 std::vector<std::int64_t>{cfg_.width}, store_, rng);
        proj_.emplace("proj", std::vector<std::int64_t>{cfg_.width, cfg_.width, cfg_.out_channels}, store_, rng);
    }

    Field forward(const Field& input) const override {
        Field h = concat_to_field(input, positional_encoding(input.disc->points, cfg_.pos_frequencies));
        h = lift_->forward(h);
        for (const auto& blk : blocks_) h = blk.forward(h);
        return proj_->forward(h);
    }

private:
    std::optional<PointwiseLayer> lift_, proj_;
    std::vector<ConvBlock2d> blocks_;
};

} // namespace

std::unique_ptr<Model> make_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (cfg.kind == "fno") return std::make_unique<Fno2d>(cfg, seed);
    return std::make_unique<ConvNet2d>(cfg, seed);
}

} // namespace nok
