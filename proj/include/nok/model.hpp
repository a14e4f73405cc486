#pragma once

#include <memory>
#include <string>

#include "nok/baselines.hpp"
#include "nok/layers.hpp"

namespace nok {

/// Architecture description; `kind` selects fno (spectral blocks) or conv
/// (index-stencil blocks with the same lifting/projection scaffold).
struct ModelConfig {
    std::string kind = "fno";
    std::int64_t width = 32;
    std::int64_t modes = 16;
    int blocks = 2;
    int pos_frequencies = 4;
    int taps_half_width = 11; // conv baseline stencil half-width
    std::int64_t in_channels = 1;
    std::int64_t out_channels = 1;

    void validate() const;
};

class Model {
public:
    explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {}
    virtual ~Model() = default;

    virtual Field forward(const Field& input) const = 0;

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const ModelConfig& config() const { return cfg_; }

protected:
    ModelConfig cfg_;
    ParamStore store_;
};

std::unique_ptr<Model> make_model(const ModelConfig& cfg, std::uint64_t seed);

} // namespace nok
