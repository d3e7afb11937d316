#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "msa/tensor.hpp"

namespace msa {

// Glorot-uniform draw: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
inline Tensor glorot_uniform(Shape shape, std::size_t fan_in,
                             std::size_t fan_out, std::mt19937_64& rng) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace msa
