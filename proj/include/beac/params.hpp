#pragma once

#include <string>

#include "beac/graph.hpp"
#include "beac/rng.hpp"

namespace beac::ad {

using ParameterStore = Bindings;

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

// Adds "<prefix>.w" [in,out] and "<prefix>.b" [1,out] to the store.
void add_dense(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng);

std::size_t parameter_count(const ParameterStore& store);

}  // namespace beac::ad
