#pragma once

#include <cstddef>
#include <cstdint>

#include "graphlime/graph.hpp"

namespace graphlime {

/// Planted-partition graph with class-dependent Gaussian features.
///
/// Each class gets a mean pattern of +-signal/2 over the first
/// `informative_features` columns and +-weak_signal/2 over the next
/// `weak_features` columns; every entry adds unit Gaussian noise. A fraction
/// `homophily` of the edges join nodes of the same class.
struct SyntheticParams {
    std::size_t node_count = 300;
    std::size_t class_count = 2;
    std::size_t informative_features = 10;
    std::size_t weak_features = 10;
    double signal = 1.5;
    double weak_signal = 0.75;
    double average_degree = 6.0;
    double homophily = 0.7;
};

Graph generate_synthetic(const SyntheticParams& params, std::uint64_t seed);

}  // namespace graphlime
