#include "safelqr/rng.hpp"

#include <cmath>
#include <numbers>

namespace safelqr {

namespace {

// splitmix64 finalizer; full avalanche per absorbed word.
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), base_(mix(mix(seed) ^ stream)) {}

std::uint64_t RngStream::word(std::uint64_t step, std::uint64_t lane) const {
    return mix(mix(base_ ^ step) ^ lane);
}

double RngStream::uniform(std::uint64_t step, std::uint64_t lane) const {
    // Top 53 bits, centered half a ulp away from both endpoints.
    return (static_cast<double>(word(step, lane) >> 11) + 0.5) *
           (1.0 / 9007199254740992.0);
}

double RngStream::normal(std::uint64_t step, std::uint64_t lane) const {
    const std::uint64_t pair = lane >> 1;
    const double u1 = uniform(step, 2 * pair);
    const double u2 = uniform(step, 2 * pair + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (lane & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

Eigen::VectorXd RngStream::normal_vector(std::uint64_t step, int dim) const {
    Eigen::VectorXd out(dim);
    for (int i = 0; i < dim; ++i) out[i] = normal(step, static_cast<std::uint64_t>(i));
    return out;
}

}  // namespace safelqr
