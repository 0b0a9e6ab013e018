#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace safelqr {

/// Counter-based random stream: every draw is a pure function of
/// (seed, stream, step, lane), so parallel trajectories are reproducible
/// without locks and paired experiments can consume noise indexed by step
/// rather than by call order.
///
/// The generator chains the splitmix64 finalizer over the four key words;
/// uniforms map the top 53 bits into (0, 1) and normals come from the
/// Box-Muller transform with lane-pair addressing. Fixed for the life of
/// the file formats: identical keys give identical values on every build.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Raw 64-bit word at (step, lane).
    std::uint64_t word(std::uint64_t step, std::uint64_t lane) const;

    /// Uniform draw in the open interval (0, 1).
    double uniform(std::uint64_t step, std::uint64_t lane) const;

    /// Standard normal draw; lanes 2p and 2p+1 share one Box-Muller pair.
    double normal(std::uint64_t step, std::uint64_t lane) const;

    /// Vector of `dim` independent standard normals for one step.
    Eigen::VectorXd normal_vector(std::uint64_t step, int dim) const;

  private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t base_;
};

}  // namespace safelqr
