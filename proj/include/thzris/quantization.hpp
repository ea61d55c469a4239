#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace thzris {

// AQN distortion factor of a b-bit DAC. Bits 1..5 use the tabulated values,
// wider converters the asymptotic (pi sqrt(3) / 2) 2^(-2b).
double distortion_factor(int bits);

// Per-AP AQN parameters; every DAC of one AP shares a resolution.
struct DacModel
{
    std::vector<int> bits;
    std::vector<double> alpha;
    std::vector<double> lambda; // sqrt(1 - alpha)

    static DacModel from_bits(std::span<const int> bits_per_ap);
    int num_aps() const { return static_cast<int>(bits.size()); }
};

// Diagonal of alpha * diag(sum_k f_k f_k^H) for the precoders of one AP and
// subcarrier.
Eigen::VectorXd quantization_noise_cov(std::span<const Eigen::VectorXcd> precoders, double alpha);

} // namespace thzris
