#include "thzris/quantization.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "thzris/config.hpp"

namespace thzris {

double distortion_factor(int bits)
{
    static constexpr std::array<double, 5> table = {0.3634, 0.1175, 0.03454, 0.009497, 0.002499};
    if (bits < 1)
        throw std::invalid_argument("distortion_factor: bits must be >= 1");
    if (bits <= 5)
        return table[static_cast<size_t>(bits - 1)];
    return kPi * std::sqrt(3.0) / 2.0 * std::pow(2.0, -2.0 * bits);
}

DacModel DacModel::from_bits(std::span<const int> bits_per_ap)
{
    DacModel dac;
    for (int b : bits_per_ap)
    {
        const double a = distortion_factor(b);
        dac.bits.push_back(b);
        dac.alpha.push_back(a);
        dac.lambda.push_back(std::sqrt(1.0 - a));
    }
    return dac;
}

Eigen::VectorXd quantization_noise_cov(std::span<const Eigen::VectorXcd> precoders, double alpha)
{
    if (alpha < 0.0 || alpha >= 1.0)
        throw std::invalid_argument("quantization_noise_cov: alpha must lie in [0, 1)");
    if (precoders.empty())
        return {};
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(precoders.front().size());
    for (const auto &f : precoders)
    {
        if (f.size() != diag.size())
            throw std::invalid_argument("quantization_noise_cov: precoder lengths differ");
        diag += f.cwiseAbs2();
    }
    return alpha * diag;
}

} // namespace thzris
