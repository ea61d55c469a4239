#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "thzris/config.hpp"
#include "thzris/quantization.hpp"

using namespace thzris;

TEST_CASE("distortion factor table and formula")
{
    CHECK(distortion_factor(1) == 0.3634);
    CHECK(distortion_factor(2) == 0.1175);
    CHECK(distortion_factor(3) == 0.03454);
    CHECK(distortion_factor(4) == 0.009497);
    CHECK(distortion_factor(5) == 0.002499);
    CHECK(distortion_factor(6) == doctest::Approx(6.642332e-4).epsilon(1e-6));
    CHECK(distortion_factor(8) == doctest::Approx(kPi * std::sqrt(3.0) / 2.0 / 65536.0).epsilon(1e-14));
    for (int b = 1; b < 20; ++b)
        CHECK(distortion_factor(b + 1) < distortion_factor(b));
    CHECK_THROWS_AS(distortion_factor(0), std::invalid_argument);
    CHECK_THROWS_AS(distortion_factor(-3), std::invalid_argument);
}

TEST_CASE("dac model")
{
    const std::vector<int> bits = {1, 4, 9};
    const DacModel d = DacModel::from_bits(bits);
    REQUIRE(d.num_aps() == 3);
    for (int q = 0; q < 3; ++q)
    {
        CHECK(d.alpha[q] == distortion_factor(bits[q]));
        CHECK(d.lambda[q] * d.lambda[q] + d.alpha[q] == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("quantization noise covariance")
{
    std::vector<Eigen::VectorXcd> none = {Eigen::VectorXcd::Zero(3), Eigen::VectorXcd::Zero(3)};
    CHECK(quantization_noise_cov(none, 0.3).isZero());

    Eigen::VectorXcd f(2);
    f << 1.0, std::complex<double>(0.0, 1.0);
    const std::vector<Eigen::VectorXcd> one = {f};
    const Eigen::VectorXd d = quantization_noise_cov(one, 0.1);
    CHECK(d(0) == doctest::Approx(0.1));
    CHECK(d(1) == doctest::Approx(0.1));

    std::vector<Eigen::VectorXcd> many;
    Eigen::MatrixXcd outer = Eigen::MatrixXcd::Zero(4, 4);
    double trace = 0.0;
    for (int k = 0; k < 3; ++k)
    {
        Eigen::VectorXcd v = Eigen::VectorXcd::Random(4);
        outer += v * v.adjoint();
        trace += v.squaredNorm();
        many.push_back(v);
    }
    const Eigen::VectorXd cov = quantization_noise_cov(many, 0.25);
    CHECK((cov - 0.25 * outer.diagonal().real()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(cov.sum() == doctest::Approx(0.25 * trace).epsilon(1e-14));

    CHECK_THROWS_AS(quantization_noise_cov(many, 1.0), std::invalid_argument);
    many.push_back(Eigen::VectorXcd::Zero(2));
    CHECK_THROWS_AS(quantization_noise_cov(many, 0.1), std::invalid_argument);
}
