#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "thzris/channel.hpp"

using namespace thzris;

namespace {
const double kF = 0.14e12;
const double kSpacing = kSpeedOfLight / (2.0 * kF);
} // namespace

TEST_CASE("subcarrier grid")
{
    const FrequencyGrid g4 = subcarrier_frequencies(0.14e12, 5e9, 4);
    REQUIRE(g4.freqs.size() == 4);
    CHECK(g4.freqs[0] == doctest::Approx(138.125e9).epsilon(1e-12));
    CHECK(g4.freqs[1] == doctest::Approx(139.375e9).epsilon(1e-12));
    CHECK(g4.freqs[2] == doctest::Approx(140.625e9).epsilon(1e-12));
    CHECK(g4.freqs[3] == doctest::Approx(141.875e9).epsilon(1e-12));
    CHECK(g4.sampling_rate == doctest::Approx(2.5e9));
    CHECK(g4.spacing() == doctest::Approx(1.25e9));

    const FrequencyGrid g1 = subcarrier_frequencies(0.14e12, 5e9, 1);
    REQUIRE(g1.freqs.size() == 1);
    CHECK(g1.freqs[0] == doctest::Approx(140e9).epsilon(1e-12));

    const FrequencyGrid g2 = subcarrier_frequencies(0.14e12, 5e9, 2);
    CHECK(g2.freqs[0] == doctest::Approx(138.75e9).epsilon(1e-12));
    CHECK(g2.freqs[1] == doctest::Approx(141.25e9).epsilon(1e-12));

    // mean sits on the carrier
    double mean = 0.0;
    for (double f : subcarrier_frequencies(0.3e12, 10e9, 7).freqs)
        mean += f / 7.0;
    CHECK(mean == doctest::Approx(0.3e12).epsilon(1e-12));

    CHECK_THROWS_AS(subcarrier_frequencies(0.14e12, 5e9, 0), std::invalid_argument);
    CHECK_THROWS_AS(subcarrier_frequencies(0.0, 5e9, 4), std::invalid_argument);
    CHECK_THROWS_AS(subcarrier_frequencies(0.14e12, -1.0, 4), std::invalid_argument);
}

TEST_CASE("path loss")
{
    CHECK(path_loss(0.14e12, 10.0, 6e-5) == doctest::Approx(1.703540703706512e-5).epsilon(1e-12));
    CHECK(path_loss(0.14e12, 20.0, 6e-5) / path_loss(0.14e12, 10.0, 6e-5) ==
          doctest::Approx(0.4998500224977501).epsilon(1e-12));
    CHECK(path_loss(0.2e12, 3.0, 0.0) == doctest::Approx(kSpeedOfLight / (4.0 * kPi * 0.2e12 * 3.0)).epsilon(1e-14));
    CHECK(path_loss(0.2e12, 3.0, 1e-3) < path_loss(0.2e12, 3.0, 0.0));
    CHECK(path_loss(0.3e12, 3.0, 1e-3) < path_loss(0.2e12, 3.0, 1e-3));
    CHECK(path_loss(0.2e12, 4.0, 1e-3) < path_loss(0.2e12, 3.0, 1e-3));
    CHECK_THROWS_AS(path_loss(0.14e12, 0.0, 6e-5), std::invalid_argument);
    CHECK_THROWS_AS(path_loss(0.14e12, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("array responses")
{
    const Eigen::VectorXcd one = upa_response(0.4, -0.2, 1, 1, kSpacing, kF);
    REQUIRE(one.size() == 1);
    CHECK(std::abs(one(0) - 1.0) < 1e-15);

    const Eigen::VectorXcd pair = upa_response(0.0, kPi / 2.0, 2, 1, kSpacing, kF);
    CHECK(std::abs(pair(0) - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(pair(1) - 1.0 / std::sqrt(2.0)) < 1e-15);

    const Eigen::VectorXcd ula = ula_response(0.0, 4, kSpacing, kF);
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(ula(i) - 0.5) < 1e-15);

    const Eigen::VectorXcd endfire = ula_response(kPi / 2.0, 2, kSpacing, kF);
    CHECK(std::abs(endfire(1) + 1.0 / std::sqrt(2.0)) < 1e-12);

    // nz runs fastest: element (0, 1) is index 1, element (1, 0) index nz
    const double gam = 0.3, eta = 1.0;
    const Eigen::VectorXcd upa = upa_response(gam, eta, 3, 2, kSpacing, kF);
    const double k = 2.0 * kPi * kSpacing * kF / kSpeedOfLight;
    CHECK(std::arg(upa(1) / upa(0)) == doctest::Approx(std::remainder(k * std::cos(eta), 2 * kPi)));
    CHECK(std::arg(upa(2) / upa(0)) == doctest::Approx(std::remainder(k * std::sin(gam) * std::sin(eta), 2 * kPi)));

    for (double a : {-1.2, 0.1, 1.5})
    {
        CHECK(upa_response(a, a / 2, 4, 5, kSpacing, kF).norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(ula_response(a, 7, kSpacing, kF).norm() == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(upa_response(0, 0, 0, 2, kSpacing, kF), std::invalid_argument);
    CHECK_THROWS_AS(ula_response(0, 0, kSpacing, kF), std::invalid_argument);
}

TEST_CASE("antenna gain")
{
    CHECK(antenna_gain(1) == doctest::Approx(2.51188643150958).epsilon(1e-12));
    CHECK(antenna_gain(16) == doctest::Approx(10.047545726038).epsilon(1e-10));
    CHECK(antenna_gain(100) == doctest::Approx(25.1188643150958).epsilon(1e-12));
    CHECK_THROWS_AS(antenna_gain(0), std::invalid_argument);
}

TEST_CASE("node placement")
{
    const SystemConfig c = desk_config();
    const Geometry g = place_nodes(c, 3);
    REQUIRE(g.aps.size() == static_cast<size_t>(c.num_aps));
    REQUIRE(g.users.size() == static_cast<size_t>(c.num_users));
    REQUIRE(g.ris.size() == static_cast<size_t>(c.num_ris));
    for (const auto &u : g.users)
    {
        CHECK(u.z == 1.65);
        CHECK(std::isfinite(u.x));
        CHECK(std::isfinite(u.y));
    }
    const Geometry again = place_nodes(c, 3);
    CHECK(again.users[0].x == g.users[0].x);
    CHECK(place_nodes(c, 4).users[0].x != g.users[0].x);

    SystemConfig one = c;
    one.num_aps = 1;
    one.resize_per_node();
    CHECK_THROWS_AS(place_nodes(one, 1), std::invalid_argument);
}

TEST_CASE("channel generation")
{
    const SystemConfig c = desk_config();
    const Geometry geo = place_nodes(c, 5);
    const ChannelSet ch = generate_channels(c, geo, 5);
    const ChannelSet again = generate_channels(c, geo, 5);
    const ChannelSet other = generate_channels(c, geo, 6);
    CHECK(ch.num_aps() == c.num_aps);
    CHECK(ch.m() == c.m());
    CHECK(ch.nt() == c.nt());
    CHECK(ch.g(0, 0, 0) == again.g(0, 0, 0));
    CHECK(ch.g(0, 0, 0) != other.g(0, 0, 0));

    const double gt = antenna_gain(c.nt());
    for (int b = 0; b < ch.subcarriers(); ++b)
        for (int q = 0; q < ch.num_aps(); ++q)
            for (int l = 0; l < ch.num_ris(); ++l)
            {
                const Eigen::MatrixXcd &g = ch.g(q, l, b);
                CHECK(g.rows() == c.m());
                CHECK(g.cols() == c.nt());
                const double want =
                    std::sqrt(gt * c.nt() * c.m()) * path_loss(ch.grid.freqs[static_cast<size_t>(b)], ch.dist_g(q, l), c.xi);
                CHECK(g.norm() == doctest::Approx(want).epsilon(1e-12));
                const auto sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(g).singularValues();
                CHECK(sv(1) < 1e-12 * sv(0));
            }
    // one angle draw per link, shared by all subcarriers
    const Eigen::MatrixXcd g0 = ch.g(0, 0, 0), g1 = ch.g(0, 0, 1);
    CHECK(g0.norm() > 0.0);
    CHECK(g1.norm() > 0.0);
    for (const auto &a : ch.angles_w)
    {
        CHECK(std::abs(a.arrival) <= kPi / 2);
        CHECK(std::abs(a.departure.azimuth) <= kPi / 2);
    }
}
