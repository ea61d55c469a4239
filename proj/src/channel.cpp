#include "thzris/channel.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "thzris/rng.hpp"

namespace thzris {

FrequencyGrid subcarrier_frequencies(double fc, double bandwidth, int count)
{
    if (!(fc > 0.0) || !(bandwidth > 0.0) || count < 1)
        throw std::invalid_argument("subcarrier_frequencies: need fc > 0, bandwidth > 0, count >= 1");
    FrequencyGrid grid;
    grid.fc = fc;
    grid.bandwidth = bandwidth;
    grid.count = count;
    grid.sampling_rate = 2.0 * bandwidth / count;
    grid.freqs.resize(static_cast<size_t>(count));
    const double centre = (count - 1) / 2.0;
    for (int b = 0; b < count; ++b)
        grid.freqs[static_cast<size_t>(b)] = fc + (bandwidth / count) * (b - centre);
    return grid;
}

double path_loss(double f, double d, double xi)
{
    if (!(f > 0.0))
        throw std::invalid_argument("path_loss: frequency must be positive");
    if (!(d > 0.0))
        throw std::invalid_argument("path_loss: distance must be positive");
    if (xi < 0.0)
        throw std::invalid_argument("path_loss: absorption must be >= 0");
    return kSpeedOfLight / (4.0 * kPi * f * d) * std::exp(-0.5 * xi * d);
}

Eigen::VectorXcd upa_response(double azimuth, double elevation, int ny, int nz, double spacing, double f)
{
    if (ny < 1 || nz < 1)
        throw std::invalid_argument("upa_response: array dimensions must be >= 1");
    const double k = 2.0 * kPi * spacing * f / kSpeedOfLight;
    const double py = std::sin(azimuth) * std::sin(elevation);
    const double pz = std::cos(elevation);
    const double scale = 1.0 / std::sqrt(static_cast<double>(ny * nz));
    Eigen::VectorXcd a(ny * nz);
    for (int iy = 0; iy < ny; ++iy)
        for (int iz = 0; iz < nz; ++iz)
            a(iy * nz + iz) = scale * std::polar(1.0, k * (iy * py + iz * pz));
    return a;
}

Eigen::VectorXcd ula_response(double angle, int n, double spacing, double f)
{
    if (n < 1)
        throw std::invalid_argument("ula_response: element count must be >= 1");
    const double k = 2.0 * kPi * spacing * f / kSpeedOfLight * std::sin(angle);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    Eigen::VectorXcd a(n);
    for (int i = 0; i < n; ++i)
        a(i) = scale * std::polar(1.0, k * i);
    return a;
}

double antenna_gain(int n)
{
    if (n < 1)
        throw std::invalid_argument("antenna_gain: element count must be >= 1");
    const double dbi = 4.0 + 10.0 * std::log10(std::sqrt(static_cast<double>(n)));
    return std::pow(10.0, dbi / 10.0);
}

Geometry place_nodes(const SystemConfig &config, std::uint64_t seed)
{
    if (config.num_aps < 2)
        throw std::invalid_argument("place_nodes: at least two APs are required");
    if (static_cast<int>(config.ris_pos.size()) != config.num_ris)
        throw std::invalid_argument("place_nodes: ris_pos needs one entry per RIS");
    Geometry geo;
    const int q_count = config.num_aps;
    for (int q = 0; q < q_count; ++q)
        geo.aps.push_back({12.0 * q / (q_count - 1), -4.0, 6.0});
    geo.ris = config.ris_pos;
    Rng rng(seed, Stream::geometry);
    for (int k = 0; k < config.num_users; ++k)
    {
        const double dx = rng.uniform(0.0, 3.0);
        const double dy = rng.uniform(0.0, 3.0);
        geo.users.push_back({config.d_u + dx, dy, 1.65});
    }
    return geo;
}

ChannelSet::ChannelSet(int num_aps, int num_ris, int num_users, int subcarriers, int nt, int m, int nu)
    : q_(num_aps), l_(num_ris), k_(num_users), b_(subcarriers), nt_(nt), m_(m), nu_(nu),
      g_(static_cast<size_t>(num_aps * num_ris * subcarriers), Eigen::MatrixXcd::Zero(m, nt)),
      w_(static_cast<size_t>(num_ris * num_users * subcarriers), Eigen::MatrixXcd::Zero(m, nu)),
      dist_g_(static_cast<size_t>(num_aps * num_ris), 0.0), dist_w_(static_cast<size_t>(num_ris * num_users), 0.0)
{
}

ChannelSet generate_channels(const SystemConfig &config, const Geometry &geometry, std::uint64_t seed)
{
    config.validate();
    if (static_cast<int>(geometry.aps.size()) != config.num_aps ||
        static_cast<int>(geometry.ris.size()) != config.num_ris ||
        static_cast<int>(geometry.users.size()) != config.num_users)
        throw std::invalid_argument("generate_channels: geometry does not match config");

    const int nt = config.nt(), m = config.m(), nu = config.user_antennas;
    ChannelSet ch(config.num_aps, config.num_ris, config.num_users, config.subcarriers, nt, m, nu);
    ch.grid = subcarrier_frequencies(config.fc, config.bandwidth, config.subcarriers);
    const double spacing = kSpeedOfLight / (2.0 * config.fc);
    const double half_pi = kPi / 2.0;

    Rng rng(seed, Stream::angles);
    auto draw = [&] { return rng.uniform(-half_pi, half_pi); };

    ch.angles_g.resize(static_cast<size_t>(config.num_aps * config.num_ris));
    for (int q = 0; q < config.num_aps; ++q)
        for (int l = 0; l < config.num_ris; ++l)
        {
            ApRisAngles &a = ch.angles_g[static_cast<size_t>(q * config.num_ris + l)];
            a.arrival = {draw(), draw()};
            a.departure = {draw(), draw()};
            ch.set_dist_g(q, l, distance(geometry.aps[static_cast<size_t>(q)], geometry.ris[static_cast<size_t>(l)]));
        }
    ch.angles_w.resize(static_cast<size_t>(config.num_ris * config.num_users));
    for (int l = 0; l < config.num_ris; ++l)
        for (int k = 0; k < config.num_users; ++k)
        {
            RisUserAngles &a = ch.angles_w[static_cast<size_t>(l * config.num_users + k)];
            a.departure = {draw(), draw()};
            a.arrival = draw();
            ch.set_dist_w(l, k, distance(geometry.ris[static_cast<size_t>(l)], geometry.users[static_cast<size_t>(k)]));
        }

    const double gt = antenna_gain(nt);
    const double gr = antenna_gain(nu);
    for (int b = 0; b < config.subcarriers; ++b)
    {
        const double f = ch.grid.freqs[static_cast<size_t>(b)];
        for (int q = 0; q < config.num_aps; ++q)
            for (int l = 0; l < config.num_ris; ++l)
            {
                const ApRisAngles &a = ch.angles_g[static_cast<size_t>(q * config.num_ris + l)];
                const double amp = std::sqrt(gt * nt * m) * path_loss(f, ch.dist_g(q, l), config.xi);
                const Eigen::VectorXcd ar =
                    upa_response(a.arrival.azimuth, a.arrival.elevation, config.ris_ny, config.ris_nz, spacing, f);
                const Eigen::VectorXcd at =
                    upa_response(a.departure.azimuth, a.departure.elevation, config.ap_ny, config.ap_nz, spacing, f);
                ch.g(q, l, b) = amp * ar * at.adjoint();
            }
        for (int l = 0; l < config.num_ris; ++l)
            for (int k = 0; k < config.num_users; ++k)
            {
                const RisUserAngles &a = ch.angles_w[static_cast<size_t>(l * config.num_users + k)];
                const double amp = std::sqrt(gr * m * nu) * path_loss(f, ch.dist_w(l, k), config.xi);
                const Eigen::VectorXcd at =
                    upa_response(a.departure.azimuth, a.departure.elevation, config.ris_ny, config.ris_nz, spacing, f);
                const Eigen::VectorXcd au = ula_response(a.arrival, nu, spacing, f);
                ch.w(l, k, b) = amp * at * au.adjoint();
            }
    }
    return ch;
}

} // namespace thzris
