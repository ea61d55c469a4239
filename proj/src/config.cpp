#include "thzris/config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace thzris {

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double distance(const Vec3 &a, const Vec3 &b)
{
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

double SystemConfig::ris_noise(int l) const
{
    if (sigma2_ris.empty())
        return user_noise();
    return sigma2_ris.at(static_cast<size_t>(l));
}

namespace {

void require(bool cond, const char *what)
{
    if (!cond)
        throw std::invalid_argument(what);
}

template <class T>
void broadcast(std::vector<T> &v, int count)
{
    if (v.empty() || static_cast<int>(v.size()) == count)
        return;
    if (std::all_of(v.begin(), v.end(), [&](const T &x) { return x == v.front(); }))
        v.assign(static_cast<size_t>(count), v.front());
}

} // namespace

void SystemConfig::resize_per_node()
{
    broadcast(p_ap_max, num_aps);
    broadcast(dac_bits, num_aps);
    broadcast(p_ris_max, num_ris);
    broadcast(sigma2_ris, num_ris);
}

void SystemConfig::validate() const
{
    require(schema_version == 1, "unsupported schema_version");
    require(std::isfinite(fc) && fc > 0.0, "fc must be positive");
    require(std::isfinite(bandwidth) && bandwidth > 0.0, "bandwidth must be positive");
    require(subcarriers >= 1, "subcarriers must be >= 1");
    require(num_aps >= 2, "num_aps must be >= 2 (AP placement divides by num_aps - 1)");
    require(ap_ny >= 1 && ap_nz >= 1, "AP array dimensions must be >= 1");
    require(num_users >= 1, "num_users must be >= 1");
    require(user_antennas >= 1, "user_antennas must be >= 1");
    require(num_ris >= 1, "num_ris must be >= 1");
    require(ris_ny >= 1 && ris_nz >= 1, "RIS array dimensions must be >= 1");
    require(rate_threshold >= 0.0, "rate_threshold must be >= 0");
    require(beta_max > 0.0, "beta_max must be positive");
    require(static_cast<int>(p_ap_max.size()) == num_aps, "p_ap_max needs one entry per AP");
    require(static_cast<int>(dac_bits.size()) == num_aps, "dac_bits needs one entry per AP");
    require(static_cast<int>(p_ris_max.size()) == num_ris, "p_ris_max needs one entry per RIS");
    require(static_cast<int>(ris_pos.size()) == num_ris, "ris_pos needs one entry per RIS");
    require(sigma2_ris.empty() || static_cast<int>(sigma2_ris.size()) == num_ris,
            "sigma2_ris needs one entry per RIS");
    for (double p : p_ap_max)
        require(p > 0.0, "p_ap_max entries must be positive");
    for (double p : p_ris_max)
        require(p >= 0.0, "p_ris_max entries must be >= 0");
    for (double s : sigma2_ris)
        require(s >= 0.0, "sigma2_ris entries must be >= 0");
    for (int b : dac_bits)
        require(b >= 1, "dac_bits entries must be >= 1");
    require(eta_a > 0.0 && eta_a <= 1.0, "eta_a must lie in (0, 1]");
    require(eta_r > 0.0 && eta_r <= 1.0, "eta_r must lie in (0, 1]");
    require(xi >= 0.0, "xi must be >= 0");
    require(noise_density > 0.0, "noise_density must be positive");
    require(p_ap_circuit >= 0.0 && p_user_circuit >= 0.0 && p_backhaul >= 0.0 && p_ris_circuit >= 0.0 &&
                p_ris_dc >= 0.0,
            "circuit powers must be >= 0");
    require(kappa >= 0.0 && kappa <= 1.0, "kappa must lie in [0, 1]");
    require(std::isfinite(d_u), "d_u must be finite");
}

std::pair<int, int> square_factor(int n)
{
    if (n < 1)
        throw std::invalid_argument("square_factor: n must be >= 1");
    int cols = static_cast<int>(std::sqrt(static_cast<double>(n)));
    while (cols > 1 && n % cols != 0)
        --cols;
    return {n / cols, cols};
}

SystemConfig default_config() { return SystemConfig{}; }

SystemConfig desk_config()
{
    SystemConfig c;
    c.num_aps = 2;
    c.ap_ny = 2;
    c.ap_nz = 2;
    c.num_users = 2;
    c.user_antennas = 2;
    c.num_ris = 2;
    c.ris_ny = 4;
    c.ris_nz = 4;
    c.subcarriers = 2;
    c.p_ap_max = {1.0, 1.0};
    c.dac_bits = {1, 1};
    return c;
}

SystemConfig profile_config(std::string_view name)
{
    if (name == "desk")
        return desk_config();
    if (name == "paper")
        return default_config();
    throw std::invalid_argument("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

} // namespace thzris
