#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace thzris {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = 3.14159265358979323846;

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);
double db_to_linear(double db);

struct Vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

double distance(const Vec3 &a, const Vec3 &b);

// Passive surfaces neither draw reflected power nor add thermal noise.
enum class RisMode
{
    active,
    passive
};

// All physical and algorithmic parameters of one scenario. Field names double
// as keys of the text config format (see config_io.hpp).
struct SystemConfig
{
    int schema_version = 1;

    double fc = 0.14e12;    // carrier (Hz)
    double bandwidth = 5e9; // total bandwidth (Hz)
    int subcarriers = 4;

    int num_aps = 3;
    int ap_ny = 4; // AP UPA, Nt = ap_ny * ap_nz
    int ap_nz = 4;
    int num_users = 4;
    int user_antennas = 4; // ULA
    int num_ris = 2;
    int ris_ny = 8; // RIS UPA, M = ris_ny * ris_nz
    int ris_nz = 8;

    double rate_threshold = 0.1; // bit/s/Hz per user and subcarrier
    double beta_max = 10.0;      // amplitude, 20 dB in power
    std::vector<double> p_ap_max = {1.0, 1.0, 1.0}; // W per AP
    std::vector<double> p_ris_max = {0.1, 0.1};     // W per RIS
    double eta_a = 0.9;
    double eta_r = 0.8;
    double xi = 6e-5;                         // molecular absorption (1/m)
    double noise_density = 3.981071705534986e-21; // W/Hz, -174 dBm/Hz
    std::vector<double> sigma2_ris;           // W per RIS; empty = per-subcarrier user noise
    std::vector<int> dac_bits = {1, 1, 1};    // per AP
    double p_ap_circuit = 0.0316;             // W per RF chain
    double p_user_circuit = 0.1;              // W per user
    double p_backhaul = 0.825;                // W per AP
    double p_ris_circuit = 1e-4;              // W per element, -10 dBm
    double p_ris_dc = 3.1622776601683794e-4;  // W per element, -5 dBm
    double kappa = 1.0;
    double d_u = 5.0;
    std::vector<Vec3> ris_pos = {{5.0, 3.0, 6.0}, {8.0, 3.0, 6.0}};
    RisMode ris_mode = RisMode::active;
    std::uint64_t seed = 1;

    int nt() const { return ap_ny * ap_nz; }
    int m() const { return ris_ny * ris_nz; }
    double subcarrier_bandwidth() const { return bandwidth / subcarriers; }
    // DAC sampling rate, twice the subcarrier bandwidth.
    double sampling_rate() const { return 2.0 * subcarrier_bandwidth(); }
    double user_noise() const { return noise_density * subcarrier_bandwidth(); }
    double ris_noise(int l) const;

    // Throws std::invalid_argument on the first violated invariant.
    void validate() const;

    // Per-node vectors holding a single repeated value follow num_aps/num_ris.
    void resize_per_node();
};

// Full-size scenario: 3 APs, 4 users, 2 RIS of 64 elements.
SystemConfig default_config();
// Small scenario for CI and acceptance runs.
SystemConfig desk_config();
// "desk" or "paper".
SystemConfig profile_config(std::string_view name);

// Nearest-to-square factorization (rows >= cols) used for UPA grids.
std::pair<int, int> square_factor(int n);

} // namespace thzris
