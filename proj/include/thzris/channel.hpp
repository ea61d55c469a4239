#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "thzris/config.hpp"

namespace thzris {

struct FrequencyGrid
{
    double fc = 0.0;
    double bandwidth = 0.0;
    int count = 0;
    std::vector<double> freqs; // subcarrier centers (Hz)
    double sampling_rate = 0.0; // DAC rate, 2 * bandwidth / count

    double spacing() const { return bandwidth / count; }
};

FrequencyGrid subcarrier_frequencies(double fc, double bandwidth, int count);

// Amplitude gain of free-space spreading times molecular absorption.
double path_loss(double f, double d, double xi);

// Unit-norm UPA response; element (ny, nz) sits at index ny * nz_count + nz.
Eigen::VectorXcd upa_response(double azimuth, double elevation, int ny, int nz, double spacing, double f);

// Unit-norm ULA response.
Eigen::VectorXcd ula_response(double angle, int n, double spacing, double f);

// Linear power gain of an N-element array, 4 dBi + 10 log10(sqrt(N)).
double antenna_gain(int n);

struct Geometry
{
    std::vector<Vec3> aps;
    std::vector<Vec3> ris;
    std::vector<Vec3> users;
};

Geometry place_nodes(const SystemConfig &config, std::uint64_t seed);

struct UpaAngles
{
    double azimuth = 0.0;
    double elevation = 0.0;
};

struct ApRisAngles
{
    UpaAngles arrival;   // at the RIS
    UpaAngles departure; // at the AP
};

struct RisUserAngles
{
    UpaAngles departure; // at the RIS
    double arrival = 0.0; // at the user ULA
};

// Per-subcarrier LoS channels. G(q,l,b) is M x Nt (AP -> RIS), W(l,k,b) is
// M x Nu (RIS -> user). Immutable once generated.
class ChannelSet
{
  public:
    ChannelSet() = default;
    ChannelSet(int num_aps, int num_ris, int num_users, int subcarriers, int nt, int m, int nu);

    int num_aps() const { return q_; }
    int num_ris() const { return l_; }
    int num_users() const { return k_; }
    int subcarriers() const { return b_; }
    int nt() const { return nt_; }
    int m() const { return m_; }
    int nu() const { return nu_; }

    const Eigen::MatrixXcd &g(int q, int l, int b) const { return g_[(q * l_ + l) * b_ + b]; }
    Eigen::MatrixXcd &g(int q, int l, int b) { return g_[(q * l_ + l) * b_ + b]; }
    const Eigen::MatrixXcd &w(int l, int k, int b) const { return w_[(l * k_ + k) * b_ + b]; }
    Eigen::MatrixXcd &w(int l, int k, int b) { return w_[(l * k_ + k) * b_ + b]; }

    double dist_g(int q, int l) const { return dist_g_[q * l_ + l]; }
    double dist_w(int l, int k) const { return dist_w_[l * k_ + k]; }
    void set_dist_g(int q, int l, double d) { dist_g_[q * l_ + l] = d; }
    void set_dist_w(int l, int k, double d) { dist_w_[l * k_ + k] = d; }

    FrequencyGrid grid;
    std::vector<ApRisAngles> angles_g;   // index q * L + l
    std::vector<RisUserAngles> angles_w; // index l * K + k

  private:
    int q_ = 0, l_ = 0, k_ = 0, b_ = 0, nt_ = 0, m_ = 0, nu_ = 0;
    std::vector<Eigen::MatrixXcd> g_;
    std::vector<Eigen::MatrixXcd> w_;
    std::vector<double> dist_g_;
    std::vector<double> dist_w_;
};

// One angle draw per physical link, reused across subcarriers.
ChannelSet generate_channels(const SystemConfig &config, const Geometry &geometry, std::uint64_t seed);

} // namespace thzris
