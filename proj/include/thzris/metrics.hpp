#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thzris/channel.hpp"
#include "thzris/config.hpp"
#include "thzris/quantization.hpp"

namespace thzris {

// Precoders f(q,k,b) (Nt), stacked RIS coefficients phi (L*M, Theta =
// diag(phi)), receive filters omega(k,b) (1 x Nu row) and the quadratic
// transform auxiliary tau.
struct DesignVariables
{
    int num_aps = 0;
    int num_users = 0;
    int subcarriers = 0;
    std::vector<Eigen::VectorXcd> precoders;
    Eigen::VectorXcd phi;
    std::vector<Eigen::RowVectorXcd> filters;
    double tau = 0.0;

    // All-zero precoders and phi, filters set to the first unit vector.
    static DesignVariables zeros(const ChannelSet &channels);

    Eigen::VectorXcd &f(int q, int k, int b) { return precoders[idx(q, k, b)]; }
    const Eigen::VectorXcd &f(int q, int k, int b) const { return precoders[idx(q, k, b)]; }
    Eigen::RowVectorXcd &omega(int k, int b) { return filters[static_cast<size_t>(k * subcarriers + b)]; }
    const Eigen::RowVectorXcd &omega(int k, int b) const { return filters[static_cast<size_t>(k * subcarriers + b)]; }

  private:
    size_t idx(int q, int k, int b) const { return static_cast<size_t>((q * num_users + k) * subcarriers + b); }
};

struct NoiseModel
{
    std::vector<double> user; // sigma^2 per (k, b), index k * B + b
    std::vector<double> ris;  // sigma_v^2 per RIS
    int subcarriers = 0;

    double user_noise(int k, int b) const { return user[static_cast<size_t>(k * subcarriers + b)]; }
};

// Passive surfaces get zero thermal noise.
NoiseModel noise_model(const SystemConfig &config);

// J^H(q,k,b) = sum_l W(l,k,b)^H Theta_l^H G(q,l,b), Nu x Nt.
Eigen::MatrixXcd composite_channel(const ChannelSet &channels, const Eigen::VectorXcd &phi, int q, int k, int b);

// All composite channels for one phi, index (q * K + k) * B + b.
std::vector<Eigen::MatrixXcd> composite_channels(const ChannelSet &channels, const Eigen::VectorXcd &phi);

struct SinrTerms
{
    double signal = 0.0;
    double interference = 0.0;
    double quantization = 0.0;
    double ris_noise = 0.0;
    double noise = 0.0;

    double denominator() const { return interference + quantization + ris_noise + noise; }
    double value() const { return signal / denominator(); }
};

// Received-signal form: explicit quantization covariance and per-RIS
// amplified thermal noise.
SinrTerms sinr_terms(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                     const DacModel &dac, int k, int b);
double sinr(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise, const DacModel &dac,
            int k, int b);

// Stacked form over all APs with chi = diag(lambda) (x) I and the
// diag(f) rewrite of the quantization term (the SCA denominator psi).
SinrTerms sinr_terms_psi(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                         const DacModel &dac, int k, int b);

// Quadratic form in phi built from U(k,b) = [diag(omega W^H) G(q,b)]_q.
SinrTerms sinr_terms_phi(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                         const DacModel &dac, int k, int b);
double sinr_phi_form(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                     const DacModel &dac, int k, int b);

// SINR of every (k, b), index k * B + b.
std::vector<double> all_sinr(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                             const DacModel &dac);

double spectral_efficiency(std::span<const double> sinr_values);
// Throws std::logic_error when p_sys <= 0.
double energy_efficiency(double se, double p_sys);

double power_ap(const DesignVariables &vars, int q, double eta_a);

// Reflected power of RIS l: amplified signal (coherent over APs), amplified
// quantization noise and amplified thermal noise, divided by eta_r.
double power_ris(const ChannelSet &channels, const DesignVariables &vars, const DacModel &dac,
                 const NoiseModel &noise, int l, double eta_r);

double dac_power(double sampling_rate, int bits);
double power_static(const SystemConfig &config);
// Constant budget used to bring SE onto the EE scale.
double p_tot(const SystemConfig &config);
double objective(double kappa, double se, double ee, double p_tot);

struct PowerBreakdown
{
    std::vector<double> p_ap;
    std::vector<double> p_ris; // zero for passive surfaces
    double p_static = 0.0;
    double p_dac = 0.0; // part of p_static
    double p_sys = 0.0;
    double p_tot = 0.0;
};

PowerBreakdown power_breakdown(const ChannelSet &channels, const DesignVariables &vars, const SystemConfig &config,
                               const DacModel &dac, const NoiseModel &noise);

struct Residuals
{
    std::vector<double> ap_power;  // sum ||f||^2 - P_max (W)
    std::vector<double> ris_power; // P_RIS - P_R_max (W), zero for passive surfaces
    double phi_modulus = 0.0;      // max |phi| - beta_max
    double rate = 0.0;             // max R_th - R(k,b)

    double max_absolute() const;
    // Each residual divided by its bound.
    double max_relative(const SystemConfig &config) const;
};

Residuals feasibility_residuals(const ChannelSet &channels, const DesignVariables &vars, const SystemConfig &config);

struct Metrics
{
    std::vector<double> sinr; // k * B + b
    std::vector<double> rate;
    double se = 0.0;
    double ee = 0.0;
    double objective = 0.0;
    PowerBreakdown power;
};

Metrics evaluate(const ChannelSet &channels, const DesignVariables &vars, const SystemConfig &config);

} // namespace thzris
