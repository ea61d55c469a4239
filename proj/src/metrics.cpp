#include "thzris/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace thzris {

using Eigen::MatrixXcd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

DesignVariables DesignVariables::zeros(const ChannelSet &channels)
{
    DesignVariables v;
    v.num_aps = channels.num_aps();
    v.num_users = channels.num_users();
    v.subcarriers = channels.subcarriers();
    v.precoders.assign(static_cast<size_t>(v.num_aps * v.num_users * v.subcarriers),
                       VectorXcd::Zero(channels.nt()));
    v.phi = VectorXcd::Zero(channels.num_ris() * channels.m());
    RowVectorXcd e1 = RowVectorXcd::Zero(channels.nu());
    e1(0) = 1.0;
    v.filters.assign(static_cast<size_t>(v.num_users * v.subcarriers), e1);
    return v;
}

NoiseModel noise_model(const SystemConfig &config)
{
    NoiseModel n;
    n.subcarriers = config.subcarriers;
    n.user.assign(static_cast<size_t>(config.num_users * config.subcarriers), config.user_noise());
    n.ris.resize(static_cast<size_t>(config.num_ris));
    for (int l = 0; l < config.num_ris; ++l)
        n.ris[static_cast<size_t>(l)] = config.ris_mode == RisMode::passive ? 0.0 : config.ris_noise(l);
    return n;
}

MatrixXcd composite_channel(const ChannelSet &channels, const VectorXcd &phi, int q, int k, int b)
{
    const int m = channels.m();
    MatrixXcd jh = MatrixXcd::Zero(channels.nu(), channels.nt());
    for (int l = 0; l < channels.num_ris(); ++l)
    {
        const VectorXcd phi_conj = phi.segment(l * m, m).conjugate();
        jh.noalias() += channels.w(l, k, b).adjoint() * (phi_conj.asDiagonal() * channels.g(q, l, b));
    }
    return jh;
}

std::vector<MatrixXcd> composite_channels(const ChannelSet &channels, const VectorXcd &phi)
{
    const int q_n = channels.num_aps(), k_n = channels.num_users(), b_n = channels.subcarriers();
    std::vector<MatrixXcd> out(static_cast<size_t>(q_n * k_n * b_n));
    for (int q = 0; q < q_n; ++q)
        for (int k = 0; k < k_n; ++k)
            for (int b = 0; b < b_n; ++b)
                out[static_cast<size_t>((q * k_n + k) * b_n + b)] = composite_channel(channels, phi, q, k, b);
    return out;
}

namespace {

SinrTerms sinr_terms_with(const ChannelSet &ch, const std::vector<MatrixXcd> &jh, const DesignVariables &vars,
                          const NoiseModel &noise, const DacModel &dac, int k, int b)
{
    const int q_n = ch.num_aps(), k_n = ch.num_users(), b_n = ch.subcarriers(), m = ch.m();
    const RowVectorXcd &w = vars.omega(k, b);
    std::vector<RowVectorXcd> r(static_cast<size_t>(q_n));
    for (int q = 0; q < q_n; ++q)
        r[static_cast<size_t>(q)] = w * jh[static_cast<size_t>((q * k_n + k) * b_n + b)];

    SinrTerms t;
    for (int kp = 0; kp < k_n; ++kp)
    {
        std::complex<double> a = 0.0;
        for (int q = 0; q < q_n; ++q)
            a += dac.lambda[static_cast<size_t>(q)] * (r[static_cast<size_t>(q)] * vars.f(q, kp, b)).value();
        (kp == k ? t.signal : t.interference) += std::norm(a);
    }
    std::vector<VectorXcd> fs(static_cast<size_t>(k_n));
    for (int q = 0; q < q_n; ++q)
    {
        for (int kp = 0; kp < k_n; ++kp)
            fs[static_cast<size_t>(kp)] = vars.f(q, kp, b);
        const VectorXd cov = quantization_noise_cov(fs, dac.alpha[static_cast<size_t>(q)]);
        const RowVectorXcd &rq = r[static_cast<size_t>(q)];
        t.quantization += (rq * cov.asDiagonal() * rq.adjoint())(0, 0).real();
    }
    for (int l = 0; l < ch.num_ris(); ++l)
    {
        const VectorXcd v = vars.phi.segment(l * m, m).cwiseProduct(ch.w(l, k, b) * w.adjoint());
        t.ris_noise += noise.ris[static_cast<size_t>(l)] * v.squaredNorm();
    }
    t.noise = w.squaredNorm() * noise.user_noise(k, b);
    return t;
}

// W(k,b) stacked over RIS, LM x Nu.
MatrixXcd stacked_w(const ChannelSet &ch, int k, int b)
{
    const int m = ch.m();
    MatrixXcd w(ch.num_ris() * m, ch.nu());
    for (int l = 0; l < ch.num_ris(); ++l)
        w.middleRows(l * m, m) = ch.w(l, k, b);
    return w;
}

VectorXd ris_noise_diag(const ChannelSet &ch, const NoiseModel &noise)
{
    const int m = ch.m();
    VectorXd s(ch.num_ris() * m);
    for (int l = 0; l < ch.num_ris(); ++l)
        s.segment(l * m, m).setConstant(noise.ris[static_cast<size_t>(l)]);
    return s;
}

} // namespace

SinrTerms sinr_terms(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                     const DacModel &dac, int k, int b)
{
    const int q_n = channels.num_aps(), k_n = channels.num_users(), b_n = channels.subcarriers();
    std::vector<MatrixXcd> jh(static_cast<size_t>(q_n * k_n * b_n));
    for (int q = 0; q < q_n; ++q)
        jh[static_cast<size_t>((q * k_n + k) * b_n + b)] = composite_channel(channels, vars.phi, q, k, b);
    return sinr_terms_with(channels, jh, vars, noise, dac, k, b);
}

double sinr(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise, const DacModel &dac,
            int k, int b)
{
    return sinr_terms(channels, vars, noise, dac, k, b).value();
}

SinrTerms sinr_terms_psi(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                         const DacModel &dac, int k, int b)
{
    const int q_n = channels.num_aps(), k_n = channels.num_users(), nt = channels.nt();
    // J(k,b) stacked over APs, Q*Nt x Nu, and chi = diag(lambda) (x) I_Nt.
    MatrixXcd j(q_n * nt, channels.nu());
    VectorXd chi(q_n * nt);
    for (int q = 0; q < q_n; ++q)
    {
        j.middleRows(q * nt, nt) = composite_channel(channels, vars.phi, q, k, b).adjoint();
        chi.segment(q * nt, nt).setConstant(dac.lambda[static_cast<size_t>(q)]);
    }
    const RowVectorXcd &w = vars.omega(k, b);
    const RowVectorXcd wjh = w * j.adjoint();

    SinrTerms t;
    for (int kp = 0; kp < k_n; ++kp)
    {
        VectorXcd f(q_n * nt);
        for (int q = 0; q < q_n; ++q)
            f.segment(q * nt, nt) = vars.f(q, kp, b);
        const std::complex<double> x = (wjh * chi.asDiagonal() * f)(0, 0);
        (kp == k ? t.signal : t.interference) += std::norm(x);
        for (int q = 0; q < q_n; ++q)
            t.quantization += dac.alpha[static_cast<size_t>(q)] *
                              (wjh.segment(q * nt, nt) * vars.f(q, kp, b).asDiagonal()).squaredNorm();
    }
    const MatrixXcd wst = stacked_w(channels, k, b);
    const VectorXcd theta_w = vars.phi.asDiagonal() * (wst * w.adjoint());
    t.ris_noise = (theta_w.adjoint() * ris_noise_diag(channels, noise).asDiagonal() * theta_w)(0, 0).real();
    t.noise = w.squaredNorm() * noise.user_noise(k, b);
    return t;
}

SinrTerms sinr_terms_phi(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                         const DacModel &dac, int k, int b)
{
    const int q_n = channels.num_aps(), k_n = channels.num_users(), nt = channels.nt(), m = channels.m();
    const int lm = channels.num_ris() * m;
    const RowVectorXcd &w = vars.omega(k, b);
    const RowVectorXcd d = w * stacked_w(channels, k, b).adjoint(); // omega W^H, 1 x LM

    MatrixXcd u(lm, q_n * nt);
    VectorXd chi(q_n * nt);
    VectorXd sigma_n(q_n * nt);
    for (int q = 0; q < q_n; ++q)
    {
        MatrixXcd gq(lm, nt);
        for (int l = 0; l < channels.num_ris(); ++l)
            gq.middleRows(l * m, m) = channels.g(q, l, b);
        u.middleCols(q * nt, nt) = d.transpose().asDiagonal() * gq;
        chi.segment(q * nt, nt).setConstant(dac.lambda[static_cast<size_t>(q)]);
        VectorXd cov = VectorXd::Zero(nt);
        for (int kp = 0; kp < k_n; ++kp)
            cov += vars.f(q, kp, b).cwiseAbs2();
        sigma_n.segment(q * nt, nt) = dac.alpha[static_cast<size_t>(q)] * cov;
    }
    const RowVectorXcd phi_h = vars.phi.adjoint();

    SinrTerms t;
    for (int kp = 0; kp < k_n; ++kp)
    {
        VectorXcd f(q_n * nt);
        for (int q = 0; q < q_n; ++q)
            f.segment(q * nt, nt) = vars.f(q, kp, b);
        const std::complex<double> x = (phi_h * u * chi.asDiagonal() * f)(0, 0);
        (kp == k ? t.signal : t.interference) += std::norm(x);
    }
    const VectorXcd y = u.adjoint() * vars.phi;
    t.quantization = (y.adjoint() * sigma_n.asDiagonal() * y)(0, 0).real();
    const VectorXd s = ris_noise_diag(channels, noise);
    for (int i = 0; i < lm; ++i)
        t.ris_noise += s(i) * std::norm(d(i)) * std::norm(vars.phi(i));
    t.noise = w.squaredNorm() * noise.user_noise(k, b);
    return t;
}

double sinr_phi_form(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                     const DacModel &dac, int k, int b)
{
    return sinr_terms_phi(channels, vars, noise, dac, k, b).value();
}

std::vector<double> all_sinr(const ChannelSet &channels, const DesignVariables &vars, const NoiseModel &noise,
                             const DacModel &dac)
{
    const auto jh = composite_channels(channels, vars.phi);
    std::vector<double> out;
    out.reserve(static_cast<size_t>(channels.num_users() * channels.subcarriers()));
    for (int k = 0; k < channels.num_users(); ++k)
        for (int b = 0; b < channels.subcarriers(); ++b)
            out.push_back(sinr_terms_with(channels, jh, vars, noise, dac, k, b).value());
    return out;
}

double spectral_efficiency(std::span<const double> sinr_values)
{
    double se = 0.0;
    for (double s : sinr_values)
        se += std::log2(1.0 + s);
    return se;
}

double energy_efficiency(double se, double p_sys)
{
    if (!(p_sys > 0.0))
        throw std::logic_error("energy_efficiency: system power must be positive");
    return se / p_sys;
}

double power_ap(const DesignVariables &vars, int q, double eta_a)
{
    double p = 0.0;
    for (int k = 0; k < vars.num_users; ++k)
        for (int b = 0; b < vars.subcarriers; ++b)
            p += vars.f(q, k, b).squaredNorm();
    return p / eta_a;
}

double power_ris(const ChannelSet &channels, const DesignVariables &vars, const DacModel &dac,
                 const NoiseModel &noise, int l, double eta_r)
{
    const int m = channels.m();
    const VectorXcd phi_conj = vars.phi.segment(l * m, m).conjugate();
    double signal = 0.0, quant = 0.0;
    for (int b = 0; b < channels.subcarriers(); ++b)
    {
        for (int k = 0; k < channels.num_users(); ++k)
        {
            VectorXcd incident = VectorXcd::Zero(m);
            for (int q = 0; q < channels.num_aps(); ++q)
                incident.noalias() += dac.lambda[static_cast<size_t>(q)] * (channels.g(q, l, b) * vars.f(q, k, b));
            signal += phi_conj.cwiseProduct(incident).squaredNorm();
        }
        for (int q = 0; q < channels.num_aps(); ++q)
        {
            VectorXd cov = VectorXd::Zero(channels.nt());
            for (int k = 0; k < channels.num_users(); ++k)
                cov += vars.f(q, k, b).cwiseAbs2();
            const MatrixXcd tg = phi_conj.asDiagonal() * channels.g(q, l, b);
            quant += dac.alpha[static_cast<size_t>(q)] * cov.dot(tg.colwise().squaredNorm().transpose());
        }
    }
    const double thermal = phi_conj.squaredNorm() * noise.ris[static_cast<size_t>(l)];
    return (signal + quant + thermal) / eta_r;
}

double dac_power(double sampling_rate, int bits)
{
    if (bits < 1)
        throw std::invalid_argument("dac_power: bits must be >= 1");
    return 1.5e-5 * std::pow(2.0, bits) + 9e-12 * bits * sampling_rate;
}

namespace {

double dac_total(const SystemConfig &config)
{
    double p = 0.0;
    for (int q = 0; q < config.num_aps; ++q)
        p += 2.0 * config.nt() * dac_power(config.sampling_rate(), config.dac_bits[static_cast<size_t>(q)]);
    return config.subcarriers * p;
}

} // namespace

double power_static(const SystemConfig &config)
{
    return config.num_aps * config.nt() * config.p_ap_circuit + dac_total(config) +
           config.num_users * config.p_user_circuit + config.num_aps * config.p_backhaul +
           config.num_ris * config.m() * (config.p_ris_circuit + config.p_ris_dc);
}

double p_tot(const SystemConfig &config)
{
    double p = power_static(config);
    for (double pmax : config.p_ap_max)
        p += pmax / config.eta_a;
    if (config.ris_mode == RisMode::active)
        for (double pmax : config.p_ris_max)
            p += pmax / config.eta_r;
    return p;
}

double objective(double kappa, double se, double ee, double p_tot)
{
    return kappa * ee + (1.0 - kappa) * se / p_tot;
}

PowerBreakdown power_breakdown(const ChannelSet &channels, const DesignVariables &vars, const SystemConfig &config,
                               const DacModel &dac, const NoiseModel &noise)
{
    PowerBreakdown p;
    p.p_static = power_static(config);
    p.p_dac = dac_total(config);
    p.p_tot = p_tot(config);
    p.p_sys = 0.0;
    for (int q = 0; q < config.num_aps; ++q)
        p.p_ap.push_back(power_ap(vars, q, config.eta_a));
    for (int l = 0; l < config.num_ris; ++l)
        p.p_ris.push_back(config.ris_mode == RisMode::active ? power_ris(channels, vars, dac, noise, l, config.eta_r)
                                                             : 0.0);
    for (double x : p.p_ap)
        p.p_sys += x;
    for (double x : p.p_ris)
        p.p_sys += x;
    p.p_sys += p.p_static;
    return p;
}

double Residuals::max_absolute() const
{
    double r = std::max(phi_modulus, rate);
    for (double x : ap_power)
        r = std::max(r, x);
    for (double x : ris_power)
        r = std::max(r, x);
    return r;
}

double Residuals::max_relative(const SystemConfig &config) const
{
    auto rel = [](double res, double bound) { return bound > 0.0 ? res / bound : res; };
    double r = std::max(rel(phi_modulus, config.beta_max), rel(rate, config.rate_threshold));
    for (size_t q = 0; q < ap_power.size(); ++q)
        r = std::max(r, rel(ap_power[q], config.p_ap_max[q]));
    for (size_t l = 0; l < ris_power.size(); ++l)
        r = std::max(r, rel(ris_power[l], config.p_ris_max[l]));
    return r;
}

Residuals feasibility_residuals(const ChannelSet &channels, const DesignVariables &vars, const SystemConfig &config)
{
    const DacModel dac = DacModel::from_bits(config.dac_bits);
    const NoiseModel noise = noise_model(config);
    Residuals r;
    for (int q = 0; q < config.num_aps; ++q)
        r.ap_power.push_back(
            std::max(0.0, power_ap(vars, q, 1.0) - config.p_ap_max[static_cast<size_t>(q)]));
    for (int l = 0; l < config.num_ris; ++l)
    {
        double res = 0.0;
        if (config.ris_mode == RisMode::active)
            res = std::max(0.0, power_ris(channels, vars, dac, noise, l, config.eta_r) -
                                    config.p_ris_max[static_cast<size_t>(l)]);
        r.ris_power.push_back(res);
    }
    double max_mod = 0.0;
    for (Eigen::Index i = 0; i < vars.phi.size(); ++i)
        max_mod = std::max(max_mod, std::abs(vars.phi(i)));
    r.phi_modulus = std::max(0.0, max_mod - config.beta_max);
    if (config.rate_threshold > 0.0)
        for (double s : all_sinr(channels, vars, noise, dac))
            r.rate = std::max(r.rate, config.rate_threshold - std::log2(1.0 + s));
    return r;
}

Metrics evaluate(const ChannelSet &channels, const DesignVariables &vars, const SystemConfig &config)
{
    const DacModel dac = DacModel::from_bits(config.dac_bits);
    const NoiseModel noise = noise_model(config);
    Metrics m;
    m.sinr = all_sinr(channels, vars, noise, dac);
    for (double s : m.sinr)
        m.rate.push_back(std::log2(1.0 + s));
    m.se = spectral_efficiency(m.sinr);
    m.power = power_breakdown(channels, vars, config, dac, noise);
    m.ee = energy_efficiency(m.se, m.power.p_sys);
    m.objective = objective(config.kappa, m.se, m.ee, m.power.p_tot);
    return m;
}

} // namespace thzris
