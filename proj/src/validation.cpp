#include "thzris/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thzris/config_io.hpp"
#include "thzris/conic.hpp"
#include "thzris/optimizer.hpp"

namespace thzris {

using Eigen::MatrixXcd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using cd = std::complex<double>;

namespace {

double rel_err(double got, double want)
{
    const double scale = std::max(std::abs(want), std::abs(got));
    return scale > 0.0 ? std::abs(got - want) / scale : 0.0;
}

// Keeps the worst error and where it happened.
struct Worst
{
    double value = 0.0;
    std::string where;

    void see(double err, const std::string &what)
    {
        if (!(err <= value)) // NaN sticks
        {
            value = err;
            where = what;
        }
    }
};

CheckResult finish(const std::string &name, const Worst &w, double tol, const std::string &extra = {})
{
    CheckResult r;
    r.name = name;
    r.metric = w.value;
    r.passed = w.value <= tol;
    std::ostringstream os;
    os << "worst " << format_double(w.value) << " (tol " << format_double(tol) << ")";
    if (!w.where.empty())
        os << " at " << w.where;
    if (!extra.empty())
        os << "; " << extra;
    r.detail = os.str();
    return r;
}

int draw_int(Rng &rng, int lo, int hi) // inclusive
{
    return lo + static_cast<int>(std::floor(rng.uniform() * (hi - lo + 1)));
}

VectorXcd random_vector(Rng &rng, int n, double scale = 1.0)
{
    VectorXcd v(n);
    for (int i = 0; i < n; ++i)
        v(i) = scale * rng.complex_normal();
    return v;
}

RowVectorXcd random_unit_row(Rng &rng, int n)
{
    RowVectorXcd w = random_vector(rng, n).transpose();
    return w / w.norm();
}

std::string kb(int k, int b) { return "k=" + std::to_string(k) + " b=" + std::to_string(b); }

} // namespace

RandomInstance random_instance(Rng &rng)
{
    const int q_n = draw_int(rng, 2, 4), l_n = draw_int(rng, 1, 4), k_n = draw_int(rng, 1, 4);
    const int b_n = draw_int(rng, 1, 4), nt = draw_int(rng, 1, 4), m = draw_int(rng, 1, 6), nu = draw_int(rng, 1, 4);

    RandomInstance in;
    in.channels = ChannelSet(q_n, l_n, k_n, b_n, nt, m, nu);
    for (int b = 0; b < b_n; ++b)
    {
        for (int q = 0; q < q_n; ++q)
            for (int l = 0; l < l_n; ++l)
                in.channels.g(q, l, b) = MatrixXcd::NullaryExpr(m, nt, [&] { return rng.complex_normal(); });
        for (int l = 0; l < l_n; ++l)
            for (int k = 0; k < k_n; ++k)
                in.channels.w(l, k, b) = MatrixXcd::NullaryExpr(m, nu, [&] { return rng.complex_normal(); });
    }

    in.vars = DesignVariables::zeros(in.channels);
    for (auto &f : in.vars.precoders)
        f = random_vector(rng, nt, 1.0 / std::sqrt(static_cast<double>(nt)));
    in.vars.phi = random_vector(rng, l_n * m, rng.uniform(0.5, 2.0));
    for (auto &w : in.vars.filters)
        w = random_unit_row(rng, nu);

    std::vector<int> bits(static_cast<size_t>(q_n));
    for (auto &bq : bits)
        bq = draw_int(rng, 1, 8);
    in.dac = DacModel::from_bits(bits);

    in.noise.subcarriers = b_n;
    in.noise.user.resize(static_cast<size_t>(k_n * b_n));
    for (auto &s : in.noise.user)
        s = rng.uniform(0.1, 2.0);
    in.noise.ris.resize(static_cast<size_t>(l_n));
    for (auto &s : in.noise.ris)
        s = rng.uniform(0.0, 0.5);
    return in;
}

CheckResult check_subcarrier_grid()
{
    Worst w;
    struct Case
    {
        int count;
        std::vector<double> want;
    };
    const Case cases[] = {
        {4, {138.125e9, 139.375e9, 140.625e9, 141.875e9}},
        {1, {140e9}},
        {2, {138.75e9, 141.25e9}},
    };
    for (const auto &c : cases)
    {
        const FrequencyGrid g = subcarrier_frequencies(0.14e12, 5e9, c.count);
        if (g.freqs.size() != c.want.size())
        {
            w.see(1.0, "B=" + std::to_string(c.count) + " size");
            continue;
        }
        for (size_t i = 0; i < c.want.size(); ++i)
            w.see(rel_err(g.freqs[i], c.want[i]), "B=" + std::to_string(c.count) + " i=" + std::to_string(i));
    }
    w.see(rel_err(subcarrier_frequencies(0.14e12, 5e9, 4).sampling_rate, 2.5e9), "sampling rate");
    return finish("channel.subcarrier_grid", w, 1e-9);
}

CheckResult check_path_loss()
{
    Worst w;
    const double c = 299792458.0;
    auto oracle = [&](double f, double d, double xi) { return c / (4.0 * kPi * f * d) * std::exp(-xi * d / 2.0); };
    w.see(rel_err(path_loss(0.14e12, 10.0, 6e-5), 1.703540703706512e-5), "(140 GHz, 10 m) frozen");
    w.see(rel_err(path_loss(0.14e12, 20.0, 6e-5) / path_loss(0.14e12, 10.0, 6e-5), 0.4998500224977501),
          "distance ratio frozen");
    w.see(rel_err(path_loss(0.3e12, 7.0, 0.0), c / (4.0 * kPi * 0.3e12 * 7.0)), "zero absorption");
    Rng rng(17, Stream::validate);
    for (int i = 0; i < 50; ++i)
    {
        const double f = rng.uniform(0.1e12, 1e12), d = rng.uniform(0.1, 100.0), xi = rng.uniform(0.0, 1e-2);
        w.see(rel_err(path_loss(f, d, xi), oracle(f, d, xi)), "random draw " + std::to_string(i));
        // strictly decreasing in each argument
        if (!(path_loss(f * 1.01, d, xi) < path_loss(f, d, xi) && path_loss(f, d * 1.01, xi) < path_loss(f, d, xi) &&
              path_loss(f, d, xi + 1e-3) < path_loss(f, d, xi)))
            w.see(1.0, "monotonicity " + std::to_string(i));
    }
    return finish("channel.path_loss", w, 1e-9);
}

CheckResult check_steering()
{
    Worst w;
    const double f = 0.14e12, da = kSpeedOfLight / (2.0 * f);
    auto vec_err = [](const VectorXcd &got, const VectorXcd &want) {
        return got.size() == want.size() ? (got - want).norm() / want.norm() : 1.0;
    };
    const double r2 = 1.0 / std::sqrt(2.0);
    w.see(vec_err(upa_response(0.3, 1.1, 1, 1, da, f), VectorXcd::Constant(1, 1.0)), "UPA single element");
    w.see(vec_err(upa_response(0.0, kPi / 2.0, 2, 1, da, f), VectorXcd::Constant(2, r2)), "UPA broadside pair");
    w.see(vec_err(ula_response(0.0, 4, da, f), VectorXcd::Constant(4, 0.5)), "ULA broadside");
    VectorXcd alt(2);
    alt << r2, -r2;
    w.see(vec_err(ula_response(kPi / 2.0, 2, kSpeedOfLight / (2.0 * f), f), alt), "ULA endfire");

    Rng rng(23, Stream::validate);
    for (int i = 0; i < 20; ++i)
    {
        const double gam = rng.uniform(-kPi / 2, kPi / 2), eta = rng.uniform(-kPi / 2, kPi / 2);
        const int ny = draw_int(rng, 1, 5), nz = draw_int(rng, 1, 5);
        VectorXcd want(ny * nz);
        for (int y = 0; y < ny; ++y)
            for (int z = 0; z < nz; ++z)
            {
                const double ph = 2.0 * kPi * da * f / kSpeedOfLight * (y * std::sin(gam) * std::sin(eta) + z * std::cos(eta));
                want(y * nz + z) = std::polar(1.0 / std::sqrt(static_cast<double>(ny * nz)), ph);
            }
        const VectorXcd got = upa_response(gam, eta, ny, nz, da, f);
        w.see(vec_err(got, want), "UPA draw " + std::to_string(i));
        w.see(std::abs(got.norm() - 1.0), "UPA norm " + std::to_string(i));
        w.see(std::abs(ula_response(gam, ny, da, f).norm() - 1.0), "ULA norm " + std::to_string(i));
    }
    return finish("channel.steering", w, 1e-9);
}

CheckResult check_antenna_gain()
{
    Worst w;
    w.see(rel_err(antenna_gain(1), std::pow(10.0, 0.4)), "N=1");
    w.see(rel_err(antenna_gain(16), std::pow(10.0, (4.0 + 10.0 * std::log10(4.0)) / 10.0)), "N=16");
    w.see(rel_err(antenna_gain(100), std::pow(10.0, 1.4)), "N=100");
    return finish("channel.antenna_gain", w, 1e-9);
}

CheckResult check_distortion_factor()
{
    Worst w;
    const double table[] = {0.3634, 0.1175, 0.03454, 0.009497, 0.002499};
    for (int b = 1; b <= 5; ++b)
        w.see(rel_err(distortion_factor(b), table[b - 1]), "bits=" + std::to_string(b));
    for (int b = 6; b <= 12; ++b)
        w.see(rel_err(distortion_factor(b), kPi * std::sqrt(3.0) / 2.0 * std::pow(2.0, -2.0 * b)),
              "bits=" + std::to_string(b));
    w.see(rel_err(distortion_factor(6), 6.642e-4) > 1e-3 ? 1.0 : 0.0, "bits=6 reference value");
    for (int b = 1; b < 16; ++b)
        if (!(distortion_factor(b + 1) < distortion_factor(b)))
            w.see(1.0, "not decreasing at bits=" + std::to_string(b));
    const std::vector<int> bits = {1, 2, 3, 4, 5, 6, 8, 12};
    const DacModel dac = DacModel::from_bits(bits);
    for (size_t i = 0; i < bits.size(); ++i)
        w.see(std::abs(dac.lambda[i] * dac.lambda[i] + dac.alpha[i] - 1.0), "lambda^2 + alpha");
    return finish("quantization.distortion_factor", w, 1e-9);
}

CheckResult check_dac_power()
{
    Worst w;
    w.see(rel_err(dac_power(2.5e9, 1), 0.02253), "(2.5 GHz, 1 bit)");
    w.see(rel_err(dac_power(2.5e9, 8), 0.18384), "(2.5 GHz, 8 bits)");
    for (int b = 1; b < 12; ++b)
        if (!(dac_power(2.5e9, b + 1) > dac_power(2.5e9, b) && dac_power(3e9, b) > dac_power(2.5e9, b)))
            w.see(1.0, "monotonicity at bits=" + std::to_string(b));
    return finish("metrics.dac_power", w, 1e-9);
}

CheckResult check_scalar_sinr()
{
    Worst w;
    Rng rng(29, Stream::validate);
    for (int i = 0; i < 50; ++i)
    {
        ChannelSet ch(1, 1, 1, 1, 1, 1, 1);
        const cd g = rng.complex_normal(), wch = rng.complex_normal(), phi = 2.0 * rng.complex_normal(),
                 f = rng.complex_normal();
        ch.g(0, 0, 0)(0, 0) = g;
        ch.w(0, 0, 0)(0, 0) = wch;
        DesignVariables v = DesignVariables::zeros(ch);
        v.f(0, 0, 0)(0) = f;
        v.phi(0) = phi;
        v.omega(0, 0)(0) = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
        const int bits = draw_int(rng, 1, 8);
        const DacModel dac = DacModel::from_bits(std::vector<int>{bits});
        NoiseModel nm;
        nm.subcarriers = 1;
        nm.user = {rng.uniform(0.01, 1.0)};
        nm.ris = {rng.uniform(0.0, 1.0)};

        const double a = distortion_factor(bits);
        const double p2 = std::norm(phi), wgf = std::norm(wch * g * f);
        const double want = (1.0 - a) * p2 * wgf /
                            (a * p2 * std::norm(wch * g) * std::norm(f) + p2 * std::norm(wch) * nm.ris[0] + nm.user[0]);
        w.see(rel_err(sinr(ch, v, nm, dac, 0, 0), want), "draw " + std::to_string(i));
    }
    return finish("metrics.scalar_sinr", w, 1e-9);
}

CheckResult check_sinr_forms(std::uint64_t seed, int instances)
{
    Worst w;
    Rng rng(seed, Stream::validate);
    for (int i = 0; i < instances; ++i)
    {
        const RandomInstance in = random_instance(rng);
        const ChannelSet &ch = in.channels;
        for (int k = 0; k < ch.num_users(); ++k)
            for (int b = 0; b < ch.subcarriers(); ++b)
            {
                const std::string at = "instance " + std::to_string(i) + " " + kb(k, b);
                const SinrTerms t9 = sinr_terms(ch, in.vars, in.noise, in.dac, k, b);
                const SinrTerms tp = sinr_terms_psi(ch, in.vars, in.noise, in.dac, k, b);
                const SinrTerms tf = sinr_terms_phi(ch, in.vars, in.noise, in.dac, k, b);
                w.see(rel_err(tp.value(), t9.value()), at + " psi value");
                w.see(rel_err(tp.denominator(), t9.denominator()), at + " psi denominator");
                w.see(rel_err(tf.value(), t9.value()), at + " phi value");
                w.see(rel_err(tf.denominator(), t9.denominator()), at + " phi denominator");
                w.see(rel_err(sinr_phi_form(ch, in.vars, in.noise, in.dac, k, b), t9.value()), at + " phi form");
            }
    }
    return finish("metrics.sinr_forms", w, 1e-9, std::to_string(instances) + " instances");
}

CheckResult check_sinr_rotation(std::uint64_t seed, int instances)
{
    Worst w;
    Rng rng(derive_seed(seed, 101), Stream::validate);
    for (int i = 0; i < instances; ++i)
    {
        RandomInstance in = random_instance(rng);
        const auto before = all_sinr(in.channels, in.vars, in.noise, in.dac);
        const cd rot = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
        for (auto &f : in.vars.filters)
            f *= rot;
        const auto after = all_sinr(in.channels, in.vars, in.noise, in.dac);
        for (size_t j = 0; j < before.size(); ++j)
            w.see(rel_err(after[j], before[j]), "instance " + std::to_string(i));

        // phi -> c phi with no distortion and no RIS noise: signal over interference is unchanged
        DacModel ideal = in.dac;
        std::fill(ideal.alpha.begin(), ideal.alpha.end(), 0.0);
        std::fill(ideal.lambda.begin(), ideal.lambda.end(), 1.0);
        NoiseModel quiet = in.noise;
        std::fill(quiet.ris.begin(), quiet.ris.end(), 0.0);
        const SinrTerms t0 = sinr_terms(in.channels, in.vars, quiet, ideal, 0, 0);
        in.vars.phi *= cd(2.5, -1.0);
        const SinrTerms t1 = sinr_terms(in.channels, in.vars, quiet, ideal, 0, 0);
        if (t0.interference > 0.0)
            w.see(rel_err(t1.signal / t1.interference, t0.signal / t0.interference), "phi scaling " + std::to_string(i));
    }
    return finish("metrics.sinr_invariance", w, 1e-9);
}

CheckResult check_quantization_cov(std::uint64_t seed, int instances)
{
    Worst w;
    Rng rng(derive_seed(seed, 102), Stream::validate);
    {
        VectorXcd f(2);
        f << 1.0, cd(0.0, 1.0);
        const std::vector<VectorXcd> one = {f};
        const Eigen::VectorXd d = quantization_noise_cov(one, 0.1);
        w.see(std::max(std::abs(d(0) - 0.1), std::abs(d(1) - 0.1)), "f=[1,j]");
    }
    for (int i = 0; i < instances; ++i)
    {
        const int nt = draw_int(rng, 1, 8), k_n = draw_int(rng, 1, 5);
        const double alpha = rng.uniform(0.0, 0.5);
        std::vector<VectorXcd> fs;
        for (int k = 0; k < k_n; ++k)
            fs.push_back(random_vector(rng, nt));
        const Eigen::VectorXd got = quantization_noise_cov(fs, alpha);
        MatrixXcd outer = MatrixXcd::Zero(nt, nt);
        Eigen::VectorXd diag_sum = Eigen::VectorXd::Zero(nt);
        double trace = 0.0;
        for (const auto &f : fs)
        {
            outer += f * f.adjoint();
            diag_sum += alpha * f.cwiseProduct(f.conjugate()).real();
            trace += alpha * f.squaredNorm();
        }
        const double scale = std::max(1.0, got.cwiseAbs().maxCoeff());
        w.see((got - alpha * outer.diagonal().real()).cwiseAbs().maxCoeff() / scale, "outer-product form");
        w.see((got - diag_sum).cwiseAbs().maxCoeff() / scale, "diagonal form");
        w.see(rel_err(got.sum(), trace), "trace");
        if (got.minCoeff() < 0.0)
            w.see(1.0, "negative entry");
    }
    return finish("quantization.covariance", w, 1e-12);
}

namespace {

template <class Surrogate, class Perturb>
CheckResult surrogate_check(const std::string &name, std::uint64_t seed, int points, Surrogate surrogate,
                            Perturb perturb)
{
    Worst tight, bound;
    Rng rng(seed, Stream::validate);
    const int per = 10;
    const int instances = std::max(1, (points + per - 1) / per);
    int checked = 0;
    for (int i = 0; i < instances; ++i)
    {
        const RandomInstance in = random_instance(rng);
        const ChannelSet &ch = in.channels;
        for (int k = 0; k < ch.num_users(); ++k)
            for (int b = 0; b < ch.subcarriers(); ++b)
                tight.see(std::abs(surrogate(in, in.vars, k, b) - sinr(ch, in.vars, in.noise, in.dac, k, b)),
                          "instance " + std::to_string(i) + " " + kb(k, b));
        for (int p = 0; p < per && checked < points; ++p, ++checked)
        {
            DesignVariables point = in.vars;
            const double scale = std::pow(10.0, rng.uniform(-2.0, 0.5));
            perturb(point, rng, scale);
            for (int k = 0; k < ch.num_users(); ++k)
                for (int b = 0; b < ch.subcarriers(); ++b)
                    bound.see(surrogate(in, point, k, b) - sinr(ch, point, in.noise, in.dac, k, b),
                              "point " + std::to_string(checked) + " " + kb(k, b));
        }
    }
    CheckResult r;
    r.name = name;
    r.metric = std::max(tight.value, bound.value);
    r.passed = tight.value <= 1e-9 && bound.value <= 1e-9;
    r.detail = "tightness " + format_double(tight.value) + ", lower-bound violation " + format_double(bound.value) +
               " over " + std::to_string(checked) + " points (tol 1e-9)";
    return r;
}

} // namespace

CheckResult check_precoder_surrogate(std::uint64_t seed, int points)
{
    return surrogate_check(
        "optimizer.precoder_surrogate", derive_seed(seed, 103), points,
        [](const RandomInstance &in, const DesignVariables &point, int k, int b) {
            return precoder_surrogate(in.channels, in.vars, point, in.noise, in.dac, k, b);
        },
        [](DesignVariables &v, Rng &rng, double scale) {
            for (auto &f : v.precoders)
                f += random_vector(rng, static_cast<int>(f.size()), scale);
        });
}

CheckResult check_ris_surrogate(std::uint64_t seed, int points)
{
    return surrogate_check(
        "optimizer.ris_surrogate", derive_seed(seed, 104), points,
        [](const RandomInstance &in, const DesignVariables &point, int k, int b) {
            return ris_surrogate(in.channels, in.vars, point, in.noise, in.dac, k, b);
        },
        [](DesignVariables &v, Rng &rng, double scale) {
            v.phi += random_vector(rng, static_cast<int>(v.phi.size()), scale);
        });
}

CheckResult check_mmse_dominance(std::uint64_t seed, int instances, int filters)
{
    Worst w;
    Rng rng(derive_seed(seed, 105), Stream::validate);
    for (int i = 0; i < instances; ++i)
    {
        RandomInstance in = random_instance(rng);
        const ChannelSet &ch = in.channels;
        in.vars.filters = mmse_filters(ch, in.vars, in.dac, in.noise);
        for (int k = 0; k < ch.num_users(); ++k)
            for (int b = 0; b < ch.subcarriers(); ++b)
            {
                w.see(std::abs(in.vars.omega(k, b).norm() - 1.0), "filter norm");
                const double best = sinr(ch, in.vars, in.noise, in.dac, k, b);
                DesignVariables trial = in.vars;
                for (int j = 0; j < filters; ++j)
                {
                    trial.omega(k, b) = random_unit_row(rng, ch.nu());
                    const double s = sinr(ch, trial, in.noise, in.dac, k, b);
                    w.see(best > 0.0 ? (s - best) / best : s,
                          "instance " + std::to_string(i) + " " + kb(k, b));
                }
            }
    }
    return finish("optimizer.mmse_dominance", w, 1e-6);
}

CheckResult check_tau_argmax(std::uint64_t seed, int instances)
{
    Worst w;
    Rng rng(derive_seed(seed, 106), Stream::validate);
    for (int i = 0; i < instances; ++i)
    {
        const double se = rng.uniform(0.01, 50.0), p = rng.uniform(0.1, 20.0), ptot = p * rng.uniform(1.0, 3.0);
        const double kappa = rng.uniform();
        const double tau = update_tau(se, p);
        const double best = transformed_objective(kappa, tau, se, p, ptot);
        w.see(rel_err(tau, std::sqrt(se) / p), "closed form");
        for (double d : {-0.1, -0.01, 0.01, 0.1})
            w.see((transformed_objective(kappa, tau * (1.0 + d), se, p, ptot) - best) / std::abs(best),
                  "draw " + std::to_string(i));
    }
    return finish("optimizer.tau_argmax", w, 1e-12);
}

CheckResult check_power_model(const SystemConfig &config, std::uint64_t seed)
{
    Worst w;
    const ChannelSet ch = generate_channels(config, place_nodes(config, seed), seed);
    const DesignVariables v = initialize(ch, config, seed);
    const DacModel dac = DacModel::from_bits(config.dac_bits);
    const NoiseModel nm = noise_model(config);
    const PowerBreakdown pb = power_breakdown(ch, v, config, dac, nm);

    double sum = pb.p_static;
    for (double p : pb.p_ap)
        sum += p;
    for (double p : pb.p_ris)
        sum += p;
    w.see(rel_err(pb.p_sys, sum), "p_sys decomposition");
    w.see(rel_err(pb.p_static, power_static(config)), "static power");
    for (double p : pb.p_ap)
        if (p < 0.0)
            w.see(1.0, "negative AP power");
    for (double p : pb.p_ris)
        if (p < 0.0)
            w.see(1.0, "negative RIS power");
    if (!(pb.p_tot > pb.p_static))
        w.see(1.0, "p_tot <= p_static");

    const Metrics m = evaluate(ch, v, config);
    w.see(rel_err(m.ee * m.power.p_sys, m.se), "ee * p_sys = se");
    double se = 0.0;
    for (double s : m.sinr)
        se += std::log2(1.0 + s);
    w.see(rel_err(m.se, se), "se from sinr");

    // only thermal noise survives with F = 0 and |phi| = beta
    DesignVariables quiet = DesignVariables::zeros(ch);
    const double beta = 1.7;
    quiet.phi = VectorXcd::Constant(ch.num_ris() * ch.m(), cd(0.0, beta));
    NoiseModel thermal = nm;
    std::fill(thermal.ris.begin(), thermal.ris.end(), 0.3);
    w.see(rel_err(power_ris(ch, quiet, dac, thermal, 0, config.eta_r), ch.m() * beta * beta * 0.3 / config.eta_r),
          "thermal-only reflected power");

    DesignVariables one = DesignVariables::zeros(ch);
    one.f(0, 0, 0) = VectorXcd::Zero(ch.nt());
    one.f(0, 0, 0)(0) = 1.0;
    w.see(rel_err(power_ap(one, 0, 0.9), 1.0 / 0.9), "one precoder at 1 W");

    SystemConfig ref = default_config();
    const double nt = ref.nt();
    const double want_static = 3 * nt * 0.0316 + 4 * 3 * 2 * nt * dac_power(2.5e9, 1) + 4 * 0.1 + 3 * 0.825 +
                               2 * 64 * (1e-4 + 3.1622776601683794e-4);
    w.see(rel_err(power_static(ref), want_static), "default static power");
    w.see(rel_err(p_tot(ref) - power_static(ref), 3.0 / 0.9 + 2 * 0.1 / 0.8), "default p_tot budget");
    return finish("metrics.power_model", w, 1e-9);
}

CheckResult check_conic_backend()
{
    using namespace conic;
    Worst w;
    std::vector<std::string> notes;
    auto expect = [&](const std::string &what, const ConicProgram &p, SolveStatus status, double value) {
        const ConicSolution s = solve(p);
        if (s.status != status)
        {
            w.see(1.0, what + " status " + to_string(s.status));
            return;
        }
        if (status == SolveStatus::optimal)
        {
            w.see(std::abs(s.objective - value) / (1.0 + std::abs(value)), what);
            // same answer after a text round trip
            std::stringstream ss;
            write_program(ss, p);
            const ConicSolution s2 = solve(read_program(ss));
            w.see(std::abs(s2.objective - s.objective), what + " round trip");
        }
    };
    {
        ConicProgram p; // max x, 0 <= x <= 1
        p.add_variables(1);
        p.objective(0) = 1.0;
        AffineBuilder b;
        b.add(b.add_row(), 0, 1.0);
        b.add(b.add_row(1.0), 0, -1.0);
        p.add_block(b.finish(Cone::nonneg));
        expect("box LP", p, SolveStatus::optimal, 1.0);
    }
    {
        ConicProgram p; // max x + y, ||(x, y)|| <= 1
        p.add_variables(2);
        p.objective.setOnes();
        AffineBuilder b;
        b.add_row(1.0);
        b.add(b.add_row(), 0, 1.0);
        b.add(b.add_row(), 1, 1.0);
        p.add_block(b.finish(Cone::soc));
        expect("SOC disc", p, SolveStatus::optimal, std::sqrt(2.0));
    }
    {
        ConicProgram p; // max s, 9 * 1 >= s^2
        p.add_variables(1);
        p.objective(0) = 1.0;
        AffineBuilder b;
        b.add_row(9.0);
        b.add_row(1.0);
        b.add(b.add_row(), 0, 1.0);
        p.add_block(b.finish(Cone::rsoc));
        expect("RSOC", p, SolveStatus::optimal, 3.0);
    }
    {
        ConicProgram p; // max u, 2^u <= 1 + v, v = 3
        p.add_variables(2);
        p.objective(0) = 1.0;
        AffineBuilder e;
        e.add(e.add_row(), 0, std::log(2.0));
        e.add_row(1.0);
        e.add(e.add_row(1.0), 1, 1.0);
        p.add_block(e.finish(Cone::exp));
        AffineBuilder z;
        z.add(z.add_row(-3.0), 1, 1.0);
        p.add_block(z.finish(Cone::zero));
        expect("exp cone", p, SolveStatus::optimal, 2.0);
    }
    {
        ConicProgram p; // x >= 2, x <= 1
        p.add_variables(1);
        p.objective(0) = 1.0;
        AffineBuilder b;
        b.add(b.add_row(-2.0), 0, 1.0);
        b.add(b.add_row(1.0), 0, -1.0);
        p.add_block(b.finish(Cone::nonneg));
        expect("infeasible LP", p, SolveStatus::infeasible, 0.0);
    }
    {
        ConicProgram p; // max x, x >= 0
        p.add_variables(1);
        p.objective(0) = 1.0;
        AffineBuilder b;
        b.add(b.add_row(), 0, 1.0);
        p.add_block(b.finish(Cone::nonneg));
        expect("unbounded LP", p, SolveStatus::unbounded, 0.0);
    }
    return finish("convex.backend", w, 1e-6);
}

CheckResult check_complex_embedding(std::uint64_t seed, int instances)
{
    Worst w;
    Rng rng(derive_seed(seed, 107), Stream::validate);
    for (int i = 0; i < instances; ++i)
    {
        const int n = draw_int(rng, 1, 6);
        const VectorXcd z = random_vector(rng, n), coef = random_vector(rng, n);
        const cd off = rng.complex_normal();
        const Eigen::VectorXd x = conic::to_real(z);
        const conic::RealAffine ra = conic::embed_abs_squared(coef, off);
        w.see(rel_err((ra.a * x + ra.b).squaredNorm(), std::norm(coef.dot(z) + off)), "abs squared");
        w.see((conic::to_complex(std::span<const double>(x.data(), static_cast<size_t>(x.size()))) - z).norm(),
              "round trip");
    }
    return finish("convex.embedding", w, 1e-12);
}

CheckResult check_channels(const SystemConfig &config, std::uint64_t seed)
{
    Worst w;
    const Geometry geo = place_nodes(config, seed);
    const ChannelSet ch = generate_channels(config, geo, seed);
    const ChannelSet again = generate_channels(config, place_nodes(config, seed), seed);
    const double gt = antenna_gain(config.nt()), gr = antenna_gain(config.user_antennas);
    for (int b = 0; b < ch.subcarriers(); ++b)
    {
        const double f = ch.grid.freqs[static_cast<size_t>(b)];
        for (int q = 0; q < ch.num_aps(); ++q)
            for (int l = 0; l < ch.num_ris(); ++l)
            {
                const MatrixXcd &g = ch.g(q, l, b);
                const double want = std::sqrt(gt * ch.nt() * ch.m()) * path_loss(f, ch.dist_g(q, l), config.xi);
                w.see(rel_err(g.norm(), want), "G Frobenius");
                const Eigen::VectorXd sv = Eigen::JacobiSVD<MatrixXcd>(g).singularValues();
                if (sv.size() > 1)
                    w.see(sv(1) / sv(0), "G rank");
                if (g != again.g(q, l, b))
                    w.see(1.0, "G determinism");
            }
        for (int l = 0; l < ch.num_ris(); ++l)
            for (int k = 0; k < ch.num_users(); ++k)
            {
                const MatrixXcd &wm = ch.w(l, k, b);
                const double want =
                    std::sqrt(gr * ch.m() * ch.nu()) * path_loss(f, ch.dist_w(l, k), config.xi);
                w.see(rel_err(wm.norm(), want), "W Frobenius");
                const Eigen::VectorXd sv = Eigen::JacobiSVD<MatrixXcd>(wm).singularValues();
                if (sv.size() > 1)
                    w.see(sv(1) / sv(0), "W rank");
                if (wm != again.w(l, k, b))
                    w.see(1.0, "W determinism");
            }
    }
    const double half = kPi / 2.0;
    auto in_range = [&](double a) { return a >= -half && a <= half; };
    for (const auto &a : ch.angles_g)
        if (!in_range(a.arrival.azimuth) || !in_range(a.arrival.elevation) || !in_range(a.departure.azimuth) ||
            !in_range(a.departure.elevation))
            w.see(1.0, "AP-RIS angle range");
    for (const auto &a : ch.angles_w)
        if (!in_range(a.departure.azimuth) || !in_range(a.departure.elevation) || !in_range(a.arrival))
            w.see(1.0, "RIS-user angle range");
    for (const auto &u : geo.users)
        if (u.z != 1.65)
            w.see(1.0, "user height");
    return finish("channel.structure", w, 1e-9);
}

CheckResult check_initial_point(const SystemConfig &config, std::uint64_t seed)
{
    Worst w;
    const ChannelSet ch = generate_channels(config, place_nodes(config, seed), seed);
    const DesignVariables v = initialize(ch, config, seed);
    const DesignVariables v2 = initialize(ch, config, seed);
    SystemConfig no_rate = config;
    no_rate.rate_threshold = 0.0;
    const Residuals r = feasibility_residuals(ch, v, no_rate);
    for (double x : r.ap_power)
        w.see(std::max(x, 0.0), "AP power");
    for (double x : r.ris_power)
        w.see(std::max(x, 0.0), "RIS power");
    w.see(std::max(r.phi_modulus, 0.0), "modulus");
    const Eigen::VectorXd amp = v.phi.cwiseAbs();
    w.see((amp.maxCoeff() - amp.minCoeff()) / amp.maxCoeff(), "equal amplitudes");
    if (v.phi != v2.phi || v.precoders != v2.precoders)
        w.see(1.0, "determinism");
    return finish("optimizer.initial_point", w, 1e-12);
}

CheckResult check_config_roundtrip(const SystemConfig &config)
{
    Worst w;
    const std::string text = dump_config(config);
    std::istringstream in(text);
    const SystemConfig back = parse_config(in, default_config());
    if (dump_config(back) != text)
        w.see(1.0, "dump/parse/dump differs");
    SystemConfig over = config;
    set_config_value(over, "kappa", "0.25");
    if (dump_config(over).find("kappa = 0.25\n") == std::string::npos)
        w.see(1.0, "override not echoed");
    return finish("harness.config_roundtrip", w, 0.0);
}

std::vector<CheckResult> run_validation(const SystemConfig &config, std::uint64_t seed,
                                        const std::function<void(const CheckResult &)> &on_check)
{
    config.validate();
    std::vector<std::function<CheckResult()>> checks = {
        [] { return check_subcarrier_grid(); },
        [] { return check_path_loss(); },
        [] { return check_steering(); },
        [] { return check_antenna_gain(); },
        [&] { return check_channels(config, seed); },
        [] { return check_distortion_factor(); },
        [&] { return check_quantization_cov(seed); },
        [] { return check_dac_power(); },
        [] { return check_scalar_sinr(); },
        [&] { return check_sinr_forms(seed); },
        [&] { return check_sinr_rotation(seed); },
        [&] { return check_power_model(config, seed); },
        [] { return check_conic_backend(); },
        [&] { return check_complex_embedding(seed); },
        [&] { return check_precoder_surrogate(seed); },
        [&] { return check_ris_surrogate(seed); },
        [&] { return check_mmse_dominance(seed); },
        [&] { return check_tau_argmax(seed); },
        [&] { return check_initial_point(config, seed); },
        [&] { return check_config_roundtrip(config); },
    };
    std::vector<CheckResult> out;
    for (const auto &run : checks)
    {
        CheckResult r;
        try
        {
            r = run();
        }
        catch (const std::exception &e)
        {
            r.passed = false;
            r.metric = std::nan("");
            r.detail = std::string("threw: ") + e.what();
        }
        if (r.name.empty())
            r.name = "check " + std::to_string(out.size());
        if (on_check)
            on_check(r);
        out.push_back(std::move(r));
    }
    return out;
}

const char *validation_csv_header() { return "name,passed,metric,detail"; }

std::string validation_csv_line(const CheckResult &check)
{
    std::string detail = check.detail;
    std::replace(detail.begin(), detail.end(), '"', '\'');
    const std::string metric = std::isnan(check.metric) ? "nan" : format_double(check.metric);
    return check.name + "," + (check.passed ? "true" : "false") + "," + metric + ",\"" + detail + "\"";
}

} // namespace thzris
