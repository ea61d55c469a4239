#include "thzris/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "thzris/config_io.hpp"
#include "thzris/rng.hpp"

namespace thzris {

using conic::AffineBuilder;
using conic::Cone;
using conic::ConeBlock;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

void SolverOptions::validate() const
{
    if (!(eps_inner > 0.0) || !(eps_outer > 0.0))
        throw std::invalid_argument("solver tolerances must be positive");
    if (max_inner < 1 || max_outer < 1)
        throw std::invalid_argument("iteration caps must be >= 1");
    if (!(backend.tol > 0.0) || backend.max_iter < 1)
        throw std::invalid_argument("backend settings must be positive");
}

void SolveTrace::write_csv(std::ostream &out) const
{
    std::string s = "iter,objective,se,ee,tau,max_residual,inner_f,inner_phi,wall_ms\n";
    for (const auto &r : rows)
    {
        char wall[64];
        std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
        s += std::to_string(r.iter) + ',' + format_double(r.objective) + ',' + format_double(r.se) + ',' +
             format_double(r.ee) + ',' + format_double(r.tau) + ',' + format_double(r.max_residual) + ',' +
             std::to_string(r.inner_f) + ',' + std::to_string(r.inner_phi) + ',' + wall + '\n';
    }
    out << s;
}

Problem::Problem(const ChannelSet &ch, const SystemConfig &cfg)
    : channels(&ch), config(cfg), dac(DacModel::from_bits(cfg.dac_bits)), noise(noise_model(cfg)),
      p_tot(thzris::p_tot(cfg)), rate_threshold(cfg.rate_threshold)
{
}

double Problem::rate_floor() const { return std::pow(2.0, rate_threshold) - 1.0; }

double update_tau(double se, double p_sys)
{
    if (!(p_sys > 0.0))
        throw std::logic_error("update_tau: system power must be positive");
    return std::sqrt(std::max(se, 0.0)) / p_sys;
}

double transformed_objective(double kappa, double tau, double se, double p_sys, double p_tot)
{
    return 2.0 * kappa * tau * std::sqrt(std::max(se, 0.0)) - kappa * tau * tau * p_sys +
           (1.0 - kappa) * se / p_tot;
}

namespace {

size_t at(int idx) { return static_cast<size_t>(idx); }

// sum_l sigma_v,l sum_i |phi_i|^2 |(W_l omega^H)_i|^2
double ris_noise_term(const ChannelSet &ch, const VectorXcd &phi, const RowVectorXcd &omega, const NoiseModel &noise,
                      int k, int b)
{
    const int m = ch.m();
    double acc = 0.0;
    for (int l = 0; l < ch.num_ris(); ++l)
    {
        if (noise.ris[at(l)] == 0.0)
            continue;
        const VectorXcd v = phi.segment(l * m, m).cwiseProduct(ch.w(l, k, b) * omega.adjoint());
        acc += noise.ris[at(l)] * v.squaredNorm();
    }
    return acc;
}

// omega J_q^H chi_q for every q, each 1 x Nt.
std::vector<RowVectorXcd> effective_rows(const ChannelSet &ch, const VectorXcd &phi, const RowVectorXcd &omega,
                                         const DacModel &dac, int k, int b)
{
    std::vector<RowVectorXcd> r(at(ch.num_aps()));
    for (int q = 0; q < ch.num_aps(); ++q)
        r[at(q)] = dac.lambda[at(q)] * (omega * composite_channel(ch, phi, q, k, b));
    return r;
}

std::complex<double> desired(const std::vector<RowVectorXcd> &rows, const DesignVariables &vars, int kp, int b)
{
    std::complex<double> x = 0.0;
    for (int q = 0; q < vars.num_aps; ++q)
        x += (rows[at(q)] * vars.f(q, kp, b)).value();
    return x;
}

struct Expansion
{
    std::complex<double> x; // omega J^H chi f_k at the expansion point
    double psi = 0.0;       // SINR denominator
};

Expansion expansion_terms(const ChannelSet &ch, const DesignVariables &vars, const NoiseModel &noise,
                          const DacModel &dac, int k, int b)
{
    const auto rows = effective_rows(ch, vars.phi, vars.omega(k, b), dac, k, b);
    Expansion e;
    e.x = desired(rows, vars, k, b);
    e.psi = sinr_terms_psi(ch, vars, noise, dac, k, b).denominator();
    return e;
}

double surrogate_value(const Expansion &e, std::complex<double> x, double psi)
{
    if (!(e.psi > 0.0))
        throw std::logic_error("SCA surrogate: zero SINR denominator at the expansion point");
    return 2.0 * (std::conj(e.x) * x).real() / e.psi - std::norm(e.x) * psi / (e.psi * e.psi);
}

} // namespace

double precoder_surrogate(const ChannelSet &channels, const DesignVariables &expansion, const DesignVariables &point,
                          const NoiseModel &noise, const DacModel &dac, int k, int b)
{
    const Expansion e = expansion_terms(channels, expansion, noise, dac, k, b);
    DesignVariables p = expansion;
    p.precoders = point.precoders;
    const auto rows = effective_rows(channels, p.phi, p.omega(k, b), dac, k, b);
    return surrogate_value(e, desired(rows, p, k, b), sinr_terms_psi(channels, p, noise, dac, k, b).denominator());
}

double ris_surrogate(const ChannelSet &channels, const DesignVariables &expansion, const DesignVariables &point,
                     const NoiseModel &noise, const DacModel &dac, int k, int b)
{
    const Expansion e = expansion_terms(channels, expansion, noise, dac, k, b);
    DesignVariables p = expansion;
    p.phi = point.phi;
    const auto rows = effective_rows(channels, p.phi, p.omega(k, b), dac, k, b);
    return surrogate_value(e, desired(rows, p, k, b), sinr_terms_phi(channels, p, noise, dac, k, b).denominator());
}

std::vector<RowVectorXcd> mmse_filters(const ChannelSet &ch, const DesignVariables &vars, const DacModel &dac,
                                       const NoiseModel &noise)
{
    const int q_n = ch.num_aps(), k_n = ch.num_users(), b_n = ch.subcarriers(), nu = ch.nu(), m = ch.m();
    const auto jh = composite_channels(ch, vars.phi);
    std::vector<RowVectorXcd> out(at(k_n * b_n));
    for (int k = 0; k < k_n; ++k)
        for (int b = 0; b < b_n; ++b)
        {
            MatrixXcd c = MatrixXcd::Identity(nu, nu) * noise.user_noise(k, b);
            VectorXcd h_k;
            for (int kp = 0; kp < k_n; ++kp)
            {
                VectorXcd h = VectorXcd::Zero(nu);
                for (int q = 0; q < q_n; ++q)
                    h.noalias() += dac.lambda[at(q)] * (jh[at((q * k_n + k) * b_n + b)] * vars.f(q, kp, b));
                c.noalias() += h * h.adjoint();
                if (kp == k)
                    h_k = h;
            }
            for (int q = 0; q < q_n; ++q)
            {
                VectorXd cov = VectorXd::Zero(ch.nt());
                for (int kp = 0; kp < k_n; ++kp)
                    cov += vars.f(q, kp, b).cwiseAbs2();
                const MatrixXcd &j = jh[at((q * k_n + k) * b_n + b)];
                c.noalias() += dac.alpha[at(q)] * (j * cov.asDiagonal() * j.adjoint());
            }
            for (int l = 0; l < ch.num_ris(); ++l)
            {
                if (noise.ris[at(l)] == 0.0)
                    continue;
                const VectorXd weight = noise.ris[at(l)] * vars.phi.segment(l * m, m).cwiseAbs2();
                const MatrixXcd &w = ch.w(l, k, b);
                c.noalias() += w.adjoint() * weight.asDiagonal() * w;
            }
            Eigen::LDLT<MatrixXcd> ldlt(c);
            if (ldlt.info() != Eigen::Success)
                throw std::logic_error("mmse_filters: covariance not positive definite");
            RowVectorXcd omega = ldlt.solve(h_k).adjoint();
            const double norm = omega.norm();
            if (!(norm > 0.0) || !std::isfinite(norm))
            {
                omega = RowVectorXcd::Zero(nu);
                omega(0) = 1.0;
            }
            else
                omega /= norm;
            out[at(k * b_n + b)] = omega;
        }
    return out;
}

namespace {

// Adds Re / Im of sum_j coef_j z_j to two builder rows; complex z_j sits at
// real indices (2 idx_j, 2 idx_j + 1).
void add_linear(AffineBuilder &bld, int row_re, int row_im, const std::vector<int> &idx, const RowVectorXcd &coef)
{
    for (size_t j = 0; j < idx.size(); ++j)
    {
        const double cr = coef(static_cast<Eigen::Index>(j)).real(), ci = coef(static_cast<Eigen::Index>(j)).imag();
        if (row_re >= 0)
        {
            bld.add(row_re, 2 * idx[j], cr);
            bld.add(row_re, 2 * idx[j] + 1, -ci);
        }
        if (row_im >= 0)
        {
            bld.add(row_im, 2 * idx[j], ci);
            bld.add(row_im, 2 * idx[j] + 1, cr);
        }
    }
}

// |coef z_i|^2 as two rows.
void add_modulus(AffineBuilder &bld, int idx, double coef)
{
    if (coef == 0.0)
        return;
    const int r0 = bld.add_row(), r1 = bld.add_row();
    bld.add(r0, 2 * idx, coef);
    bld.add(r1, 2 * idx + 1, coef);
}

// Replaces norm rows [first, rows) with an R factor of equal Gram matrix when
// that shrinks the block. Those rows must have zero offset.
void compress_tail(ConeBlock &blk, int first)
{
    const int tail = blk.rows() - first;
    const int cols = static_cast<int>(blk.cols.size());
    if (tail <= cols)
        return;
    const MatrixXd t = blk.a.bottomRows(tail);
    Eigen::HouseholderQR<MatrixXd> qr(t);
    const MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    MatrixXd a(first + cols, cols);
    a << blk.a.topRows(first), r;
    VectorXd b(first + cols);
    b << blk.b.head(first), VectorXd::Zero(cols);
    blk.a = std::move(a);
    blk.b = std::move(b);
}

int f_index(const ChannelSet &ch, int q, int k, int b, int i)
{
    return ((q * ch.num_users() + k) * ch.subcarriers() + b) * ch.nt() + i;
}

std::vector<int> f_indices(const ChannelSet &ch, int kp, int b)
{
    std::vector<int> idx;
    for (int q = 0; q < ch.num_aps(); ++q)
        for (int i = 0; i < ch.nt(); ++i)
            idx.push_back(f_index(ch, q, kp, b, i));
    return idx;
}

// Auxiliary columns shared by both subproblems and their hint values.
struct Aux
{
    bool has_s = false;
    bool has_p = false;
};

Aux aux_flags(const Problem &pr, double tau, bool power_depends)
{
    const double kappa = pr.config.kappa;
    Aux a;
    a.has_s = !pr.max_min && kappa * tau > 0.0;
    a.has_p = !pr.max_min && power_depends && kappa * tau * tau > 0.0;
    return a;
}

SubproblemLayout add_aux(conic::ConicProgram &prog, const Problem &pr, int complex_count, const Aux &aux,
                         double tau)
{
    const int kb = pr.channels->num_users() * pr.channels->subcarriers();
    SubproblemLayout lay;
    lay.z = {prog.add_variables(2 * complex_count), complex_count};
    lay.varsigma = prog.add_variables(kb);
    if (pr.max_min)
    {
        lay.r = prog.add_variables(1);
        prog.objective(lay.r) = 1.0;
        AffineBuilder level;
        for (int i = 0; i < kb; ++i)
        {
            const int row = level.add_row();
            level.add(row, lay.varsigma + i, 1.0);
            level.add(row, lay.r, -1.0);
        }
        prog.add_block(level.finish(Cone::nonneg));
        return lay;
    }
    lay.u = prog.add_variables(kb);
    if (aux.has_s)
        lay.s = prog.add_variables(1);
    if (aux.has_p)
        lay.p = prog.add_variables(1);

    const double kappa = pr.config.kappa;
    for (int i = 0; i < kb; ++i)
        prog.objective(lay.u + i) = (1.0 - kappa) / pr.p_tot;
    if (aux.has_s)
        prog.objective(lay.s) = 2.0 * kappa * tau;
    if (aux.has_p)
        prog.objective(lay.p) = -kappa * tau * tau;

    // rate floor, log and sqrt epigraphs
    if (pr.rate_threshold > 0.0)
    {
        AffineBuilder floor;
        for (int i = 0; i < kb; ++i)
        {
            const int r = floor.add_row(-pr.rate_floor());
            floor.add(r, lay.varsigma + i, 1.0);
        }
        prog.add_block(floor.finish(Cone::nonneg));
    }
    for (int i = 0; i < kb; ++i)
    {
        AffineBuilder e;
        const int r0 = e.add_row();
        e.add(r0, lay.u + i, std::log(2.0));
        e.add_row(1.0);
        const int r2 = e.add_row(1.0);
        e.add(r2, lay.varsigma + i, 1.0);
        prog.add_block(e.finish(Cone::exp));
    }
    if (aux.has_s)
    {
        AffineBuilder r;
        const int r0 = r.add_row();
        for (int i = 0; i < kb; ++i)
            r.add(r0, lay.u + i, 1.0);
        r.add_row(1.0);
        const int r2 = r.add_row();
        r.add(r2, lay.s, 1.0);
        prog.add_block(r.finish(Cone::rsoc));
    }
    return lay;
}

// SCA block: lin(z) - varsigma - c2 c0 >= c2 ||A z||^2, as rotated SOC. `lin`
// rows are emitted by the caller through `emit_lin`, norm rows via `emit_norm`.
template <class Lin, class Norm>
ConeBlock sca_block(int varsigma_col, double c2, double c0, Lin emit_lin, Norm emit_norm)
{
    AffineBuilder bld;
    const int r0 = bld.add_row(-c2 * c0);
    bld.add(r0, varsigma_col, -1.0);
    emit_lin(bld, r0);
    bld.add_row(1.0);
    emit_norm(bld, std::sqrt(c2));
    ConeBlock blk = bld.finish(Cone::rsoc);
    compress_tail(blk, 2);
    return blk;
}

// Strictly interior values of the auxiliaries given SINR values at the
// expansion point and the power-epigraph quantity.
void fill_aux_hint(std::vector<double> &x, const SubproblemLayout &lay, const std::vector<double> &sinr,
                   const Problem &pr, double p_value)
{
    if (pr.max_min)
    {
        double lowest = 0.0;
        for (size_t i = 0; i < sinr.size(); ++i)
        {
            const double vs = 0.9 * sinr[i] - 1e-9;
            x[at(lay.varsigma) + i] = vs;
            lowest = i == 0 ? vs : std::min(lowest, vs);
        }
        x[at(lay.r)] = lowest - 0.1 * std::abs(lowest) - 1e-9;
        return;
    }
    const double lower = pr.rate_threshold > 0.0 ? pr.rate_floor() : -1.0;
    double sum_u = 0.0;
    for (size_t i = 0; i < sinr.size(); ++i)
    {
        const double vs = lower + 0.9 * (sinr[i] - lower);
        const double rate = std::log2(1.0 + vs);
        const double u = rate - 0.1 * std::abs(rate) - 1e-6;
        x[at(lay.varsigma) + i] = vs;
        x[at(lay.u) + i] = u;
        sum_u += u;
    }
    if (lay.s >= 0)
        x[at(lay.s)] = sum_u > 0.0 ? 0.9 * std::sqrt(sum_u) : 0.0;
    if (lay.p >= 0)
        x[at(lay.p)] = 1.1 * p_value + 1e-12;
}

} // namespace

Subproblem build_precoder_subproblem(const Problem &pr, const DesignVariables &ex)
{
    const ChannelSet &ch = *pr.channels;
    const int q_n = ch.num_aps(), k_n = ch.num_users(), b_n = ch.subcarriers(), nt = ch.nt(), m = ch.m();
    const int count = q_n * k_n * b_n * nt;
    const Aux aux = aux_flags(pr, ex.tau, true);

    Subproblem sp;
    auto &prog = sp.program;
    sp.layout = add_aux(prog, pr, count, aux, ex.tau);
    const auto &lay = sp.layout;
    std::vector<double> sinr_bar(at(k_n * b_n));

    for (int k = 0; k < k_n; ++k)
        for (int b = 0; b < b_n; ++b)
        {
            const RowVectorXcd &omega = ex.omega(k, b);
            const double sigma2 = pr.noise.user_noise(k, b);
            const double sc = 1.0 / std::sqrt(sigma2);
            const auto rows = effective_rows(ch, ex.phi, omega, pr.dac, k, b);
            RowVectorXcd a(q_n * nt);
            for (int q = 0; q < q_n; ++q)
                a.segment(q * nt, nt) = sc * rows[at(q)];
            // unscaled |omega J_q^H| for the quantization rows
            std::vector<VectorXd> cq(at(q_n));
            for (int q = 0; q < q_n; ++q)
                cq[at(q)] = (rows[at(q)] / pr.dac.lambda[at(q)]).cwiseAbs().transpose() * sc;

            const Expansion e = expansion_terms(ch, ex, pr.noise, pr.dac, k, b);
            const std::complex<double> xbar = e.x * sc;
            const double psibar = e.psi / sigma2;
            const double c0 = (ris_noise_term(ch, ex.phi, omega, pr.noise, k, b) + omega.squaredNorm() * sigma2) /
                              sigma2;
            const double c2 = std::norm(xbar) / (psibar * psibar);
            sinr_bar[at(k * b_n + b)] = std::norm(xbar) / psibar;

            prog.add_block(sca_block(
                lay.varsigma + k * b_n + b, c2, c0,
                [&](AffineBuilder &bld, int r0) {
                    add_linear(bld, r0, -1, f_indices(ch, k, b), (2.0 / psibar) * std::conj(xbar) * a);
                },
                [&](AffineBuilder &bld, double s) {
                    for (int kp = 0; kp < k_n; ++kp)
                    {
                        if (kp == k)
                            continue;
                        const int r_re = bld.add_row(), r_im = bld.add_row();
                        add_linear(bld, r_re, r_im, f_indices(ch, kp, b), s * a);
                    }
                    for (int q = 0; q < q_n; ++q)
                    {
                        const double sa = s * std::sqrt(pr.dac.alpha[at(q)]);
                        for (int kp = 0; kp < k_n; ++kp)
                            for (int i = 0; i < nt; ++i)
                                add_modulus(bld, f_index(ch, q, kp, b, i), sa * cq[at(q)](i));
                    }
                }));
        }

    // per-AP transmit power
    for (int q = 0; q < q_n; ++q)
    {
        AffineBuilder bld;
        bld.add_row(std::sqrt(pr.config.p_ap_max[at(q)]));
        for (int k = 0; k < k_n; ++k)
            for (int b = 0; b < b_n; ++b)
                for (int i = 0; i < nt; ++i)
                    add_modulus(bld, f_index(ch, q, k, b, i), 1.0);
        prog.add_block(bld.finish(Cone::soc));
    }

    // reflected power rows of RIS l, scaled by `s`
    auto ris_rows = [&](AffineBuilder &bld, int l, double s) {
        const VectorXcd phi_conj = ex.phi.segment(l * m, m).conjugate();
        for (int b = 0; b < b_n; ++b)
        {
            for (int k = 0; k < k_n; ++k)
                for (int r = 0; r < m; ++r)
                {
                    if (phi_conj(r) == 0.0)
                        continue;
                    RowVectorXcd coef(q_n * nt);
                    for (int q = 0; q < q_n; ++q)
                        coef.segment(q * nt, nt) =
                            (s * pr.dac.lambda[at(q)] * phi_conj(r)) * ch.g(q, l, b).row(r);
                    const int r_re = bld.add_row(), r_im = bld.add_row();
                    add_linear(bld, r_re, r_im, f_indices(ch, k, b), coef);
                }
            for (int q = 0; q < q_n; ++q)
            {
                const VectorXd colnorm =
                    (phi_conj.asDiagonal() * ch.g(q, l, b)).colwise().norm().transpose();
                for (int k = 0; k < k_n; ++k)
                    for (int i = 0; i < nt; ++i)
                        add_modulus(bld, f_index(ch, q, k, b, i), s * std::sqrt(pr.dac.alpha[at(q)]) * colnorm(i));
            }
        }
    };

    const bool active = pr.ris_in_power();
    if (pr.ris_power_constraint && active)
        for (int l = 0; l < ch.num_ris(); ++l)
        {
            const double thermal = ex.phi.segment(l * m, m).squaredNorm() * pr.noise.ris[at(l)];
            const double room = pr.config.eta_r * pr.config.p_ris_max[at(l)] - thermal;
            AffineBuilder bld;
            bld.add_row(std::sqrt(std::max(room, 0.0)));
            ris_rows(bld, l, 1.0);
            ConeBlock blk = bld.finish(Cone::soc);
            compress_tail(blk, 1);
            prog.add_block(std::move(blk));
        }

    double p_value = 0.0;
    if (aux.has_p)
    {
        AffineBuilder bld;
        const int r0 = bld.add_row();
        bld.add(r0, lay.p, 1.0);
        bld.add_row(1.0);
        const double sa = 1.0 / std::sqrt(pr.config.eta_a);
        for (int q = 0; q < q_n; ++q)
            for (int k = 0; k < k_n; ++k)
                for (int b = 0; b < b_n; ++b)
                    for (int i = 0; i < nt; ++i)
                        add_modulus(bld, f_index(ch, q, k, b, i), sa);
        if (active)
            for (int l = 0; l < ch.num_ris(); ++l)
                ris_rows(bld, l, 1.0 / std::sqrt(pr.config.eta_r));
        ConeBlock blk = bld.finish(Cone::rsoc);
        compress_tail(blk, 2);
        prog.add_block(std::move(blk));

        for (int q = 0; q < q_n; ++q)
            p_value += power_ap(ex, q, pr.config.eta_a);
        if (active)
            for (int l = 0; l < ch.num_ris(); ++l)
                p_value += power_ris(ch, ex, pr.dac, pr.noise, l, pr.config.eta_r) -
                           ex.phi.segment(l * m, m).squaredNorm() * pr.noise.ris[at(l)] / pr.config.eta_r;
    }

    sp.hint.assign(at(prog.n), 0.0);
    for (int q = 0; q < q_n; ++q)
        for (int k = 0; k < k_n; ++k)
            for (int b = 0; b < b_n; ++b)
                for (int i = 0; i < nt; ++i)
                {
                    const int idx = f_index(ch, q, k, b, i);
                    sp.hint[at(2 * idx)] = ex.f(q, k, b)(i).real();
                    sp.hint[at(2 * idx + 1)] = ex.f(q, k, b)(i).imag();
                }
    fill_aux_hint(sp.hint, lay, sinr_bar, pr, p_value);
    return sp;
}

namespace {

// Reflected-power weight of every RIS element for fixed F:
// sigma_v + signal + quantization, so P_RIS,l = sum_i weight_i |phi_i|^2 / eta_r.
VectorXd ris_power_weights(const ChannelSet &ch, const DesignVariables &vars, const DacModel &dac,
                           const NoiseModel &noise)
{
    const int m = ch.m();
    VectorXd w(ch.num_ris() * m);
    for (int l = 0; l < ch.num_ris(); ++l)
    {
        VectorXd acc = VectorXd::Constant(m, noise.ris[at(l)]);
        for (int b = 0; b < ch.subcarriers(); ++b)
        {
            for (int k = 0; k < ch.num_users(); ++k)
            {
                VectorXcd inc = VectorXcd::Zero(m);
                for (int q = 0; q < ch.num_aps(); ++q)
                    inc.noalias() += dac.lambda[at(q)] * (ch.g(q, l, b) * vars.f(q, k, b));
                acc += inc.cwiseAbs2();
            }
            for (int q = 0; q < ch.num_aps(); ++q)
            {
                VectorXd cov = VectorXd::Zero(ch.nt());
                for (int k = 0; k < ch.num_users(); ++k)
                    cov += vars.f(q, k, b).cwiseAbs2();
                acc += dac.alpha[at(q)] * (ch.g(q, l, b).cwiseAbs2() * cov);
            }
        }
        w.segment(l * m, m) = acc;
    }
    return w;
}

} // namespace

Subproblem build_ris_subproblem(const Problem &pr, const DesignVariables &ex)
{
    const ChannelSet &ch = *pr.channels;
    const int q_n = ch.num_aps(), k_n = ch.num_users(), b_n = ch.subcarriers(), nt = ch.nt(), m = ch.m();
    const int lm = ch.num_ris() * m;
    const bool active = pr.ris_in_power();
    const Aux aux = aux_flags(pr, ex.tau, active);

    Subproblem sp;
    auto &prog = sp.program;
    sp.layout = add_aux(prog, pr, lm, aux, ex.tau);
    const auto &lay = sp.layout;
    std::vector<double> sinr_bar(at(k_n * b_n));
    std::vector<int> all(at(lm));
    for (int i = 0; i < lm; ++i)
        all[at(i)] = i;

    for (int k = 0; k < k_n; ++k)
        for (int b = 0; b < b_n; ++b)
        {
            const RowVectorXcd &omega = ex.omega(k, b);
            const double sigma2 = pr.noise.user_noise(k, b);
            const double sc = 1.0 / std::sqrt(sigma2);

            RowVectorXcd d(lm); // omega W^H
            VectorXd ris_noise(lm);
            for (int l = 0; l < ch.num_ris(); ++l)
            {
                d.segment(l * m, m) = omega * ch.w(l, k, b).adjoint();
                ris_noise.segment(l * m, m).setConstant(pr.noise.ris[at(l)]);
            }
            // U chi and the quantization diagonal
            MatrixXcd uchi(lm, q_n * nt);
            VectorXd sigma_n(q_n * nt);
            for (int q = 0; q < q_n; ++q)
            {
                MatrixXcd gq(lm, nt);
                for (int l = 0; l < ch.num_ris(); ++l)
                    gq.middleRows(l * m, m) = ch.g(q, l, b);
                uchi.middleCols(q * nt, nt) = d.transpose().asDiagonal() * gq;
                VectorXd cov = VectorXd::Zero(nt);
                for (int kp = 0; kp < k_n; ++kp)
                    cov += ex.f(q, kp, b).cwiseAbs2();
                sigma_n.segment(q * nt, nt) = pr.dac.alpha[at(q)] * cov;
            }
            const MatrixXcd u_plain = uchi;
            for (int q = 0; q < q_n; ++q)
                uchi.middleCols(q * nt, nt) *= pr.dac.lambda[at(q)];

            // y_k' = c_k'^H phi = conj(omega J^H chi f_k')
            std::vector<RowVectorXcd> ch_rows(at(k_n));
            for (int kp = 0; kp < k_n; ++kp)
            {
                VectorXcd f(q_n * nt);
                for (int q = 0; q < q_n; ++q)
                    f.segment(q * nt, nt) = ex.f(q, kp, b);
                ch_rows[at(kp)] = sc * (uchi * f).adjoint();
            }
            const std::complex<double> ybar = (ch_rows[at(k)] * ex.phi).value();
            const Expansion e = expansion_terms(ch, ex, pr.noise, pr.dac, k, b);
            const double psibar = e.psi / sigma2;
            const double c0 = omega.squaredNorm();
            const double c2 = std::norm(ybar) / (psibar * psibar);
            sinr_bar[at(k * b_n + b)] = std::norm(ybar) / psibar;

            prog.add_block(sca_block(
                lay.varsigma + k * b_n + b, c2, c0,
                [&](AffineBuilder &bld, int r0) {
                    add_linear(bld, r0, -1, all, (2.0 / psibar) * std::conj(ybar) * ch_rows[at(k)]);
                },
                [&](AffineBuilder &bld, double s) {
                    for (int kp = 0; kp < k_n; ++kp)
                    {
                        if (kp == k)
                            continue;
                        const int r_re = bld.add_row(), r_im = bld.add_row();
                        add_linear(bld, r_re, r_im, all, s * ch_rows[at(kp)]);
                    }
                    for (int j = 0; j < q_n * nt; ++j)
                    {
                        if (sigma_n(j) == 0.0)
                            continue;
                        const int r_re = bld.add_row(), r_im = bld.add_row();
                        add_linear(bld, r_re, r_im, all, (s * sc * std::sqrt(sigma_n(j))) * u_plain.col(j).adjoint());
                    }
                    for (int i = 0; i < lm; ++i)
                        add_modulus(bld, i, s * sc * std::sqrt(ris_noise(i)) * std::abs(d(i)));
                }));
        }

    for (int i = 0; i < lm; ++i)
    {
        AffineBuilder bld;
        bld.add_row(pr.config.beta_max);
        add_modulus(bld, i, 1.0);
        prog.add_block(bld.finish(Cone::soc));
    }

    const VectorXd weights = ris_power_weights(ch, ex, pr.dac, pr.noise);
    if (pr.ris_power_constraint && active)
        for (int l = 0; l < ch.num_ris(); ++l)
        {
            AffineBuilder bld;
            bld.add_row(std::sqrt(pr.config.eta_r * pr.config.p_ris_max[at(l)]));
            for (int i = l * m; i < (l + 1) * m; ++i)
                add_modulus(bld, i, std::sqrt(weights(i)));
            prog.add_block(bld.finish(Cone::soc));
        }

    double p_value = 0.0;
    if (aux.has_p)
    {
        AffineBuilder bld;
        const int r0 = bld.add_row();
        bld.add(r0, lay.p, 1.0);
        bld.add_row(1.0);
        for (int i = 0; i < lm; ++i)
            add_modulus(bld, i, std::sqrt(weights(i) / pr.config.eta_r));
        prog.add_block(bld.finish(Cone::rsoc));
        for (int i = 0; i < lm; ++i)
            p_value += weights(i) * std::norm(ex.phi(i)) / pr.config.eta_r;
    }

    sp.hint.assign(at(prog.n), 0.0);
    for (int i = 0; i < lm; ++i)
    {
        sp.hint[at(2 * i)] = ex.phi(i).real();
        sp.hint[at(2 * i + 1)] = ex.phi(i).imag();
    }
    fill_aux_hint(sp.hint, lay, sinr_bar, pr, p_value);
    return sp;
}

namespace {

struct Score
{
    double g = 0.0;
    double rate_violation = 0.0; // max(0, R_th - min rate)
    bool power_ok = true;
};

Score score(const Problem &pr, const DesignVariables &v)
{
    const ChannelSet &ch = *pr.channels;
    const auto sinr = all_sinr(ch, v, pr.noise, pr.dac);
    const double se = spectral_efficiency(sinr);
    const PowerBreakdown pw = power_breakdown(ch, v, pr.config, pr.dac, pr.noise);
    Score s;
    s.g = pr.max_min ? *std::min_element(sinr.begin(), sinr.end())
                     : transformed_objective(pr.config.kappa, v.tau, se, pw.p_sys, pr.p_tot);
    if (pr.rate_threshold > 0.0)
        for (double x : sinr)
            s.rate_violation = std::max(s.rate_violation, pr.rate_threshold - std::log2(1.0 + x));
    constexpr double slack = 1e-9;
    for (int q = 0; q < ch.num_aps(); ++q)
        if (power_ap(v, q, 1.0) > pr.config.p_ap_max[at(q)] * (1.0 + slack))
            s.power_ok = false;
    if (pr.ris_power_constraint && pr.ris_in_power())
        for (int l = 0; l < ch.num_ris(); ++l)
            if (pw.p_ris[at(l)] > pr.config.p_ris_max[at(l)] * (1.0 + slack))
                s.power_ok = false;
    for (Eigen::Index i = 0; i < v.phi.size(); ++i)
        if (std::abs(v.phi(i)) > pr.config.beta_max * (1.0 + slack))
            s.power_ok = false;
    return s;
}

constexpr double kRateTol = 1e-9;

// Feasibility first, then the transformed objective.
bool better(const Score &cand, const Score &cur)
{
    if (!cand.power_ok)
        return false;
    if (cur.rate_violation > kRateTol)
        return cand.rate_violation < cur.rate_violation;
    return cand.rate_violation <= kRateTol && cand.g >= cur.g;
}

template <class Build, class Extract>
BlockResult sca_loop(const Problem &pr, const DesignVariables &start, const SolverOptions &opts, Build build,
                     Extract extract)
{
    BlockResult res;
    res.vars = start;
    Score cur = score(pr, res.vars);
    for (int it = 0; it < opts.max_inner; ++it)
    {
        Subproblem sp = build(pr, res.vars);
        const conic::ConicSolution sol = conic::solve(sp.program, opts.backend, sp.hint);
        res.last_status = sol.status;
        if (sol.status == conic::SolveStatus::infeasible && it == 0)
            res.infeasible = true;
        if (sol.status != conic::SolveStatus::optimal && sol.status != conic::SolveStatus::max_iter)
            break;
        DesignVariables cand = res.vars;
        extract(cand, sol.x, sp.layout);
        const Score next = score(pr, cand);
        if (!better(next, cur))
            break;
        const double delta = next.g - cur.g;
        const bool restoring = cur.rate_violation > kRateTol;
        res.vars = std::move(cand);
        cur = next;
        ++res.iterations;
        if (pr.max_min && cur.g >= pr.restore_target)
            break;
        const double eps = pr.max_min ? 1e-4 * std::abs(cur.g) : opts.eps_inner;
        if (!restoring && std::abs(delta) < eps)
            break;
    }
    return res;
}

} // namespace

BlockResult solve_precoders(const Problem &pr, const DesignVariables &start, const SolverOptions &opts)
{
    const ChannelSet &ch = *pr.channels;
    return sca_loop(pr, start, opts, build_precoder_subproblem,
                    [&](DesignVariables &v, const VectorXd &x, const SubproblemLayout &) {
                        for (int q = 0; q < ch.num_aps(); ++q)
                            for (int k = 0; k < ch.num_users(); ++k)
                                for (int b = 0; b < ch.subcarriers(); ++b)
                                    for (int i = 0; i < ch.nt(); ++i)
                                    {
                                        const int idx = f_index(ch, q, k, b, i);
                                        v.f(q, k, b)(i) = {x(2 * idx), x(2 * idx + 1)};
                                    }
                    });
}

BlockResult solve_ris(const Problem &pr, const DesignVariables &start, const SolverOptions &opts)
{
    return sca_loop(pr, start, opts, build_ris_subproblem,
                    [](DesignVariables &v, const VectorXd &x, const SubproblemLayout &lay) {
                        for (int i = 0; i < lay.z.count; ++i)
                            v.phi(i) = {x(lay.z.re(i)), x(lay.z.im(i))};
                    });
}

Eigen::VectorXcd random_phases(int count, double amplitude, std::uint64_t seed)
{
    Rng rng(seed, Stream::baseline);
    VectorXcd phi(count);
    for (int i = 0; i < count; ++i)
        phi(i) = std::polar(amplitude, rng.uniform(0.0, 2.0 * kPi));
    return phi;
}

DesignVariables initialize(const ChannelSet &ch, const SystemConfig &config, std::uint64_t seed,
                           const std::optional<Eigen::VectorXcd> &fixed_phi, bool ris_power_constraint)
{
    const int q_n = ch.num_aps(), k_n = ch.num_users(), b_n = ch.subcarriers(), nt = ch.nt(), m = ch.m();
    const int lm = ch.num_ris() * m;
    const DacModel dac = DacModel::from_bits(config.dac_bits);
    const NoiseModel noise = noise_model(config);
    const bool constrain = ris_power_constraint && config.ris_mode == RisMode::active;

    DesignVariables v = DesignVariables::zeros(ch);
    VectorXcd unit(lm);
    if (fixed_phi)
    {
        if (fixed_phi->size() != lm)
            throw std::invalid_argument("initialize: fixed phi has wrong length");
        v.phi = *fixed_phi;
    }
    else
    {
        Rng rng(seed, Stream::init);
        for (int i = 0; i < lm; ++i)
            unit(i) = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
        v.phi = config.beta_max * unit;
    }

    // uniform precoders at 50% of every AP budget
    for (int q = 0; q < q_n; ++q)
    {
        const double share = std::sqrt(0.5 * config.p_ap_max[at(q)] / (k_n * b_n * nt));
        for (int k = 0; k < k_n; ++k)
            for (int b = 0; b < b_n; ++b)
                v.f(q, k, b) = VectorXcd::Constant(nt, share);
    }
    v.filters = mmse_filters(ch, v, dac, noise);

    const auto jh = composite_channels(ch, v.phi);
    for (int q = 0; q < q_n; ++q)
    {
        const double norm = std::sqrt(0.5 * config.p_ap_max[at(q)] / (k_n * b_n));
        for (int k = 0; k < k_n; ++k)
            for (int b = 0; b < b_n; ++b)
            {
                VectorXcd f = jh[at((q * k_n + k) * b_n + b)].adjoint() * v.omega(k, b).adjoint();
                const double n = f.norm();
                if (n > 0.0 && std::isfinite(n))
                    v.f(q, k, b) = f * (norm / n);
                else
                    v.f(q, k, b) = VectorXcd::Constant(nt, norm / std::sqrt(double(nt)));
            }
    }

    if (!fixed_phi)
    {
        double amp = config.beta_max;
        if (constrain)
        {
            DesignVariables probe = v;
            probe.phi = unit;
            for (int l = 0; l < ch.num_ris(); ++l)
            {
                const double p1 = power_ris(ch, probe, dac, noise, l, config.eta_r);
                if (p1 > 0.0)
                    amp = std::min(amp, std::sqrt(config.p_ris_max[at(l)] / p1));
            }
        }
        v.phi = (0.999 * amp) * unit;
    }
    else if (constrain)
    {
        double scale = 1.0;
        for (int l = 0; l < ch.num_ris(); ++l)
        {
            const double thermal = v.phi.segment(l * m, m).squaredNorm() * noise.ris[at(l)];
            const double load = power_ris(ch, v, dac, noise, l, config.eta_r) * config.eta_r - thermal;
            const double room = config.eta_r * config.p_ris_max[at(l)] - thermal;
            if (load > 0.0)
                scale = std::min(scale, std::sqrt(std::max(room, 0.0) / load));
        }
        if (scale < 1.0)
            for (auto &f : v.precoders)
                f *= 0.999 * scale;
    }
    v.filters = mmse_filters(ch, v, dac, noise);
    const Metrics mt = evaluate(ch, v, config);
    v.tau = update_tau(mt.se, mt.power.p_sys);
    return v;
}

namespace {

double min_rate(const ChannelSet &ch, const DesignVariables &v, const Problem &pr)
{
    const auto sinr = all_sinr(ch, v, pr.noise, pr.dac);
    return std::log2(1.0 + *std::min_element(sinr.begin(), sinr.end()));
}

// Max-min SINR rounds (MMSE, F, phi) until every rate reaches `level` or a
// round stops improving. Returns the number of accepted subproblem solves.
int restore_rates(const Problem &base, DesignVariables &cur, const SolverOptions &opts, double level,
                  bool optimize_phi)
{
    Problem pr = base;
    pr.max_min = true;
    pr.rate_threshold = 0.0;
    pr.restore_target = std::pow(2.0, level) - 1.0;
    const ChannelSet &ch = *pr.channels;
    int accepted = 0;
    double prev = min_rate(ch, cur, pr);
    for (int round = 0; round < opts.max_outer && prev < level; ++round)
    {
        DesignVariables cand = cur;
        cand.filters = mmse_filters(ch, cur, pr.dac, pr.noise);
        if (min_rate(ch, cand, pr) >= prev)
            cur = std::move(cand);
        BlockResult fr = solve_precoders(pr, cur, opts);
        accepted += fr.iterations;
        cur = std::move(fr.vars);
        if (optimize_phi && min_rate(ch, cur, pr) < level)
        {
            BlockResult rr = solve_ris(pr, cur, opts);
            accepted += rr.iterations;
            cur = std::move(rr.vars);
        }
        const double now = min_rate(ch, cur, pr);
        if (now - prev <= 1e-3 * std::max(std::abs(prev), 1e-12))
            break;
        prev = now;
    }
    return accepted;
}

} // namespace

OptimizeResult optimize(const ChannelSet &channels, const SystemConfig &config, const SolverOptions &opts,
                        std::uint64_t seed, const std::optional<Eigen::VectorXcd> &fixed_phi)
{
    opts.validate();
    config.validate();
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    Problem pr(channels, config);
    pr.ris_power_constraint = opts.ris_power_constraint;
    if (!opts.enforce_rate)
        pr.rate_threshold = 0.0;

    OptimizeResult out;
    DesignVariables cur = initialize(channels, config, seed, fixed_phi, opts.ris_power_constraint);
    const bool optimize_phi = opts.optimize_phi && !fixed_phi;

    auto true_f = [&](const DesignVariables &v) { return evaluate(channels, v, pr.config).objective; };
    auto rate_violation = [&](const DesignVariables &v) {
        if (pr.rate_threshold <= 0.0)
            return 0.0;
        double viol = 0.0;
        for (double s : all_sinr(channels, v, pr.noise, pr.dac))
            viol = std::max(viol, pr.rate_threshold - std::log2(1.0 + s));
        return viol;
    };
    // Keeps `cand` if it restores feasibility or does not lower f.
    auto accept = [&](const DesignVariables &cand, const DesignVariables &base) {
        const double vb = rate_violation(base), vc = rate_violation(cand);
        if (vb > kRateTol)
            return vc < vb;
        return vc <= kRateTol && true_f(cand) >= true_f(base);
    };

    double f_prev = true_f(cur);
    out.trace.initial_objective = f_prev;

    for (int it = 1; it <= opts.max_outer; ++it)
    {
        cur.filters = mmse_filters(channels, cur, pr.dac, pr.noise);
        {
            const Metrics mt = evaluate(channels, cur, pr.config);
            cur.tau = update_tau(mt.se, mt.power.p_sys);
        }

        BlockResult fr = solve_precoders(pr, cur, opts);
        if (it == 1 && fr.infeasible && pr.rate_threshold > 0.0)
        {
            const double target = pr.rate_threshold;
            bool reached = false;
            if (opts.rate_continuation)
            {
                reached = true;
                for (double scale : {0.0, 0.25, 0.5, 0.75, 1.0})
                {
                    // a little above the final level so the next subproblem has an interior
                    const double level = scale == 1.0 ? target * 1.01 : scale * target;
                    fr.iterations += restore_rates(pr, cur, opts, level, optimize_phi);
                    if (min_rate(channels, cur, pr) < scale * target)
                    {
                        reached = false;
                        break;
                    }
                }
            }
            if (!reached)
            {
                out.rate_infeasible = true;
                pr.rate_threshold = 0.0;
            }
            BlockResult r = solve_precoders(pr, cur, opts);
            fr.iterations += r.iterations;
            if (accept(r.vars, cur))
                cur = std::move(r.vars);
        }
        else if (accept(fr.vars, cur))
            cur = std::move(fr.vars);

        int inner_phi = 0;
        if (optimize_phi)
        {
            BlockResult rr = solve_ris(pr, cur, opts);
            inner_phi = rr.iterations;
            if (accept(rr.vars, cur))
                cur = std::move(rr.vars);
        }

        const Metrics mt = evaluate(channels, cur, pr.config);
        const Residuals res = feasibility_residuals(channels, cur, pr.config);
        TraceRow row;
        row.iter = it;
        row.objective = mt.objective;
        row.se = mt.se;
        row.ee = mt.ee;
        row.tau = cur.tau;
        row.max_residual = res.max_relative(pr.config);
        row.inner_f = fr.iterations;
        row.inner_phi = inner_phi;
        row.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        out.trace.rows.push_back(row);
        out.outer_iterations = it;

        const double f_new = mt.objective;
        const bool stable = std::abs(f_new - f_prev) < opts.eps_outer * std::max(std::abs(f_prev), 1e-300);
        f_prev = f_new;
        if (it > 1 && stable)
            break;
    }

    // filters and tau matched to the returned F and phi; MMSE only raises SINRs
    cur.filters = mmse_filters(channels, cur, pr.dac, pr.noise);
    out.metrics = evaluate(channels, cur, pr.config);
    cur.tau = update_tau(out.metrics.se, out.metrics.power.p_sys);
    out.vars = cur;
    SystemConfig check = pr.config;
    check.rate_threshold = pr.rate_threshold;
    out.residuals = feasibility_residuals(channels, cur, check);
    return out;
}

} // namespace thzris
