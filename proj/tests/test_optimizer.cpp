#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "thzris/harness.hpp"
#include "thzris/optimizer.hpp"
#include "thzris/validation.hpp"

using namespace thzris;

namespace {

struct Desk
{
    SystemConfig config = desk_config();
    ChannelSet channels;

    explicit Desk(std::uint64_t seed) : channels(generate_channels(config, place_nodes(config, seed), seed)) {}
};

} // namespace

TEST_CASE("tau update")
{
    CHECK(update_tau(4.0, 2.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(update_tau(1.0, 0.0), std::logic_error);
    const CheckResult r = check_tau_argmax(5, 200);
    INFO(r.detail);
    CHECK(r.passed);
    // the transformed objective at the optimal tau equals kappa EE + (1 - kappa) SE / P_tot
    const double se = 3.0, p = 2.0, ptot = 5.0, kappa = 0.3;
    CHECK(transformed_objective(kappa, update_tau(se, p), se, p, ptot) ==
          doctest::Approx(kappa * se / p + (1 - kappa) * se / ptot).epsilon(1e-14));
}

TEST_CASE("surrogates are tight lower bounds")
{
    const CheckResult pf = check_precoder_surrogate(77, 100);
    INFO(pf.detail);
    CHECK(pf.passed);
    const CheckResult pr = check_ris_surrogate(78, 100);
    INFO(pr.detail);
    CHECK(pr.passed);

    Rng rng(9, Stream::validate);
    RandomInstance in = random_instance(rng);
    DesignVariables zero = in.vars;
    zero.phi.setZero();
    // zero expansion point on phi: psi stays positive through receiver noise, surrogate is identically zero
    CHECK(ris_surrogate(in.channels, zero, in.vars, in.noise, in.dac, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("mmse filters dominate random filters")
{
    const CheckResult r = check_mmse_dominance(31, 10, 100);
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("initial point")
{
    Desk d(4);
    const DesignVariables v = initialize(d.channels, d.config, 4);
    const DesignVariables again = initialize(d.channels, d.config, 4);
    CHECK(v.phi == again.phi);
    CHECK(v.precoders == again.precoders);
    const Eigen::VectorXd amp = v.phi.cwiseAbs();
    CHECK(amp.maxCoeff() - amp.minCoeff() < 1e-12 * amp.maxCoeff());
    CHECK(amp.maxCoeff() <= d.config.beta_max);
    SystemConfig no_rate = d.config;
    no_rate.rate_threshold = 0.0;
    const Residuals r = feasibility_residuals(d.channels, v, no_rate);
    CHECK(r.max_relative(no_rate) == 0.0);
    const DacModel dac = DacModel::from_bits(d.config.dac_bits);
    const NoiseModel nm = noise_model(d.config);
    for (int l = 0; l < d.config.num_ris; ++l)
        CHECK(power_ris(d.channels, v, dac, nm, l, d.config.eta_r) < d.config.p_ris_max[static_cast<size_t>(l)]);
    for (int q = 0; q < d.config.num_aps; ++q)
        CHECK(power_ap(v, q, 1.0) == doctest::Approx(0.5 * d.config.p_ap_max[static_cast<size_t>(q)]).epsilon(1e-12));
}

TEST_CASE("subproblems are well formed")
{
    Desk d(2);
    const Problem pr(d.channels, d.config);
    DesignVariables v = initialize(d.channels, d.config, 2);
    const Subproblem sf = build_precoder_subproblem(pr, v);
    CHECK_NOTHROW(sf.program.validate());
    CHECK(sf.layout.z.count == d.config.num_aps * d.config.num_users * d.config.subcarriers * d.config.nt());
    const Subproblem sp = build_ris_subproblem(pr, v);
    CHECK_NOTHROW(sp.program.validate());
    CHECK(sp.layout.z.count == d.config.num_ris * d.config.m());
    CHECK(pr.rate_floor() == doctest::Approx(0.0717734625).epsilon(1e-9));

    // rate-free precoder and phi steps never leave the feasible set
    Problem free_pr(d.channels, d.config);
    free_pr.rate_threshold = 0.0;
    SolverOptions opts;
    const BlockResult bf = solve_precoders(free_pr, v, opts);
    const BlockResult br = solve_ris(free_pr, bf.vars, opts);
    SystemConfig no_rate = d.config;
    no_rate.rate_threshold = 0.0;
    CHECK(feasibility_residuals(d.channels, br.vars, no_rate).max_relative(no_rate) <= 1e-6);
    CHECK(br.vars.phi.cwiseAbs().maxCoeff() <= d.config.beta_max + 1e-6);
    const double f0 = evaluate(d.channels, v, no_rate).objective;
    const double f2 = evaluate(d.channels, br.vars, no_rate).objective;
    CHECK(f2 >= f0 * (1.0 - 1e-9));
}

TEST_CASE("optimize: monotone trace, feasible end point")
{
    Desk d(1);
    const OptimizeResult r = optimize(d.channels, d.config, SolverOptions{}, 1);
    REQUIRE_FALSE(r.trace.rows.empty());
    CHECK(r.outer_iterations <= 50);
    for (size_t i = 1; i < r.trace.rows.size(); ++i)
        CHECK(r.trace.rows[i].objective >= r.trace.rows[i - 1].objective * (1.0 - 1e-6));
    CHECK_FALSE(r.rate_infeasible);
    CHECK(r.residuals.max_relative(d.config) <= 1e-6);
    const Metrics m = evaluate(d.channels, r.vars, d.config);
    CHECK(m.se == doctest::Approx(r.metrics.se).epsilon(1e-14));
    CHECK(r.vars.tau == doctest::Approx(update_tau(m.se, m.power.p_sys)).epsilon(1e-14));

    std::ostringstream os;
    r.trace.write_csv(os);
    CHECK(os.str().rfind("iter,objective,se,ee,tau,max_residual,inner_f,inner_phi,wall_ms\n", 0) == 0);
}

TEST_CASE("fixed phases stay fixed")
{
    Desk d(3);
    const Eigen::VectorXcd phi = random_phases(d.config.num_ris * d.config.m(), d.config.beta_max, 3);
    CHECK(phi.cwiseAbs().minCoeff() == doctest::Approx(d.config.beta_max));
    SolverOptions opts;
    opts.optimize_phi = false;
    opts.enforce_rate = false;
    const OptimizeResult r = optimize(d.channels, d.config, opts, 3, phi);
    CHECK(r.vars.phi == phi);
    for (const auto &row : r.trace.rows)
        CHECK(row.inner_phi == 0);
    CHECK(r.residuals.max_relative(d.config) <= 1e-6);
}

TEST_CASE("solver options validation")
{
    SolverOptions o;
    o.max_outer = 0;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
    SolverOptions e;
    e.eps_inner = -1.0;
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);
}
