#include "doctest.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "thzris/config_io.hpp"
#include "thzris/harness.hpp"

using namespace thzris;

TEST_CASE("methods and axes")
{
    CHECK(parse_method("ARIS") == Method::aris);
    CHECK(parse_method("PRIS") == Method::pris);
    CHECK(parse_method("RND_ARIS") == Method::rnd_aris);
    CHECK_THROWS_AS(parse_method("DRL"), std::invalid_argument);
    CHECK(parse_methods("ARIS,PRIS").size() == 2);
    CHECK_THROWS_AS(parse_methods(","), std::invalid_argument);
    for (Axis a : {Axis::p_a_max, Axis::kappa, Axis::dac_bits, Axis::m, Axis::q, Axis::k, Axis::d_u})
        CHECK(parse_axis(axis_name(a)) == a);
    CHECK_THROWS_AS(parse_axis("bandwidth"), std::invalid_argument);
}

TEST_CASE("method overrides")
{
    const SystemConfig c = desk_config();
    const RunPlan aris = apply_method(c, Method::aris, 1);
    CHECK(dump_config(aris.config) == dump_config(c));
    CHECK_FALSE(aris.fixed_phi);

    const RunPlan pris = apply_method(c, Method::pris, 1);
    CHECK(pris.config.ris_mode == RisMode::passive);
    CHECK(pris.config.beta_max == 1.0);
    CHECK(pris.config.p_ris_dc == 0.0);
    CHECK(pris.config.rate_threshold == 0.0);
    CHECK_FALSE(pris.options.ris_power_constraint);

    const RunPlan rnd = apply_method(c, Method::rnd_aris, 1);
    REQUIRE(rnd.fixed_phi);
    CHECK(rnd.fixed_phi->size() == c.num_ris * c.m());
    CHECK_FALSE(rnd.options.optimize_phi);
    CHECK(rnd.options.ris_power_constraint);
    CHECK(rnd.config.rate_threshold == 0.0);
}

TEST_CASE("axis application")
{
    const SystemConfig c = desk_config();
    CHECK(with_axis(c, Axis::p_a_max, 40.0).p_ap_max[0] == doctest::Approx(10.0));
    CHECK(with_axis(c, Axis::kappa, 0.25).kappa == 0.25);
    CHECK(with_axis(c, Axis::dac_bits, 4).dac_bits == std::vector<int>(static_cast<size_t>(c.num_aps), 4));
    const SystemConfig m32 = with_axis(c, Axis::m, 32);
    CHECK(m32.m() == 32);
    CHECK(m32.ris_ny >= m32.ris_nz);
    const SystemConfig q4 = with_axis(c, Axis::q, 4);
    CHECK(q4.num_aps == 4);
    CHECK(q4.p_ap_max.size() == 4);
    CHECK(with_axis(c, Axis::k, 3).num_users == 3);
    CHECK(with_axis(c, Axis::d_u, 7.5).d_u == 7.5);
    CHECK_THROWS_AS(with_axis(c, Axis::q, 1), std::invalid_argument);
    CHECK_THROWS_AS(with_axis(c, Axis::m, 2.5), std::invalid_argument);
    CHECK_THROWS_AS(with_axis(c, Axis::kappa, 1.5), std::invalid_argument);
}

TEST_CASE("trial rows")
{
    const SystemConfig c = desk_config();
    const TrialOutput a = run_trial(c, Method::rnd_aris, 11);
    const TrialOutput b = run_trial(c, Method::rnd_aris, 11);
    CHECK(csv_line_numeric(a.row) == csv_line_numeric(b.row));
    CHECK(a.row.se == doctest::Approx(a.result.metrics.se).epsilon(1e-15));
    CHECK(a.row.feasible);
    CHECK(a.row.max_residual <= 1e-6);
    CHECK(std::string(csv_header()) ==
          "axis,value,method,seed,se_bps_hz,ee_bps_hz_w,objective,p_sys_w,max_residual,outer_iters,wall_ms,feasible");
    // twelve columns
    const std::string line = csv_line(a.row);
    CHECK(std::count(line.begin(), line.end(), ',') == 11);
}

TEST_CASE("sweep is ordered and thread-count independent")
{
    SweepSpec spec;
    spec.axis = Axis::p_a_max;
    spec.values = {27.0, 30.0};
    spec.methods = {Method::rnd_aris};
    spec.trials = 2;
    spec.base = desk_config();
    spec.base_seed = 40;

    spec.threads = 1;
    std::vector<std::string> seen;
    const SweepResult one = run_sweep(spec, [&](const ResultRow &r) { seen.push_back(csv_line_numeric(r)); });
    spec.threads = 3;
    const SweepResult many = run_sweep(spec);

    REQUIRE(one.rows.size() == 4);
    REQUIRE(many.rows.size() == 4);
    for (size_t i = 0; i < 4; ++i)
    {
        CHECK(csv_line_numeric(one.rows[i]) == csv_line_numeric(many.rows[i]));
        CHECK(seen[i] == csv_line_numeric(one.rows[i]));
    }
    CHECK(one.rows[0].value == 27.0);
    CHECK(one.rows[0].seed == 40);
    CHECK(one.rows[1].seed == 41);
    CHECK(one.rows[2].seed == 40); // common random numbers across axis values

    REQUIRE(one.means.size() == 2);
    CHECK(one.means[0].trials == 2);
    CHECK(one.means[0].mean_se == doctest::Approx((one.rows[0].se + one.rows[1].se) / 2));
    CHECK(one.means[1].mean_ee == doctest::Approx((one.rows[2].ee + one.rows[3].ee) / 2));

    SweepSpec bad = spec;
    bad.values.clear();
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
    bad = spec;
    bad.trials = 0;
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
}

TEST_CASE("failed trials are recorded")
{
    ResultRow ok;
    ok.value = 1.0;
    ok.se = 2.0;
    ResultRow broken;
    broken.value = 1.0;
    broken.error = "boom";
    broken.se = 100.0;
    const auto agg = aggregate({ok, broken});
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].trials == 1);
    CHECK(agg[0].mean_se == 2.0);
}
