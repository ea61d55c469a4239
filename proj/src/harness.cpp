#include "thzris/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "thzris/channel.hpp"
#include "thzris/config_io.hpp"
#include "thzris/metrics.hpp"

namespace thzris {

const char *method_name(Method method)
{
    switch (method)
    {
    case Method::aris:
        return "ARIS";
    case Method::pris:
        return "PRIS";
    case Method::rnd_aris:
        return "RND_ARIS";
    }
    return "?";
}

Method parse_method(const std::string &name)
{
    if (name == "ARIS" || name == "aris")
        return Method::aris;
    if (name == "PRIS" || name == "pris")
        return Method::pris;
    if (name == "RND_ARIS" || name == "rnd_aris" || name == "RND-ARIS")
        return Method::rnd_aris;
    throw std::invalid_argument("unknown method '" + name + "' (expected ARIS, PRIS or RND_ARIS)");
}

std::vector<Method> parse_methods(const std::string &comma_list)
{
    std::vector<Method> out;
    std::stringstream ss(comma_list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(parse_method(item));
    if (out.empty())
        throw std::invalid_argument("method list is empty");
    return out;
}

RunPlan apply_method(const SystemConfig &config, Method method, std::uint64_t seed, const SolverOptions &options)
{
    RunPlan plan{config, options, std::nullopt};
    switch (method)
    {
    case Method::aris:
        break;
    case Method::pris:
        plan.config.ris_mode = RisMode::passive;
        plan.config.p_ris_dc = 0.0;
        plan.config.beta_max = 1.0;
        plan.config.rate_threshold = 0.0;
        plan.options.ris_power_constraint = false;
        plan.options.enforce_rate = false;
        break;
    case Method::rnd_aris:
        plan.config.rate_threshold = 0.0;
        plan.options.enforce_rate = false;
        plan.options.optimize_phi = false;
        plan.fixed_phi = random_phases(config.num_ris * config.m(), config.beta_max, seed);
        break;
    }
    return plan;
}

const char *csv_header()
{
    return "axis,value,method,seed,se_bps_hz,ee_bps_hz_w,objective,p_sys_w,max_residual,outer_iters,wall_ms,feasible";
}

namespace {

std::string num(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

std::string line(const ResultRow &r, bool with_wall)
{
    std::string s = r.axis + "," + num(r.value) + "," + method_name(r.method) + "," + std::to_string(r.seed) + "," +
                     num(r.se) + "," + num(r.ee) + "," + num(r.objective) + "," + num(r.p_sys) + "," +
                     num(r.max_residual) + "," + std::to_string(r.outer_iters) + ",";
    if (with_wall)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
        s += buf;
    }
    s += ",";
    s += r.feasible ? "true" : "false";
    return s;
}

} // namespace

std::string csv_line(const ResultRow &row) { return line(row, true); }

std::string csv_line_numeric(const ResultRow &row) { return line(row, false); }

TrialOutput run_trial(const SystemConfig &config, Method method, std::uint64_t seed, const SolverOptions &options)
{
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    RunPlan plan = apply_method(config, method, seed, options);
    const Geometry geometry = place_nodes(plan.config, seed);
    const ChannelSet channels = generate_channels(plan.config, geometry, seed);

    TrialOutput out;
    out.result = optimize(channels, plan.config, plan.options, seed, plan.fixed_phi);
    out.trace = out.result.trace;

    // never trust solver-side numbers: recompute from the variables
    const Metrics m = evaluate(channels, out.result.vars, plan.config);
    const Residuals res = feasibility_residuals(channels, out.result.vars, plan.config);

    ResultRow &row = out.row;
    row.method = method;
    row.seed = seed;
    row.se = m.se;
    row.ee = m.ee;
    row.objective = m.objective;
    row.p_sys = m.power.p_sys;
    row.max_residual = res.max_relative(plan.config);
    row.outer_iters = out.result.outer_iterations;
    row.feasible = !out.result.rate_infeasible && row.max_residual <= 1e-6;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

const char *axis_name(Axis axis)
{
    switch (axis)
    {
    case Axis::p_a_max:
        return "P_A_max";
    case Axis::kappa:
        return "kappa";
    case Axis::dac_bits:
        return "dac_bits";
    case Axis::m:
        return "M";
    case Axis::q:
        return "Q";
    case Axis::k:
        return "K";
    case Axis::d_u:
        return "d_U";
    }
    return "?";
}

Axis parse_axis(const std::string &name)
{
    for (Axis a : {Axis::p_a_max, Axis::kappa, Axis::dac_bits, Axis::m, Axis::q, Axis::k, Axis::d_u})
        if (name == axis_name(a))
            return a;
    if (name == "pmax" || name == "p_a_max")
        return Axis::p_a_max;
    if (name == "m")
        return Axis::m;
    if (name == "q")
        return Axis::q;
    if (name == "k")
        return Axis::k;
    if (name == "d_u")
        return Axis::d_u;
    throw std::invalid_argument("unknown axis '" + name + "' (expected P_A_max, kappa, dac_bits, M, Q, K or d_U)");
}

namespace {

int integral(double value, const char *what)
{
    if (value != std::floor(value) || value < 1.0 || value > 1e6)
        throw std::invalid_argument(std::string(what) + " axis values must be positive integers");
    return static_cast<int>(value);
}

} // namespace

SystemConfig with_axis(const SystemConfig &config, Axis axis, double value)
{
    SystemConfig c = config;
    switch (axis)
    {
    case Axis::p_a_max:
        c.p_ap_max.assign(static_cast<size_t>(c.num_aps), dbm_to_watt(value));
        break;
    case Axis::kappa:
        c.kappa = value;
        break;
    case Axis::dac_bits:
        c.dac_bits.assign(static_cast<size_t>(c.num_aps), integral(value, "dac_bits"));
        break;
    case Axis::m: {
        const auto [ny, nz] = square_factor(integral(value, "M"));
        c.ris_ny = ny;
        c.ris_nz = nz;
        break;
    }
    case Axis::q:
        c.num_aps = integral(value, "Q");
        c.p_ap_max.assign(static_cast<size_t>(c.num_aps), config.p_ap_max.front());
        c.dac_bits.assign(static_cast<size_t>(c.num_aps), config.dac_bits.front());
        break;
    case Axis::k:
        c.num_users = integral(value, "K");
        break;
    case Axis::d_u:
        c.d_u = value;
        break;
    }
    c.validate();
    return c;
}

void SweepSpec::validate() const
{
    if (values.empty())
        throw std::invalid_argument("sweep needs at least one axis value");
    if (methods.empty())
        throw std::invalid_argument("sweep needs at least one method");
    if (trials < 1)
        throw std::invalid_argument("trials must be >= 1");
    if (threads < 0)
        throw std::invalid_argument("threads must be >= 0");
    for (double v : values)
        with_axis(base, axis, v);
    options.validate();
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) { return base_seed + static_cast<std::uint64_t>(trial); }

std::vector<Aggregate> aggregate(const std::vector<ResultRow> &rows)
{
    std::vector<Aggregate> out;
    std::map<std::pair<double, int>, size_t> slot;
    for (const auto &r : rows)
    {
        const auto key = std::make_pair(r.value, static_cast<int>(r.method));
        auto it = slot.find(key);
        if (it == slot.end())
        {
            it = slot.emplace(key, out.size()).first;
            Aggregate a;
            a.value = r.value;
            a.method = r.method;
            out.push_back(a);
        }
        Aggregate &a = out[it->second];
        if (!r.error.empty())
            continue;
        ++a.trials;
        a.feasible += r.feasible ? 1 : 0;
        a.mean_se += r.se;
        a.mean_ee += r.ee;
        a.mean_objective += r.objective;
        a.mean_p_sys += r.p_sys;
    }
    for (auto &a : out)
        if (a.trials > 0)
        {
            a.mean_se /= a.trials;
            a.mean_ee /= a.trials;
            a.mean_objective /= a.trials;
            a.mean_p_sys /= a.trials;
        }
    return out;
}

SweepResult run_sweep(const SweepSpec &spec, const std::function<void(const ResultRow &)> &on_row)
{
    spec.validate();
    struct Job
    {
        double value;
        Method method;
        int trial;
    };
    std::vector<Job> jobs;
    for (double v : spec.values)
        for (Method m : spec.methods)
            for (int t = 0; t < spec.trials; ++t)
                jobs.push_back({v, m, t});

    std::vector<std::optional<ResultRow>> done(jobs.size());
    std::atomic<size_t> next{0};
    std::mutex mu;
    size_t flushed = 0;

    auto worker = [&] {
        for (;;)
        {
            const size_t i = next.fetch_add(1);
            if (i >= jobs.size())
                return;
            const Job &job = jobs[i];
            const std::uint64_t seed = trial_seed(spec.base_seed, job.trial);
            ResultRow row;
            try
            {
                row = run_trial(with_axis(spec.base, spec.axis, job.value), job.method, seed, spec.options).row;
            }
            catch (const std::exception &e)
            {
                row = ResultRow{};
                row.method = job.method;
                row.seed = seed;
                row.se = row.ee = row.objective = row.p_sys = row.max_residual = std::nan("");
                row.error = e.what();
            }
            row.axis = axis_name(spec.axis);
            row.value = job.value;

            std::lock_guard<std::mutex> lock(mu);
            done[i] = std::move(row);
            while (flushed < done.size() && done[flushed])
            {
                if (on_row)
                    on_row(*done[flushed]);
                ++flushed;
            }
        }
    };

    int threads = spec.threads > 0 ? spec.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, static_cast<int>(jobs.size())));
    if (threads == 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i)
            pool.emplace_back(worker);
        for (auto &t : pool)
            t.join();
    }

    SweepResult res;
    for (auto &r : done)
        res.rows.push_back(std::move(*r));
    res.means = aggregate(res.rows);
    return res;
}

} // namespace thzris
