// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [--cli <path to thzris executable>] [--workdir <dir>]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "thzris/channel.hpp"
#include "thzris/config_io.hpp"
#include "thzris/harness.hpp"
#include "thzris/metrics.hpp"
#include "thzris/optimizer.hpp"
#include "thzris/rng.hpp"
#include "thzris/validation.hpp"

using namespace thzris;
namespace fs = std::filesystem;

namespace {

struct Verdict
{
    bool passed = false;
    std::string detail;
};

int g_failed = 0;

void report(const char *id, const char *title, const std::function<Verdict()> &body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try
    {
        v = body();
    }
    catch (const std::exception &e)
    {
        v = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.passed)
        ++g_failed;
    std::printf("%s %s  %s: %s (%.1f s)\n", id, v.passed ? "PASS" : "FAIL", title, v.detail.c_str(), s);
    std::fflush(stdout);
}

std::string fmt(const char *f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Verdict from_checks(const std::vector<CheckResult> &checks)
{
    Verdict v{true, ""};
    for (const auto &c : checks)
    {
        if (!c.passed)
            v.passed = false;
        if (!v.detail.empty())
            v.detail += "; ";
        v.detail += c.name + " " + fmt("%.3g", c.metric);
        if (!c.passed)
            v.detail += " [" + c.detail + "]";
    }
    return v;
}

// One desk run kept around for the later criteria.
struct Run
{
    SystemConfig config; // before method overrides
    Method method = Method::aris;
    std::uint64_t seed = 0;
    TrialOutput out;
};

Run run(const SystemConfig &config, Method method, std::uint64_t seed)
{
    return Run{config, method, seed, run_trial(config, method, seed)};
}

struct Means
{
    double se = 0.0;
    double ee = 0.0;
};

Means means(const std::vector<const Run *> &runs)
{
    Means m;
    for (const Run *r : runs)
    {
        m.se += r->out.row.se;
        m.ee += r->out.row.ee;
    }
    m.se /= static_cast<double>(runs.size());
    m.ee /= static_cast<double>(runs.size());
    return m;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Drops the named column from every line of a CSV.
std::string drop_column(const std::string &csv, const std::string &name)
{
    std::istringstream in(csv);
    std::string line, out;
    int col = -1;
    bool header = true;
    while (std::getline(in, line))
    {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        if (header)
        {
            for (size_t i = 0; i < cells.size(); ++i)
                if (cells[i] == name)
                    col = static_cast<int>(i);
            header = false;
        }
        for (size_t i = 0; i < cells.size(); ++i)
        {
            if (static_cast<int>(i) == col)
                continue;
            out += cells[i];
            out += ',';
        }
        out += '\n';
    }
    return out;
}

int shell(const std::string &cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

} // namespace

int main(int argc, char **argv)
{
    std::string cli;
    fs::path workdir = fs::temp_directory_path() / "thzris_acceptance";
    for (int i = 1; i < argc; ++i)
    {
        const std::string a = argv[i];
        if (a == "--cli" && i + 1 < argc)
            cli = argv[++i];
        else if (a == "--workdir" && i + 1 < argc)
            workdir = argv[++i];
        else
        {
            std::fprintf(stderr, "usage: %s [--cli <path>] [--workdir <dir>]\n", argv[0]);
            return 2;
        }
    }

    const SystemConfig desk = desk_config(); // 30 dBm per AP, 1-bit DACs
    const int trials = 10;
    const std::uint64_t base_seed = 1;

    report("A1", "SINR form equivalence", [] { return from_checks({check_sinr_forms(101, 100)}); });

    report("A2", "surrogate tightness and lower bound",
           [] { return from_checks({check_precoder_surrogate(102, 100), check_ris_surrogate(103, 100)}); });

    // ARIS on the kappa grid; reused by A4, A5, A7 and A8
    const std::vector<double> kappas = {0.0, 0.5, 1.0};
    std::map<double, std::vector<Run>> aris;
    report("A3", "monotone convergence", [&] {
        double worst_drop = 0.0, worst_step = 0.0;
        int max_iters = 0;
        std::string where;
        for (double kappa : kappas)
            for (int t = 0; t < trials; ++t)
            {
                const Run r = run(with_axis(desk, Axis::kappa, kappa), Method::aris, trial_seed(base_seed, t));
                const auto &rows = r.out.trace.rows;
                for (size_t i = 1; i < rows.size(); ++i)
                {
                    const double drop = (rows[i - 1].objective - rows[i].objective) / std::abs(rows[i - 1].objective);
                    if (drop > worst_drop)
                    {
                        worst_drop = drop;
                        where = "kappa " + format_double(kappa) + " seed " + std::to_string(r.seed);
                    }
                }
                if (rows.size() >= 2)
                {
                    const double f = rows.back().objective;
                    worst_step = std::max(worst_step, std::abs(f - rows[rows.size() - 2].objective) / std::abs(f));
                }
                else
                    worst_step = std::max(worst_step, 1.0);
                max_iters = std::max(max_iters, r.out.result.outer_iterations);
                aris[kappa].push_back(r);
            }
        const bool ok = worst_drop <= 1e-6 && worst_step < 1e-4 && max_iters <= 50;
        return Verdict{ok, std::to_string(kappas.size() * trials) + " runs, worst relative decrease " +
                               fmt("%.2e", worst_drop) + (where.empty() ? "" : " (" + where + ")") +
                               ", final step " + fmt("%.2e", worst_step) + ", max outer iterations " +
                               std::to_string(max_iters)};
    });

    report("A4", "constraint satisfaction", [&] {
        int feasible = 0, total = 0;
        double worst = 0.0;
        for (const auto &[kappa, runs] : aris)
            for (const Run &r : runs)
            {
                ++total;
                if (r.out.result.rate_infeasible)
                    continue;
                ++feasible;
                // recomputed from scratch through the metrics module
                const RunPlan plan = apply_method(r.config, r.method, r.seed);
                const ChannelSet ch = generate_channels(plan.config, place_nodes(plan.config, r.seed), r.seed);
                const Residuals res = feasibility_residuals(ch, r.out.result.vars, plan.config);
                worst = std::max(worst, res.max_relative(plan.config));
            }
        return Verdict{feasible > 0 && worst <= 1e-6, std::to_string(feasible) + " of " + std::to_string(total) +
                                                          " runs reached the rate floor, worst relative residual " +
                                                          fmt("%.2e", worst)};
    });

    report("A5", "tau and MMSE optimality", [&] {
        double tau_gain = -1.0, filter_gain = -1.0;
        int instances = 0;
        Rng rng(derive_seed(105, 5), Stream::validate);
        for (const auto &[kappa, runs] : aris)
            for (const Run &r : runs)
            {
                ++instances;
                const RunPlan plan = apply_method(r.config, r.method, r.seed);
                const ChannelSet ch = generate_channels(plan.config, place_nodes(plan.config, r.seed), r.seed);
                const DesignVariables &v = r.out.result.vars;
                const Metrics m = evaluate(ch, v, plan.config);
                const double ptot = p_tot(plan.config);
                const double best = transformed_objective(kappa, v.tau, m.se, m.power.p_sys, ptot);
                for (double d : {-0.1, -0.01, 0.01, 0.1})
                {
                    const double f = transformed_objective(kappa, v.tau * (1.0 + d), m.se, m.power.p_sys, ptot);
                    tau_gain = std::max(tau_gain, (f - best) / std::abs(best));
                }
                const DacModel dac = DacModel::from_bits(plan.config.dac_bits);
                const NoiseModel nm = noise_model(plan.config);
                for (int k = 0; k < ch.num_users(); ++k)
                    for (int b = 0; b < ch.subcarriers(); ++b)
                    {
                        const double s0 = sinr(ch, v, nm, dac, k, b);
                        DesignVariables trial = v;
                        for (int j = 0; j < 100; ++j)
                        {
                            Eigen::RowVectorXcd w(ch.nu());
                            for (int i = 0; i < ch.nu(); ++i)
                                w(i) = rng.complex_normal();
                            trial.omega(k, b) = w / w.norm();
                            const double s = sinr(ch, trial, nm, dac, k, b);
                            filter_gain = std::max(filter_gain, (s - s0) / s0);
                        }
                    }
            }
        return Verdict{instances > 0 && tau_gain <= 0.0 && filter_gain <= 1e-6,
                       std::to_string(instances) + " instances, best tau perturbation gain " + fmt("%.2e", tau_gain) +
                           ", best random filter gain " + fmt("%.2e", filter_gain)};
    });

    report("A6", "scalarization ordering", [&] {
        // 40 dBm: at 30 dBm full power is optimal for both weights on the desk scene
        std::vector<Run> k0, k1;
        for (int t = 0; t < trials; ++t)
        {
            const SystemConfig c = with_axis(desk, Axis::p_a_max, 40.0);
            k0.push_back(run(with_axis(c, Axis::kappa, 0.0), Method::aris, trial_seed(base_seed, t)));
            k1.push_back(run(with_axis(c, Axis::kappa, 1.0), Method::aris, trial_seed(base_seed, t)));
        }
        std::vector<const Run *> p0, p1;
        for (auto &r : k0)
            p0.push_back(&r);
        for (auto &r : k1)
            p1.push_back(&r);
        const Means m0 = means(p0), m1 = means(p1);
        return Verdict{m1.ee >= m0.ee && m0.se >= m1.se,
                       "P_A_max 40 dBm, " + std::to_string(trials) + " draws: EE " + fmt("%.5g", m0.ee) + " -> " +
                           fmt("%.5g", m1.ee) + ", SE " + fmt("%.5g", m0.se) + " -> " + fmt("%.5g", m1.se) +
                           " (kappa 0 -> 1)"};
    });

    report("A7", "DAC resolution tradeoff", [&] {
        std::map<int, std::vector<Run>> by_bits;
        const SystemConfig c = with_axis(desk, Axis::kappa, 1.0);
        for (int bits : {1, 2, 8})
        {
            if (bits == desk.dac_bits.front())
            {
                by_bits[bits] = aris[1.0];
                continue;
            }
            for (int t = 0; t < trials; ++t)
                by_bits[bits].push_back(run(with_axis(c, Axis::dac_bits, bits), Method::aris, trial_seed(base_seed, t)));
        }
        auto mean_of = [&](int bits) {
            std::vector<const Run *> p;
            for (auto &r : by_bits[bits])
                p.push_back(&r);
            return means(p);
        };
        const Means b1 = mean_of(1), b2 = mean_of(2), b8 = mean_of(8);
        return Verdict{b1.ee > b8.ee && b2.se >= 0.8 * b8.se,
                       "EE(b=1) " + fmt("%.5g", b1.ee) + " vs EE(b=8) " + fmt("%.5g", b8.ee) + ", SE(b=2)/SE(b=8) " +
                           fmt("%.4f", b2.se / b8.se)};
    });

    report("A8", "ARIS over random-phase ARIS", [&] {
        bool ok = true;
        std::string detail;
        for (double kappa : kappas)
        {
            std::vector<Run> rnd;
            for (int t = 0; t < trials; ++t)
                rnd.push_back(run(with_axis(desk, Axis::kappa, kappa), Method::rnd_aris, trial_seed(base_seed, t)));
            std::vector<const Run *> pa, pr;
            for (auto &r : aris[kappa])
                pa.push_back(&r);
            for (auto &r : rnd)
                pr.push_back(&r);
            const Means a = means(pa), r = means(pr);
            ok = ok && a.se >= r.se && a.ee >= r.ee;
            if (!detail.empty())
                detail += "; ";
            detail += "kappa " + format_double(kappa) + ": SE " + fmt("%.4g", a.se) + " vs " + fmt("%.4g", r.se) +
                      ", EE " + fmt("%.4g", a.ee) + " vs " + fmt("%.4g", r.ee);
        }
        return Verdict{ok, detail};
    });

    report("A9", "closed-form oracles", [] {
        return from_checks({check_path_loss(), check_dac_power(), check_distortion_factor(), check_subcarrier_grid(),
                            check_antenna_gain(), check_scalar_sinr()});
    });

    report("A10", "determinism", [&] {
        if (cli.empty())
        {
            std::ostringstream a, b;
            const TrialOutput r1 = run_trial(desk, Method::aris, 7), r2 = run_trial(desk, Method::aris, 7);
            const auto v1 = run_validation(desk, 1), v2 = run_validation(desk, 1);
            bool same = csv_line_numeric(r1.row) == csv_line_numeric(r2.row) && v1.size() == v2.size();
            for (size_t i = 0; same && i < v1.size(); ++i)
                same = validation_csv_line(v1[i]) == validation_csv_line(v2[i]);
            for (size_t i = 0; same && i < r1.trace.rows.size(); ++i)
                same = r1.trace.rows[i].objective == r2.trace.rows[i].objective;
            return Verdict{same, "in-process repeat of validate and run (no --cli given)"};
        }
        fs::create_directories(workdir);
        std::vector<std::string> files;
        for (int rep : {1, 2})
        {
            const std::string s = std::to_string(rep);
            const fs::path v = workdir / ("validate" + s + ".csv"), r = workdir / ("run" + s + ".csv");
            if (shell("\"" + cli + "\" validate --seed 1 --out \"" + v.string() + "\"") != 0)
                return Verdict{false, "validate exited non-zero"};
            if (shell("\"" + cli + "\" run --seed 7 --methods ARIS --out \"" + r.string() + "\"") != 0)
                return Verdict{false, "run exited non-zero"};
            files.push_back(slurp(v));
            files.push_back(drop_column(slurp(r), "wall_ms"));
            files.push_back(drop_column(slurp(workdir / ("run" + s + "_trace.csv")), "wall_ms"));
        }
        const bool same = files[0] == files[3] && files[1] == files[4] && files[2] == files[5];
        return Verdict{same, std::string("two CLI executions: validate.csv ") +
                                 (files[0] == files[3] ? "identical" : "differs") + ", run row " +
                                 (files[1] == files[4] ? "identical" : "differs") + ", trace " +
                                 (files[2] == files[5] ? "identical" : "differs") + " (wall_ms excluded)"};
    });

    std::printf("%s: %d criteria failed\n", g_failed == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", g_failed);
    return g_failed == 0 ? 0 : 1;
}
