// thzris command line: run, sweep, validate, trace.
// Talks to the library only through the C API.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "thzris/thzris.h"

namespace {

constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct RunError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

std::string num(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string fixed(double v, int prec)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string sci(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4e", v);
    return buf;
}

// Invalid arguments are the caller's fault (exit 2); everything else is a
// runtime failure (exit 1).
void check(thzris_status st)
{
    if (st == THZRIS_OK)
        return;
    if (st == THZRIS_E_INVALID_ARGUMENT)
        throw UsageError(thzris_last_error());
    throw RunError(thzris_last_error());
}

struct Options
{
    std::string config_path;
    std::string profile = "desk";
    std::vector<std::string> sets;
    std::optional<double> kappa;
    std::optional<double> pmax_dbm;
    std::optional<int> dac_bits;
    std::uint64_t seed = 1;
    std::string out;
    std::string axis;
    std::string values;
    std::string methods = "ARIS";
    int trials = 10;
    int threads = 0;
};

class Config
{
  public:
    explicit Config(const Options &o)
    {
        check(thzris_config_create(o.profile.c_str(), &handle_));
        if (!o.config_path.empty())
            check(thzris_config_load_file(handle_, o.config_path.c_str()));
        if (o.kappa)
            set("kappa", num(*o.kappa));
        if (o.pmax_dbm)
            set("p_ap_max_dbm", num(*o.pmax_dbm));
        if (o.dac_bits)
            set_all_aps_bits(*o.dac_bits);
        for (const auto &kv : o.sets)
        {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0)
                throw UsageError("--set expects key=value, got '" + kv + "'");
            set(kv.substr(0, eq), kv.substr(eq + 1));
        }
    }
    ~Config() { thzris_config_destroy(handle_); }
    Config(const Config &) = delete;
    Config &operator=(const Config &) = delete;

    const thzris_config *get() const { return handle_; }

    std::string dump() const
    {
        size_t need = 0;
        check(thzris_config_dump(handle_, nullptr, 0, &need));
        std::string text(need, '\0');
        check(thzris_config_dump(handle_, text.data(), text.size(), &need));
        text.resize(need - 1);
        return text;
    }

  private:
    void set(const std::string &key, const std::string &value)
    {
        // dotted keys from nested configs map onto the flat names
        std::string k = key;
        const auto dot = k.rfind('.');
        if (dot != std::string::npos)
            k = k.substr(dot + 1);
        check(thzris_config_set(handle_, k.c_str(), value.c_str()));
    }

    void set_all_aps_bits(int bits)
    {
        // number of APs from the current dump
        std::istringstream in(dump());
        std::string line;
        int aps = 1;
        while (std::getline(in, line))
            if (line.rfind("num_aps = ", 0) == 0)
                aps = std::stoi(line.substr(10));
        std::string list;
        for (int i = 0; i < aps; ++i)
            list += (i ? "," : "") + std::to_string(bits);
        set("dac_bits", list);
    }

    thzris_config *handle_ = nullptr;
};

void echo_config(const Config &cfg)
{
    std::cout << "# config\n";
    std::istringstream in(cfg.dump());
    std::string line;
    while (std::getline(in, line))
        std::cout << "#   " << line << "\n";
}

std::vector<double> parse_values(const std::string &text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        const auto first = item.find_first_not_of(' ');
        const auto last = item.find_last_not_of(' ');
        if (first == std::string::npos)
            throw UsageError("--values has an empty entry");
        item = item.substr(first, last - first + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size())
            throw UsageError("--values: '" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty())
        throw UsageError("--values is required");
    return out;
}

std::string stem_path(const std::string &out, const std::string &suffix)
{
    const std::filesystem::path p(out);
    std::filesystem::path s = p.parent_path() / (p.stem().string() + suffix);
    return s.string();
}

void print_row_table(const thzris_result &r)
{
    std::printf("%-9s %6s %12s %12s %12s %10s %12s %6s %9s\n", "method", "seed", "SE", "EE", "objective", "P_sys[W]",
                "residual", "iters", "feasible");
    std::printf("%-9s %6llu %12s %12s %12s %10s %12s %6d %9s\n", r.method, static_cast<unsigned long long>(r.seed),
                fixed(r.se, 6).c_str(), fixed(r.ee, 6).c_str(), fixed(r.objective, 6).c_str(),
                fixed(r.p_sys, 4).c_str(), sci(r.max_residual).c_str(), r.outer_iters, r.feasible ? "yes" : "no");
}

std::string footer(const thzris_result &r)
{
    return std::string("#result method=") + r.method + " seed=" + std::to_string(r.seed) + " se=" + num(r.se) +
           " ee=" + num(r.ee) + " objective=" + num(r.objective) + " p_sys=" + num(r.p_sys) +
           " max_residual=" + num(r.max_residual) + " outer_iters=" + std::to_string(r.outer_iters) +
           " feasible=" + (r.feasible ? "true" : "false");
}

std::string single_method(const std::string &methods)
{
    if (methods.find(',') != std::string::npos)
        throw UsageError("run and trace take a single method, got '" + methods + "'");
    return methods;
}

int cmd_run(const Options &o, bool trace_only)
{
    const Config cfg(o);
    echo_config(cfg);
    const std::string method = single_method(o.methods);
    const std::string out = o.out.empty() ? (trace_only ? "trace.csv" : "run.csv") : o.out;
    const std::string trace = trace_only ? out : stem_path(out, "_trace.csv");
    thzris_result r{};
    check(thzris_run(cfg.get(), method.c_str(), o.seed, trace_only ? nullptr : out.c_str(), trace.c_str(), &r));
    print_row_table(r);
    if (!trace_only)
        std::cout << "rows: " << out << "\n";
    std::cout << "trace: " << trace << "\n";
    std::cout << footer(r) << "\n";
    return 0;
}

struct Mean
{
    int n = 0, feasible = 0, failed = 0;
    double se = 0, ee = 0, obj = 0, p = 0;
};

int cmd_sweep(const Options &o)
{
    if (o.axis.empty())
        throw UsageError("sweep needs --axis");
    const std::vector<double> values = parse_values(o.values);
    const Config cfg(o);
    echo_config(cfg);
    const std::string out = o.out.empty() ? "sweep.csv" : o.out;

    std::vector<std::pair<double, std::string>> order;
    std::map<std::pair<double, std::string>, Mean> means;
    auto on_row = [](const thzris_result *r, void *user) {
        auto &ctx = *static_cast<std::pair<decltype(order) *, decltype(means) *> *>(user);
        const auto key = std::make_pair(r->axis_value, std::string(r->method));
        auto [it, fresh] = ctx.second->try_emplace(key);
        if (fresh)
            ctx.first->push_back(key);
        Mean &m = it->second;
        if (r->error)
        {
            ++m.failed;
            std::fprintf(stderr, "trial failed (value %s, %s, seed %llu): %s\n", num(r->axis_value).c_str(),
                         r->method, static_cast<unsigned long long>(r->seed), r->error);
            return;
        }
        ++m.n;
        m.feasible += r->feasible;
        m.se += r->se;
        m.ee += r->ee;
        m.obj += r->objective;
        m.p += r->p_sys;
    };
    std::pair<decltype(order) *, decltype(means) *> ctx{&order, &means};
    check(thzris_sweep(cfg.get(), o.axis.c_str(), values.data(), values.size(), o.methods.c_str(), o.trials, o.seed,
                       o.threads, out.c_str(), on_row, &ctx));

    std::printf("%-10s %-9s %7s %12s %12s %12s %10s %9s\n", o.axis.c_str(), "method", "trials", "mean SE", "mean EE",
                "mean obj", "P_sys[W]", "feasible");
    int rows = 0, failed = 0;
    for (const auto &key : order)
    {
        const Mean &m = means[key];
        rows += m.n + m.failed;
        failed += m.failed;
        const double n = m.n > 0 ? m.n : 1;
        std::printf("%-10s %-9s %7d %12s %12s %12s %10s %6d/%-2d\n", num(key.first).c_str(), key.second.c_str(), m.n,
                    fixed(m.se / n, 6).c_str(), fixed(m.ee / n, 6).c_str(), fixed(m.obj / n, 6).c_str(),
                    fixed(m.p / n, 4).c_str(), m.feasible, m.n);
    }
    std::cout << "rows: " << out << "\n";
    std::cout << "#result axis=" << o.axis << " points=" << values.size() << " rows=" << rows
              << " failed=" << failed;
    for (const auto &key : order)
    {
        const Mean &m = means[key];
        const double n = m.n > 0 ? m.n : 1;
        std::cout << " " << key.second << "@" << num(key.first) << ":se=" << num(m.se / n) << ",ee=" << num(m.ee / n);
    }
    std::cout << "\n";
    return 0;
}

int cmd_validate(const Options &o)
{
    const Config cfg(o);
    echo_config(cfg);
    const std::string out = o.out.empty() ? "validate.csv" : o.out;
    std::printf("%-34s %-6s %12s\n", "check", "result", "metric");
    int total = 0, passed = 0;
    auto on_check = [](const char *name, int ok, double metric, const char *detail, void *user) {
        auto &counts = *static_cast<std::pair<int *, int *> *>(user);
        ++*counts.first;
        *counts.second += ok;
        std::printf("%-34s %-6s %12s  %s\n", name, ok ? "PASS" : "FAIL", sci(metric).c_str(), detail);
        std::fflush(stdout);
    };
    std::pair<int *, int *> counts{&total, &passed};
    int all = 0;
    check(thzris_validate(cfg.get(), o.seed, out.c_str(), on_check, &counts, &all));
    std::cout << "rows: " << out << "\n";
    std::cout << "#result checks=" << total << " passed=" << passed << " all_passed=" << (all ? "true" : "false")
              << "\n";
    return all ? 0 : 1;
}

void add_common(CLI::App *cmd, Options &o)
{
    cmd->add_option("--config", o.config_path, "key = value config file applied on top of the profile")
        ->check(CLI::ExistingFile);
    cmd->add_option("--profile", o.profile, "base profile")->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--set", o.sets, "override key=value (repeatable)");
    cmd->add_option("--kappa", o.kappa, "SE/EE weight in [0, 1]");
    cmd->add_option("--pmax-dbm", o.pmax_dbm, "per-AP transmit budget (dBm)");
    cmd->add_option("--dac-bits", o.dac_bits, "DAC resolution of every AP")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "trial seed (base seed for sweeps)");
    cmd->add_option("--out", o.out, "output CSV path");
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Active-RIS THz cell-free MIMO simulator"};
    app.require_subcommand(1);
    Options o;

    CLI::App *run = app.add_subcommand("run", "one trial: result row CSV plus <out stem>_trace.csv");
    add_common(run, o);
    run->add_option("--methods", o.methods, "ARIS, PRIS or RND_ARIS");

    CLI::App *sweep = app.add_subcommand("sweep", "Monte Carlo sweep over one axis");
    add_common(sweep, o);
    sweep->add_option("--axis", o.axis, "P_A_max, kappa, dac_bits, M, Q, K or d_U")->required();
    sweep->add_option("--values", o.values, "comma separated axis values")->required();
    sweep->add_option("--methods", o.methods, "comma separated methods");
    sweep->add_option("--trials", o.trials, "trials per point")->check(CLI::PositiveNumber);
    sweep->add_option("--threads", o.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);

    CLI::App *validate = app.add_subcommand("validate", "invariant suite; exit 0 iff every check passes");
    add_common(validate, o);

    CLI::App *trace = app.add_subcommand("trace", "one trial, convergence CSV only");
    add_common(trace, o);
    trace->add_option("--methods", o.methods, "ARIS, PRIS or RND_ARIS");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try
    {
        if (run->parsed())
            return cmd_run(o, false);
        if (sweep->parsed())
            return cmd_sweep(o);
        if (validate->parsed())
            return cmd_validate(o);
        return cmd_run(o, true);
    }
    catch (const UsageError &e)
    {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
