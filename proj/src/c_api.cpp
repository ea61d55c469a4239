#include "thzris/thzris.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

#include "thzris/config_io.hpp"
#include "thzris/harness.hpp"
#include "thzris/validation.hpp"

struct thzris_config
{
    thzris::SystemConfig value;
};

namespace {

thread_local std::string g_last_error;

struct IoError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

thzris_status fail(thzris_status code, const std::string &message)
{
    g_last_error = message;
    return code;
}

// Maps exceptions from the core onto status codes.
template <class F>
thzris_status guarded(F &&body)
{
    try
    {
        g_last_error.clear();
        body();
        return THZRIS_OK;
    }
    catch (const IoError &e)
    {
        return fail(THZRIS_E_IO, e.what());
    }
    catch (const std::invalid_argument &e)
    {
        return fail(THZRIS_E_INVALID_ARGUMENT, e.what());
    }
    catch (const std::out_of_range &e)
    {
        return fail(THZRIS_E_INVALID_ARGUMENT, e.what());
    }
    catch (const std::logic_error &e)
    {
        return fail(THZRIS_E_INVALID_STATE, e.what());
    }
    catch (const std::exception &e)
    {
        return fail(THZRIS_E_INTERNAL, e.what());
    }
    catch (...)
    {
        return fail(THZRIS_E_INTERNAL, "unknown error");
    }
}

void require(const void *p, const char *what)
{
    if (p == nullptr)
        throw std::invalid_argument(std::string(what) + " must not be null");
}

std::ofstream open_out(const char *path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError(std::string("cannot write '") + path + "'");
    return out;
}

void close_out(std::ofstream &out, const char *path)
{
    out.flush();
    if (!out)
        throw IoError(std::string("write failed for '") + path + "'");
}

thzris_result to_c(const thzris::ResultRow &row)
{
    thzris_result r{};
    r.axis_value = row.value;
    r.seed = row.seed;
    r.se = row.se;
    r.ee = row.ee;
    r.objective = row.objective;
    r.p_sys = row.p_sys;
    r.max_residual = row.max_residual;
    r.outer_iters = row.outer_iters;
    r.wall_ms = row.wall_ms;
    r.feasible = row.feasible ? 1 : 0;
    r.method = thzris::method_name(row.method);
    r.error = row.error.empty() ? nullptr : row.error.c_str();
    return r;
}

} // namespace

extern "C" {

const char *thzris_last_error(void) { return g_last_error.c_str(); }

const char *thzris_version(void) { return "1.0.0"; }

thzris_status thzris_config_create(const char *profile, thzris_config **out)
{
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        auto cfg = std::make_unique<thzris_config>();
        cfg->value = thzris::profile_config(profile ? profile : "desk");
        *out = cfg.release();
    });
}

void thzris_config_destroy(thzris_config *config) { delete config; }

thzris_status thzris_config_clone(const thzris_config *config, thzris_config **out)
{
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = new thzris_config{config->value};
    });
}

thzris_status thzris_config_load_file(thzris_config *config, const char *path)
{
    return guarded([&] {
        require(config, "config");
        require(path, "path");
        std::ifstream in(path);
        if (!in)
            throw IoError(std::string("cannot open config file '") + path + "'");
        config->value = thzris::parse_config(in, config->value);
    });
}

thzris_status thzris_config_set(thzris_config *config, const char *key, const char *value)
{
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        require(value, "value");
        thzris::SystemConfig next = config->value;
        thzris::set_config_value(next, key, value);
        next.resize_per_node();
        next.validate();
        config->value = std::move(next);
    });
}

thzris_status thzris_config_dump(const thzris_config *config, char *buf, size_t capacity, size_t *needed)
{
    return guarded([&] {
        require(config, "config");
        const std::string text = thzris::dump_config(config->value);
        if (needed)
            *needed = text.size() + 1;
        if (buf == nullptr)
            return;
        if (capacity < text.size() + 1)
            throw std::invalid_argument("buffer too small for config dump");
        std::memcpy(buf, text.c_str(), text.size() + 1);
    });
}

thzris_status thzris_run(const thzris_config *config, const char *method, uint64_t seed, const char *row_csv_path,
                         const char *trace_csv_path, thzris_result *out)
{
    return guarded([&] {
        require(config, "config");
        require(method, "method");
        const thzris::Method m = thzris::parse_method(method);
        const thzris::TrialOutput trial = thzris::run_trial(config->value, m, seed);
        if (row_csv_path)
        {
            std::ofstream f = open_out(row_csv_path);
            f << thzris::csv_header() << "\n" << thzris::csv_line(trial.row) << "\n";
            close_out(f, row_csv_path);
        }
        if (trace_csv_path)
        {
            std::ofstream f = open_out(trace_csv_path);
            trial.trace.write_csv(f);
            close_out(f, trace_csv_path);
        }
        if (out)
        {
            *out = to_c(trial.row);
            out->error = nullptr;
        }
    });
}

thzris_status thzris_sweep(const thzris_config *config, const char *axis, const double *values, size_t value_count,
                           const char *methods, int trials, uint64_t base_seed, int threads, const char *csv_path,
                           thzris_row_callback callback, void *user)
{
    return guarded([&] {
        require(config, "config");
        require(axis, "axis");
        require(methods, "methods");
        if (value_count > 0)
            require(values, "values");
        thzris::SweepSpec spec;
        spec.axis = thzris::parse_axis(axis);
        spec.values.assign(values, values + value_count);
        spec.methods = thzris::parse_methods(methods);
        spec.trials = trials;
        spec.base = config->value;
        spec.base_seed = base_seed;
        spec.threads = threads;
        spec.validate();

        std::ofstream f;
        if (csv_path)
        {
            f = open_out(csv_path);
            f << thzris::csv_header() << "\n";
        }
        thzris::run_sweep(spec, [&](const thzris::ResultRow &row) {
            if (csv_path)
                f << thzris::csv_line(row) << "\n" << std::flush;
            if (callback)
            {
                const thzris_result r = to_c(row);
                callback(&r, user);
            }
        });
        if (csv_path)
            close_out(f, csv_path);
    });
}

thzris_status thzris_validate(const thzris_config *config, uint64_t seed, const char *csv_path,
                              thzris_check_callback callback, void *user, int *all_passed)
{
    return guarded([&] {
        require(config, "config");
        std::ofstream f;
        if (csv_path)
        {
            f = open_out(csv_path);
            f << thzris::validation_csv_header() << "\n";
        }
        bool all = true;
        thzris::run_validation(config->value, seed, [&](const thzris::CheckResult &c) {
            all = all && c.passed;
            if (csv_path)
                f << thzris::validation_csv_line(c) << "\n";
            if (callback)
                callback(c.name.c_str(), c.passed ? 1 : 0, c.metric, c.detail.c_str(), user);
        });
        if (csv_path)
            close_out(f, csv_path);
        if (all_passed)
            *all_passed = all ? 1 : 0;
    });
}

} // extern "C"
