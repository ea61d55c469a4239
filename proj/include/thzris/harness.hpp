#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thzris/config.hpp"
#include "thzris/optimizer.hpp"

namespace thzris {

enum class Method
{
    aris,     // active RIS, joint optimization
    pris,     // passive RIS, unit modulus bound, no RIS power
    rnd_aris  // active RIS with fixed random phases, precoders only
};

const char *method_name(Method method); // ARIS, PRIS, RND_ARIS
Method parse_method(const std::string &name);
std::vector<Method> parse_methods(const std::string &comma_list);

struct RunPlan
{
    SystemConfig config;
    SolverOptions options;
    std::optional<Eigen::VectorXcd> fixed_phi;
};

RunPlan apply_method(const SystemConfig &config, Method method, std::uint64_t seed,
                     const SolverOptions &options = {});

struct ResultRow
{
    std::string axis = "none";
    double value = 0.0;
    Method method = Method::aris;
    std::uint64_t seed = 0;
    double se = 0.0;
    double ee = 0.0;
    double objective = 0.0;
    double p_sys = 0.0;
    double max_residual = 0.0;
    int outer_iters = 0;
    double wall_ms = 0.0;
    bool feasible = false;
    std::string error; // non-empty if the trial threw
};

const char *csv_header();
// Numeric fields in shortest round-trip form, wall_ms with three decimals.
std::string csv_line(const ResultRow &row);
// Same line without wall_ms, for reproducibility comparisons.
std::string csv_line_numeric(const ResultRow &row);

struct TrialOutput
{
    ResultRow row;
    SolveTrace trace;
    OptimizeResult result;
};

// Places nodes, draws channels, runs the method and re-evaluates the final
// point with the metrics module. Seeds the geometry, angles, initial phases
// and baseline phases from `seed`.
TrialOutput run_trial(const SystemConfig &config, Method method, std::uint64_t seed,
                      const SolverOptions &options = {});

enum class Axis
{
    p_a_max, // dBm, every AP
    kappa,
    dac_bits, // every AP
    m,        // elements per RIS
    q,
    k,
    d_u
};

const char *axis_name(Axis axis); // P_A_max, kappa, dac_bits, M, Q, K, d_U
Axis parse_axis(const std::string &name);
SystemConfig with_axis(const SystemConfig &config, Axis axis, double value);

struct SweepSpec
{
    Axis axis = Axis::kappa;
    std::vector<double> values;
    std::vector<Method> methods = {Method::aris};
    int trials = 10;
    SystemConfig base;
    std::uint64_t base_seed = 1;
    int threads = 0; // 0: hardware concurrency
    SolverOptions options;

    void validate() const;
};

// Trial t of every (value, method) pair uses seed base_seed + t, so all
// methods and axis values see the same channel draws.
std::uint64_t trial_seed(std::uint64_t base_seed, int trial);

struct Aggregate
{
    double value = 0.0;
    Method method = Method::aris;
    int trials = 0; // successful trials
    int feasible = 0;
    double mean_se = 0.0;
    double mean_ee = 0.0;
    double mean_objective = 0.0;
    double mean_p_sys = 0.0;
};

std::vector<Aggregate> aggregate(const std::vector<ResultRow> &rows);

struct SweepResult
{
    std::vector<ResultRow> rows; // value-major, then method, then trial
    std::vector<Aggregate> means;
};

// Runs trials on a bounded worker pool. `on_row` is called from one thread
// at a time, in row order, as soon as every earlier row is done.
SweepResult run_sweep(const SweepSpec &spec, const std::function<void(const ResultRow &)> &on_row = {});

} // namespace thzris
