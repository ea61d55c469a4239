#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thzris/channel.hpp"
#include "thzris/config.hpp"
#include "thzris/conic.hpp"
#include "thzris/metrics.hpp"
#include "thzris/quantization.hpp"

namespace thzris {

struct SolverOptions
{
    double eps_inner = 1e-4; // absolute change of the transformed objective
    double eps_outer = 1e-4; // relative change of f
    int max_inner = 30;
    int max_outer = 50;
    bool rate_continuation = true;
    conic::SolverSettings backend;

    bool optimize_phi = true;         // false keeps phi fixed (random-phase baseline)
    bool ris_power_constraint = true; // enforce the reflected-power cap
    bool enforce_rate = true;         // false drops the minimum-rate constraint

    void validate() const;
};

struct TraceRow
{
    int iter = 0;
    double objective = 0.0;
    double se = 0.0;
    double ee = 0.0;
    double tau = 0.0;
    double max_residual = 0.0;
    int inner_f = 0;
    int inner_phi = 0;
    double wall_ms = 0.0;
};

struct SolveTrace
{
    double initial_objective = 0.0;
    std::vector<TraceRow> rows;

    void write_csv(std::ostream &out) const;
};

// Everything the subproblems need besides the variables themselves.
struct Problem
{
    const ChannelSet *channels = nullptr;
    SystemConfig config;
    DacModel dac;
    NoiseModel noise;
    double p_tot = 0.0;
    double rate_threshold = 0.0; // effective R_th (0 when the constraint is dropped)
    bool ris_power_constraint = true;
    // Restoration mode: subproblems maximize the smallest SINR surrogate and
    // the SCA loop stops once every SINR reaches `restore_target`.
    bool max_min = false;
    double restore_target = 0.0;

    Problem(const ChannelSet &channels, const SystemConfig &config);
    double rate_floor() const; // 2^R_th - 1
    bool ris_in_power() const { return config.ris_mode == RisMode::active; }
};

// Unit-norm MMSE receive filters for the current F and phi.
std::vector<Eigen::RowVectorXcd> mmse_filters(const ChannelSet &channels, const DesignVariables &vars,
                                              const DacModel &dac, const NoiseModel &noise);

// tau = sqrt(se) / p_sys.
double update_tau(double se, double p_sys);

// Quadratic-transform objective 2 kappa tau sqrt(se) - kappa tau^2 p_sys + (1 - kappa) se / p_tot.
double transformed_objective(double kappa, double tau, double se, double p_sys, double p_tot);

// SCA lower bound of SINR(k,b), expanded at `expansion` and evaluated at
// `point`: 2 Re(conj(xbar) x) / psibar - |xbar|^2 psi / psibar^2. The
// precoder variant uses point's F with the expansion's phi and omega, the RIS
// variant uses point's phi with the expansion's F and omega. Throws
// std::logic_error if psibar = 0.
double precoder_surrogate(const ChannelSet &channels, const DesignVariables &expansion,
                          const DesignVariables &point, const NoiseModel &noise, const DacModel &dac, int k, int b);
double ris_surrogate(const ChannelSet &channels, const DesignVariables &expansion, const DesignVariables &point,
                     const NoiseModel &noise, const DacModel &dac, int k, int b);

// Column layout of a built subproblem.
struct SubproblemLayout
{
    conic::ComplexLayout z; // F (stacked (q,k,b)) or phi
    int varsigma = -1;      // first of K*B SINR epigraph variables, index k*B+b
    int u = -1;             // first of K*B rate variables
    int s = -1;             // sqrt(sum u), -1 if absent
    int p = -1;             // power epigraph, -1 if absent
    int r = -1;             // common SINR level in restoration mode
};

struct Subproblem
{
    conic::ConicProgram program;
    SubproblemLayout layout;
    std::vector<double> hint; // empty when the expansion point has no strictly feasible lift
};

Subproblem build_precoder_subproblem(const Problem &problem, const DesignVariables &expansion);
Subproblem build_ris_subproblem(const Problem &problem, const DesignVariables &expansion);

struct BlockResult
{
    DesignVariables vars;
    int iterations = 0;          // accepted inner iterations
    bool infeasible = false;     // backend reported infeasible on the first attempt
    conic::SolveStatus last_status = conic::SolveStatus::optimal;
};

// SCA block updates of F and phi with omega and tau held fixed.
BlockResult solve_precoders(const Problem &problem, const DesignVariables &start, const SolverOptions &opts);
BlockResult solve_ris(const Problem &problem, const DesignVariables &start, const SolverOptions &opts);

// Random phases from the init stream with the largest common amplitude that
// keeps every reflected-power constraint (0.999 margin); precoders matched to
// the composite channels at 50% of each AP budget. If `fixed_phi` is given
// it is used as is and F is scaled into the reflected-power constraint.
DesignVariables initialize(const ChannelSet &channels, const SystemConfig &config, std::uint64_t seed,
                           const std::optional<Eigen::VectorXcd> &fixed_phi = std::nullopt,
                           bool ris_power_constraint = true);

// Random phases at amplitude beta_max from the baseline stream.
Eigen::VectorXcd random_phases(int count, double amplitude, std::uint64_t seed);

struct OptimizeResult
{
    DesignVariables vars;
    SolveTrace trace;
    Metrics metrics;
    Residuals residuals;
    bool rate_infeasible = false; // min-rate could not be reached; solved with R_th = 0
    int outer_iterations = 0;
};

// Alternating outer loop: tau, omega, F, phi until f settles.
OptimizeResult optimize(const ChannelSet &channels, const SystemConfig &config, const SolverOptions &opts,
                        std::uint64_t seed, const std::optional<Eigen::VectorXcd> &fixed_phi = std::nullopt);

} // namespace thzris
