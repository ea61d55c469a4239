#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "thzris/channel.hpp"
#include "thzris/config.hpp"
#include "thzris/metrics.hpp"
#include "thzris/quantization.hpp"
#include "thzris/rng.hpp"

namespace thzris {

struct CheckResult
{
    std::string name;
    bool passed = false;
    double metric = 0.0; // worst error or violation seen, check-specific
    std::string detail;
};

// Gaussian channels and variables with every dimension drawn in 1..4 (Q in
// 2..4, M in 1..6) and noise, DAC bits and RIS noise randomized.
struct RandomInstance
{
    ChannelSet channels;
    DesignVariables vars;
    DacModel dac;
    NoiseModel noise;
};

RandomInstance random_instance(Rng &rng);

// Closed-form oracles, each to 1e-9 relative.
CheckResult check_subcarrier_grid();
CheckResult check_path_loss();
CheckResult check_steering();
CheckResult check_antenna_gain();
CheckResult check_distortion_factor();
CheckResult check_dac_power();
CheckResult check_scalar_sinr();

// Properties on random instances.
CheckResult check_sinr_forms(std::uint64_t seed, int instances = 100);
CheckResult check_sinr_rotation(std::uint64_t seed, int instances = 20);
CheckResult check_quantization_cov(std::uint64_t seed, int instances = 50);
CheckResult check_precoder_surrogate(std::uint64_t seed, int points = 100);
CheckResult check_ris_surrogate(std::uint64_t seed, int points = 100);
CheckResult check_mmse_dominance(std::uint64_t seed, int instances = 20, int filters = 100);
CheckResult check_tau_argmax(std::uint64_t seed, int instances = 100);
CheckResult check_power_model(const SystemConfig &config, std::uint64_t seed);
CheckResult check_conic_backend();
CheckResult check_complex_embedding(std::uint64_t seed, int instances = 50);

// Uses `config` for node placement and channel generation.
CheckResult check_channels(const SystemConfig &config, std::uint64_t seed);
CheckResult check_initial_point(const SystemConfig &config, std::uint64_t seed);
CheckResult check_config_roundtrip(const SystemConfig &config);

// Every check above in a fixed order. `on_check` sees each result as it
// finishes.
std::vector<CheckResult> run_validation(const SystemConfig &config, std::uint64_t seed,
                                        const std::function<void(const CheckResult &)> &on_check = {});

const char *validation_csv_header(); // name,passed,metric,detail
std::string validation_csv_line(const CheckResult &check);

} // namespace thzris
