#include "parityscope/parity_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "parityscope/errors.hpp"
#include "parityscope/rng.hpp"

namespace parityscope::sim {

void SimConfig::validate() const {
    if (!(gamma0_hz >= 0.0) || !std::isfinite(gamma0_hz))
        throw std::invalid_argument("SimConfig: gamma0_hz must be finite and >= 0");
    if (!(t1_s > 0.0)) throw std::invalid_argument("SimConfig: t1_s must be > 0");
    if (!(t2_s > 0.0)) throw std::invalid_argument("SimConfig: t2_s must be > 0");
    if (readout_error < 0.0 || readout_error >= 1.0)
        throw std::invalid_argument("SimConfig: readout_error must be in [0, 1)");
    if (gate_error < 0.0 || gate_error >= 1.0)
        throw std::invalid_argument("SimConfig: gate_error must be in [0, 1)");
    if (gate_error_modulation.depth < 0.0 || gate_error_modulation.depth > 1.0)
        throw std::invalid_argument("SimConfig: modulation depth must be in [0, 1]");
    if (gate_error_modulation.rate_hz < 0.0)
        throw std::invalid_argument("SimConfig: modulation rate must be >= 0");
    if (!(dt_s > 0.0)) throw std::invalid_argument("SimConfig: dt_s must be > 0");
    if (n_shots == 0) throw std::invalid_argument("SimConfig: n_shots must be > 0");
    if (!std::isfinite(duration_s()))
        throw std::invalid_argument("SimConfig: n_shots * dt_s overflows");
}

std::uint64_t ParityTrace::parity_flip_count() const {
    std::uint64_t flips = 0;
    for (std::size_t i = 1; i < true_parity.size(); ++i)
        flips += (true_parity[i] != true_parity[i - 1]) ? 1 : 0;
    return flips;
}

ParityTrace simulate_parity_trace(const SimConfig& config) {
    config.validate();

    Rng rng(config.seed);
    const double p_flip = 1.0 - std::exp(-config.gamma0_hz * config.dt_s);
    const double p_decay = 1.0 - std::exp(-config.dt_s / config.t1_s);
    const double p_dephase = 1.0 - std::exp(-config.dt_s / config.t2_s);
    const bool modulated = config.gate_error_modulation.depth > 0.0 &&
                           config.gate_error_modulation.rate_hz > 0.0;

    ParityTrace trace;
    trace.dt_s = config.dt_s;
    trace.meta = config;
    trace.m.resize(config.n_shots);
    if (config.record_true_parity) trace.true_parity.resize(config.n_shots);

    // 1 = even (toggling), 0 = odd
    std::uint8_t parity;
    switch (config.initial_parity) {
        case InitialParity::Even: parity = 1; break;
        case InitialParity::Odd: parity = 0; break;
        default: parity = rng.bernoulli(0.5) ? 1 : 0; break;
    }
    std::uint8_t q = 0;
    if (config.heralded_init) {
        // herald |0>: repeat the readout until the assigned state is ground
        while (rng.bernoulli(config.readout_error)) {
        }
        q = 0;
    }

    const double omega =
        2.0 * std::numbers::pi * config.gate_error_modulation.rate_hz;
    for (std::uint64_t i = 0; i < config.n_shots; ++i) {
        if (rng.bernoulli(p_flip)) parity ^= 1;
        if (config.record_true_parity) trace.true_parity[i] = parity;

        if (parity) q ^= 1; // even parity toggles, odd preserves

        if (config.gate_error > 0.0 || modulated) {
            double ge = config.gate_error;
            if (modulated)
                ge *= 1.0 + config.gate_error_modulation.depth *
                                std::sin(omega * static_cast<double>(i) *
                                         config.dt_s);
            ge = std::clamp(ge, 0.0, 1.0);
            if (rng.bernoulli(ge)) q ^= 1;
        }
        if (p_decay > 0.0 && q == 1 && rng.bernoulli(p_decay)) q = 0;
        if (p_dephase > 0.0 && rng.bernoulli(p_dephase))
            q = rng.bernoulli(0.5) ? 1 : 0;

        std::uint8_t assigned = q;
        if (config.readout_error > 0.0 && rng.bernoulli(config.readout_error))
            assigned ^= 1;
        trace.m[i] = assigned;
    }
    return trace;
}

RamseySignal synthesize_ramsey_signal(double f_e_mhz, double f_o_mhz,
                                      double t2_star_us,
                                      std::span<const double> times_us,
                                      double noise_sd, std::uint64_t seed,
                                      double amplitude, double offset,
                                      double phase) {
    if (!(t2_star_us > 0.0))
        throw std::invalid_argument("synthesize_ramsey_signal: t2_star must be > 0");
    if (noise_sd < 0.0)
        throw std::invalid_argument("synthesize_ramsey_signal: noise_sd must be >= 0");
    if (!std::is_sorted(times_us.begin(), times_us.end()))
        throw std::invalid_argument("synthesize_ramsey_signal: times must ascend");

    RamseySignal out;
    out.t_us.assign(times_us.begin(), times_us.end());
    out.signal.resize(times_us.size());
    out.f_e_mhz = f_e_mhz;
    out.f_o_mhz = f_o_mhz;
    out.t2_star_us = t2_star_us;
    out.amplitude = amplitude;
    out.offset = offset;
    out.phase = phase;

    Rng rng(seed);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < times_us.size(); ++i) {
        const double t = times_us[i];
        const double env = amplitude * std::exp(-t / t2_star_us);
        double s = offset + env * 0.5 *
                                (std::cos(two_pi * f_e_mhz * t + phase) +
                                 std::cos(two_pi * f_o_mhz * t + phase));
        if (noise_sd > 0.0) s += noise_sd * rng.normal();
        out.signal[i] = s;
    }
    return out;
}

double parity_wait_time_s(double delta_f_mhz, double floor_mhz) {
    if (!(delta_f_mhz > 0.0))
        throw std::invalid_argument("parity_wait_time: delta_f must be > 0");
    if (delta_f_mhz < floor_mhz)
        throw UnusableOffsetCharge("parity_wait_time: delta_f " +
                                   std::to_string(delta_f_mhz) +
                                   " MHz below the " + std::to_string(floor_mhz) +
                                   " MHz floor");
    return 1.0 / (2.0 * delta_f_mhz * 1e6);
}

} // namespace parityscope::sim
