#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace parityscope::sim {

// Slow sinusoidal variation of the per-shot gate error probability;
// reproduces the ~10 kHz pickup-like spectral feature when enabled.
struct GateErrorModulation {
    double depth = 0.0; // in [0, 1]
    double rate_hz = 0.0;
};

enum class InitialParity { Random, Even, Odd };

struct SimConfig {
    double gamma0_hz = 460.0; // Poisson parity flip rate
    double t1_s = std::numeric_limits<double>::infinity();
    double t2_s = std::numeric_limits<double>::infinity();
    double readout_error = 0.0; // per-shot misclassification probability
    double dt_s = 1.5e-6;       // cycle period (inverse repetition rate)
    std::uint64_t n_shots = 500'000;
    std::uint64_t seed = 0;
    double gate_error = 0.0; // per-shot pi/2-mapping error probability
    GateErrorModulation gate_error_modulation{};
    InitialParity initial_parity = InitialParity::Random;
    bool heralded_init = false; // discard pre-trace shots until ground state
    bool record_true_parity = true;

    void validate() const; // throws std::invalid_argument
    double duration_s() const { return static_cast<double>(n_shots) * dt_s; }
};

// Single-shot assigned qubit states from one restless run.
struct ParityTrace {
    std::vector<std::uint8_t> m; // assigned states, length n_shots
    double dt_s = 0.0;
    std::vector<std::uint8_t> true_parity; // 1 = even; empty unless recorded
    SimConfig meta;

    std::uint64_t parity_flip_count() const;
};

// Markov-process simulation of the restless parity measurement. Per cycle,
// in order: parity flip (p = 1 - exp(-gamma0 dt)), ideal mapping (even
// toggles the state, odd preserves it), gate error (mapping inverted),
// relaxation (p = 1 - exp(-dt/T1), excited -> ground), dephasing
// (p = 1 - exp(-dt/T2), outcome replaced by a fair coin), readout
// misclassification (recorded bit flipped, physical state kept).
// Deterministic for a fixed config, independent of the caller's threading.
ParityTrace simulate_parity_trace(const SimConfig& config);

// Averaged Ramsey signal with two tones:
//   s(t) = offset + amplitude * exp(-t/T2*) * [cos(2 pi f_e t + phase)
//                                            + cos(2 pi f_o t + phase)] / 2
// plus Gaussian noise of standard deviation noise_sd. Times in us, tones in
// MHz. Generating parameters are recorded for oracle comparisons.
struct RamseySignal {
    std::vector<double> t_us;
    std::vector<double> signal;
    double f_e_mhz, f_o_mhz, t2_star_us, amplitude, offset, phase;
};

RamseySignal synthesize_ramsey_signal(double f_e_mhz, double f_o_mhz,
                                      double t2_star_us,
                                      std::span<const double> times_us,
                                      double noise_sd, std::uint64_t seed,
                                      double amplitude = 0.5,
                                      double offset = 0.5, double phase = 0.0);

// Evolution time between the two pi/2 pulses: 1 / (2 |f_e - f_o|), seconds.
// Throws UnusableOffsetCharge below the floor (default 0.5 MHz).
double parity_wait_time_s(double delta_f_mhz, double floor_mhz = 0.5);

} // namespace parityscope::sim
