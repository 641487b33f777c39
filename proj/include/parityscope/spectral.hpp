#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "parityscope/parity_sim.hpp"

namespace parityscope::spectral {

// Toggle indicator d_i = |m_{i+1} - m_i|: 1 while the readout toggles (even
// parity), 0 while it holds (odd parity).
struct ToggleTrace {
    std::vector<std::uint8_t> d;
    double dt_s = 0.0;

    double duration_s() const { return static_cast<double>(d.size()) * dt_s; }
};

// One-sided power spectral density on a uniform frequency grid starting at DC.
struct Spectrum {
    std::vector<double> freqs_hz;
    std::vector<double> psd; // per Hz
    double duration_s = 0.0;
    int n_averaged = 1;

    double df_hz() const;
    double nyquist_hz() const { return freqs_hz.empty() ? 0.0 : freqs_hz.back(); }
};

ToggleTrace toggle_transform(const sim::ParityTrace& trace);

// Periodogram of the unfiltered toggle trace, no window, mean retained:
//   PSD_k = (dt^2 / T) |DFT(d)_k|^2, doubled for 0 < k < N/2.
// Requires length >= 64.
Spectrum periodogram(const ToggleTrace& d);

// Interpolate all inputs onto the grid with the smallest frequency spacing,
// truncate at the smallest Nyquist, and average pointwise. Inputs must
// already be duration-normalized (periodogram output is).
Spectrum aggregate_spectra(std::span<const Spectrum> spectra);

struct GaussianSmooth {
    double sigma; // in samples
};
struct MovingAverage {
    int window; // in samples
};
using SmoothMode = std::variant<GaussianSmooth, MovingAverage>;

// Display-only smoothing of a toggle trace (reflected boundaries). Never
// feed the result into periodogram; fits run on unfiltered data.
std::vector<double> smooth_for_display(const ToggleTrace& trace,
                                       const SmoothMode& mode);

} // namespace parityscope::spectral
