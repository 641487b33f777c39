#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace parityscope::transmon {

// Hamiltonian inputs for an offset-charge-sensitive transmon, energies in
// frequency units (GHz). dim is the charge-basis truncation 2N+1.
struct TransmonParams {
    double ej_ghz = 9.3;
    double ec_ghz = 0.465;
    int dim = 31;

    void validate() const; // throws std::invalid_argument
};

enum class Parity { Even, Odd };

// Parity-split qubit frequencies on a uniform offset-charge grid over [0, 1).
struct ParitySpectrum {
    std::vector<double> ng;
    std::vector<double> f_even_ghz;
    std::vector<double> f_odd_ghz;
    double dispersion_mhz = 0.0; // peak-to-peak of f01 over grid and parity

    double delta_f_mhz(std::size_t i) const;
    std::vector<double> delta_f_mhz() const;
};

// Lowest eigenenergies (GHz, ascending) of the Cooper-pair-box Hamiltonian
//   H = sum_n 4 E_C (n - ng~)^2 |n><n|  -  E_J/2 sum_n (|n+1><n| + h.c.)
// with ng~ = ng for even parity and ng + 1/2 for odd parity. The truncation
// dimension is grown (doubled) until the lowest three levels move by less
// than 1 kHz when dim increases by 4; failure throws TruncationError.
std::vector<double> cpb_eigenenergies(const TransmonParams& params, double ng,
                                      Parity parity, int n_levels = 3);

// f01 for one parity branch at a single offset charge.
double qubit_frequency_ghz(const TransmonParams& params, double ng, Parity parity);

ParitySpectrum parity_frequencies(const TransmonParams& params,
                                  int n_grid_points = 256);

// Measure of {ng : delta_f(ng) <= threshold} under the uniform distribution,
// treating delta_f as piecewise linear between grid points (periodic grid).
double fraction_delta_f_below(const ParitySpectrum& spectrum, double threshold_mhz);
double fraction_below(std::span<const double> delta_mhz, double threshold_mhz);

} // namespace parityscope::transmon
