#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

#include "parityscope/spectral.hpp"

namespace parityscope::fitkit {

struct NlsOptions {
    int max_iterations = 200;
    double step_tol = 1e-10;     // relative parameter step
    double residual_tol = 1e-12; // relative residual-norm change
};

struct NlsResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance; // s^2 (J^T J)^-1 at the optimum
    double residual_norm = 0.0; // ||r||_2
    int iterations = 0;
    bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Damped least squares (Levenberg-Marquardt) on a residual vector. Bounds
// are enforced by projecting trial steps. Pass jacobian = nullptr for a
// forward-difference Jacobian. Throws FitError on a singular Jacobian or
// when max_iterations pass without meeting either tolerance.
NlsResult levenberg_marquardt(const ResidualFn& residuals,
                              const JacobianFn* jacobian, Eigen::VectorXd init,
                              const Eigen::VectorXd* lower = nullptr,
                              const Eigen::VectorXd* upper = nullptr,
                              const NlsOptions& opts = {});

using ModelFn = std::function<double(double x, std::span<const double> params)>;

// Weighted curve fit y ~ model(x; p). Empty weights mean equal weights.
NlsResult nls_fit(const ModelFn& model, std::span<const double> x,
                  std::span<const double> y,
                  std::span<const double> weights, std::span<const double> init,
                  std::span<const double> lower = {},
                  std::span<const double> upper = {},
                  const NlsOptions& opts = {});

// --- Lorentzian mixture -----------------------------------------------------

struct LorentzianComponent {
    double amplitude = 0.0; // PSD units; integrated power is amplitude/2
    double corner_hz = 0.0;
    double amplitude_err = 0.0;
    double corner_err = 0.0;
    bool significant = true; // amplitude above 1e-4 of the mixture total
};

struct LorentzianFit {
    std::vector<LorentzianComponent> components; // ascending by corner
    double noise_floor = 0.0;
    double noise_floor_err = 0.0;
    Eigen::MatrixXd covariance; // natural parameters (A_1..A_k, G_1..G_k, floor)
    double residual_norm = 0.0;
    int components_requested = 0;
    bool reduced = false; // component count lowered (BIC or degenerate corners)
    bool converged = false;
    int iterations = 0;

    // Tunneling rate estimate: corner of the lowest significant component.
    double rate_hz() const;
};

// Fit S(f) = sum_k A_k G_k / (G_k^2 + (pi f)^2) + floor to log(PSD) with
// equal weights, DC bin excluded. With this parameterization the fitted G of
// a symmetric telegraph equals its Poisson flip rate. Corner count is
// selected from 1..k by BIC; corners closer than 5% force a reduction.
LorentzianFit fit_lorentzian_sum(const spectral::Spectrum& spectrum, int k = 3);

// Analytic telegraph PSD, for oracles and synthetic spectra.
double lorentzian_psd(double f_hz, double amplitude, double corner_hz);

// --- Ramsey two-tone ---------------------------------------------------------

struct RamseyFit {
    double f_e_mhz = 0.0; // ascending order; parity labels are not implied
    double f_o_mhz = 0.0;
    double t2_star_us = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double phase = 0.0;
    double f_e_err = 0.0, f_o_err = 0.0, t2_star_err = 0.0;
    double residual_norm = 0.0;

    double delta_f_mhz() const { return std::abs(f_o_mhz - f_e_mhz); }
};

// Decaying cosine with two tones, initialized from the two largest FFT
// peaks. Throws DegenerateTones when the peaks are closer than two grid
// bins. Times in us on a uniform grid of >= 50 samples.
RamseyFit fit_two_tone_ramsey(std::span<const double> times_us,
                              std::span<const double> signal);

// --- Power laws ---------------------------------------------------------------

struct PowerLawFit {
    double base_hz = 0.0;   // constant offset
    double amplitude = 0.0; // Hz per (power unit)^n, or rate at t = t_ref
    double exponent = 0.0;
    double base_err = 0.0, amplitude_err = 0.0, exponent_err = 0.0;
    double residual_norm = 0.0;
};

// Gamma(P) = base + A P^n fitted in log-rate space (multiplicative noise).
// Needs >= 4 distinct powers including one near zero.
PowerLawFit fit_power_law(std::span<const double> powers_w,
                          std::span<const double> rates_hz);

// Gamma(t) = Gamma_1 t^-p via least squares on log-log data; amplitude is
// the rate at t = 1 (reference day), exponent the positive decay power p.
PowerLawFit fit_time_decay(std::span<const double> t_days,
                           std::span<const double> rates_hz);

// --- Linear correlation -------------------------------------------------------

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_err = 0.0;
    double intercept_err = 0.0;
    bool qp_limited = false; // slope more than 2 sigma above zero
};

LinearFit linear_regression(std::span<const double> x, std::span<const double> y);

} // namespace parityscope::fitkit
