#pragma once

#include <span>
#include <vector>

namespace parityscope::qp {

inline constexpr double kStefanBoltzmann = 5.670374419e-8; // W m^-2 K^-4

// Generation/trapping/recombination constants plus the radiator thermal
// model. Quasiparticle densities are dimensionless; k_tunnel (elsewhere)
// carries the Hz conversion.
struct QpModelParams {
    double trapping_rate = 0.0;       // s, single-particle loss (1/s)
    double recombination_coeff = 0.0; // r, pairwise loss (1/s per density)
    double pair_breaking_eff = 1.0;   // epsilon, in [0, 1]
    double area_m2 = 1.2566e-5;       // radiator surface
    double gtilde_w_per_k2 = 1e-10;   // thermal conductance coefficient
    double sigma_sb = kStefanBoltzmann;
    double t_bath_k = 0.0;

    void validate() const; // throws std::invalid_argument
};

// Manganin wire geometry; dissipated power is I^2 R.
struct RadiatorParams {
    double length_m = 0.02;
    double diameter_m = 0.2e-3;
    double resistance_ohm = 2.0;

    double surface_area_m2() const;
    double dissipated_power_w(double current_a) const;
};

// T = sqrt(P / Gtilde) in the T_b << T limit of Wiedemann-Franz conduction.
// exact_balance solves P = Gtilde (T^2 - T_b^2) / 2 instead.
double radiator_temperature_k(double power_w, double gtilde_w_per_k2,
                              bool exact_balance = false, double t_bath_k = 0.0);

// Stefan-Boltzmann emitted power sigma A T^4.
double radiated_power_w(double area_m2, double temperature_k,
                        double sigma = kStefanBoltzmann);

// g = eps sigma A (P / Gtilde)^2.
double generation_rate(double power_w, const QpModelParams& params);

// Unique non-negative root of g - s x - r x^2 = 0. Throws NoSteadyState for
// g > 0 with s = r = 0.
double steady_state_density(double g, double s, double r);

// Gamma(P) = k_tunnel * x_qp(g(P)) + base_rate, ground truth for synthetic
// campaigns.
std::vector<double> predicted_rate_curve(std::span<const double> powers_w,
                                         const QpModelParams& params,
                                         double k_tunnel_hz,
                                         double base_rate_hz = 0.0);

} // namespace parityscope::qp
