#include "parityscope/transmon.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "parityscope/errors.hpp"

namespace parityscope::transmon {

namespace {

constexpr double kConvergenceGhz = 1e-6; // 1 kHz
constexpr int kMaxDim = 1025;

Eigen::VectorXd lowest_levels(double ej, double ec, double ng_eff, int dim,
                              int n_levels) {
    const int half = dim / 2;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double n = static_cast<double>(i - half);
        h(i, i) = 4.0 * ec * (n - ng_eff) * (n - ng_eff);
        if (i + 1 < dim) {
            h(i, i + 1) = -ej / 2.0;
            h(i + 1, i) = -ej / 2.0;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h,
                                                          Eigen::EigenvaluesOnly);
    return solver.eigenvalues().head(n_levels);
}

} // namespace

void TransmonParams::validate() const {
    if (!(ej_ghz >= 0.0) || !std::isfinite(ej_ghz))
        throw std::invalid_argument("TransmonParams: ej_ghz must be >= 0");
    if (!(ec_ghz > 0.0) || !std::isfinite(ec_ghz))
        throw std::invalid_argument("TransmonParams: ec_ghz must be > 0");
    if (dim < 5 || dim % 2 == 0)
        throw std::invalid_argument("TransmonParams: dim must be odd and >= 5");
}

double ParitySpectrum::delta_f_mhz(std::size_t i) const {
    return std::abs(f_even_ghz.at(i) - f_odd_ghz.at(i)) * 1e3;
}

std::vector<double> ParitySpectrum::delta_f_mhz() const {
    std::vector<double> d(ng.size());
    for (std::size_t i = 0; i < ng.size(); ++i) d[i] = delta_f_mhz(i);
    return d;
}

std::vector<double> cpb_eigenenergies(const TransmonParams& params, double ng,
                                      Parity parity, int n_levels) {
    params.validate();
    if (!std::isfinite(ng)) throw std::invalid_argument("ng must be finite");
    if (n_levels < 1) throw std::invalid_argument("n_levels must be >= 1");

    const double ng_eff = (parity == Parity::Even) ? ng : ng + 0.5;
    int dim = std::max(params.dim, 2 * n_levels + 3);
    if (dim % 2 == 0) ++dim;

    Eigen::VectorXd levels =
        lowest_levels(params.ej_ghz, params.ec_ghz, ng_eff, dim, n_levels);
    while (true) {
        const int check_n = std::min(n_levels, 3);
        Eigen::VectorXd probe = lowest_levels(params.ej_ghz, params.ec_ghz,
                                              ng_eff, dim + 4, check_n);
        const double drift =
            (probe.head(check_n) - levels.head(check_n)).cwiseAbs().maxCoeff();
        if (drift < kConvergenceGhz) break;
        dim = 2 * dim + 1;
        if (dim > kMaxDim)
            throw TruncationError("cpb_eigenenergies: charge basis truncation "
                                  "did not converge below dim " +
                                  std::to_string(kMaxDim));
        levels = lowest_levels(params.ej_ghz, params.ec_ghz, ng_eff, dim, n_levels);
    }
    return {levels.data(), levels.data() + levels.size()};
}

double qubit_frequency_ghz(const TransmonParams& params, double ng, Parity parity) {
    const auto e = cpb_eigenenergies(params, ng, parity, 2);
    return e[1] - e[0];
}

ParitySpectrum parity_frequencies(const TransmonParams& params, int n_grid_points) {
    params.validate();
    if (n_grid_points < 32)
        throw std::invalid_argument("parity_frequencies: need >= 32 grid points");

    ParitySpectrum out;
    out.ng.resize(n_grid_points);
    out.f_even_ghz.resize(n_grid_points);
    out.f_odd_ghz.resize(n_grid_points);
    double fmin = std::numeric_limits<double>::infinity();
    double fmax = -fmin;
    for (int i = 0; i < n_grid_points; ++i) {
        const double ng = static_cast<double>(i) / n_grid_points;
        out.ng[i] = ng;
        out.f_even_ghz[i] = qubit_frequency_ghz(params, ng, Parity::Even);
        out.f_odd_ghz[i] = qubit_frequency_ghz(params, ng, Parity::Odd);
        fmin = std::min({fmin, out.f_even_ghz[i], out.f_odd_ghz[i]});
        fmax = std::max({fmax, out.f_even_ghz[i], out.f_odd_ghz[i]});
    }
    out.dispersion_mhz = (fmax - fmin) * 1e3;
    return out;
}

double fraction_below(std::span<const double> delta_mhz, double threshold_mhz) {
    if (threshold_mhz < 0.0)
        throw std::invalid_argument("fraction_below: threshold must be >= 0");
    const std::size_t n = delta_mhz.size();
    if (n < 2) throw std::invalid_argument("fraction_below: need >= 2 samples");

    // periodic grid with uniform spacing 1/n; piecewise-linear crossing
    double measure = 0.0;
    const double seg = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = delta_mhz[i];
        const double b = delta_mhz[(i + 1) % n];
        const bool ina = a <= threshold_mhz;
        const bool inb = b <= threshold_mhz;
        if (ina && inb) {
            measure += seg;
        } else if (ina != inb) {
            const double frac = (threshold_mhz - a) / (b - a);
            measure += seg * (ina ? frac : 1.0 - frac);
        }
    }
    return std::min(measure, 1.0);
}

double fraction_delta_f_below(const ParitySpectrum& spectrum, double threshold_mhz) {
    const auto d = spectrum.delta_f_mhz();
    return fraction_below(d, threshold_mhz);
}

} // namespace parityscope::transmon
