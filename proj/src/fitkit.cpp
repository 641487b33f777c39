#include "parityscope/fitkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "parityscope/errors.hpp"

namespace parityscope::fitkit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogTiny = -69.0; // exp(-69) ~ 1e-30, amplitude floor

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals,
                                 const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& r0) {
    const double sqrt_eps = std::sqrt(2.2204460492503131e-16);
    Eigen::MatrixXd j(r0.size(), p.size());
    Eigen::VectorXd probe = p;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double h = sqrt_eps * std::max(std::abs(p[k]), 1e-8);
        probe[k] = p[k] + h;
        j.col(k) = (residuals(probe) - r0) / h;
        probe[k] = p[k];
    }
    return j;
}

void clamp_into(Eigen::VectorXd& p, const Eigen::VectorXd* lower,
                const Eigen::VectorXd* upper) {
    if (lower)
        for (Eigen::Index i = 0; i < p.size(); ++i)
            p[i] = std::max(p[i], (*lower)[i]);
    if (upper)
        for (Eigen::Index i = 0; i < p.size(); ++i)
            p[i] = std::min(p[i], (*upper)[i]);
}

Eigen::MatrixXd covariance_at(const Eigen::MatrixXd& j, double cost,
                              Eigen::Index n_res) {
    const Eigen::Index n_par = j.cols();
    const double dof = static_cast<double>(n_res - n_par);
    const double s2 = dof > 0 ? 2.0 * cost / dof : 0.0;
    Eigen::MatrixXd jtj = j.transpose() * j;
    return s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
}

} // namespace

NlsResult levenberg_marquardt(const ResidualFn& residuals,
                              const JacobianFn* jacobian, Eigen::VectorXd p,
                              const Eigen::VectorXd* lower,
                              const Eigen::VectorXd* upper,
                              const NlsOptions& opts) {
    clamp_into(p, lower, upper);
    Eigen::VectorXd r = residuals(p);
    if (r.size() < p.size())
        throw std::invalid_argument("levenberg_marquardt: fewer residuals than parameters");
    double cost = 0.5 * r.squaredNorm();

    double lambda = 1e-3;
    Eigen::MatrixXd j;
    bool j_fresh = false;
    int iter = 0;
    bool converged = false;

    for (; iter < opts.max_iterations; ++iter) {
        if (!j_fresh) {
            j = jacobian ? (*jacobian)(p) : numeric_jacobian(residuals, p, r);
            j_fresh = true;
        }
        Eigen::MatrixXd jtj = j.transpose() * j;
        Eigen::VectorXd g = j.transpose() * r;

        double diag_max = jtj.diagonal().cwiseAbs().maxCoeff();
        if (!(diag_max > 0.0) || !std::isfinite(diag_max))
            throw FitError("levenberg_marquardt: singular Jacobian");

        bool stepped = false;
        while (lambda < 1e14) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                a(i, i) += lambda * std::max(jtj(i, i), 1e-14 * diag_max);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
            if (ldlt.info() != Eigen::Success) {
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd delta = ldlt.solve(-g);
            Eigen::VectorXd trial = p + delta;
            clamp_into(trial, lower, upper);
            Eigen::VectorXd r_trial = residuals(trial);
            const double cost_trial = 0.5 * r_trial.squaredNorm();
            if (std::isfinite(cost_trial) && cost_trial <= cost) {
                const double step = (trial - p).norm();
                const double drop = cost - cost_trial;
                p = trial;
                r = std::move(r_trial);
                cost = cost_trial;
                lambda = std::max(lambda / 3.0, 1e-12);
                j_fresh = false;
                stepped = true;
                if (step <= opts.step_tol * (p.norm() + opts.step_tol) ||
                    drop <= opts.residual_tol * std::max(cost, 1e-300))
                    converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // no downhill step found at any damping: stationary point
            converged = true;
        }
        if (converged) break;
    }
    if (!converged)
        throw FitError("levenberg_marquardt: no convergence after " +
                       std::to_string(opts.max_iterations) + " iterations");

    if (!j_fresh)
        j = jacobian ? (*jacobian)(p) : numeric_jacobian(residuals, p, r);

    NlsResult out;
    out.params = std::move(p);
    out.covariance = covariance_at(j, cost, r.size());
    out.residual_norm = std::sqrt(2.0 * cost);
    out.iterations = iter + 1;
    out.converged = true;
    return out;
}

NlsResult nls_fit(const ModelFn& model, std::span<const double> x,
                  std::span<const double> y, std::span<const double> weights,
                  std::span<const double> init, std::span<const double> lower,
                  std::span<const double> upper, const NlsOptions& opts) {
    if (x.size() != y.size())
        throw std::invalid_argument("nls_fit: x and y length mismatch");
    if (!weights.empty() && weights.size() != x.size())
        throw std::invalid_argument("nls_fit: weights length mismatch");
    if (x.size() < init.size())
        throw std::invalid_argument("nls_fit: fewer points than parameters");

    const Eigen::Index n = static_cast<Eigen::Index>(x.size());
    ResidualFn residuals = [&, n](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(n);
        const std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = weights.empty() ? 1.0 : weights[i];
            r[i] = w * (model(x[i], ps) - y[i]);
        }
        return r;
    };

    Eigen::VectorXd p0 = Eigen::Map<const Eigen::VectorXd>(init.data(), init.size());
    Eigen::VectorXd lo, hi;
    const Eigen::VectorXd* lo_p = nullptr;
    const Eigen::VectorXd* hi_p = nullptr;
    if (!lower.empty()) {
        lo = Eigen::Map<const Eigen::VectorXd>(lower.data(), lower.size());
        lo_p = &lo;
    }
    if (!upper.empty()) {
        hi = Eigen::Map<const Eigen::VectorXd>(upper.data(), upper.size());
        hi_p = &hi;
    }
    return levenberg_marquardt(residuals, nullptr, p0, lo_p, hi_p, opts);
}

// --- Lorentzian mixture -------------------------------------------------------

double lorentzian_psd(double f_hz, double amplitude, double corner_hz) {
    const double pf = kPi * f_hz;
    return amplitude * corner_hz / (corner_hz * corner_hz + pf * pf);
}

namespace {

struct LorFitData {
    Eigen::VectorXd f;    // positive frequencies
    Eigen::VectorXd logy; // log PSD
};

// model and Jacobian in log space with log-parameters
// q = [log A_1..k, log G_1..k, log floor]
Eigen::VectorXd lor_residuals(const LorFitData& d, int k, const Eigen::VectorXd& q) {
    const Eigen::Index n = d.f.size();
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pf2 = kPi * d.f[i] * kPi * d.f[i];
        double s = std::exp(q[2 * k]);
        for (int c = 0; c < k; ++c) {
            const double g = std::exp(q[k + c]);
            s += std::exp(q[c]) * g / (g * g + pf2);
        }
        r[i] = std::log(std::max(s, 1e-300)) - d.logy[i];
    }
    return r;
}

Eigen::MatrixXd lor_jacobian(const LorFitData& d, int k, const Eigen::VectorXd& q) {
    const Eigen::Index n = d.f.size();
    Eigen::MatrixXd j(n, 2 * k + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pf2 = kPi * d.f[i] * kPi * d.f[i];
        const double floor = std::exp(q[2 * k]);
        double s = floor;
        double part[4];
        double g2[4];
        for (int c = 0; c < k; ++c) {
            const double g = std::exp(q[k + c]);
            g2[c] = g * g;
            part[c] = std::exp(q[c]) * g / (g2[c] + pf2);
            s += part[c];
        }
        s = std::max(s, 1e-300);
        for (int c = 0; c < k; ++c) {
            j(i, c) = part[c] / s;
            j(i, k + c) = part[c] * (pf2 - g2[c]) / (g2[c] + pf2) / s;
        }
        j(i, 2 * k) = floor / s;
    }
    return j;
}

struct LorKFit {
    Eigen::VectorXd q;
    double ssr = 0.0;
    bool converged = false;
    int iterations = 0;
    Eigen::MatrixXd j;
};

// initial corner candidates and linear amplitude solves on a log-decimated
// subset, then LM refinement from the best few starts
LorKFit fit_lorentzian_k(const LorFitData& d, int k) {
    const Eigen::Index n = d.f.size();

    // log-decimated subset for the grid search
    std::vector<Eigen::Index> pick;
    {
        const double f0 = d.f[0], f1 = d.f[n - 1];
        const int target = 400;
        Eigen::Index last = -1;
        for (int i = 0; i < target; ++i) {
            const double fc =
                f0 * std::pow(f1 / f0, static_cast<double>(i) / (target - 1));
            Eigen::Index idx =
                std::lower_bound(d.f.data(), d.f.data() + n, fc) - d.f.data();
            idx = std::min(idx, n - 1);
            if (idx != last) pick.push_back(idx);
            last = idx;
        }
    }
    Eigen::VectorXd fs(pick.size()), ys(pick.size());
    for (std::size_t i = 0; i < pick.size(); ++i) {
        fs[i] = d.f[pick[i]];
        ys[i] = std::exp(d.logy[pick[i]]);
    }

    // corner candidates spanning the data band (keeps the fit equivariant
    // under rescaling of the frequency axis)
    const int n_cand = 14;
    std::vector<double> cand(n_cand);
    for (int i = 0; i < n_cand; ++i)
        cand[i] = d.f[0] * std::pow(0.9 * d.f[n - 1] / d.f[0],
                                    static_cast<double>(i) / (n_cand - 1));

    struct Start {
        double score;
        Eigen::VectorXd q;
    };
    std::vector<Start> starts;

    std::vector<int> comb(k);
    for (int i = 0; i < k; ++i) comb[i] = i;
    while (true) {
        // linear LS for amplitudes + floor at fixed corners
        Eigen::MatrixXd a(fs.size(), k + 1);
        for (int c = 0; c < k; ++c)
            for (Eigen::Index i = 0; i < fs.size(); ++i)
                a(i, c) = lorentzian_psd(fs[i], 1.0, cand[comb[c]]);
        a.col(k).setOnes();
        Eigen::VectorXd coef = a.colPivHouseholderQr().solve(ys);
        for (Eigen::Index i = 0; i < coef.size(); ++i)
            coef[i] = std::max(coef[i], 1e-30);
        double score = 0.0;
        for (Eigen::Index i = 0; i < fs.size(); ++i) {
            const double m = std::max((a.row(i) * coef).value(), 1e-300);
            const double res = std::log(m) - std::log(ys[i]);
            score += res * res;
        }
        Eigen::VectorXd q(2 * k + 1);
        for (int c = 0; c < k; ++c) {
            q[c] = std::log(coef[c]);
            q[k + c] = std::log(cand[comb[c]]);
        }
        q[2 * k] = std::log(coef[k]);
        starts.push_back({score, std::move(q)});

        // next combination
        int pos = k - 1;
        while (pos >= 0 && comb[pos] == n_cand - k + pos) --pos;
        if (pos < 0) break;
        ++comb[pos];
        for (int i = pos + 1; i < k; ++i) comb[i] = comb[i - 1] + 1;
    }
    std::sort(starts.begin(), starts.end(),
              [](const Start& a, const Start& b) { return a.score < b.score; });

    ResidualFn residuals = [&d, k](const Eigen::VectorXd& q) {
        return lor_residuals(d, k, q);
    };
    JacobianFn jac = [&d, k](const Eigen::VectorXd& q) {
        return lor_jacobian(d, k, q);
    };
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(2 * k + 1, kLogTiny);

    LorKFit best;
    bool have = false;
    const std::size_t n_starts = std::min<std::size_t>(starts.size(), 4);
    for (std::size_t s = 0; s < n_starts; ++s) {
        NlsOptions opts;
        opts.max_iterations = 400;
        try {
            NlsResult res =
                levenberg_marquardt(residuals, &jac, starts[s].q, &lo, nullptr, opts);
            const double ssr = res.residual_norm * res.residual_norm;
            if (!have || ssr < best.ssr) {
                best.q = res.params;
                best.ssr = ssr;
                best.converged = res.converged;
                best.iterations = res.iterations;
                have = true;
            }
        } catch (const FitError&) {
            // try the next start
        }
    }
    if (!have) throw FitError("fit_lorentzian_sum: no start converged");
    best.j = lor_jacobian(d, k, best.q);
    return best;
}

} // namespace

double LorentzianFit::rate_hz() const {
    for (const auto& c : components)
        if (c.significant) return c.corner_hz;
    return components.empty() ? 0.0 : components.front().corner_hz;
}

LorentzianFit fit_lorentzian_sum(const spectral::Spectrum& spectrum, int k) {
    if (k < 1 || k > 4)
        throw std::invalid_argument("fit_lorentzian_sum: k must be in 1..4");

    LorFitData d;
    {
        std::vector<double> f, y;
        f.reserve(spectrum.freqs_hz.size());
        for (std::size_t i = 0; i < spectrum.freqs_hz.size(); ++i) {
            if (spectrum.freqs_hz[i] > 0.0 && spectrum.psd[i] > 0.0) {
                f.push_back(spectrum.freqs_hz[i]);
                y.push_back(std::log(spectrum.psd[i]));
            }
        }
        if (f.size() < static_cast<std::size_t>(10 * k))
            throw std::invalid_argument(
                "fit_lorentzian_sum: need at least 10k bins above DC");
        d.f = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
        d.logy = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
    }
    const Eigen::Index n = d.f.size();

    // fit every component count up to k, then select by BIC
    std::vector<LorKFit> fits;
    fits.reserve(k);
    for (int kk = 1; kk <= k; ++kk) fits.push_back(fit_lorentzian_k(d, kk));

    const double sig2 =
        fits.back().ssr / std::max<double>(n - (2.0 * k + 1.0), 1.0);
    int chosen = 1;
    double best_bic = std::numeric_limits<double>::infinity();
    for (int kk = 1; kk <= k; ++kk) {
        const double bic = fits[kk - 1].ssr / sig2 +
                           (2.0 * kk + 1.0) * std::log(static_cast<double>(n));
        if (bic < best_bic - 1e-9) {
            best_bic = bic;
            chosen = kk;
        }
    }
    bool reduced = chosen < k;

    // degenerate corners: two within 5% -> reduce and refit (next lower k)
    auto degenerate = [&](const LorKFit& fit, int kk) {
        for (int a = 0; a < kk; ++a)
            for (int b = a + 1; b < kk; ++b) {
                const double ga = std::exp(fit.q[kk + a]);
                const double gb = std::exp(fit.q[kk + b]);
                if (std::abs(ga - gb) <= 0.05 * std::max(ga, gb)) return true;
            }
        return false;
    };
    while (chosen > 1 && degenerate(fits[chosen - 1], chosen)) {
        --chosen;
        reduced = true;
    }

    const LorKFit& fit = fits[chosen - 1];
    const int kk = chosen;

    LorentzianFit out;
    out.components_requested = k;
    out.reduced = reduced;
    out.converged = fit.converged;
    out.iterations = fit.iterations;
    out.residual_norm = std::sqrt(fit.ssr);

    // covariance of the log-parameters -> natural parameters by delta method
    Eigen::MatrixXd cov_log = covariance_at(fit.j, 0.5 * fit.ssr, n);
    Eigen::VectorXd nat(2 * kk + 1);
    for (Eigen::Index i = 0; i < nat.size(); ++i) nat[i] = std::exp(fit.q[i]);
    out.covariance = Eigen::MatrixXd(2 * kk + 1, 2 * kk + 1);
    for (Eigen::Index a = 0; a < nat.size(); ++a)
        for (Eigen::Index b = 0; b < nat.size(); ++b)
            out.covariance(a, b) = cov_log(a, b) * nat[a] * nat[b];

    double amp_total = 0.0;
    for (int c = 0; c < kk; ++c) amp_total += nat[c];
    std::vector<int> order(kk);
    for (int c = 0; c < kk; ++c) order[c] = c;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return nat[kk + a] < nat[kk + b]; });
    for (int c : order) {
        LorentzianComponent comp;
        comp.amplitude = nat[c];
        comp.corner_hz = nat[kk + c];
        comp.amplitude_err = std::sqrt(std::max(out.covariance(c, c), 0.0));
        comp.corner_err =
            std::sqrt(std::max(out.covariance(kk + c, kk + c), 0.0));
        comp.significant = comp.amplitude > 1e-4 * amp_total;
        out.components.push_back(comp);
    }
    out.noise_floor = nat[2 * kk];
    out.noise_floor_err =
        std::sqrt(std::max(out.covariance(2 * kk, 2 * kk), 0.0));
    return out;
}

// --- Ramsey two-tone ----------------------------------------------------------

RamseyFit fit_two_tone_ramsey(std::span<const double> times_us,
                              std::span<const double> signal) {
    const std::size_t n = times_us.size();
    if (n != signal.size())
        throw std::invalid_argument("fit_two_tone_ramsey: length mismatch");
    if (n < 50)
        throw std::invalid_argument("fit_two_tone_ramsey: need >= 50 samples");
    const double dt = times_us[1] - times_us[0];
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs((times_us[i] - times_us[i - 1]) - dt) > 1e-6 * dt)
            throw std::invalid_argument("fit_two_tone_ramsey: non-uniform grid");

    // init from the two largest local maxima of the DFT magnitude
    double mean = 0.0;
    for (double v : signal) mean += v;
    mean /= static_cast<double>(n);

    const std::size_t n_bins = n / 2 + 1;
    std::vector<double> mag(n_bins, 0.0);
    for (std::size_t kbin = 0; kbin < n_bins; ++kbin) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ph = -2.0 * kPi * static_cast<double>(kbin) *
                              static_cast<double>(i) / static_cast<double>(n);
            acc += (signal[i] - mean) * std::polar(1.0, ph);
        }
        mag[kbin] = std::abs(acc);
    }
    const double df_mhz = 1.0 / (static_cast<double>(n) * dt);

    struct Peak {
        std::size_t bin;
        double mag;
    };
    std::vector<Peak> peaks;
    for (std::size_t kbin = 1; kbin + 1 < n_bins; ++kbin)
        if (mag[kbin] > mag[kbin - 1] && mag[kbin] >= mag[kbin + 1])
            peaks.push_back({kbin, mag[kbin]});
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.mag > b.mag; });

    if (peaks.size() < 2 || peaks[1].mag < 0.1 * peaks[0].mag ||
        std::abs(static_cast<long>(peaks[0].bin) -
                 static_cast<long>(peaks[1].bin)) < 2)
        throw DegenerateTones("fit_two_tone_ramsey: tones unresolvable (closer "
                              "than two grid bins)");

    double f1 = static_cast<double>(peaks[0].bin) * df_mhz;
    double f2 = static_cast<double>(peaks[1].bin) * df_mhz;
    if (f1 > f2) std::swap(f1, f2);

    double vmin = signal[0], vmax = signal[0];
    for (double v : signal) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    const double span_t = times_us[n - 1] - times_us[0];

    // p = [f_e, f_o, t2*, amplitude, offset, phase]
    Eigen::VectorXd p0(6);
    p0 << f1, f2, span_t / 2.0, (vmax - vmin) / 2.0, mean, 0.0;
    Eigen::VectorXd lo(6), hi(6);
    lo << 0.0, 0.0, dt, -2.0 * (vmax - vmin + 1e-12), vmin - (vmax - vmin),
        -2.0 * kPi;
    hi << 2.0 / dt, 2.0 / dt, 1e4 * span_t, 2.0 * (vmax - vmin + 1e-12),
        vmax + (vmax - vmin), 2.0 * kPi;

    ResidualFn residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = times_us[i];
            const double env = p[3] * std::exp(-t / p[2]);
            const double m = p[4] + env * 0.5 *
                                        (std::cos(2.0 * kPi * p[0] * t + p[5]) +
                                         std::cos(2.0 * kPi * p[1] * t + p[5]));
            r[static_cast<Eigen::Index>(i)] = m - signal[i];
        }
        return r;
    };
    NlsOptions opts;
    opts.max_iterations = 500;
    NlsResult res = levenberg_marquardt(residuals, nullptr, p0, &lo, &hi, opts);

    RamseyFit out;
    out.f_e_mhz = res.params[0];
    out.f_o_mhz = res.params[1];
    out.t2_star_us = res.params[2];
    out.amplitude = res.params[3];
    out.offset = res.params[4];
    out.phase = res.params[5];
    if (out.f_e_mhz > out.f_o_mhz) {
        std::swap(out.f_e_mhz, out.f_o_mhz);
        std::swap(res.covariance(0, 0), res.covariance(1, 1));
    }
    out.f_e_err = std::sqrt(std::max(res.covariance(0, 0), 0.0));
    out.f_o_err = std::sqrt(std::max(res.covariance(1, 1), 0.0));
    out.t2_star_err = std::sqrt(std::max(res.covariance(2, 2), 0.0));
    out.residual_norm = res.residual_norm;
    return out;
}

// --- Power laws -----------------------------------------------------------------

PowerLawFit fit_power_law(std::span<const double> powers_w,
                          std::span<const double> rates_hz) {
    const std::size_t n = powers_w.size();
    if (n != rates_hz.size())
        throw std::invalid_argument("fit_power_law: length mismatch");
    std::vector<double> distinct(powers_w.begin(), powers_w.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4)
        throw std::invalid_argument("fit_power_law: need >= 4 distinct powers");
    for (double r : rates_hz)
        if (!(r > 0.0))
            throw std::invalid_argument("fit_power_law: rates must be > 0");
    for (double p : powers_w)
        if (p < 0.0)
            throw std::invalid_argument("fit_power_law: powers must be >= 0");

    // q = [log base, log amp', n] with amp' = amp * Pmax^n, so the amplitude
    // parameter stays O(rate) regardless of the power unit
    const double pmax = distinct.back();
    double rmin = rates_hz[0], rmax = rates_hz[0];
    for (double r : rates_hz) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }

    ResidualFn residuals = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = powers_w[i] / pmax;
            const double model = std::exp(q[0]) +
                                 std::exp(q[1]) * (x > 0.0 ? std::pow(x, q[2]) : 0.0);
            r[static_cast<Eigen::Index>(i)] =
                std::log(std::max(model, 1e-300)) - std::log(rates_hz[i]);
        }
        return r;
    };

    Eigen::VectorXd lo(3), hi(3);
    lo << std::log(rmin * 1e-6), std::log(rmax * 1e-9), 0.05;
    hi << std::log(rmax * 10.0), std::log(rmax * 1e3), 10.0;

    NlsResult best;
    bool have = false;
    for (double n0 : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        Eigen::VectorXd q0(3);
        q0 << std::log(std::max(rmin * 0.5, 1e-12)),
            std::log(std::max(rmax - rmin, rmax * 1e-3)), n0;
        try {
            NlsOptions opts;
            opts.max_iterations = 400;
            NlsResult res = levenberg_marquardt(residuals, nullptr, q0, &lo, &hi, opts);
            if (!have || res.residual_norm < best.residual_norm) {
                best = res;
                have = true;
            }
        } catch (const FitError&) {
        }
    }
    if (!have) throw FitError("fit_power_law: no start converged");

    PowerLawFit out;
    const double nfit = best.params[2];
    out.base_hz = std::exp(best.params[0]);
    out.exponent = nfit;
    out.amplitude = std::exp(best.params[1]) / std::pow(pmax, nfit);
    out.residual_norm = best.residual_norm;
    out.base_err =
        out.base_hz * std::sqrt(std::max(best.covariance(0, 0), 0.0));
    out.exponent_err = std::sqrt(std::max(best.covariance(2, 2), 0.0));
    // amp = exp(q1) pmax^-n: propagate both q1 and n
    const double lp = std::log(pmax);
    const double var_amp_log = best.covariance(1, 1) +
                               lp * lp * best.covariance(2, 2) -
                               2.0 * lp * best.covariance(1, 2);
    out.amplitude_err = out.amplitude * std::sqrt(std::max(var_amp_log, 0.0));
    return out;
}

PowerLawFit fit_time_decay(std::span<const double> t_days,
                           std::span<const double> rates_hz) {
    const std::size_t n = t_days.size();
    if (n != rates_hz.size())
        throw std::invalid_argument("fit_time_decay: length mismatch");
    if (n < 3)
        throw std::invalid_argument("fit_time_decay: need >= 3 points");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(t_days[i] > 0.0))
            throw std::invalid_argument("fit_time_decay: times must be > 0");
        if (!(rates_hz[i] > 0.0))
            throw std::invalid_argument("fit_time_decay: rates must be > 0");
    }

    // log Gamma = log Gamma_1 - p log t: ordinary least squares
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(t_days[i]);
        ly[i] = std::log(rates_hz[i]);
    }
    LinearFit line = linear_regression(lx, ly);

    PowerLawFit out;
    out.exponent = -line.slope;
    out.exponent_err = line.slope_err;
    out.amplitude = std::exp(line.intercept);
    out.amplitude_err = out.amplitude * line.intercept_err;
    out.base_hz = 0.0;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (line.intercept + line.slope * lx[i]);
        ssr += r * r;
    }
    out.residual_norm = std::sqrt(ssr);
    return out;
}

LinearFit linear_regression(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size())
        throw std::invalid_argument("linear_regression: length mismatch");
    if (n < 3)
        throw std::invalid_argument("linear_regression: need >= 3 points");

    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("linear_regression: degenerate x values");

    LinearFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (out.intercept + out.slope * x[i]);
        ssr += r * r;
    }
    const double s2 = ssr / static_cast<double>(n - 2);
    out.slope_err = std::sqrt(s2 / sxx);
    out.intercept_err = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    out.qp_limited = out.slope > 2.0 * out.slope_err;
    return out;
}

} // namespace parityscope::fitkit
