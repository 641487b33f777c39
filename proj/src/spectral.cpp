#include "parityscope/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <stdexcept>

namespace parityscope::spectral {

namespace {

// FFTW planning is not thread-safe; execution of a ready plan is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    double* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;
    std::size_t n = 0;

    FftwBuffer(std::size_t size) : n(size) {
        in = fftw_alloc_real(n);
        out = fftw_alloc_complex(n / 2 + 1);
        if (!in || !out) throw std::bad_alloc();
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    ~FftwBuffer() {
        {
            std::lock_guard lock(plan_mutex());
            if (plan) fftw_destroy_plan(plan);
        }
        fftw_free(in);
        fftw_free(out);
    }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

} // namespace

double Spectrum::df_hz() const {
    if (freqs_hz.size() < 2)
        throw std::logic_error("Spectrum: frequency spacing undefined");
    return freqs_hz[1] - freqs_hz[0];
}

ToggleTrace toggle_transform(const sim::ParityTrace& trace) {
    if (trace.m.size() < 2)
        throw std::invalid_argument("toggle_transform: trace must have >= 2 shots");
    ToggleTrace out;
    out.dt_s = trace.dt_s;
    out.d.resize(trace.m.size() - 1);
    for (std::size_t i = 0; i + 1 < trace.m.size(); ++i)
        out.d[i] = trace.m[i + 1] == trace.m[i] ? 0 : 1;
    return out;
}

Spectrum periodogram(const ToggleTrace& d) {
    const std::size_t n = d.d.size();
    if (n < 64)
        throw std::invalid_argument("periodogram: trace shorter than 64 samples");
    if (!(d.dt_s > 0.0))
        throw std::invalid_argument("periodogram: dt must be > 0");

    FftwBuffer buf(n);
    for (std::size_t i = 0; i < n; ++i)
        buf.in[i] = static_cast<double>(d.d[i]);
    fftw_execute(buf.plan);

    const double duration = static_cast<double>(n) * d.dt_s;
    const double norm = d.dt_s * d.dt_s / duration;
    const std::size_t n_bins = n / 2 + 1;

    Spectrum s;
    s.duration_s = duration;
    s.n_averaged = 1;
    s.freqs_hz.resize(n_bins);
    s.psd.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double re = buf.out[k][0];
        const double im = buf.out[k][1];
        double p = norm * (re * re + im * im);
        // one-sided: double everything except DC and (for even n) Nyquist
        if (k != 0 && !(n % 2 == 0 && k == n / 2)) p *= 2.0;
        s.psd[k] = p;
        s.freqs_hz[k] = static_cast<double>(k) / duration;
    }
    return s;
}

Spectrum aggregate_spectra(std::span<const Spectrum> spectra) {
    if (spectra.empty())
        throw std::invalid_argument("aggregate_spectra: no spectra given");
    for (const auto& s : spectra)
        if (s.freqs_hz.size() < 2)
            throw std::invalid_argument("aggregate_spectra: degenerate spectrum");

    double df = spectra[0].df_hz();
    double nyquist = spectra[0].nyquist_hz();
    for (const auto& s : spectra) {
        df = std::min(df, s.df_hz());
        nyquist = std::min(nyquist, s.nyquist_hz());
    }

    const std::size_t n_bins =
        static_cast<std::size_t>(std::floor(nyquist / df * (1.0 + 1e-12))) + 1;
    Spectrum out;
    out.freqs_hz.resize(n_bins);
    out.psd.assign(n_bins, 0.0);
    out.n_averaged = 0;
    out.duration_s = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k)
        out.freqs_hz[k] = static_cast<double>(k) * df;

    for (const auto& s : spectra) {
        const auto& f = s.freqs_hz;
        std::size_t j = 0;
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double fk = out.freqs_hz[k];
            while (j + 2 < f.size() && f[j + 1] < fk) ++j;
            const double f0 = f[j], f1 = f[j + 1];
            const double w = std::clamp((fk - f0) / (f1 - f0), 0.0, 1.0);
            out.psd[k] += (1.0 - w) * s.psd[j] + w * s.psd[j + 1];
        }
        out.n_averaged += s.n_averaged;
        out.duration_s += s.duration_s;
    }
    const double inv = 1.0 / static_cast<double>(spectra.size());
    for (auto& p : out.psd) p *= inv;
    out.duration_s *= inv;
    return out;
}

namespace {

std::size_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
    // reflect without repeating the edge sample: -1 -> 1, n -> n-2
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return static_cast<std::size_t>(i);
}

} // namespace

std::vector<double> smooth_for_display(const ToggleTrace& trace,
                                       const SmoothMode& mode) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(trace.d.size());
    if (n == 0) return {};
    std::vector<double> x(trace.d.begin(), trace.d.end());

    if (const auto* g = std::get_if<GaussianSmooth>(&mode)) {
        if (!(g->sigma > 0.0))
            throw std::invalid_argument("smooth_for_display: sigma must be > 0");
        const std::ptrdiff_t radius =
            static_cast<std::ptrdiff_t>(std::ceil(4.0 * g->sigma));
        std::vector<double> kernel(2 * radius + 1);
        double sum = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
            const double v = std::exp(-0.5 * (static_cast<double>(i) / g->sigma) *
                                      (static_cast<double>(i) / g->sigma));
            kernel[i + radius] = v;
            sum += v;
        }
        for (auto& v : kernel) v /= sum;

        std::vector<double> out(n);
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::ptrdiff_t j = -radius; j <= radius; ++j)
                acc += kernel[j + radius] * x[reflect_index(i + j, n)];
            out[i] = acc;
        }
        return out;
    }

    const auto& ma = std::get<MovingAverage>(mode);
    if (ma.window < 1)
        throw std::invalid_argument("smooth_for_display: window must be >= 1");
    const std::ptrdiff_t lo = -(ma.window - 1) / 2;
    const std::ptrdiff_t hi = ma.window / 2;
    std::vector<double> out(n);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j)
            acc += x[reflect_index(i + j, n)];
        out[i] = acc / static_cast<double>(ma.window);
    }
    return out;
}

} // namespace parityscope::spectral
