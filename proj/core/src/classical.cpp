#include "bque/classical.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bque/parallel.hpp"

namespace bque {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kMinFlight = 1e-12;

double wrap_pi(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}
}  // namespace

Collision next_collision(const BilliardDomain& domain, const PhasePoint& state) {
    const Vec2 d{std::cos(state.theta), std::sin(state.theta)};
    const auto& segs = domain.segments();

    double best_t = std::numeric_limits<double>::infinity();
    int best_seg = -1;
    double best_s = 0;

    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        const auto& seg = segs[i];
        if (seg.kind == BoundarySegment::Kind::line) {
            const Vec2 e = seg.p1 - seg.p0;
            const double den = d.cross(e);
            if (std::abs(den) < 1e-15) continue;
            const Vec2 rel = seg.p0 - state.r;
            const double t = rel.cross(e) / den;
            const double s = rel.cross(d) / den;
            if (t > kMinFlight && s >= 0.0 && s <= 1.0 && t < best_t) {
                best_t = t;
                best_seg = i;
                best_s = s * seg.length();
            }
        } else {
            const Vec2 rel = state.r - seg.center;
            const double b = d.dot(rel);
            const double disc = b * b - (rel.norm2() - seg.radius * seg.radius);
            if (disc < 0.0) continue;
            const double sq = std::sqrt(disc);
            const double sweep = seg.ang1 - seg.ang0;
            // robust quadratic roots: t^2 + 2 b t + c = 0
            for (const double t : {-b - sq, -b + sq}) {
                if (t <= kMinFlight || t >= best_t) continue;
                const Vec2 hit = state.r + t * d;
                const double ang = std::atan2(hit.y - seg.center.y, hit.x - seg.center.x);
                const double rel_ang = wrap_pi(ang - seg.ang0);
                const bool inside = (sweep >= 0) ? (rel_ang >= 0.0 && rel_ang <= sweep)
                                                 : (rel_ang <= 0.0 && rel_ang >= sweep);
                if (!inside) continue;
                best_t = t;
                best_seg = i;
                best_s = std::abs(rel_ang) * seg.radius;
            }
        }
    }
    if (best_seg < 0)
        throw std::runtime_error("billiard trajectory found no forward wall intersection");

    Collision c;
    c.time = best_t;
    c.segment = best_seg;
    c.point = state.r + best_t * d;
    const Vec2 n = segs[best_seg].outward_normal(best_s);
    const Vec2 dr = d - 2.0 * d.dot(n) * n;
    c.theta_out = std::atan2(dr.y, dr.x);
    return c;
}

double SignalSeries::mean() const {
    double s = 0;
    for (double v : samples) s += v;
    return samples.empty() ? 0.0 : s / samples.size();
}

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

PhasePoint random_phase_point(const BilliardDomain& domain, std::mt19937_64& rng) {
    // uniform position by rejection from the bounding box, uniform direction
    double xmax = 0, ymax = 0;
    for (const auto& seg : domain.segments()) {
        for (int j = 0; j <= 16; ++j) {
            const Vec2 p = seg.point(seg.length() * j / 16.0);
            xmax = std::max(xmax, p.x);
            ymax = std::max(ymax, p.y);
        }
    }
    std::uniform_real_distribution<double> ux(0.0, xmax), uy(0.0, ymax), ut(0.0, 2.0 * kPi);
    for (int tries = 0; tries < 100000; ++tries) {
        const Vec2 p{ux(rng), uy(rng)};
        if (domain.contains(p)) return {p, ut(rng)};
    }
    throw std::runtime_error("failed to draw an interior initial condition");
}

}  // namespace

SignalSeries simulate_signal(const BilliardDomain& domain, Vec2 nu, double offset,
                             std::uint64_t seed, double T, double dt) {
    if (dt <= 0.0 || T < dt) throw std::invalid_argument("need dt > 0 and T >= dt");
    nu = nu.unit();
    const std::int64_t m = std::llround(T / dt);

    SignalSeries out;
    out.dt = dt;
    out.T = m * dt;
    out.seed = seed;
    out.samples.resize(m);

    auto rng = make_rng(seed, 0);
    PhasePoint state = random_phase_point(domain, rng);

    double t_now = 0.0;
    std::int64_t j = 0;
    while (j < m) {
        const Collision c = next_collision(domain, state);
        const Vec2 d{std::cos(state.theta), std::sin(state.theta)};
        while (j < m && j * dt < t_now + c.time) {
            const Vec2 p = state.r + (j * dt - t_now) * d;
            out.samples[j] = (nu.dot(p) <= offset) ? 1.0 : 0.0;
            ++j;
        }
        t_now += c.time;
        state.r = c.point;
        state.theta = c.theta_out;
    }
    return out;
}

SignalSeries simulate_signal(const BilliardDomain& domain, const TestRegion& region,
                             std::uint64_t seed, double T, double dt) {
    return simulate_signal(domain, region.nu, region.offset, seed, T, dt);
}

// ------------------------------------------------------------- spectrum

double PowerSpectrum::value_at(double omega) const {
    const double w = std::abs(omega);
    const double x = w / domega;
    const auto n = static_cast<std::int64_t>(smoothed.size());
    const auto i = static_cast<std::int64_t>(x);
    if (i >= n - 1) {
        if (w > max_omega() * (1 + 1e-12))
            throw std::invalid_argument("frequency outside the spectrum grid");
        return smoothed.back();
    }
    const double f = x - i;
    return smoothed[i] * (1.0 - f) + smoothed[i + 1] * f;
}

double PowerSpectrum::integral_over_2pi() const {
    if (smoothed.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t j = 1; j + 1 < smoothed.size(); ++j) s += smoothed[j];
    s = 2.0 * s + smoothed.front() + smoothed.back();
    return s * domega / (2.0 * kPi);
}

SpectrumPoint spectrum_value(const PowerSpectrum& spectrum, double omega) {
    return {spectrum.value_at(omega), spectrum.error_at(omega)};
}

namespace {

// Gaussian smoothing of a one-sided spectrum with even reflection at both
// ends (exact for the two-sided spectrum of a real signal, and conserving
// the total power up to the kernel normalization).
std::vector<double> smooth_one_sided(const std::vector<double>& v, double domega,
                                     double omega_sm) {
    const std::int64_t n = static_cast<std::int64_t>(v.size());
    const std::int64_t half = std::min<std::int64_t>(
        n - 1, static_cast<std::int64_t>(std::ceil(5.0 * omega_sm / domega)));
    std::vector<double> kernel(half + 1);
    double norm = kernel[0] = 1.0;
    for (std::int64_t j = 1; j <= half; ++j) {
        kernel[j] = std::exp(-0.5 * (j * domega / omega_sm) * (j * domega / omega_sm));
        norm += 2.0 * kernel[j];
    }
    for (auto& kv : kernel) kv /= norm;

    auto reflect = [&](std::int64_t i) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
        return v[i];
    };
    std::vector<double> out(n);
    for (std::int64_t i = 0; i < n; ++i) {
        double s = kernel[0] * v[i];
        for (std::int64_t j = 1; j <= half; ++j) s += kernel[j] * (reflect(i - j) + reflect(i + j));
        out[i] = s;
    }
    return out;
}

double smooth_at(const std::vector<double>& v, double domega, double omega_sm, double omega) {
    const std::int64_t n = static_cast<std::int64_t>(v.size());
    const std::int64_t c = std::llround(std::abs(omega) / domega);
    const std::int64_t half = std::min<std::int64_t>(
        n - 1, static_cast<std::int64_t>(std::ceil(5.0 * omega_sm / domega)));
    auto reflect = [&](std::int64_t i) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
        return v[i];
    };
    double s = 0, norm = 0;
    for (std::int64_t j = -half; j <= half; ++j) {
        const double kv = std::exp(-0.5 * (j * domega / omega_sm) * (j * domega / omega_sm));
        s += kv * reflect(c + j);
        norm += kv;
    }
    return s / norm;
}

// One-shot FFTW plan shared by all workers; execute-on-arrays is reentrant.
class PeriodogramEngine {
  public:
    explicit PeriodogramEngine(std::int64_t m) : m_(m) {
        std::lock_guard lock(planning_mutex());
        in_ = fftw_alloc_real(m_);
        out_ = fftw_alloc_complex(m_ / 2 + 1);
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(m_), in_, out_, FFTW_ESTIMATE);
        if (!plan_) throw std::runtime_error("FFTW plan creation failed");
    }
    ~PeriodogramEngine() {
        std::lock_guard lock(planning_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    PeriodogramEngine(const PeriodogramEngine&) = delete;
    PeriodogramEngine& operator=(const PeriodogramEngine&) = delete;

    /// acc += |dt * DFT(samples - mean)|^2 / T, into a caller-owned buffer.
    void accumulate(std::span<const double> samples, double dt, std::vector<double>& acc,
                    double* mean_out) const {
        const std::int64_t nf = m_ / 2 + 1;
        double* in = fftw_alloc_real(m_);
        fftw_complex* out = fftw_alloc_complex(nf);
        double mean = 0;
        for (std::int64_t i = 0; i < m_; ++i) mean += samples[i];
        mean /= static_cast<double>(m_);
        for (std::int64_t i = 0; i < m_; ++i) in[i] = samples[i] - mean;
        fftw_execute_dft_r2c(plan_, in, out);
        const double T = m_ * dt;
        const double scale = dt * dt / T;
        for (std::int64_t j = 0; j < nf; ++j)
            acc[j] += scale * (out[j][0] * out[j][0] + out[j][1] * out[j][1]);
        fftw_free(in);
        fftw_free(out);
        if (mean_out) *mean_out = mean;
    }

    std::int64_t size() const { return m_; }

  private:
    static std::mutex& planning_mutex() {
        static std::mutex m;
        return m;
    }
    std::int64_t m_;
    double* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

PowerSpectrum finalize_spectrum(std::vector<std::vector<double>> batch_acc,
                                const std::vector<int>& batch_counts, double T, double dt,
                                double omega_sm, double mean_sum, double var_sum, int n_r,
                                double t_corr) {
    const std::int64_t nf = static_cast<std::int64_t>(batch_acc[0].size());
    PowerSpectrum ps;
    ps.domega = 2.0 * kPi / T;
    ps.omega_sm = omega_sm;
    ps.n_r = n_r;
    ps.rel_error = std::sqrt(2.0 * kPi / (n_r * omega_sm * T));
    ps.t_corr = t_corr;
    ps.a_bar = mean_sum / n_r;
    ps.variance = var_sum / n_r;

    ps.raw.assign(nf, 0.0);
    for (const auto& acc : batch_acc)
        for (std::int64_t j = 0; j < nf; ++j) ps.raw[j] += acc[j];
    for (auto& v : ps.raw) v /= n_r;
    ps.smoothed = smooth_one_sided(ps.raw, ps.domega, omega_sm);

    for (double w = 0.0; w <= std::min(5.0, ps.domega * (nf - 1)); w += 0.25)
        ps.batch_omegas.push_back(w);
    for (std::size_t b = 0; b < batch_acc.size(); ++b) {
        if (batch_counts[b] == 0) continue;
        std::vector<double> vals;
        for (double w : ps.batch_omegas)
            vals.push_back(smooth_at(batch_acc[b], ps.domega, omega_sm, w) / batch_counts[b]);
        ps.batch_values.push_back(std::move(vals));
    }
    return ps;
}

}  // namespace

PowerSpectrum estimate_power_spectrum(std::span<const SignalSeries> signals, double omega_sm,
                                      int n_batches) {
    if (signals.size() < 2)
        throw std::invalid_argument("error model needs at least two realizations");
    if (omega_sm <= 0.0) throw std::invalid_argument("smoothing width must be positive");
    const double dt = signals[0].dt;
    const std::int64_t m = static_cast<std::int64_t>(signals[0].samples.size());
    for (const auto& s : signals)
        if (s.dt != dt || static_cast<std::int64_t>(s.samples.size()) != m)
            throw std::invalid_argument("all realizations must share T and dt");

    const int nb = std::max(1, std::min<int>(n_batches, static_cast<int>(signals.size())));
    PeriodogramEngine engine(m);
    std::vector<std::vector<double>> batch_acc(nb, std::vector<double>(m / 2 + 1, 0.0));
    std::vector<int> batch_counts(nb, 0);
    double mean_sum = 0, var_sum = 0;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        const int b = static_cast<int>(i * nb / signals.size());
        double mean = 0;
        engine.accumulate(signals[i].samples, dt, batch_acc[b], &mean);
        ++batch_counts[b];
        mean_sum += mean;
        double v = 0;
        for (double x : signals[i].samples) v += (x - mean) * (x - mean);
        var_sum += v / static_cast<double>(m);
    }
    return finalize_spectrum(std::move(batch_acc), batch_counts, m * dt, dt, omega_sm, mean_sum,
                             var_sum, static_cast<int>(signals.size()), 2.0);
}

PowerSpectrum estimate_power_spectrum(const BilliardDomain& domain, Vec2 nu, double offset,
                                      const ClassicalParams& params) {
    if (params.n_r < 2) throw std::invalid_argument("need at least two realizations");
    const std::int64_t m = std::llround(params.T / params.dt);
    const int nb = std::max(1, std::min(params.n_batches, params.n_r));

    PeriodogramEngine engine(m);
    std::vector<std::vector<double>> batch_acc(nb, std::vector<double>(m / 2 + 1, 0.0));
    std::vector<int> batch_counts(nb, 0);
    std::vector<double> batch_mean(nb, 0.0), batch_var(nb, 0.0);

    // one chunk per batch: batch sums are sequential in seed order, so the
    // result is independent of the worker count
    const std::size_t chunk = (params.n_r + nb - 1) / nb;
    parallel_chunks(params.n_r, chunk, params.workers,
                    [&](std::size_t c, std::size_t b, std::size_t e) {
                        for (std::size_t i = b; i < e; ++i) {
                            const auto sig = simulate_signal(domain, nu, offset,
                                                             params.seed + i, params.T, params.dt);
                            double mean = 0;
                            engine.accumulate(sig.samples, params.dt, batch_acc[c], &mean);
                            ++batch_counts[c];
                            batch_mean[c] += mean;
                            double v = 0;
                            for (double x : sig.samples) v += (x - mean) * (x - mean);
                            batch_var[c] += v / static_cast<double>(m);
                        }
                    });

    double mean_sum = 0, var_sum = 0;
    for (int b = 0; b < nb; ++b) {
        mean_sum += batch_mean[b];
        var_sum += batch_var[b];
    }
    return finalize_spectrum(std::move(batch_acc), batch_counts, m * params.dt, params.dt,
                             params.omega_sm, mean_sum, var_sum, params.n_r, params.t_corr);
}

}  // namespace bque
