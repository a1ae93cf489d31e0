#include "bque/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bque/parallel.hpp"

namespace bque {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kMcDelta = 5e-4;  // near-field cut of the Coulomb MC kernel

double wrap_pi(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
}  // namespace

// ------------------------------------------------------- variance windows

std::vector<VariancePoint> variance_series(std::span<const DiagonalElement> diag, double a_bar,
                                           const WindowPlan& plan) {
    std::vector<DiagonalElement> sorted(diag.begin(), diag.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const DiagonalElement& a, const DiagonalElement& b) { return a.k < b.k; });
    const int total = static_cast<int>(sorted.size());
    if (total < plan.hard_min)
        throw std::invalid_argument("too few diagonal elements for a variance window");

    int target = plan.target_count;
    if (target <= 0) target = std::clamp(total / 8, 50, 1000);
    target = std::min(target, total);
    const int nw = std::max(1, total / target);

    std::vector<VariancePoint> out;
    for (int w = 0; w < nw; ++w) {
        const int lo = static_cast<int>(static_cast<long long>(total) * w / nw);
        const int hi = static_cast<int>(static_cast<long long>(total) * (w + 1) / nw);
        const int m = hi - lo;
        if (m < plan.hard_min) continue;
        VariancePoint p;
        p.count = m;
        p.E_lo = sorted[lo].k * sorted[lo].k;
        p.E_hi = sorted[hi - 1].k * sorted[hi - 1].k;
        double esum = 0, vsum = 0;
        for (int i = lo; i < hi; ++i) {
            esum += sorted[i].k * sorted[i].k;
            const double d = sorted[i].value - a_bar;
            vsum += d * d;
        }
        p.E_center = esum / m;
        p.variance = vsum / m;
        p.rel_error = std::sqrt(2.0 / m);
        out.push_back(p);
    }
    if (out.empty()) throw std::invalid_argument("window plan produced no usable window");
    return out;
}

double jackknife_variance_error(std::span<const double> squared_deviations) {
    const int m = static_cast<int>(squared_deviations.size());
    if (m < 2) return 0.0;
    double sum = 0;
    for (double s : squared_deviations) sum += s;
    // leave-one-out replicates; their mean equals the full-sample variance
    const double v = sum / m;
    double acc = 0;
    for (double s : squared_deviations) {
        const double vi = (sum - s) / (m - 1);
        acc += (vi - v) * (vi - v);
    }
    return std::sqrt((m - 1.0) / m * acc);
}

// --------------------------------------------------------------- fitting

double PowerLawFit::value_at(double E) const { return a * std::pow(E, -gamma); }

PowerLawFit fit_power_law(std::span<const VariancePoint> points, double E_min) {
    std::vector<const VariancePoint*> used;
    for (const auto& p : points)
        if (p.E_center >= E_min) used.push_back(&p);
    if (used.size() < 4) throw std::invalid_argument("need at least four points above E_min");

    double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (const auto* p : used) {
        if (p->variance <= 0.0)
            throw std::invalid_argument("nonpositive variance point; cannot fit in log space");
        const double x = std::log(p->E_center);
        const double y = std::log(p->variance);
        const double w = 1.0 / (p->rel_error * p->rel_error);
        S += w;
        Sx += w * x;
        Sy += w * y;
        Sxx += w * x * x;
        Sxy += w * x * y;
    }
    const double D = S * Sxx - Sx * Sx;
    if (D <= 1e-12 * S * Sxx)
        throw std::invalid_argument("degenerate design: all windows at the same energy");

    PowerLawFit fit;
    const double slope = (S * Sxy - Sx * Sy) / D;
    fit.gamma = -slope;
    fit.log_a = (Sxx * Sy - Sx * Sxy) / D;
    fit.sigma_gamma = std::sqrt(S / D);
    fit.sigma_log_a = std::sqrt(Sxx / D);
    fit.a = std::exp(fit.log_a);
    fit.E_min = E_min;
    fit.points_used = static_cast<int>(used.size());
    for (const auto* p : used) {
        const double x = std::log(p->E_center);
        const double y = std::log(p->variance);
        const double r = y - (fit.log_a + slope * x);
        fit.chi2 += r * r / (p->rel_error * p->rel_error);
    }
    return fit;
}

PowerLawFit fit_power_law_auto(std::span<const VariancePoint> points) {
    std::vector<double> energies;
    for (const auto& p : points) energies.push_back(p.E_center);
    std::sort(energies.begin(), energies.end());
    if (energies.size() < 4) throw std::invalid_argument("need at least four variance points");

    // candidates whose halved cut genuinely extends the data set
    for (double e : energies) {
        if (e / 2.0 < energies.front()) continue;
        const int above = static_cast<int>(
            std::count_if(energies.begin(), energies.end(), [&](double x) { return x >= e; }));
        if (above < 4) break;
        const PowerLawFit fit = fit_power_law(points, e);
        const PowerLawFit halved = fit_power_law(points, e / 2.0);
        if (std::abs(fit.gamma - halved.gamma) < fit.sigma_gamma) return fit;
    }
    return fit_power_law(points, 0.0);
}

PowerLawFit fit_prefactor_fixed_gamma(std::span<const VariancePoint> points, double gamma,
                                      double E_min) {
    double S = 0, Sy = 0;
    int used = 0;
    for (const auto& p : points) {
        if (p.E_center < E_min || p.variance <= 0.0) continue;
        const double w = 1.0 / (p.rel_error * p.rel_error);
        S += w;
        Sy += w * (std::log(p.variance) + gamma * std::log(p.E_center));
        ++used;
    }
    if (used < 1) throw std::invalid_argument("no points above E_min");
    PowerLawFit fit;
    fit.gamma = gamma;
    fit.sigma_gamma = 0.0;
    fit.log_a = Sy / S;
    fit.sigma_log_a = std::sqrt(1.0 / S);
    fit.a = std::exp(fit.log_a);
    fit.E_min = E_min;
    fit.points_used = used;
    for (const auto& p : points) {
        if (p.E_center < E_min || p.variance <= 0.0) continue;
        const double r = std::log(p.variance) - (fit.log_a - gamma * std::log(p.E_center));
        fit.chi2 += r * r / (p.rel_error * p.rel_error);
    }
    return fit;
}

CorrectedFit fit_corrected(std::span<const VariancePoint> points, double a_fp) {
    CorrectedFit out;
    auto chi2_of = [&](double b, double beta) {
        double c = 0;
        for (const auto& p : points) {
            const double damp = 1.0 - b * std::pow(p.E_center, -beta);
            if (damp <= 0.0) return std::numeric_limits<double>::infinity();
            const double m = std::log(a_fp) - 0.5 * std::log(p.E_center) + std::log(damp);
            const double r = std::log(p.variance) - m;
            c += r * r / (p.rel_error * p.rel_error);
        }
        return c;
    };

    const int nb = 81, nbeta = 99;
    const double b_hi_grid = 20.0, beta_lo_grid = 0.02, beta_hi_grid = 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nb; ++i) {
        const double b = b_hi_grid * i / (nb - 1);
        for (int j = 0; j < nbeta; ++j) {
            const double beta = beta_lo_grid + (beta_hi_grid - beta_lo_grid) * j / (nbeta - 1);
            const double c = chi2_of(b, beta);
            if (c < best) {
                best = c;
                out.b = b;
                out.beta = beta;
            }
        }
    }
    if (!std::isfinite(best)) return out;

    // local refinement by coordinate descent
    double db = b_hi_grid / (nb - 1), dbeta = (beta_hi_grid - beta_lo_grid) / (nbeta - 1);
    for (int round = 0; round < 24; ++round) {
        bool moved = false;
        const std::pair<double, double> steps[4] = {{db, 0.0}, {-db, 0.0}, {0.0, dbeta}, {0.0, -dbeta}};
        for (const auto& [sb, sbeta] : steps) {
            const double b = std::max(0.0, out.b + sb);
            const double beta = std::clamp(out.beta + sbeta, 1e-3, 2.0);
            const double c = chi2_of(b, beta);
            if (c < best) {
                best = c;
                out.b = b;
                out.beta = beta;
                moved = true;
            }
        }
        if (!moved) {
            db *= 0.5;
            dbeta *= 0.5;
        }
    }
    out.chi2 = best;
    out.converged = true;

    // delta chi2 <= 1 ranges on the original grid (profiled over the other)
    out.b_lo = b_hi_grid;
    out.b_hi = 0.0;
    out.beta_lo = beta_hi_grid;
    out.beta_hi = beta_lo_grid;
    for (int i = 0; i < nb; ++i) {
        const double b = b_hi_grid * i / (nb - 1);
        double prof = std::numeric_limits<double>::infinity();
        for (int j = 0; j < nbeta; ++j)
            prof = std::min(prof, chi2_of(b, beta_lo_grid +
                                                 (beta_hi_grid - beta_lo_grid) * j / (nbeta - 1)));
        if (prof <= best + 1.0) {
            out.b_lo = std::min(out.b_lo, b);
            out.b_hi = std::max(out.b_hi, b);
        }
    }
    for (int j = 0; j < nbeta; ++j) {
        const double beta = beta_lo_grid + (beta_hi_grid - beta_lo_grid) * j / (nbeta - 1);
        double prof = std::numeric_limits<double>::infinity();
        for (int i = 0; i < nb; ++i) prof = std::min(prof, chi2_of(b_hi_grid * i / (nb - 1), beta));
        if (prof <= best + 1.0) {
            out.beta_lo = std::min(out.beta_lo, beta);
            out.beta_hi = std::max(out.beta_hi, beta);
        }
    }
    out.identifiable =
        (out.beta_hi - out.beta_lo) < 0.8 * (beta_hi_grid - beta_lo_grid) && out.b > 0.0;
    return out;
}

// ------------------------------------------------------ Coulomb integral

namespace {

// positive-rho crossings of the ray p + rho u with one boundary segment
void ray_segment_crossings(const BoundarySegment& seg, Vec2 p, Vec2 u, std::vector<double>& out) {
    if (seg.kind == BoundarySegment::Kind::line) {
        const Vec2 e = seg.p1 - seg.p0;
        const double den = u.cross(e);
        if (std::abs(den) < 1e-15) return;
        const Vec2 rel = seg.p0 - p;
        const double rho = rel.cross(e) / den;
        const double s = rel.cross(u) / den;
        if (rho > 1e-13 && s >= 0.0 && s <= 1.0) out.push_back(rho);
    } else {
        const Vec2 rel = p - seg.center;
        const double b = u.dot(rel);
        const double disc = b * b - (rel.norm2() - seg.radius * seg.radius);
        if (disc < 0.0) return;
        const double sq = std::sqrt(disc);
        const double sweep = seg.ang1 - seg.ang0;
        for (const double rho : {-b - sq, -b + sq}) {
            if (rho <= 1e-13) continue;
            const Vec2 hit = p + rho * u;
            const double ang = std::atan2(hit.y - seg.center.y, hit.x - seg.center.x);
            const double rel_ang = wrap_pi(ang - seg.ang0);
            const bool inside = (sweep >= 0) ? (rel_ang >= 0.0 && rel_ang <= sweep)
                                             : (rel_ang <= 0.0 && rel_ang >= sweep);
            if (inside) out.push_back(rho);
        }
    }
}

// total length of { rho > 0 : p + rho u inside the clipped region }, for an
// interior point p: tracks domain membership and half-plane membership
// separately so that crossings of the extended dividing line outside the
// domain cannot desynchronize the parity walk
double ray_inside_length(const BilliardDomain& domain, Vec2 nu, double offset, Vec2 p, Vec2 u,
                         std::vector<std::pair<double, int>>& scratch) {
    scratch.clear();
    std::vector<double> rho;
    for (const auto& seg : domain.segments()) {
        rho.clear();
        ray_segment_crossings(seg, p, u, rho);
        for (double r : rho) scratch.push_back({r, 0});  // domain-boundary crossing
    }
    if (std::isfinite(offset)) {
        const double den = nu.dot(u);
        if (std::abs(den) > 1e-15) {
            const double r = (offset - nu.dot(p)) / den;
            if (r > 1e-13) scratch.push_back({r, 1});  // dividing-line crossing
        }
    }
    std::sort(scratch.begin(), scratch.end());

    bool in_domain = true;                          // p is interior
    bool in_half = !std::isfinite(offset) || nu.dot(p) <= offset;
    double last = 0.0, total = 0.0;
    for (const auto& [r, kind] : scratch) {
        if (in_domain && in_half) total += r - last;
        last = r;
        if (kind == 0)
            in_domain = !in_domain;
        else
            in_half = !in_half;
    }
    return total;  // rays always terminate on the boundary
}

struct OuterGrid {
    std::vector<Vec2> points;
    std::vector<double> weights;
};

// polar outer grid over the clipped region (domains are star-shaped)
OuterGrid outer_grid(const BilliardDomain& domain, Vec2 nu, double offset, int n_theta,
                     int n_radial) {
    bool has_symmetry = false;
    for (const auto& seg : domain.segments()) has_symmetry |= seg.is_symmetry_line;
    const double th_hi = has_symmetry ? kPi / 2 : 2.0 * kPi;

    const int panels = 48;
    const int per_panel = std::max(2, n_theta / panels);
    const auto& [gx, gw] = gauss_legendre(per_panel);
    const int rad_panels = 8;
    const int per_rad = std::max(2, n_radial / rad_panels);
    const auto& [rx, rw] = gauss_legendre(per_rad);

    OuterGrid grid;
    for (int tp = 0; tp < panels; ++tp) {
        const double a = th_hi * tp / panels, b = th_hi * (tp + 1) / panels;
        for (int i = 0; i < per_panel; ++i) {
            const double th = 0.5 * (b - a) * gx[i] + 0.5 * (a + b);
            const double wth = 0.5 * (b - a) * gw[i];
            const Vec2 u{std::cos(th), std::sin(th)};
            double rmax = domain.boundary_ray_distance(th);
            if (std::isfinite(offset)) {
                const double proj = nu.dot(u);
                if (proj > 1e-14) rmax = std::min(rmax, offset / proj);
            }
            if (rmax <= 0.0) continue;
            for (int rp = 0; rp < rad_panels; ++rp) {
                const double ra = rmax * rp / rad_panels, rb = rmax * (rp + 1) / rad_panels;
                for (int j = 0; j < per_rad; ++j) {
                    const double r = 0.5 * (rb - ra) * rx[j] + 0.5 * (ra + rb);
                    grid.points.push_back(r * u);
                    grid.weights.push_back(wth * 0.5 * (rb - ra) * rw[j] * r);
                }
            }
        }
    }
    return grid;
}

}  // namespace

double coulomb_integral(const BilliardDomain& domain, Vec2 nu, double offset,
                        const RwParams& params) {
    nu = nu.unit();
    const OuterGrid grid = outer_grid(domain, nu, offset, params.n_theta, params.n_radial);
    const int nphi = params.n_phi;

    std::vector<double> partial((grid.points.size() + 255) / 256, 0.0);
    parallel_chunks(grid.points.size(), 256, params.workers,
                    [&](std::size_t c, std::size_t b, std::size_t e) {
                        std::vector<std::pair<double, int>> scratch;
                        double acc = 0;
                        for (std::size_t i = b; i < e; ++i) {
                            // exact radial integral of 1/rho: the potential is
                            // the angular average of the inside-length
                            double pot = 0;
                            for (int j = 0; j < nphi; ++j) {
                                const double phi = 2.0 * kPi * (j + 0.5) / nphi;
                                pot += ray_inside_length(domain, nu, offset, grid.points[i],
                                                         {std::cos(phi), std::sin(phi)}, scratch);
                            }
                            pot *= 2.0 * kPi / nphi;
                            acc += grid.weights[i] * pot;
                        }
                        partial[c] = acc;
                    });
    double total = 0;
    for (double p : partial) total += p;
    return total;
}

RwPrefactor rw_prefactor(const BilliardDomain& domain, Vec2 nu, double offset,
                         const RwParams& params) {
    nu = nu.unit();
    RwPrefactor out;
    out.coulomb_integral = coulomb_integral(domain, nu, offset, params);

    // Monte Carlo cross-estimator with batch error
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& seg : domain.segments())
        for (int j = 0; j <= 64; ++j) {
            const Vec2 p = seg.point(seg.length() * j / 64.0);
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }

    const int nbatch = 20;
    std::vector<double> batch_mean(nbatch, 0.0);
    const long long per_batch = params.mc_pairs / nbatch;
    parallel_chunks(nbatch, 1, params.workers, [&](std::size_t c, std::size_t b, std::size_t) {
        std::seed_seq seq{static_cast<std::uint32_t>(params.seed),
                          static_cast<std::uint32_t>(params.seed >> 32),
                          static_cast<std::uint32_t>(b)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> ux(xmin, xmax), uy(ymin, ymax);
        auto draw = [&]() {
            for (;;) {
                const Vec2 p{ux(rng), uy(rng)};
                if (nu.dot(p) <= offset && domain.contains(p)) return p;
            }
        };
        // truncated kernel: the d < delta near-field is added back exactly
        // below (2 pi delta per unit area), keeping the sample variance
        // finite instead of log-divergent
        double acc = 0;
        for (long long i = 0; i < per_batch; ++i) {
            const Vec2 p = draw(), q = draw();
            const double d = (p - q).norm();
            if (d >= kMcDelta) acc += 1.0 / d;
        }
        batch_mean[c] = acc / per_batch;
        (void)b;
    });
    double mean = 0;
    for (double m : batch_mean) mean += m;
    mean /= nbatch;
    double sd = 0;
    for (double m : batch_mean) sd += (m - mean) * (m - mean);
    sd = std::sqrt(sd / (nbatch - 1.0) / nbatch);

    const double region_area =
        std::isfinite(offset) ? clipped_area(domain, nu, offset) : domain.area();
    const double near_field = 2.0 * kPi * kMcDelta * region_area;
    out.coulomb_mc = mean * region_area * region_area + near_field;
    out.mc_rel_error = sd * region_area * region_area / out.coulomb_mc;

    if (std::abs(out.coulomb_mc - out.coulomb_integral) >
        params.agree_tol * std::abs(out.coulomb_integral))
        throw std::runtime_error("Coulomb integral estimators disagree beyond tolerance");

    out.value = 2.0 / (kPi * domain.area()) * out.coulomb_integral;
    return out;
}

RwPrefactor rw_prefactor(const BilliardDomain& domain, const TestRegion& region,
                         const RwParams& params) {
    return rw_prefactor(domain, region.nu, region.offset, params);
}

FpPrefactor fp_prefactor(const PowerSpectrum& spectrum, const BilliardDomain& domain) {
    const double c0 = spectrum.value_at(0.0);
    return {2.0 * c0 / domain.area(), 2.0 * spectrum.rel_error * c0 / domain.area()};
}

// ----------------------------------------------------------- band profile

BandProfile band_profile(const ElementBlock& block, double window_k_lo, double window_k_hi,
                         const PowerSpectrum* spectrum, const BilliardDomain& domain,
                         double bin_width, double eps, double omega_range) {
    const int n = static_cast<int>(block.k.size());
    const int nbins = static_cast<int>(std::floor(omega_range / bin_width + 1e-9));

    BandProfile out;
    out.eps = eps;
    std::vector<double> sums(2 * nbins + 1, 0.0);
    std::vector<long long> counts(2 * nbins + 1, 0);

    double esum = 0;
    int n_window = 0;
    for (int i = 0; i < n; ++i) {
        if (block.k[i] < window_k_lo || block.k[i] > window_k_hi) continue;
        ++n_window;
        esum += block.k[i] * block.k[i];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dk = block.k[j] - block.k[i];
            const int b = static_cast<int>(std::lround(dk / bin_width));
            if (std::abs(b) > nbins) continue;
            if (std::abs(dk - b * bin_width) > eps) continue;
            const double a = block.values(i, j);
            sums[b + nbins] += a * a;
            counts[b + nbins] += 1;
        }
    }
    if (n_window == 0) throw std::invalid_argument("no modes inside the band-profile window");

    out.n_window = n_window;
    out.E_center = esum / n_window;
    out.delta_k = 2.0 * kPi / (std::sqrt(out.E_center) * domain.area());

    for (int b = -nbins; b <= nbins; ++b) {
        const double omega = b * bin_width;
        const double s = sums[b + nbins];
        const long long m = counts[b + nbins];
        out.omega.push_back(omega);
        out.pairs.push_back(m);
        const double v = out.delta_k / (2.0 * eps * n_window) * s;
        out.quantum.push_back(v);
        out.quantum_err.push_back(m > 0 ? v * std::sqrt(2.0 / m) : 0.0);
        out.sum_sq += s;
        if (spectrum) {
            out.classical.push_back(spectrum->value_at(omega) / domain.area() /
                                    std::sqrt(out.E_center));
            out.classical_err.push_back(spectrum->error_at(omega) / domain.area() /
                                        std::sqrt(out.E_center));
        }
    }
    return out;
}

double symmetry_factor(double diag_variance, const BandProfile& profile) {
    for (std::size_t i = 0; i < profile.omega.size(); ++i)
        if (profile.omega[i] == 0.0 && profile.quantum[i] > 0.0)
            return diag_variance / profile.quantum[i];
    throw std::invalid_argument("band profile has no populated central bin");
}

// --------------------------------------------------- extremes, histogram

ExtremeScan extreme_scan(std::span<const DiagonalElement> diag, double a_bar,
                         const PowerLawFit& fit, double threshold_sigmas) {
    if (diag.empty()) throw std::invalid_argument("no diagonal elements");
    ExtremeScan out;
    out.max_value = -1e300;
    out.min_value = 1e300;
    for (int i = 0; i < static_cast<int>(diag.size()); ++i) {
        const auto& d = diag[i];
        if (d.value > out.max_value) {
            out.max_value = d.value;
            out.max_index = i;
            out.max_k = d.k;
        }
        if (d.value < out.min_value) {
            out.min_value = d.value;
            out.min_index = i;
            out.min_k = d.k;
        }
        const double sigma = std::sqrt(fit.value_at(d.k * d.k));
        if (std::abs(d.value - a_bar) > threshold_sigmas * sigma) {
            ++out.exceed_count;
            out.outliers.push_back(i);
        }
    }
    out.exceed_density = static_cast<double>(out.exceed_count) / diag.size();
    return out;
}

namespace {
double ks_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}
}  // namespace

DeviationHistogram deviation_histogram(std::span<const DiagonalElement> diag, double a_bar,
                                       const PowerLawFit& fit, int bins) {
    DeviationHistogram out;
    out.n = static_cast<int>(diag.size());
    if (out.n == 0) throw std::invalid_argument("no diagonal elements");

    std::vector<double> z;
    z.reserve(diag.size());
    for (const auto& d : diag)
        z.push_back((d.value - a_bar) / std::sqrt(fit.value_at(d.k * d.k)));

    double mean = 0;
    for (double v : z) mean += v;
    mean /= out.n;
    double var = 0;
    for (double v : z) var += (v - mean) * (v - mean);
    var /= std::max(1, out.n - 1);
    out.mean = mean;
    out.variance = var;
    if (var < 1e-12) {
        out.degenerate = true;
        return out;
    }

    const double zmax = 5.0;
    out.edges.resize(bins + 1);
    out.counts.assign(bins, 0);
    out.gauss_reference.resize(bins);
    for (int i = 0; i <= bins; ++i) out.edges[i] = -zmax + 2.0 * zmax * i / bins;
    for (double v : z) {
        const int b = static_cast<int>((v + zmax) / (2.0 * zmax) * bins);
        if (b >= 0 && b < bins) ++out.counts[b];
    }
    for (int i = 0; i < bins; ++i)
        out.gauss_reference[i] = out.n * (gauss_cdf(out.edges[i + 1]) - gauss_cdf(out.edges[i]));

    std::sort(z.begin(), z.end());
    double d_stat = 0;
    for (int i = 0; i < out.n; ++i) {
        const double cdf = gauss_cdf(z[i]);
        d_stat = std::max(d_stat, std::abs(cdf - static_cast<double>(i) / out.n));
        d_stat = std::max(d_stat, std::abs(static_cast<double>(i + 1) / out.n - cdf));
    }
    out.ks_statistic = d_stat;
    const double sn = std::sqrt(static_cast<double>(out.n));
    out.ks_p_value = ks_q((sn + 0.12 + 0.11 / sn) * d_stat);
    return out;
}

std::vector<std::pair<double, double>> moment_sums(std::span<const DiagonalElement> diag,
                                                   double a_bar, double p) {
    std::vector<DiagonalElement> sorted(diag.begin(), diag.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const DiagonalElement& a, const DiagonalElement& b) { return a.k < b.k; });
    std::vector<std::pair<double, double>> out;
    double acc = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        acc += std::pow(std::abs(sorted[i].value - a_bar), p);
        out.push_back({sorted[i].k * sorted[i].k, acc / (i + 1)});
    }
    return out;
}

}  // namespace bque
