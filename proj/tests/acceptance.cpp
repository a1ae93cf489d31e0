// Acceptance suite: one pass/fail line per criterion, sharing the expensive
// artifacts (production classical run, full Sinai catalog, element tables)
// across criteria. Exit status is the number of failed criteria; the final
// stretch check is informational only.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "bque/classical.hpp"
#include "bque/elements.hpp"
#include "bque/solver.hpp"
#include "bque/stats.hpp"
#include "support/bessel_zeros.hpp"
#include "support/integrate2d.hpp"

using namespace bque;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int id, bool pass, const std::string& what, double secs) {
    std::printf("[%s] criterion %2d (%5.1fs): %s\n", pass ? "PASS" : "FAIL", id, secs,
                what.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void info(int id, const std::string& what, double secs) {
    std::printf("[INFO] criterion %2d (%5.1fs): %s\n", id, secs, what.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// shared artifacts
struct Lab {
    BilliardDomain sinai = BilliardDomain::sinai(0.4, 0.7);
    BilliardDomain disk = BilliardDomain::quarter_disk();
    TestRegion region = build_test_region(sinai, Vec2{1.0, 2.0}.unit(), 0.55);
    unsigned workers = 0;

    std::unique_ptr<PowerSpectrum> spectrum;          // production classical run
    std::unique_ptr<SpectrumCatalog> catalog;         // Sinai k in [40, 160]
    std::unique_ptr<TraceTable> traces;               // catalog on the region curve
    std::vector<DiagonalElement> diagonal;
    std::unique_ptr<ElementBlock> block;              // k in [76, 134.1]
    double band_lo = 79.0, band_hi = 131.0;

    void build_classical() {
        Timer t;
        ClassicalParams p;
        p.workers = workers;
        spectrum = std::make_unique<PowerSpectrum>(
            estimate_power_spectrum(sinai, region.nu, region.offset, p));
        std::printf("... classical run: %zu grid points, a_bar=%.5f, C(0)=%.5g (%.1fs)\n",
                    spectrum->smoothed.size(), spectrum->a_bar, spectrum->value_at(0.0),
                    t.seconds());
    }

    void build_catalog() {
        Timer t;
        SolverParams p;
        p.workers = workers;
        catalog = std::make_unique<SpectrumCatalog>(scan_spectrum(sinai, 40.0, 160.0, p));
        std::printf("... sinai catalog [40,160]: %zu modes (%.1fs)\n", catalog->size(),
                    t.seconds());
    }

    void build_elements() {
        Timer t;
        const auto curve = region_interface_quadrature(region, 160.0, 10);
        traces = std::make_unique<TraceTable>(*catalog, curve, workers);
        diagonal = diagonal_elements(*traces, workers);
        const auto& ks = traces->wavenumbers();
        int first = 0, last = static_cast<int>(ks.size());
        while (first < last && ks[first] < band_lo - 3.1) ++first;
        while (last > first && ks[last - 1] > band_hi + 3.1) --last;
        block = std::make_unique<ElementBlock>(
            offdiagonal_block(*traces, first, last, region.area_fraction, 1e-8, workers));
        std::printf("... elements: %zu diagonal, block %zu modes (%.1fs)\n", diagonal.size(),
                    block->k.size(), t.seconds());
    }
};

// evaluate a catalog mode as a plain function (for the 2D oracle)
struct ModeField {
    const ModeWindow* window;
    const EigenMode* mode;

    double operator()(double x, double y) const {
        std::vector<double> vals(window->basis.size());
        std::vector<Vec2> grads(window->basis.size());
        const double s = mode->k / mode->k_center;
        window->basis.eval({s * x, s * y}, vals, grads);
        double u = 0;
        for (int l = 0; l < window->basis.size(); ++l) u += vals[l] * mode->coeffs(l);
        return u;
    }
};

// -------------------------------------------------------- criterion bodies

void criterion1(const Lab& lab) {
    Timer t;
    SolverParams p;
    p.workers = lab.workers;
    const auto cat = scan_spectrum(lab.disk, 5.0, 30.0, p);
    const auto ks = cat.wavenumbers();
    const auto ref = oracle::quarter_disk_spectrum(5.0, 30.0);
    bool pass = ks.size() == ref.size();
    double worst = 0;
    if (pass)
        for (std::size_t i = 0; i < ks.size(); ++i)
            worst = std::max(worst, std::abs(ks[i] - ref[i]) / ref[i]);
    pass = pass && worst < 1e-6 && t.seconds() < 60.0;
    report(1, pass,
           fmt("quarter-disk oracle: %zu/%zu zeros of J_2m, worst rel err %.2e", ks.size(),
               ref.size(), worst),
           t.seconds());
}

void criterion2(const Lab& lab) {
    Timer t;
    // low catalogs on both shapes
    SolverParams p;
    p.workers = lab.workers;
    const auto cat_d = scan_spectrum(lab.disk, 5.0, 18.0, p);
    const auto cat_s = scan_spectrum(lab.sinai, 5.0, 16.0, p);
    const int n_modes = static_cast<int>(cat_d.size() + cat_s.size());

    double worst_l1 = 0, worst_l2 = 0, worst_dg = 0, worst_rel = 0, worst_qo = 0;
    auto run_shape = [&](const BilliardDomain& dom, const SpectrumCatalog& cat, Vec2 nu,
                         double frac) {
        const auto region = build_test_region(dom, nu, frac);
        const auto idx = cat.sorted_index();
        const double kq = cat.wavenumbers().back() + 1.0;
        const auto curve = region_interface_quadrature(region, kq, 12);
        const auto full = boundary_quadrature(dom, kq, 12, false);
        const TraceTable table(cat, curve);
        const TraceTable tfull(cat, full);

        for (int i = 0; i < table.size(); ++i) {
            const auto& win = cat.windows[idx[i].first];
            const auto& mode = win.modes[idx[i].second];
            ModeField u{&win, &mode};
            const double ki = table.wavenumbers()[i];

            // Lemma 1 vs 2D quadrature
            const double b1 = overlap_equal_energy(table.trace(i), table.trace(i), ki * ki,
                                                   table.nodes());
            const double q1 = oracle::integrate_region(
                dom, [&](double x, double y) { return u(x, y) * u(x, y); }, region.nu,
                region.offset, 1e-10);
            worst_l1 = std::max(worst_l1, std::abs(b1 - q1));

            // Rellich norm of the stored mode
            worst_rel = std::max(worst_rel, std::abs(mode.rellich_norm - 1.0));

            // Lemma 2 vs 2D quadrature on consecutive pairs
            if (i + 1 < table.size()) {
                const double kj = table.wavenumbers()[i + 1];
                const auto& winj = cat.windows[idx[i + 1].first];
                const auto& modej = winj.modes[idx[i + 1].second];
                ModeField v{&winj, &modej};
                const double b2 = overlap_distinct_energy(table.trace(i), ki * ki,
                                                          table.trace(i + 1), kj * kj,
                                                          table.nodes());
                const double q2 = oracle::integrate_region(
                    dom, [&](double x, double y) { return u(x, y) * v(x, y); }, region.nu,
                    region.offset, 1e-10);
                worst_l2 = std::max(worst_l2, std::abs(b2 - q2));

                // two-energy interior identity on a subset of pairs
                if (i % 2 == 0) {
                    const double r2uv = oracle::integrate_region(
                        dom,
                        [&](double x, double y) {
                            return (x * x + y * y) * u(x, y) * v(x, y);
                        },
                        {1, 0}, kInf, 1e-10);
                    const double res = verify_diffgen_identity(
                        tfull.trace(i), ki * ki, tfull.trace(i + 1), kj * kj, r2uv,
                        tfull.nodes());
                    worst_dg = std::max(worst_dg, res);
                }
            }

            // quasi-orthogonality: diagonal Rellich value and pair bound
            const double qii = quasi_orthogonality(tfull.trace(i), tfull.trace(i), tfull.nodes());
            worst_qo = std::max(worst_qo, std::abs(qii / (2.0 * ki * ki) - 1.0));
            for (int j = 0; j < i; ++j) {
                const double kj = tfull.wavenumbers()[j];
                const double qij =
                    quasi_orthogonality(tfull.trace(i), tfull.trace(j), tfull.nodes());
                const double bound = (ki * ki - kj * kj) * (ki * ki - kj * kj) / 4.0 *
                                     dom.r_max() * dom.r_max() * 1.05;
                if (std::abs(qij) > bound) worst_qo = 1e9;
            }
        }
    };
    run_shape(lab.disk, cat_d, Vec2{1.0, 2.0}.unit(), 0.5);
    run_shape(lab.sinai, cat_s, Vec2{1.0, 2.0}.unit(), 0.55);

    const bool pass = n_modes >= 20 && worst_l1 < 1e-5 && worst_l2 < 1e-5 && worst_dg < 1e-5 &&
                      worst_rel < 1e-3 && worst_qo < 1.0 && t.seconds() < 300.0;
    report(2, pass,
           fmt("identity suite on %d modes: L1 %.1e, L2 %.1e, diff_gen %.1e, rellich %.1e, "
               "QO ok=%d",
               n_modes, worst_l1, worst_l2, worst_dg, worst_rel, worst_qo < 1.0),
           t.seconds());
}

void criterion3(const Lab& lab) {
    Timer t;
    std::vector<double> ks;
    for (double k : lab.catalog->wavenumbers())
        if (k >= 50.0 && k <= 100.0) ks.push_back(k);
    const auto wc = weyl_check(ks, lab.sinai);

    auto broken = ks;
    broken.erase(broken.begin() + broken.size() / 2);
    const auto wb = weyl_check(broken, lab.sinai);

    const bool pass = wc.max_dev_running < 0.75 && wc.max_split_jump < 0.75 &&
                      wb.max_split_jump >= 0.75;
    report(3, pass,
           fmt("weyl completeness on %zu modes in [50,100]: run-dev %.3f, jump %.3f; "
               "deleted-level jump %.3f",
               ks.size(), wc.max_dev_running, wc.max_split_jump, wb.max_split_jump),
           t.seconds());
}

void criterion4(const Lab& lab) {
    Timer t;
    const auto& ps = *lab.spectrum;
    const double eps_expected = 1.8683e-3;
    const bool eps_ok = std::abs(ps.rel_error - eps_expected) / eps_expected < 0.01;

    // batch-resampled scatter within a factor 2 of the eps model
    double pooled = 0;
    int used = 0;
    for (std::size_t ci = 0; ci < ps.batch_omegas.size(); ++ci) {
        const double v = ps.value_at(ps.batch_omegas[ci]);
        if (v < 1e-3) continue;
        double s = 0, s2 = 0;
        for (const auto& bv : ps.batch_values) {
            s += bv[ci];
            s2 += bv[ci] * bv[ci];
        }
        const double nb = static_cast<double>(ps.batch_values.size());
        const double mean = s / nb;
        const double sd = std::sqrt(std::max(0.0, s2 / nb - mean * mean));
        const double predicted = ps.rel_error * std::sqrt(nb) * v;
        pooled += (sd / predicted) * (sd / predicted);
        ++used;
    }
    pooled = std::sqrt(pooled / std::max(1, used));
    const bool batch_ok = pooled > 0.5 && pooled < 2.0;

    const double var_ref = ps.a_bar * (1.0 - ps.a_bar);
    const double parseval = ps.integral_over_2pi();
    const bool parseval_ok = std::abs(parseval - var_ref) < 3.0 * ps.rel_error * var_ref;

    report(4, eps_ok && batch_ok && parseval_ok,
           fmt("classical error model: eps=%.4g (expect 1.87e-3), batch ratio %.2f, "
               "Parseval %.6f vs %.6f",
               ps.rel_error, pooled, parseval, var_ref),
           t.seconds());
}

void criterion5(const Lab& lab) {
    Timer t;
    const auto profile = band_profile(*lab.block, lab.band_lo, lab.band_hi, lab.spectrum.get(),
                                      lab.sinai, 0.1, 0.05, 3.0);
    int bins_checked = 0, bins_bad = 0;
    double worst = 0;
    for (std::size_t b = 0; b < profile.omega.size(); ++b) {
        if (profile.pairs[b] < 200) continue;
        ++bins_checked;
        const double dev = std::abs(profile.quantum[b] / profile.classical[b] - 1.0);
        worst = std::max(worst, dev);
        if (dev > 0.20) ++bins_bad;
    }
    const bool pass = profile.n_window >= 500 && bins_checked >= 40 && bins_bad == 0;
    report(5, pass,
           fmt("FP band profile: %d window modes, %d bins >=200 pairs, worst dev %.1f%% "
               "(gate 20%%)",
               profile.n_window, bins_checked, 100.0 * worst),
           t.seconds());
}

void criterion6(const Lab& lab) {
    Timer t;
    // near-diagonal variance from a widened central band: at desk-scale
    // spacings (Delta_k ~ 0.1) the default half-width sits inside the
    // level-repulsion hole
    const auto wide =
        band_profile(*lab.block, lab.band_lo, lab.band_hi, nullptr, lab.sinai, 1.0, 0.5, 3.0);
    double diag_var = 0;
    int m = 0;
    for (const auto& d : lab.diagonal) {
        if (d.k < lab.band_lo || d.k > lab.band_hi) continue;
        diag_var += (d.value - lab.region.area_fraction) * (d.value - lab.region.area_fraction);
        ++m;
    }
    diag_var /= m;
    const double g = symmetry_factor(diag_var, wide);
    const bool pass = g > 1.7 && g < 2.3;
    report(6, pass, fmt("symmetry factor g = %.3f over %d modes (gate 2 +- 0.3)", g, m),
           t.seconds());
}

void criterion7(const Lab& lab) {
    Timer t;
    const auto vs = variance_series(lab.diagonal, lab.region.area_fraction, {});
    const auto fit = fit_power_law_auto(vs);

    // jackknife errorbars against the sqrt(2/M) model, per window
    std::vector<DiagonalElement> sorted(lab.diagonal.begin(), lab.diagonal.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const DiagonalElement& a, const DiagonalElement& b) { return a.k < b.k; });
    int in_range = 0, total_w = 0;
    std::size_t pos = 0;
    for (const auto& w : vs) {
        std::vector<double> sq;
        while (pos < sorted.size() && sorted[pos].k * sorted[pos].k <= w.E_hi + 1e-9) {
            const double d = sorted[pos].value - lab.region.area_fraction;
            if (sorted[pos].k * sorted[pos].k >= w.E_lo - 1e-9) sq.push_back(d * d);
            ++pos;
        }
        if (static_cast<int>(sq.size()) != w.count) continue;
        const double jack = jackknife_variance_error(sq);
        const double model = w.variance * w.rel_error;
        ++total_w;
        if (jack / model > 1.0 / 1.5 && jack / model < 1.5) ++in_range;
    }

    const bool pass = lab.diagonal.size() >= 1000 && fit.gamma > 0.30 && fit.gamma < 0.60 &&
                      total_w >= 4 && in_range == total_w;
    report(7, pass,
           fmt("variance decay: %zu modes, gamma = %.3f +- %.3f (gate [0.30,0.60]), "
               "jackknife in range %d/%d",
               lab.diagonal.size(), fit.gamma, fit.sigma_gamma, in_range, total_w),
           t.seconds());
}

void criterion8(const Lab& lab) {
    Timer t;
    // analytic disk self-energy oracle
    std::vector<BoundarySegment> segs;
    segs.push_back(BoundarySegment::arc({0, 0}, 1.0, 0.0, std::numbers::pi));
    segs.push_back(BoundarySegment::arc({0, 0}, 1.0, std::numbers::pi, 2.0 * std::numbers::pi));
    const BilliardDomain diskfull(std::move(segs));
    RwParams p;
    p.workers = lab.workers;
    const double I_disk = coulomb_integral(diskfull, {1, 0}, kInf, p);
    const double disk_ref = 16.0 * std::numbers::pi / 3.0;
    const bool disk_ok = std::abs(I_disk - disk_ref) / disk_ref < 1e-4;

    bool agree_ok = true;
    double a_rw = 0, mc = 0, quad = 0;
    try {
        const auto rw = rw_prefactor(lab.sinai, lab.region, p);
        a_rw = rw.value;
        mc = rw.coulomb_mc;
        quad = rw.coulomb_integral;
    } catch (const std::exception&) {
        agree_ok = false;
    }
    report(8, disk_ok && agree_ok,
           fmt("Coulomb prefactor: disk oracle err %.2e, estimators %.6f vs %.6f, a_RW=%.4f "
               "(published 0.5995 for its own line)",
               std::abs(I_disk - disk_ref) / disk_ref, quad, mc, a_rw),
           t.seconds());
}

void criterion9(const Lab& lab) {
    Timer t;
    const auto vs = variance_series(lab.diagonal, lab.region.area_fraction, {});
    const auto fit = fit_power_law_auto(vs);
    const auto scan = extreme_scan(lab.diagonal, lab.region.area_fraction, fit, 5.0);

    // raw extreme deviations should sit in the low-energy part
    std::vector<double> ks;
    for (const auto& d : lab.diagonal) ks.push_back(d.k);
    std::sort(ks.begin(), ks.end());
    const double k_median = ks[ks.size() / 2];
    const bool extremes_low = scan.max_k < k_median && scan.min_k < k_median;

    // injected outlier is flagged
    auto spiked = std::vector<DiagonalElement>(lab.diagonal.begin(), lab.diagonal.end());
    spiked[spiked.size() / 2].value += 8.0 * std::sqrt(fit.value_at(
        spiked[spiked.size() / 2].k * spiked[spiked.size() / 2].k));
    const auto scan2 = extreme_scan(spiked, lab.region.area_fraction, fit, 5.0);

    // Gaussianity of the high-E half
    std::vector<DiagonalElement> high;
    for (const auto& d : lab.diagonal)
        if (d.k >= k_median) high.push_back(d);
    const auto hist = deviation_histogram(high, lab.region.area_fraction, fit);

    const bool pass = scan.exceed_count == 0 && extremes_low && scan2.exceed_count == 1 &&
                      hist.ks_p_value >= 0.01;
    report(9, pass,
           fmt("QUE scan: exceedances %d, extremes at k=%.1f/%.1f (median %.1f), injected "
               "outlier flagged=%d, KS p=%.3f",
               scan.exceed_count, scan.max_k, scan.min_k, k_median,
               scan2.exceed_count == 1, hist.ks_p_value),
           t.seconds());
}

void criterion10(const Lab& lab) {
    Timer t;
    const double target = 999.90598;
    try {
        SolverParams p;
        p.workers = lab.workers;
        const ScalingBasis basis = build_basis(lab.sinai, 999.9);
        const auto ev = eval_boundary(basis, lab.sinai, 10, lab.workers);
        const auto sol = solve_generalized(fill_forms(basis, ev), 1e-12);
        const auto modes = extract_modes(sol, basis, lab.sinai, ev, 0.15, 0.5, lab.workers);
        double best = 1e9;
        for (const auto& m : modes) best = std::min(best, std::abs(m.k - target));
        const bool hit = best < 5e-3;
        info(10, fmt("stretch window at k=999.9 (N=%d): nearest eigenvalue %.5f from the "
                     "published %.5f (|dk|=%.2e) -> %s",
                     basis.size(), target - best, target, best,
                     hit ? "geometry reconstruction CONFIRMED" : "no match (informational)"),
             t.seconds());
    } catch (const std::exception& e) {
        info(10, fmt("stretch window failed to run: %s", e.what()), t.seconds());
    }
}

}  // namespace

int main() {
    Timer total;
    Lab lab;
    std::printf("acceptance: building shared artifacts (2 workers assumed by default)\n");
    lab.build_classical();
    lab.build_catalog();
    lab.build_elements();

    criterion1(lab);
    criterion2(lab);
    criterion3(lab);
    criterion4(lab);
    criterion5(lab);
    criterion6(lab);
    criterion7(lab);
    criterion8(lab);
    criterion9(lab);
    criterion10(lab);

    std::printf("acceptance finished in %.1f s: %d criterion(s) failed\n", total.seconds(),
                g_failures);
    return g_failures;
}
