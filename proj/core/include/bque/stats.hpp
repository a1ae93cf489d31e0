#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bque/classical.hpp"
#include "bque/elements.hpp"
#include "bque/geometry.hpp"

namespace bque {

/// Local variance of diagonal elements over one energy window.
struct VariancePoint {
    double E_lo = 0, E_hi = 0;
    double E_center = 0;  // mean energy of the window's modes
    int count = 0;        // M = N_L(E)
    double variance = 0;  // M^-1 sum |A_nn - a_bar|^2
    double rel_error = 0; // sqrt(2/M)
};

struct WindowPlan {
    int target_count = 0;  // 0: adaptive, ~ total/8 clamped to [50, 1000]
    int hard_min = 50;     // refuse windows smaller than this
};

std::vector<VariancePoint> variance_series(std::span<const DiagonalElement> diag, double a_bar,
                                           const WindowPlan& plan = {});

/// Delete-one jackknife standard error of a window variance, for validating
/// the sqrt(2/M) model.
double jackknife_variance_error(std::span<const double> squared_deviations);

/// Weighted power-law fit V = a E^-gamma in log-log space with
/// sigma_logV = rel_error; gamma uncertainty from the profile likelihood
/// after marginalizing over log a.
struct PowerLawFit {
    double gamma = 0, sigma_gamma = 0;
    double log_a = 0, sigma_log_a = 0;
    double a = 0;
    double E_min = 0;
    int points_used = 0;
    double chi2 = 0;

    double value_at(double E) const;
};

PowerLawFit fit_power_law(std::span<const VariancePoint> points, double E_min);

/// Smallest E_min whose fit moves by less than one sigma when E_min is
/// halved (the non-asymptotic cut rule).
PowerLawFit fit_power_law_auto(std::span<const VariancePoint> points);

/// Prefactor fit with the power held fixed (gamma = 1/2 comparisons).
PowerLawFit fit_prefactor_fixed_gamma(std::span<const VariancePoint> points, double gamma,
                                      double E_min);

/// Constrained slow-convergence model V = a E^-1/2 (1 - b E^-beta) with the
/// prefactor pinned; explores the (b, beta) likelihood over a grid.
struct CorrectedFit {
    double b = 0, beta = 0;
    double chi2 = 0;
    double b_lo = 0, b_hi = 0;       // delta chi2 <= 1 ranges
    double beta_lo = 0, beta_hi = 0;
    bool identifiable = false;
    bool converged = false;
};

CorrectedFit fit_corrected(std::span<const VariancePoint> points, double a_fp);

/// Random-wave prefactor a_RW = (g / pi vol) iint A(r1)A(r2)/|r1-r2|, g = 2,
/// computed two independent ways (polar-exact quadrature and Monte Carlo);
/// disagreement beyond 0.5% throws.
struct RwPrefactor {
    double value = 0;           // a_RW from the quadrature estimator
    double coulomb_integral = 0;
    double coulomb_mc = 0;
    double mc_rel_error = 0;
};

struct RwParams {
    int n_theta = 384;         // outer angular panels resolution
    int n_radial = 220;        // outer radial nodes per slice
    int n_phi = 720;           // inner potential directions
    long long mc_pairs = 4'000'000;
    std::uint64_t seed = 12345;
    unsigned workers = 0;
    double agree_tol = 5e-3;
};

RwPrefactor rw_prefactor(const BilliardDomain& domain, Vec2 nu, double offset,
                         const RwParams& params = {});
RwPrefactor rw_prefactor(const BilliardDomain& domain, const TestRegion& region,
                         const RwParams& params = {});

/// Coulomb self-integral iint 1/|r1-r2| over the clipped region alone
/// (quadrature estimator); exposed for the analytic disk oracle.
double coulomb_integral(const BilliardDomain& domain, Vec2 nu, double offset,
                        const RwParams& params = {});

/// Feingold-Peres prefactor a_FP = 2 C_hat(0) / vol with propagated error.
struct FpPrefactor {
    double value = 0;
    double error = 0;
};
FpPrefactor fp_prefactor(const PowerSpectrum& spectrum, const BilliardDomain& domain);

/// Off-diagonal variance band profile: V_A(E; omega) in bins of width
/// bin_width (half-window eps), with the classical overlay
/// C_hat(omega)/vol * E^-1/2.
struct BandProfile {
    std::vector<double> omega;      // bin centers, symmetric about 0
    std::vector<double> quantum;    // V_A(E; omega)
    std::vector<double> quantum_err;
    std::vector<double> classical;  // overlay where a spectrum was given
    std::vector<double> classical_err;
    std::vector<long long> pairs;   // per-bin pair counts
    double E_center = 0;
    double delta_k = 0;             // mean level spacing 2 pi / (sqrt(E) vol)
    int n_window = 0;               // N_L of the defining window
    double eps = 0;
    double sum_sq = 0;              // total |A_nm|^2 binned (mass check)
};

BandProfile band_profile(const ElementBlock& block, double window_k_lo, double window_k_hi,
                         const PowerSpectrum* spectrum, const BilliardDomain& domain,
                         double bin_width = 0.1, double eps = 0.05, double omega_range = 3.0);

/// g = V_A(E) / V_A(E;0): diagonal-to-near-diagonal variance ratio.
double symmetry_factor(double diag_variance, const BandProfile& profile);

/// Extremes of the diagonal deviations plus the exceedance density above
/// threshold_sigmas * sqrt(V_A(E)) from the fitted variance law.
struct ExtremeScan {
    double max_value = 0, min_value = 0;
    double max_k = 0, min_k = 0;
    int max_index = 0, min_index = 0;
    int exceed_count = 0;
    double exceed_density = 0;
    std::vector<int> outliers;
};

ExtremeScan extreme_scan(std::span<const DiagonalElement> diag, double a_bar,
                         const PowerLawFit& fit, double threshold_sigmas = 5.0);

/// Rescaled deviations z_n = (A_nn - a_bar)/sqrt(V(E_n)) histogrammed against
/// the unit Gaussian, with a Kolmogorov-Smirnov test.
struct DeviationHistogram {
    std::vector<double> edges;
    std::vector<int> counts;
    std::vector<double> gauss_reference;  // expected counts
    double mean = 0, variance = 0;
    double ks_statistic = 0;
    double ks_p_value = 0;
    int n = 0;
    bool degenerate = false;
};

DeviationHistogram deviation_histogram(std::span<const DiagonalElement> diag, double a_bar,
                                       const PowerLawFit& fit, int bins = 40);

/// Cumulative moment sums S_p(E) = N(E)^-1 sum_{E_j <= E} |A_jj - a_bar|^p.
std::vector<std::pair<double, double>> moment_sums(std::span<const DiagonalElement> diag,
                                                   double a_bar, double p);

}  // namespace bque
