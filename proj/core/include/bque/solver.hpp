#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "bque/basis.hpp"
#include "bque/geometry.hpp"

namespace bque {

/// Boundary bilinear forms of the scaling method over Gamma_desym with the
/// 1/(r.n) weight:
///   F_lm = sum w/rn xi_l xi_m
///   G_lm = (1/k) sum w/rn (xi_l r.grad(xi_m) + xi_m r.grad(xi_l))
struct FormMatrices {
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;
    double k = 0;
    int quadrature_nodes = 0;
};

/// Basis trace on a quadrature curve (values and gradient components at the
/// nodes, one column per basis function).
struct BoundaryEval {
    std::vector<BoundaryNode> nodes;
    Eigen::MatrixXd V, Gx, Gy;
};

BoundaryEval eval_boundary(const ScalingBasis& basis, const BilliardDomain& domain,
                           int pts_per_wavelength, unsigned workers = 0);

FormMatrices fill_forms(const ScalingBasis& basis, const BoundaryEval& eval);
FormMatrices fill_forms(const ScalingBasis& basis, const BilliardDomain& domain,
                        std::span<const BoundaryNode> nodes, unsigned workers = 0);

/// Simultaneous diagonalization Y^T F Y = I, Y^T G Y = diag(mu) on the
/// non-singular part of F (eigenvalues above truncation_tol * max).
/// Columns are ordered by descending |mu|, i.e. ascending wavenumber shift.
struct GeneralizedSolution {
    Eigen::VectorXd mu;
    Eigen::MatrixXd Y;
    int retained = 0;
};

GeneralizedSolution solve_generalized(const FormMatrices& forms, double truncation_tol);

/// One Dirichlet eigenmode extracted from a window. Coefficients are scaled
/// to unit interior L2 norm via the Rellich identity; evaluating the mode at
/// r means evaluating the stored basis at (k/k_center) r.
struct EigenMode {
    double k = 0;             // eigenwavenumber
    double omega = 0;         // k_center - k
    double mu = 0;            // generalized eigenvalue (omega = 2/mu)
    double rellich_norm = 0;  // Rellich norm of the sqrt(2)|omega|-normalized mode
    double k_center = 0;
    Eigen::VectorXd coeffs;
};

/// Wavenumber shifts are trusted only within |omega| <= omega_max (the
/// window rule 0.2/R by default); modes whose Rellich norm deviates from 1
/// by more than spurious_tol are discarded as spurious.
std::vector<EigenMode> extract_modes(const GeneralizedSolution& solution,
                                     const ScalingBasis& basis, const BilliardDomain& domain,
                                     const BoundaryEval& eval, double omega_max,
                                     double spurious_tol, unsigned workers = 0);

/// Rellich norm (1/2E) sum w rn (dphi/dn)^2 of an arbitrary coefficient
/// vector at wavenumber k; equals 1 for a unit-normalized eigenmode.
double rellich_norm(const ScalingBasis& basis, const BilliardDomain& domain,
                    const Eigen::VectorXd& coeffs, double k, double k_center,
                    int pts_per_wavelength = 10, unsigned workers = 0);

struct SolverParams {
    double basis_factor = 1.5;
    int n_min = 8;
    int pts_per_wavelength = 10;
    double truncation_tol = 1e-12;
    double spurious_tol = 1e-2;        // final filter on |rellich_norm - 1|
    double pass1_spurious_tol = 0.5;   // loose filter for scan candidates
    double omega_max = 0.0;            // 0 -> 0.2 / r_max
    double step = 0.0;                 // window step; 0 -> omega_max
    double accept1_frac = 0.55;        // pass-1 acceptance radius in units of step
    double refine_capture = 0.01;      // capture radius of the mid refinement pass
    double refine_offset = 1e-3;       // deliberate off-centering of final windows
    double dedupe_rel = 1e-6;          // duplicate tolerance |dk| < dedupe_rel * k
    unsigned workers = 0;              // 0 -> hardware concurrency
};

struct ModeWindow {
    double k_center = 0;
    ScalingBasis basis;
    std::vector<EigenMode> modes;
};

class SpectrumCatalog {
  public:
    std::vector<ModeWindow> windows;

    /// (window, mode) indices sorted by eigenwavenumber.
    std::vector<std::pair<int, int>> sorted_index() const;
    std::vector<double> wavenumbers() const;
    const EigenMode& mode(std::pair<int, int> idx) const {
        return windows[idx.first].modes[idx.second];
    }
    std::size_t size() const;
};

/// Collect all eigenmodes with k in [k_lo, k_hi]: overlapping scan windows,
/// optional per-candidate refinement pass, spurious filtering and duplicate
/// merging (duplicates resolved toward the smaller |omega| copy).
SpectrumCatalog scan_spectrum(const BilliardDomain& domain, double k_lo, double k_hi,
                              const SolverParams& params = {});

/// Level-count fluctuation against the two-term Weyl law (full perimeter).
struct WeylCheck {
    std::vector<double> delta;     // N(E_n^+) - N_Weyl(E_n)
    double mean = 0;
    double max_dev_from_mean = 0;  // max |delta - mean| (global mean)
    double max_dev_running = 0;    // max |delta - centered running mean|
    double max_split_jump = 0;     // max two-sided running-mean jump
    int jump_window = 0;
};

WeylCheck weyl_check(std::span<const double> sorted_k, const BilliardDomain& domain,
                     int jump_window = 30);

}  // namespace bque
