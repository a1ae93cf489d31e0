#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "bque/geometry.hpp"
#include "bque/solver.hpp"

namespace bque {

/// Eigenfunction values and first derivatives sampled on a quadrature
/// curve; all matrix elements reduce to 1D integrals of these.
struct BoundaryTrace {
    Eigen::VectorXd u;        // values
    Eigen::VectorXd ux, uy;   // gradient components
    Eigen::VectorXd un;       // n . grad u
};

/// Trace of a stored eigenmode: the mode at wavenumber k is its window
/// basis evaluated at points dilated by k/k_center.
BoundaryTrace boundary_trace(const EigenMode& mode, const ScalingBasis& basis,
                             std::span<const BoundaryNode> nodes, unsigned workers = 0);

/// <u,v> over the region for two Helmholtz solutions at the same energy E:
///   (1/2E) oint (r.n)(E uv - grad u . grad v) + (r.grad u)(n.grad v)
///                + (r.grad v)(n.grad u) ds
/// over the full region boundary (chord plus wall portions).
double overlap_equal_energy(const BoundaryTrace& a, const BoundaryTrace& b, double E,
                            std::span<const BoundaryNode> nodes);

/// <u,v> over the region for distinct energies:
///   (Eu - Ev)^-1 oint (u dv/dn - v du/dn) ds.
/// Dirichlet data kills the wall portions, so only chord nodes enter.
double overlap_distinct_energy(const BoundaryTrace& a, double Ea, const BoundaryTrace& b,
                               double Eb, std::span<const BoundaryNode> nodes);

/// Q_ij = oint_Gamma r.n (du/dn)(dv/dn) ds on a full-boundary quadrature;
/// equals 2E delta_ij + (Ei-Ej)^2/4 <u, r^2 v> for Dirichlet eigenmodes.
double quasi_orthogonality(const BoundaryTrace& a, const BoundaryTrace& b,
                           std::span<const BoundaryNode> nodes);

/// Boundary side of the general two-energy identity (d = 2):
///   oint (E/eps - eps r^2/4)(u_n v - v_n u) + r_n(E uv/2 - grad u . grad v)
///        + u_r v_n + v_r u_n ds,
/// with eps = Eu - Ev and E = Eu + Ev; equals (eps^2/4) int r^2 u v dr.
double diffgen_boundary(const BoundaryTrace& a, double Ea, const BoundaryTrace& b, double Eb,
                        std::span<const BoundaryNode> nodes);

/// Relative residual of the identity against an interior integral computed
/// by an independent 2D quadrature. Test utility, not a pipeline stage.
double verify_diffgen_identity(const BoundaryTrace& a, double Ea, const BoundaryTrace& b,
                               double Eb, double interior_lhs,
                               std::span<const BoundaryNode> nodes);

/// Traces of every catalog mode on one shared curve.
class TraceTable {
  public:
    TraceTable(const SpectrumCatalog& catalog, std::span<const BoundaryNode> curve,
               unsigned workers = 0);

    const std::vector<BoundaryNode>& nodes() const { return nodes_; }
    const std::vector<double>& wavenumbers() const { return k_; }
    const BoundaryTrace& trace(int i) const { return traces_[i]; }
    int size() const { return static_cast<int>(k_.size()); }

  private:
    std::vector<BoundaryNode> nodes_;
    std::vector<double> k_;
    std::vector<BoundaryTrace> traces_;
};

struct DiagonalElement {
    int index = 0;   // position in the sorted catalog
    double k = 0;
    double value = 0;
};

/// A_nn for every mode in the table (region indicated by the curve used).
std::vector<DiagonalElement> diagonal_elements(const TraceTable& table, unsigned workers = 0);

/// Dense block of matrix elements A_nm between modes [first, last) of the
/// table; diagonal via the equal-energy identity, off-diagonal via the
/// distinct-energy one. Pairs closer than degeneracy_tol in k use the
/// equal-energy route at the geometric-mean energy.
struct ElementBlock {
    std::vector<int> index;
    std::vector<double> k;
    Eigen::MatrixXd values;
    double a_bar = 0;  // classical mean of the observable
};

ElementBlock offdiagonal_block(const TraceTable& table, int first, int last, double a_bar,
                               double degeneracy_tol = 1e-8, unsigned workers = 0);

}  // namespace bque
