#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "bque/geometry.hpp"

namespace bque {

/// Bessel Y0/Y1 evaluated together (GSL under the hood).
void bessel_y01(double x, double& y0, double& y1);
double bessel_j(int n, double x);

/// Exterior offset curve at nearest-distance D from the desymmetrized
/// boundary, with convex wall junctions rounded by radius-D arcs about the
/// corner. Pieces are straight lines or arcs in traversal order.
class OffsetCurve {
  public:
    struct Piece {
        BoundarySegment geom;  // reuses the segment parametrization
        double length = 0;
    };

    OffsetCurve(const BilliardDomain& domain, double distance);

    double total_length() const { return total_length_; }
    Vec2 point_at(double s) const;
    const std::vector<Piece>& pieces() const { return pieces_; }

  private:
    std::vector<Piece> pieces_;
    double total_length_ = 0;
};

/// N charge points at equal arclength intervals (cell midpoints) along the
/// offset curve at distance D outside the walls.
std::vector<Vec2> build_offset_curve(const BilliardDomain& domain, double D, int N);

/// Odd-odd antisymmetrized Neumann-charge basis at center wavenumber k:
/// xi_l(r) = Y0(k|r-q|) - Y0(k|r-q^x|) - Y0(k|r-q^y|) + Y0(k|r-q^xy|),
/// images being reflections of the charge q_l in the coordinate axes. Every
/// basis function solves the Helmholtz equation at energy k^2 away from the
/// charges and vanishes identically on both axes.
class ScalingBasis {
  public:
    ScalingBasis(double k, double D, std::vector<Vec2> charges);

    double k() const { return k_; }
    double offset_distance() const { return D_; }
    int size() const { return static_cast<int>(charges_.size()); }
    const std::vector<Vec2>& charges() const { return charges_; }

    /// Values and gradients of all N basis functions at one point.
    void eval(Vec2 r, std::span<double> values, std::span<Vec2> gradients) const;

    /// Batched evaluation at node positions scaled by point_scale (the
    /// mode-dilation factor k_i/k of the scaling method; 1 for raw nodes).
    /// V(i,l) = xi_l(s*r_i); Gx,Gy hold the gradient of xi_l at s*r_i.
    void eval_block(std::span<const BoundaryNode> nodes, double point_scale, Eigen::MatrixXd& V,
                    Eigen::MatrixXd& Gx, Eigen::MatrixXd& Gy, unsigned workers = 0) const;

  private:
    double k_;
    double D_;
    std::vector<Vec2> charges_;
};

/// Semiclassical basis size N_sc = k |Gamma_desym| / pi.
double semiclassical_basis_size(const BilliardDomain& domain, double k);

/// Basis at wavenumber k with N = max(round(basis_factor * N_sc), n_min)
/// charges on the offset curve at kD = 7.
ScalingBasis build_basis(const BilliardDomain& domain, double k, double basis_factor = 1.5,
                         int n_min = 8);

}  // namespace bque
