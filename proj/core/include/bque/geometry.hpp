#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace bque {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
    constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    constexpr double norm2() const { return x * x + y * y; }
    Vec2 unit() const {
        const double n = norm();
        return {x / n, y / n};
    }
    /// Rotate by -90 degrees (tangent -> outward normal on a ccw boundary).
    constexpr Vec2 perp_cw() const { return {y, -x}; }
};

inline constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

/// One piece of a closed boundary chain: a straight segment or a circular
/// arc. Arcs are traversed from ang0 to ang1; the sweep ang1 - ang0 is
/// signed, so dispersing walls (traversed clockwise) have negative sweep.
struct BoundarySegment {
    enum class Kind { line, arc };

    Kind kind = Kind::line;
    bool is_symmetry_line = false;

    Vec2 p0, p1;        // line endpoints
    Vec2 center;        // arc center
    double radius = 0.0;
    double ang0 = 0.0, ang1 = 0.0;

    static BoundarySegment line(Vec2 a, Vec2 b, bool symmetry = false);
    static BoundarySegment arc(Vec2 center, double radius, double a0, double a1);

    double length() const;
    Vec2 start() const;
    Vec2 end() const;
    /// Position at arclength s in [0, length()].
    Vec2 point(double s) const;
    /// Unit tangent in traversal direction.
    Vec2 tangent(double s) const;
    /// Outward normal assuming positively oriented (ccw) chain.
    Vec2 outward_normal(double s) const;
    /// Signed distance data: angle parameter for arcs at arclength s.
    double angle_at(double s) const;
};

/// Quadrature node on a boundary curve.
struct BoundaryNode {
    Vec2 r;          // position
    Vec2 n;          // outward unit normal
    double rn = 0;   // r . n
    double w = 0;    // arclength weight
    int segment = -1;
    bool on_chord = false;
};

/// Closed star-shaped billiard domain made of line/arc segments.
///
/// The chain must be closed, positively oriented, and strictly star-shaped
/// about the origin on its non-symmetry segments (r.n > 0 there); symmetry
/// segments must lie along rays through the origin (r.n = 0). These are the
/// standing assumptions of the boundary-weighted eigensolver.
class BilliardDomain {
  public:
    explicit BilliardDomain(std::vector<BoundarySegment> segments);

    /// Desymmetrized quarter Sinai-type domain: two dispersing circular
    /// arcs meeting at (1,1), tangent angle theta1 to the horizontal
    /// (that arc meets the y axis) and theta2 to the vertical (x axis),
    /// both arcs meeting their axis at a right angle.
    static BilliardDomain sinai(double theta1, double theta2);

    /// Unit quarter disk (axes plus a 90-degree arc), the analytic oracle
    /// shape: its Dirichlet spectrum is the zeros of J_{2m}, m >= 1.
    static BilliardDomain quarter_disk();

    const std::vector<BoundarySegment>& segments() const { return segments_; }
    double area() const { return area_; }
    double perimeter_full() const { return perimeter_full_; }
    double perimeter_desym() const { return perimeter_desym_; }
    double r_max() const { return r_max_; }

    /// True iff the point is strictly interior (first-quadrant domains;
    /// points within ~1e-12 of the boundary are implementation-defined).
    bool contains(Vec2 p) const;

    /// Distance from the origin to the boundary along direction theta.
    double boundary_ray_distance(double theta) const;

    /// Stable hash of the segment data, embedded in eigenmode files.
    std::uint64_t hash() const;

  private:
    std::vector<BoundarySegment> segments_;
    double area_ = 0;
    double perimeter_full_ = 0;
    double perimeter_desym_ = 0;
    double r_max_ = 0;
};

/// Gauss-Legendre nodes/weights on [-1,1]; cached per order.
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n);

/// Composite panel Gauss-Legendre quadrature of the domain boundary with
/// at least pts_per_wavelength nodes per wavelength 2*pi/k.
std::vector<BoundaryNode> boundary_quadrature(const BilliardDomain& domain, double k,
                                              int pts_per_wavelength,
                                              bool include_symmetry_lines);

/// Half-plane test region Omega_A = { nu . r <= offset } intersected with
/// the domain; the observable is its indicator function.
struct TestRegion {
    const BilliardDomain* domain = nullptr;
    Vec2 nu;                // unit normal of the dividing line
    double offset = 0.0;    // line is nu . r = offset
    double area_fraction = 0.0;
    Vec2 chord_exit, chord_entry;  // chord endpoints on Gamma, in loop order

    /// Sub-ranges [s0,s1] (arclength) of each domain segment lying inside
    /// the half-plane, in chain order.
    std::vector<std::pair<int, std::array<double, 2>>> boundary_portions;

    double area() const;
    bool contains(Vec2 p) const { return nu.dot(p) <= offset && domain->contains(p); }
};

/// Exact (closed-form Green's theorem) area of the clipped region at a
/// given line offset; the bisection objective of build_test_region.
double clipped_area(const BilliardDomain& domain, Vec2 nu, double offset);

/// Find the line offset so the region covers target_fraction of the domain
/// area (bisection; the clipped area is strictly monotone in the offset).
/// With reject_perpendicular set, a chord meeting any wall at a right angle
/// is refused.
TestRegion build_test_region(const BilliardDomain& domain, Vec2 nu, double target_fraction,
                             bool reject_perpendicular = true);

/// Quadrature of the full region boundary: clipped Gamma portions (domain
/// outward normals) plus the chord (normal nu, nodes flagged on_chord).
std::vector<BoundaryNode> region_interface_quadrature(const TestRegion& region, double k,
                                                      int pts_per_wavelength);

/// Green's-theorem area from any closed-loop quadrature: (1/2) sum w r.n.
double loop_area(std::span<const BoundaryNode> nodes);

}  // namespace bque
