#include "bque/geometry.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace bque {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPanelFactor = 4.0;  // max panel length in wavelengths

double wrap_pi(double a) {
    // remainder into (-pi, pi]
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

}  // namespace

// -------------------------------------------------------------- segments

BoundarySegment BoundarySegment::line(Vec2 a, Vec2 b, bool symmetry) {
    BoundarySegment s;
    s.kind = Kind::line;
    s.p0 = a;
    s.p1 = b;
    s.is_symmetry_line = symmetry;
    return s;
}

BoundarySegment BoundarySegment::arc(Vec2 center, double radius, double a0, double a1) {
    if (radius <= 0.0) throw std::invalid_argument("arc radius must be positive");
    if (a0 == a1) throw std::invalid_argument("arc sweep must be nonzero");
    BoundarySegment s;
    s.kind = Kind::arc;
    s.center = center;
    s.radius = radius;
    s.ang0 = a0;
    s.ang1 = a1;
    return s;
}

double BoundarySegment::length() const {
    if (kind == Kind::line) return (p1 - p0).norm();
    return radius * std::abs(ang1 - ang0);
}

Vec2 BoundarySegment::start() const { return point(0.0); }
Vec2 BoundarySegment::end() const { return point(length()); }

double BoundarySegment::angle_at(double s) const {
    const double sweep = ang1 - ang0;
    return ang0 + (sweep >= 0 ? 1.0 : -1.0) * (s / radius);
}

Vec2 BoundarySegment::point(double s) const {
    if (kind == Kind::line) {
        const double t = s / length();
        return p0 + t * (p1 - p0);
    }
    const double a = angle_at(s);
    return center + Vec2{radius * std::cos(a), radius * std::sin(a)};
}

Vec2 BoundarySegment::tangent(double s) const {
    if (kind == Kind::line) return (p1 - p0).unit();
    const double a = angle_at(s);
    const Vec2 t{-std::sin(a), std::cos(a)};
    return (ang1 >= ang0) ? t : -t;
}

Vec2 BoundarySegment::outward_normal(double s) const { return tangent(s).perp_cw(); }

// ------------------------------------------------------ Gauss-Legendre

const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    static std::mutex mtx;
    std::lock_guard lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    std::vector<double> x(n), w(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

namespace {

// Composite GL panels over one segment sub-range [s0, s1].
void append_panels(const BoundarySegment& seg, int seg_index, double s0, double s1, double k,
                   int ppw, bool chord_flag, std::vector<BoundaryNode>& out) {
    const double len = s1 - s0;
    if (len <= 0.0) return;
    const double lambda = 2.0 * kPi / k;
    const int npan = std::max(1, static_cast<int>(std::ceil(len / (kPanelFactor * lambda))));
    for (int p = 0; p < npan; ++p) {
        const double a = s0 + len * p / npan;
        const double b = s0 + len * (p + 1) / npan;
        const int nn =
            std::clamp(static_cast<int>(std::ceil(ppw * (b - a) / lambda)), 4, 64);
        const auto& [gx, gw] = gauss_legendre(nn);
        for (int i = 0; i < nn; ++i) {
            const double s = 0.5 * (b - a) * gx[i] + 0.5 * (a + b);
            BoundaryNode node;
            node.r = seg.point(s);
            node.n = seg.outward_normal(s);
            node.rn = node.r.dot(node.n);
            node.w = 0.5 * (b - a) * gw[i];
            node.segment = seg_index;
            node.on_chord = chord_flag;
            out.push_back(node);
        }
    }
}

// Closed-form Green's contribution (1/2) int (x dy - y dx) of a sub-range.
double green_contribution(const BoundarySegment& seg, double s0, double s1) {
    if (seg.kind == BoundarySegment::Kind::line) {
        const Vec2 a = seg.point(s0), b = seg.point(s1);
        return 0.5 * a.cross(b);
    }
    const double al = seg.angle_at(s0), be = seg.angle_at(s1);
    const double R = seg.radius;
    const Vec2 c = seg.center;
    return 0.5 * (R * R * (be - al) +
                  R * (c.x * (std::sin(be) - std::sin(al)) + c.y * (std::cos(al) - std::cos(be))));
}

struct Crossing {
    int segment;
    double s;        // arclength on the segment
    Vec2 point;
    double dds;      // d(nu.r)/ds along traversal
};

// All transversal crossings of nu.r = c with the chain.
std::vector<Crossing> line_crossings(const BilliardDomain& dom, Vec2 nu, double c) {
    std::vector<Crossing> out;
    const auto& segs = dom.segments();
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        const auto& seg = segs[i];
        const double len = seg.length();
        if (seg.kind == BoundarySegment::Kind::line) {
            const double f0 = nu.dot(seg.p0) - c;
            const double f1 = nu.dot(seg.p1) - c;
            const double den = f1 - f0;
            if (den == 0.0) continue;
            const double t = -f0 / den;
            if (t >= 0.0 && t <= 1.0) {
                const double s = t * len;
                out.push_back({i, s, seg.point(s), nu.dot(seg.tangent(s))});
            }
        } else {
            // nu.(center + R u(phi)) = c  =>  A cos + B sin = h
            const double A = nu.x * seg.radius, B = nu.y * seg.radius;
            const double h = c - nu.dot(seg.center);
            const double amp = std::hypot(A, B);
            if (amp < std::abs(h)) continue;
            const double base = std::atan2(B, A);
            const double d = std::acos(std::clamp(h / amp, -1.0, 1.0));
            const double sweep = seg.ang1 - seg.ang0;
            const int ncand = (d < 1e-12 || kPi - d < 1e-12) ? 1 : 2;  // tangency: one root
            for (int ci = 0; ci < ncand; ++ci) {
                const double cand = (ci == 0) ? base + d : base - d;
                const double rel = wrap_pi(cand - seg.ang0);
                const bool inside = (sweep >= 0) ? (rel >= 0.0 && rel <= sweep)
                                                 : (rel <= 0.0 && rel >= sweep);
                if (!inside) continue;
                const double s = std::abs(rel) * seg.radius;
                if (s > len * (1.0 - 1e-13)) continue;  // corner crossings belong to the next segment
                out.push_back({i, s, seg.point(s), nu.dot(seg.tangent(s))});
            }
        }
    }
    return out;
}

}  // namespace

// --------------------------------------------------------------- domain

BilliardDomain::BilliardDomain(std::vector<BoundarySegment> segments)
    : segments_(std::move(segments)) {
    if (segments_.size() < 2) throw std::invalid_argument("domain needs at least two segments");

    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& cur = segments_[i];
        const auto& nxt = segments_[(i + 1) % segments_.size()];
        if ((cur.end() - nxt.start()).norm() > 1e-10)
            throw std::invalid_argument("boundary chain is not closed");
    }

    area_ = 0.0;
    r_max_ = 0.0;
    for (const auto& seg : segments_) {
        const double len = seg.length();
        perimeter_full_ += len;
        if (!seg.is_symmetry_line) perimeter_desym_ += len;
        area_ += green_contribution(seg, 0.0, len);

        r_max_ = std::max({r_max_, seg.start().norm(), seg.end().norm()});
        if (seg.kind == BoundarySegment::Kind::arc) {
            // interior extremum of |r| at the angle pointing away from origin
            const double cand = std::atan2(seg.center.y, seg.center.x);
            const double sweep = seg.ang1 - seg.ang0;
            const double rel = wrap_pi(cand - seg.ang0);
            const bool inside =
                (sweep >= 0) ? (rel >= 0.0 && rel <= sweep) : (rel <= 0.0 && rel >= sweep);
            if (inside) r_max_ = std::max(r_max_, seg.center.norm() + seg.radius);
        }
    }
    if (area_ <= 0.0)
        throw std::invalid_argument("boundary chain must be positively oriented");

    // star-shapedness about the origin: r.n > 0 on walls, r.n = 0 on symmetry lines
    for (const auto& seg : segments_) {
        const double len = seg.length();
        const int ns = 64;
        for (int j = 0; j <= ns; ++j) {
            const double s = len * j / ns;
            const double rn = seg.point(s).dot(seg.outward_normal(s));
            if (seg.is_symmetry_line) {
                if (std::abs(rn) > 1e-12)
                    throw std::invalid_argument("symmetry line must pass through the origin");
            } else if (rn <= 1e-12) {
                throw std::invalid_argument("domain is not strictly star-shaped about the origin");
            }
        }
    }
}

BilliardDomain BilliardDomain::sinai(double theta1, double theta2) {
    if (!(theta1 > 0.0 && theta1 < kPi / 2) || !(theta2 > 0.0 && theta2 < kPi / 2))
        throw std::invalid_argument("sinai angles must lie in (0, pi/2)");

    // Arc tangent to angle theta1 with the horizontal at (1,1) meets the y
    // axis perpendicularly; its mirror-image assignment violates r.n > 0.
    const double R1 = 1.0 / std::sin(theta1);
    const Vec2 c1{0.0, 1.0 + 1.0 / std::tan(theta1)};
    const double R2 = 1.0 / std::sin(theta2);
    const Vec2 c2{1.0 + 1.0 / std::tan(theta2), 0.0};

    const Vec2 corner{1.0, 1.0};
    const double phi_corner2 = std::atan2(corner.y - c2.y, corner.x - c2.x);  // in (pi/2, pi)
    const double phi_corner1 = std::atan2(corner.y - c1.y, corner.x - c1.x);  // in (-pi/2, 0)

    std::vector<BoundarySegment> segs;
    segs.push_back(BoundarySegment::line({0, 0}, {c2.x - R2, 0.0}, true));
    segs.push_back(BoundarySegment::arc(c2, R2, kPi, phi_corner2));
    segs.push_back(BoundarySegment::arc(c1, R1, phi_corner1, -kPi / 2));
    segs.push_back(BoundarySegment::line({0.0, c1.y - R1}, {0, 0}, true));
    return BilliardDomain(std::move(segs));
}

BilliardDomain BilliardDomain::quarter_disk() {
    std::vector<BoundarySegment> segs;
    segs.push_back(BoundarySegment::line({0, 0}, {1, 0}, true));
    segs.push_back(BoundarySegment::arc({0, 0}, 1.0, 0.0, kPi / 2));
    segs.push_back(BoundarySegment::line({0, 1}, {0, 0}, true));
    return BilliardDomain(std::move(segs));
}

double BilliardDomain::boundary_ray_distance(double theta) const {
    const Vec2 u{std::cos(theta), std::sin(theta)};
    double best = -1.0;
    for (const auto& seg : segments_) {
        if (seg.is_symmetry_line) continue;
        if (seg.kind == BoundarySegment::Kind::line) {
            const Vec2 d = seg.p1 - seg.p0;
            const double den = u.cross(d);
            if (std::abs(den) < 1e-15) continue;
            const double t = seg.p0.cross(d) / den;
            const double s = -u.cross(seg.p0) / den;
            if (t > 1e-12 && s >= 0.0 && s <= 1.0 && (best < 0 || t < best)) best = t;
        } else {
            const double b = u.dot(seg.center);
            const double disc = b * b - (seg.center.norm2() - seg.radius * seg.radius);
            if (disc < 0.0) continue;
            const double sq = std::sqrt(disc);
            const double sweep = seg.ang1 - seg.ang0;
            for (const double t : {b - sq, b + sq}) {
                if (t <= 1e-12) continue;
                const Vec2 p = t * u;
                const double ang = std::atan2(p.y - seg.center.y, p.x - seg.center.x);
                const double rel = wrap_pi(ang - seg.ang0);
                const bool inside = (sweep >= 0) ? (rel >= 0.0 && rel <= sweep)
                                                 : (rel <= 0.0 && rel >= sweep);
                if (inside && (best < 0 || t < best)) best = t;
            }
        }
    }
    if (best < 0) throw std::runtime_error("boundary ray does not hit any wall");
    return best;
}

bool BilliardDomain::contains(Vec2 p) const {
    for (const auto& seg : segments_) {
        if (!seg.is_symmetry_line) continue;
        // interior lies strictly on the inner side of each symmetry line
        if ((p - seg.p0).dot(seg.outward_normal(0.0)) >= -1e-12) return false;
    }
    const double rho = p.norm();
    if (rho == 0.0) return true;  // star center
    return rho < boundary_ray_distance(std::atan2(p.y, p.x)) - 1e-12;
}

std::uint64_t BilliardDomain::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& s : segments_) {
        const int kind = static_cast<int>(s.kind);
        const int sym = s.is_symmetry_line ? 1 : 0;
        mix(&kind, sizeof kind);
        mix(&sym, sizeof sym);
        const double vals[8] = {s.p0.x, s.p0.y, s.p1.x, s.p1.y,
                                s.center.x, s.center.y, s.radius, s.ang1 - s.ang0};
        mix(vals, sizeof vals);
        mix(&s.ang0, sizeof s.ang0);
    }
    return h;
}

// ----------------------------------------------------------- quadrature

std::vector<BoundaryNode> boundary_quadrature(const BilliardDomain& domain, double k,
                                              int pts_per_wavelength,
                                              bool include_symmetry_lines) {
    if (k <= 0.0) throw std::invalid_argument("wavenumber must be positive");
    if (pts_per_wavelength < 4)
        throw std::invalid_argument("need at least 4 quadrature points per wavelength");
    std::vector<BoundaryNode> out;
    const auto& segs = domain.segments();
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        if (segs[i].is_symmetry_line && !include_symmetry_lines) continue;
        append_panels(segs[i], i, 0.0, segs[i].length(), k, pts_per_wavelength, false, out);
    }
    return out;
}

double loop_area(std::span<const BoundaryNode> nodes) {
    double a = 0.0;
    for (const auto& n : nodes) a += n.w * n.rn;
    return 0.5 * a;
}

// forward declaration used by clipped_area
double clipped_area(const BilliardDomain& domain, Vec2 nu, double offset) {
    const auto crossings = line_crossings(domain, nu, offset);
    const auto& segs = domain.segments();

    if (crossings.empty()) {
        // either the whole domain is inside the half-plane or none of it
        return (nu.dot(segs[0].point(0.5 * segs[0].length())) <= offset) ? domain.area() : 0.0;
    }

    double area = 0.0;
    // boundary portions inside the half-plane
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        const auto& seg = segs[i];
        std::vector<double> cuts{0.0, seg.length()};
        for (const auto& c : crossings)
            if (c.segment == i) cuts.push_back(c.s);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
            const double mid = 0.5 * (cuts[j] + cuts[j + 1]);
            if (cuts[j + 1] - cuts[j] < 1e-14) continue;
            if (nu.dot(seg.point(mid)) <= offset) area += green_contribution(seg, cuts[j], cuts[j + 1]);
        }
    }
    // chord pieces: inside-intervals of the dividing line, traversed so the
    // region stays on the left
    const Vec2 dir{-nu.y, nu.x};
    std::vector<Crossing> byline = crossings;
    std::sort(byline.begin(), byline.end(),
              [&](const Crossing& a, const Crossing& b) { return dir.dot(a.point) < dir.dot(b.point); });
    for (std::size_t j = 0; j + 1 < byline.size(); ++j) {
        const Vec2 mid = 0.5 * (byline[j].point + byline[j + 1].point);
        const Vec2 probe = mid - 1e-9 * nu;  // nudge to the region side of the line
        if (domain.contains(probe)) area += 0.5 * byline[j].point.cross(byline[j + 1].point);
    }
    return area;
}

double TestRegion::area() const { return area_fraction * domain->area(); }

TestRegion build_test_region(const BilliardDomain& domain, Vec2 nu, double target_fraction,
                             bool reject_perpendicular) {
    if (!(target_fraction > 0.0 && target_fraction < 1.0))
        throw std::invalid_argument("target area fraction must lie in (0,1)");
    nu = nu.unit();

    // offset range from per-segment extrema of nu.r
    double lo = 1e300, hi = -1e300;
    for (const auto& seg : domain.segments()) {
        for (const Vec2 p : {seg.start(), seg.end()}) {
            lo = std::min(lo, nu.dot(p));
            hi = std::max(hi, nu.dot(p));
        }
        if (seg.kind == BoundarySegment::Kind::arc) {
            const double sweep = seg.ang1 - seg.ang0;
            for (const double cand : {std::atan2(nu.y, nu.x), std::atan2(-nu.y, -nu.x)}) {
                const double rel = wrap_pi(cand - seg.ang0);
                const bool inside = (sweep >= 0) ? (rel >= 0.0 && rel <= sweep)
                                                 : (rel <= 0.0 && rel >= sweep);
                if (!inside) continue;
                const Vec2 p = seg.center + seg.radius * Vec2{std::cos(cand), std::sin(cand)};
                lo = std::min(lo, nu.dot(p));
                hi = std::max(hi, nu.dot(p));
            }
        }
    }

    const double total = domain.area();
    double a = lo, b = hi;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (a + b);
        const double frac = clipped_area(domain, nu, mid) / total;
        if (frac < target_fraction)
            a = mid;
        else
            b = mid;
        if (b - a < 1e-15 * std::max(1.0, std::abs(hi))) break;
    }
    const double offset = 0.5 * (a + b);

    TestRegion region;
    region.domain = &domain;
    region.nu = nu;
    region.offset = offset;
    region.area_fraction = clipped_area(domain, nu, offset) / total;

    auto crossings = line_crossings(domain, nu, offset);
    if (crossings.size() != 2)
        throw std::runtime_error("region interface must cross the boundary exactly twice");
    for (const auto& c : crossings) {
        if (reject_perpendicular && std::abs(c.dds) > 1.0 - 1e-9)
            throw std::runtime_error("region interface meets a wall at a right angle");
        if (c.dds > 0)
            region.chord_exit = c.point;
        else
            region.chord_entry = c.point;
    }

    const auto& segs = domain.segments();
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        const auto& seg = segs[i];
        std::vector<double> cuts{0.0, seg.length()};
        for (const auto& c : crossings)
            if (c.segment == i) cuts.push_back(c.s);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
            if (cuts[j + 1] - cuts[j] < 1e-12) continue;
            const double mid = 0.5 * (cuts[j] + cuts[j + 1]);
            if (nu.dot(seg.point(mid)) <= offset)
                region.boundary_portions.push_back({i, {cuts[j], cuts[j + 1]}});
        }
    }
    if (region.boundary_portions.empty())
        throw std::runtime_error("degenerate region: no boundary portion inside the half-plane");
    return region;
}

std::vector<BoundaryNode> region_interface_quadrature(const TestRegion& region, double k,
                                                      int pts_per_wavelength) {
    if (region.domain == nullptr) throw std::invalid_argument("region is not attached to a domain");
    std::vector<BoundaryNode> out;
    const auto& segs = region.domain->segments();
    for (const auto& [idx, range] : region.boundary_portions)
        append_panels(segs[idx], idx, range[0], range[1], k, pts_per_wavelength, false, out);

    // the chord, traversed with the region on the left; outward normal is nu
    const Vec2 a = region.chord_exit, b = region.chord_entry;
    const double len = (b - a).norm();
    if (len <= 0.0) throw std::runtime_error("degenerate region: empty interface chord");
    const Vec2 dir = (b - a).unit();
    const double lambda = 2.0 * kPi / k;
    const int npan = std::max(1, static_cast<int>(std::ceil(len / (kPanelFactor * lambda))));
    for (int p = 0; p < npan; ++p) {
        const double s0 = len * p / npan, s1 = len * (p + 1) / npan;
        const int nn =
            std::clamp(static_cast<int>(std::ceil(pts_per_wavelength * (s1 - s0) / lambda)), 4, 64);
        const auto& [gx, gw] = gauss_legendre(nn);
        for (int i = 0; i < nn; ++i) {
            const double s = 0.5 * (s1 - s0) * gx[i] + 0.5 * (s0 + s1);
            BoundaryNode node;
            node.r = a + s * dir;
            node.n = region.nu;
            node.rn = node.r.dot(node.n);
            node.w = 0.5 * (s1 - s0) * gw[i];
            node.segment = -1;
            node.on_chord = true;
            out.push_back(node);
        }
    }
    return out;
}

}  // namespace bque
