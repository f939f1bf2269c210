#include "nafreach/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <tuple>

#include "nafreach/errors.hpp"

namespace nafreach {

void EnvGeometry::validate() const {
    if (muscles.empty()) throw ConfigError("geometry: no muscles");
    if (dim != 2 && dim != 3) throw ConfigError("geometry: dim must be 2 or 3");
    if (mass <= 0.0) throw ConfigError("geometry: mass must be positive");
    for (const MuscleSpec& m : muscles) {
        if (m.f_max <= 0.0 || m.l_opt <= 0.0) throw ConfigError("geometry: bad muscle constants");
        if (!(m.flex > 0.0 && m.flex < 1.0)) throw ConfigError("geometry: flex must be in (0,1)");
        if (!m.anchor.finite()) throw ConfigError("geometry: non-finite anchor");
    }
}

EnvGeometry make_circle_geometry(int n_muscles) {
    if (n_muscles != 6 && n_muscles != 14 && n_muscles != 24)
        throw ConfigError("geometry: circle muscle count must be 6, 14, or 24");
    EnvGeometry g;
    g.kind = GeomKind::circle2d;
    g.dim = 2;
    const double radius = 0.10;
    for (int i = 0; i < n_muscles; ++i) {
        const double ang = 2.0 * std::numbers::pi * i / n_muscles;
        MuscleSpec m;
        m.anchor = Vec3{radius * std::cos(ang), radius * std::sin(ang), 0.0};
        g.muscles.push_back(m);
    }
    g.validate();
    return g;
}

EnvGeometry make_cuboid_geometry() {
    EnvGeometry g;
    g.kind = GeomKind::cuboid3d;
    g.dim = 3;
    const double h = 0.10;  // half edge
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1}) {
                MuscleSpec m;
                m.anchor = Vec3{sx * h, sy * h, sz * h};
                g.muscles.push_back(m);
            }
    g.validate();
    return g;
}

namespace {

inline double ramp(double l, double l_opt, double flex) {
    const double span = flex * l_opt;
    return std::clamp((l - l_opt) / span, 0.0, 1.0);
}

} // namespace

double muscle_force(double l, double l_dot, double a, const MuscleSpec& spec) {
    if (l <= 0.0) throw SimulationFault("muscle_force: non-positive muscle length");
    const double r = ramp(l, spec.l_opt, spec.flex);
    const double active = a * spec.f_max * r;
    const double passive = spec.f_pass_max * r;
    // axial damping on both strokes; the floor below keeps tension from ever
    // pushing, so a fast-shortening muscle simply goes slack
    const double damp = spec.damping * l_dot;
    return std::max(active + passive + damp, 0.0);
}

namespace {

Vec3 force_sum(const Vec3& p, const Vec3& v, const std::vector<double>& exc,
               const EnvGeometry& geom) {
    Vec3 f{0, 0, 0};
    for (std::size_t i = 0; i < geom.muscles.size(); ++i) {
        const MuscleSpec& m = geom.muscles[i];
        const Vec3 to_anchor = m.anchor - p;
        const double l = to_anchor.norm();
        if (l <= 0.0) throw SimulationFault("physics: point mass reached a muscle anchor");
        const Vec3 dir = to_anchor * (1.0 / l);
        const double l_dot = -dot(dir, v);  // lengthening when moving away
        const double t = muscle_force(l, l_dot, exc[i], m);
        f += dir * t;
    }
    return f;
}

} // namespace

SimState step_physics(const SimState& state, const std::vector<double>& excitations,
                      double control_dt, int substeps, const EnvGeometry& geom) {
    if (static_cast<int>(excitations.size()) != geom.n_muscles())
        throw ContractViolation("physics: excitation count must match muscle count");
    if (substeps <= 0 || control_dt <= 0.0)
        throw ContractViolation("physics: control_dt and substeps must be positive");

    std::vector<double> exc(excitations.size());
    for (std::size_t i = 0; i < exc.size(); ++i) {
        if (!std::isfinite(excitations[i]))
            throw SimulationFault("physics: non-finite excitation");
        exc[i] = std::clamp(excitations[i], 0.0, 1.0);
    }

    SimState s = state;
    s.excitations = exc;
    const double h = control_dt / substeps;
    const double inv_m = 1.0 / geom.mass;
    for (int k = 0; k < substeps; ++k) {
        const Vec3 f = force_sum(s.position, s.velocity, exc, geom);
        s.velocity += f * (inv_m * h);
        s.position += s.velocity * h;
        if (geom.dim == 2) {
            s.position.z = 0.0;
            s.velocity.z = 0.0;
        }
    }
    s.sim_time += control_dt;
    if (!s.position.finite() || !s.velocity.finite())
        throw SimulationFault("physics: state diverged to non-finite values");
    return s;
}

Vec3 net_force_at(const Vec3& position, const std::vector<double>& excitations,
                  const EnvGeometry& geom) {
    std::vector<double> exc(excitations.size());
    for (std::size_t i = 0; i < exc.size(); ++i) exc[i] = std::clamp(excitations[i], 0.0, 1.0);
    return force_sum(position, Vec3{0, 0, 0}, exc, geom);
}

Vec3 equilibrium(const std::vector<double>& excitations, const EnvGeometry& geom, double tol) {
    SimState s;
    s.position = Vec3{0, 0, 0};
    s.velocity = Vec3{0, 0, 0};
    s.excitations.assign(excitations.size(), 0.0);

    // |v| < tol must hold over a full second of simulated time so a swing
    // through a turning point is not mistaken for convergence; the budget is
    // generous because damping acts only while a muscle lengthens, so the
    // ring-down is slow
    const int window = static_cast<int>(1.0 / kControlDt);
    const int budget = static_cast<int>(600.0 / kControlDt);
    int still = 0;
    Vec3 prev = s.position;
    for (int i = 0; i < budget; ++i) {
        s = step_physics(s, excitations, kControlDt, kSubstepsPerControl, geom);
        const bool quiet = s.velocity.norm() < tol && distance(s.position, prev) < tol;
        prev = s.position;
        still = quiet ? still + 1 : 0;
        if (still >= window) return s.position;
    }
    throw SimulationFault("equilibrium: no convergence within simulation budget");
}

namespace {

// monotone chain convex hull over the x-y plane
std::vector<Vec3> convex_hull_2d(std::vector<Vec3> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec3& a, const Vec3& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const auto cross = [](const Vec3& o, const Vec3& a, const Vec3& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    if (pts.size() < 3) return pts;
    std::vector<Vec3> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

bool point_in_convex_polygon(const Vec3& p, const std::vector<Vec3>& poly) {
    if (poly.size() < 3) return false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3& a = poly[i];
        const Vec3& b = poly[(i + 1) % poly.size()];
        const double c = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (c < 0) return false;  // hull is counter-clockwise
    }
    return true;
}

} // namespace

bool MotionDomain::contains(const Vec3& p) const {
    // undo the shrink about the centroid, then test against the raw region
    const Vec3 q = centroid + (p - centroid) * (1.0 / shrink);
    if (dim == 2) return point_in_convex_polygon(q, hull);
    for (int axis = 0; axis < 3; ++axis) {
        const double v = axis == 0 ? q.x : axis == 1 ? q.y : q.z;
        const double lo = axis == 0 ? aabb_lo.x : axis == 1 ? aabb_lo.y : aabb_lo.z;
        const double hi = axis == 0 ? aabb_hi.x : axis == 1 ? aabb_hi.y : aabb_hi.z;
        if (v < lo || v > hi) return false;
    }
    return true;
}

Vec3 MotionDomain::sample_target(Rng& rng) const {
    if (dim == 2) {
        // area-weighted triangle fan about the centroid, uniform per triangle
        std::vector<double> areas(hull.size());
        double total = 0;
        for (std::size_t i = 0; i < hull.size(); ++i) {
            const Vec3& a = hull[i];
            const Vec3& b = hull[(i + 1) % hull.size()];
            areas[i] = 0.5 * std::abs((a.x - centroid.x) * (b.y - centroid.y) -
                                      (a.y - centroid.y) * (b.x - centroid.x));
            total += areas[i];
        }
        double pick = rng.uniform(0, total);
        std::size_t tri = 0;
        while (tri + 1 < hull.size() && pick > areas[tri]) pick -= areas[tri], ++tri;
        const Vec3& a = hull[tri];
        const Vec3& b = hull[(tri + 1) % hull.size()];
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const Vec3 p = centroid + (a - centroid) * u + (b - centroid) * v;
        return centroid + (p - centroid) * shrink;
    }
    for (int tries = 0; tries < 100000; ++tries) {
        Vec3 p{rng.uniform(aabb_lo.x, aabb_hi.x), rng.uniform(aabb_lo.y, aabb_hi.y),
               rng.uniform(aabb_lo.z, aabb_hi.z)};
        const Vec3 q = centroid + (p - centroid) * shrink;
        if (contains(q)) return q;
    }
    throw SimulationFault("motion domain: target sampling failed to land inside the region");
}

MotionDomain estimate_motion_domain(const EnvGeometry& geom, unsigned seed) {
    // memoized per geometry + seed: the settle runs dominate otherwise
    static std::map<std::tuple<int, int, unsigned>, MotionDomain> cache;
    const auto key = std::make_tuple(static_cast<int>(geom.kind), geom.n_muscles(), seed);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    const int n = geom.n_muscles();
    Rng rng(seed);
    std::vector<Vec3> samples;
    std::vector<double> exc(n, 0.0);
    samples.push_back(equilibrium(exc, geom));
    for (int i = 0; i < n; ++i) {
        std::fill(exc.begin(), exc.end(), 0.0);
        exc[i] = 1.0;
        samples.push_back(equilibrium(exc, geom));
    }
    for (int k = 0; k < 200; ++k) {
        for (double& e : exc) e = rng.uniform();
        samples.push_back(equilibrium(exc, geom));
    }

    MotionDomain d;
    d.dim = geom.dim;
    d.samples = samples;
    double best = 0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j)
            best = std::max(best, distance(samples[i], samples[j]));
    d.characteristic_length = best;

    Vec3 c{0, 0, 0};
    for (const Vec3& p : samples) c += p;
    d.centroid = c * (1.0 / samples.size());

    if (geom.dim == 2) {
        d.hull = convex_hull_2d(samples);
    } else {
        d.aabb_lo = d.aabb_hi = samples[0];
        for (const Vec3& p : samples) {
            d.aabb_lo.x = std::min(d.aabb_lo.x, p.x);
            d.aabb_lo.y = std::min(d.aabb_lo.y, p.y);
            d.aabb_lo.z = std::min(d.aabb_lo.z, p.z);
            d.aabb_hi.x = std::max(d.aabb_hi.x, p.x);
            d.aabb_hi.y = std::max(d.aabb_hi.y, p.y);
            d.aabb_hi.z = std::max(d.aabb_hi.z, p.z);
        }
    }
    cache[key] = d;
    return d;
}

std::string geometry_name(const EnvGeometry& geom) {
    if (geom.kind == GeomKind::circle2d)
        return "circle2d-" + std::to_string(geom.n_muscles());
    return "cuboid3d-8";
}

void write_trajectory_csv(const std::string& path, const std::vector<SimState>& control_steps) {
    std::ofstream out(path);
    if (!out) throw ConfigError("trajectory: cannot open " + path + " for writing");
    out << "t,px,py,pz,vx,vy,vz";
    const std::size_t n = control_steps.empty() ? 0 : control_steps.front().excitations.size();
    for (std::size_t i = 1; i <= n; ++i) out << ",a" << i;
    out << "\n";
    out.precision(17);
    for (const SimState& s : control_steps) {
        out << s.sim_time << ',' << s.position.x << ',' << s.position.y << ',' << s.position.z
            << ',' << s.velocity.x << ',' << s.velocity.y << ',' << s.velocity.z;
        for (double a : s.excitations) out << ',' << a;
        out << "\n";
    }
}

} // namespace nafreach
