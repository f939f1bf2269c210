#pragma once

#include <string>
#include <vector>

#include "nafreach/rng.hpp"
#include "nafreach/vec3.hpp"

namespace nafreach {

struct MuscleSpec {
    Vec3 anchor;
    double f_max = 1.0;        // N
    double l_opt = 0.01;       // m
    double f_pass_max = 0.1;   // N
    double flex = 0.5;
    double damping = 0.1;      // N s/m, axial, both strokes
};

enum class GeomKind { circle2d, cuboid3d };

struct EnvGeometry {
    GeomKind kind = GeomKind::circle2d;
    int dim = 2;
    double mass = 1.0;  // kg
    std::vector<MuscleSpec> muscles;

    int n_muscles() const { return static_cast<int>(muscles.size()); }
    void validate() const;
};

// anchors equally spaced on a circle of radius 0.10 m in the x-y plane
EnvGeometry make_circle_geometry(int n_muscles);
// anchors at the 8 corners of a cuboid with 0.20 m edges centred on the origin
EnvGeometry make_cuboid_geometry();

struct SimState {
    Vec3 position;
    Vec3 velocity;
    std::vector<double> excitations;
    double sim_time = 0.0;
};

inline constexpr double kSubstepDt = 0.01;   // s
inline constexpr double kControlDt = 0.1;    // s
inline constexpr int kSubstepsPerControl = 10;

// tension = a f_max ramp(l) + passive(l) + d l_dot, floored at 0 so the cable
// can only pull; both ramps rise linearly from l_opt to l_opt (1 + flex),
// then saturate
double muscle_force(double l, double l_dot, double a, const MuscleSpec& spec);

// semi-implicit Euler: v += (F/m) h, then x += v h, per substep
SimState step_physics(const SimState& state, const std::vector<double>& excitations,
                      double control_dt, int substeps, const EnvGeometry& geom);

// settle under constant excitations until the state is still (velocity below
// tol for a sustained window); faults if it fails to converge in sim budget
Vec3 equilibrium(const std::vector<double>& excitations, const EnvGeometry& geom,
                 double tol = 1e-6);

// net force at a position under constant excitations with zero velocity
Vec3 net_force_at(const Vec3& position, const std::vector<double>& excitations,
                  const EnvGeometry& geom);

struct MotionDomain {
    int dim = 2;
    double characteristic_length = 0.0;
    Vec3 centroid;
    std::vector<Vec3> samples;       // raw equilibrium cloud
    std::vector<Vec3> hull;          // 2D: convex hull of the samples
    Vec3 aabb_lo, aabb_hi;           // 3D bounding box of the samples
    double shrink = 0.95;

    bool contains(const Vec3& p) const;   // inside the shrunk region
    Vec3 sample_target(Rng& rng) const;   // uniform over the shrunk region
};

// equilibria of every single-muscle full excitation plus >= 200 random
// excitation vectors; characteristic_length is the max pairwise distance
MotionDomain estimate_motion_domain(const EnvGeometry& geom, unsigned seed = 20240);

// stable identifier for a geometry (kind + muscle count)
std::string geometry_name(const EnvGeometry& geom);

// per-control-step trajectory dump: t,px,py,pz,vx,vy,vz,a1..an
void write_trajectory_csv(const std::string& path,
                          const std::vector<SimState>& control_steps);

} // namespace nafreach
