#pragma once

#include <string>

#include "udf/field.hpp"
#include "udf/geometry.hpp"

namespace udf::fixtures {

enum class ShapeKind { Plane, Sphere, HalfSphere, TwoPlanes, Torus };

struct ExactUdf {
    double distance = 0.0;
    Vec3 gradient = Vec3::Zero();
    bool on_cut_locus = false;  // gradient direction not unique here
};

// Closed-form unsigned distance fields used as oracles. Gradients at exact
// surface points use the outward-limit direction so probes on the surface
// stay usable.
class AnalyticShape : public ScalarField {
public:
    static AnalyticShape plane(double z = 0.0, double half_extent = 0.5);
    static AnalyticShape sphere(double radius = 0.4);
    static AnalyticShape half_sphere(double radius = 0.4);  // upper hemisphere, open rim
    static AnalyticShape two_planes(double gap = 0.4, double half_extent = 0.5);
    static AnalyticShape torus(double major = 0.3, double minor = 0.12);
    static AnalyticShape from_name(const std::string& name);

    ShapeKind kind() const { return kind_; }

    ExactUdf exact_udf(const Vec3& q) const;
    PointCloud sample_surface(std::size_t count, unsigned long long seed) const;

    double eval(const Vec3& q) const override { return exact_udf(q).distance; }
    std::pair<double, Vec3> eval_with_gradient(const Vec3& q) const override {
        const ExactUdf e = exact_udf(q);
        return {e.distance, e.gradient};
    }

private:
    ShapeKind kind_ = ShapeKind::Sphere;
    double a_ = 0.4, b_ = 0.0, extent_ = 0.5;
};

PointCloud add_noise(const PointCloud& cloud, double sigma, unsigned long long seed);

}  // namespace udf::fixtures
