#include "udf/fixtures.hpp"

#include <cmath>
#include <random>

#include "udf/errors.hpp"

namespace udf::fixtures {

namespace {
constexpr double kTiny = 1e-12;

double sign_up(double v) { return v >= 0.0 ? 1.0 : -1.0; }
}  // namespace

AnalyticShape AnalyticShape::plane(double z, double half_extent) {
    AnalyticShape s;
    s.kind_ = ShapeKind::Plane;
    s.a_ = z;
    s.extent_ = half_extent;
    return s;
}

AnalyticShape AnalyticShape::sphere(double radius) {
    AnalyticShape s;
    s.kind_ = ShapeKind::Sphere;
    s.a_ = radius;
    return s;
}

AnalyticShape AnalyticShape::half_sphere(double radius) {
    AnalyticShape s;
    s.kind_ = ShapeKind::HalfSphere;
    s.a_ = radius;
    return s;
}

AnalyticShape AnalyticShape::two_planes(double gap, double half_extent) {
    AnalyticShape s;
    s.kind_ = ShapeKind::TwoPlanes;
    s.a_ = gap / 2.0;
    s.extent_ = half_extent;
    return s;
}

AnalyticShape AnalyticShape::torus(double major, double minor) {
    AnalyticShape s;
    s.kind_ = ShapeKind::Torus;
    s.a_ = major;
    s.b_ = minor;
    return s;
}

AnalyticShape AnalyticShape::from_name(const std::string& name) {
    if (name == "plane") return plane();
    if (name == "sphere") return sphere();
    if (name == "half-sphere" || name == "half_sphere") return half_sphere();
    if (name == "two-planes" || name == "two_planes") return two_planes();
    if (name == "torus") return torus();
    throw ConfigError("unknown fixture shape: " + name);
}

ExactUdf AnalyticShape::exact_udf(const Vec3& q) const {
    ExactUdf out;
    switch (kind_) {
        case ShapeKind::Plane: {
            const double dz = q.z() - a_;
            out.distance = std::abs(dz);
            out.gradient = Vec3(0, 0, sign_up(dz));
            break;
        }
        case ShapeKind::Sphere: {
            const double r = q.norm();
            if (r < kTiny) {
                out.distance = a_;
                out.gradient = Vec3(0, 0, 1);
                out.on_cut_locus = true;
                break;
            }
            out.distance = std::abs(r - a_);
            out.gradient = sign_up(r - a_) * (q / r);
            break;
        }
        case ShapeKind::HalfSphere: {
            const double r = q.norm();
            const double rho = std::hypot(q.x(), q.y());
            if (q.z() >= 0.0) {
                if (r < kTiny) {
                    out.distance = a_;
                    out.gradient = Vec3(0, 0, 1);
                    out.on_cut_locus = true;
                    break;
                }
                out.distance = std::abs(r - a_);
                out.gradient = sign_up(r - a_) * (q / r);
            } else {
                // closest point lies on the rim circle {z = 0, rho = a_}
                if (rho < kTiny) {
                    out.distance = std::hypot(a_, q.z());
                    out.gradient = Vec3(0, 0, -1);
                    out.on_cut_locus = true;
                    break;
                }
                const Vec3 rim(q.x() / rho * a_, q.y() / rho * a_, 0.0);
                const Vec3 delta = q - rim;
                out.distance = delta.norm();
                out.gradient = out.distance > kTiny ? Vec3(delta / out.distance)
                                                    : Vec3(0, 0, -1);
            }
            break;
        }
        case ShapeKind::TwoPlanes: {
            const double d_top = std::abs(q.z() - a_);
            const double d_bot = std::abs(q.z() + a_);
            if (d_top <= d_bot) {
                out.distance = d_top;
                out.gradient = Vec3(0, 0, sign_up(q.z() - a_));
            } else {
                out.distance = d_bot;
                out.gradient = Vec3(0, 0, sign_up(q.z() + a_));
            }
            out.on_cut_locus = std::abs(d_top - d_bot) < kTiny;
            break;
        }
        case ShapeKind::Torus: {
            const double rho = std::hypot(q.x(), q.y());
            if (rho < kTiny) {
                out.distance = std::hypot(a_, q.z()) - b_;
                out.gradient = Vec3(0, 0, sign_up(q.z()));
                out.on_cut_locus = true;
                break;
            }
            const double dr = rho - a_;
            const double k = std::hypot(dr, q.z());
            if (k < kTiny) {
                out.distance = b_;
                out.gradient = Vec3(0, 0, 1);
                out.on_cut_locus = true;
                break;
            }
            out.distance = std::abs(k - b_);
            const double s = sign_up(k - b_);
            out.gradient = s * Vec3(q.x() / rho * dr / k, q.y() / rho * dr / k, q.z() / k);
            break;
        }
    }
    return out;
}

PointCloud AnalyticShape::sample_surface(std::size_t count, unsigned long long seed) const {
    if (count < 1) throw DegenerateInputError("sample_surface: count must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec3> points;
    points.reserve(count);
    auto unit_sphere = [&]() {
        Vec3 v;
        do {
            v = Vec3(gauss(rng), gauss(rng), gauss(rng));
        } while (v.norm() < kTiny);
        return Vec3(v / v.norm());
    };
    for (std::size_t i = 0; i < count; ++i) {
        switch (kind_) {
            case ShapeKind::Plane:
                points.emplace_back((2.0 * uni(rng) - 1.0) * extent_,
                                    (2.0 * uni(rng) - 1.0) * extent_, a_);
                break;
            case ShapeKind::Sphere:
                points.push_back(a_ * unit_sphere());
                break;
            case ShapeKind::HalfSphere: {
                Vec3 v = unit_sphere();
                v.z() = std::abs(v.z());
                points.push_back(a_ * v);
                break;
            }
            case ShapeKind::TwoPlanes: {
                const double z = uni(rng) < 0.5 ? a_ : -a_;
                points.emplace_back((2.0 * uni(rng) - 1.0) * extent_,
                                    (2.0 * uni(rng) - 1.0) * extent_, z);
                break;
            }
            case ShapeKind::Torus: {
                const double theta = 2.0 * M_PI * uni(rng);
                double phi;
                // area density along the tube angle is proportional to a_ + b_*cos(phi)
                do {
                    phi = 2.0 * M_PI * uni(rng);
                } while (uni(rng) > (a_ + b_ * std::cos(phi)) / (a_ + b_));
                const double ring = a_ + b_ * std::cos(phi);
                points.emplace_back(ring * std::cos(theta), ring * std::sin(theta),
                                    b_ * std::sin(phi));
                break;
            }
        }
    }
    return PointCloud(std::move(points));
}

PointCloud add_noise(const PointCloud& cloud, double sigma, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    std::vector<Vec3> points;
    points.reserve(cloud.size());
    for (const Vec3& p : cloud.points())
        points.emplace_back(p.x() + gauss(rng), p.y() + gauss(rng), p.z() + gauss(rng));
    return PointCloud(std::move(points));
}

}  // namespace udf::fixtures
