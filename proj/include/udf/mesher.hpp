#pragma once

#include <Eigen/Dense>
#include <vector>

#include "udf/field.hpp"
#include "udf/geometry.hpp"

namespace udf::mesher {

enum class Side { Same, Opposite, Ambiguous };

// Relative-side classification of two gradient directions: the sign of
// their dot product, with |dot| <= tau_amb treated as ambiguous.
Side side_classifier(const Vec3& gi, const Vec3& gj, double tau_amb = 0.0);

struct MeshOptions {
    int resolution = 128;               // cells per axis
    double activation_threshold = -1;   // < 0 picks 2 * cell diagonal
    double tau_amb = 0.0;
    Vec3 lo = Vec3(-0.55, -0.55, -0.55);
    Vec3 hi = Vec3(0.55, 0.55, 0.55);
    int threads = 1;
};

// Corner-sampled field values over an axis-aligned lattice. Gradients are
// cached only for corners of active (near-surface) cells.
struct LatticeGrid {
    int resolution = 0;  // cells per axis; corners are resolution + 1 per axis
    Vec3 lo = Vec3::Zero();
    Vec3 cell = Vec3::Zero();  // per-axis cell size
    Eigen::VectorXd distances;
    std::vector<int> gradient_slot;  // corner -> column of gradients, -1 if absent
    Eigen::Matrix3Xd gradients;

    int corners() const { return resolution + 1; }
    int corner_index(int x, int y, int z) const {
        return (z * corners() + y) * corners() + x;
    }
    Vec3 corner_pos(int x, int y, int z) const {
        return lo + Vec3(x * cell.x(), y * cell.y(), z * cell.z());
    }
};

LatticeGrid build_lattice(const ScalarField& field, const MeshOptions& opts);

TriangleMesh extract_mesh(const ScalarField& field, const MeshOptions& opts);
TriangleMesh extract_mesh(const ScalarField& field, int resolution,
                          double activation_threshold);

// Runs the case tables on an already-built lattice. Gradient values may be
// substituted by tests (e.g. globally flipped).
TriangleMesh extract_from_lattice(const LatticeGrid& grid, double activation_threshold,
                                  double tau_amb);

}  // namespace udf::mesher
