#include "udf/mesher.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

#include "udf/errors.hpp"
#include "udf/mc_tables.hpp"

namespace udf::mesher {

Side side_classifier(const Vec3& gi, const Vec3& gj, double tau_amb) {
    const double d = gi.dot(gj);
    if (d > tau_amb) return Side::Same;
    if (d < -tau_amb) return Side::Opposite;
    return Side::Ambiguous;
}

namespace {

// Bourke corner layout: bit0 = +x, bit1 = +y for corners 2,3,6,7, +z for 4..7.
constexpr int kCornerOffset[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
};

// Anchor corner 0 positive; later corners take the majority vote of
// classifications against already-signed corners, ambiguity abstains, and a
// tie or fully-ambiguous corner inherits the anchor's sign.
std::array<int, 8> assign_pseudo_signs(const std::array<Vec3, 8>& grads, double tau_amb) {
    std::array<int, 8> sign{};
    sign[0] = 1;
    for (int c = 1; c < 8; ++c) {
        int vote = 0;
        for (int s = 0; s < c; ++s) {
            switch (side_classifier(grads[c], grads[s], tau_amb)) {
                case Side::Same:
                    vote += sign[s];
                    break;
                case Side::Opposite:
                    vote -= sign[s];
                    break;
                case Side::Ambiguous:
                    break;
            }
        }
        sign[c] = vote > 0 ? 1 : vote < 0 ? -1 : 1;
    }
    return sign;
}

template <typename Fn>
void parallel_chunks(Eigen::Index total, int threads, Eigen::Index chunk, Fn&& fn) {
    if (threads <= 1) {
        for (Eigen::Index start = 0; start < total; start += chunk)
            fn(start, std::min(start + chunk, total));
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<Eigen::Index> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const Eigen::Index start = next.fetch_add(chunk);
                if (start >= total) return;
                fn(start, std::min(start + chunk, total));
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

LatticeGrid build_lattice(const ScalarField& field, const MeshOptions& opts) {
    if (opts.resolution < 2) throw ConfigError("lattice resolution must be >= 2");
    LatticeGrid grid;
    grid.resolution = opts.resolution;
    grid.lo = opts.lo;
    grid.cell = (opts.hi - opts.lo) / static_cast<double>(opts.resolution);

    const int n = grid.corners();
    const Eigen::Index total = static_cast<Eigen::Index>(n) * n * n;
    grid.distances.resize(total);

    parallel_chunks(total, opts.threads, 8192, [&](Eigen::Index start, Eigen::Index end) {
        Eigen::Matrix3Xd pts(3, end - start);
        for (Eigen::Index i = start; i < end; ++i) {
            const int x = static_cast<int>(i % n);
            const int y = static_cast<int>((i / n) % n);
            const int z = static_cast<int>(i / (static_cast<Eigen::Index>(n) * n));
            pts.col(i - start) = grid.corner_pos(x, y, z);
        }
        Eigen::VectorXd vals;
        field.eval_batch(pts, vals);
        grid.distances.segment(start, end - start) = vals;
    });

    const double threshold = opts.activation_threshold >= 0.0
                                 ? opts.activation_threshold
                                 : 2.0 * grid.cell.norm();

    // gradients only where an active cell touches the corner
    grid.gradient_slot.assign(static_cast<std::size_t>(total), -1);
    std::vector<Eigen::Index> needed;
    const int res = grid.resolution;
    for (int z = 0; z < res; ++z)
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                double dmin = std::numeric_limits<double>::infinity();
                for (const auto& off : kCornerOffset)
                    dmin = std::min(dmin,
                                    grid.distances[grid.corner_index(x + off[0], y + off[1],
                                                                    z + off[2])]);
                if (dmin >= threshold) continue;
                for (const auto& off : kCornerOffset) {
                    const Eigen::Index ci =
                        grid.corner_index(x + off[0], y + off[1], z + off[2]);
                    if (grid.gradient_slot[static_cast<std::size_t>(ci)] < 0) {
                        grid.gradient_slot[static_cast<std::size_t>(ci)] =
                            static_cast<int>(needed.size());
                        needed.push_back(ci);
                    }
                }
            }

    grid.gradients.resize(3, static_cast<Eigen::Index>(needed.size()));
    parallel_chunks(static_cast<Eigen::Index>(needed.size()), opts.threads, 4096,
                    [&](Eigen::Index start, Eigen::Index end) {
                        Eigen::Matrix3Xd pts(3, end - start);
                        for (Eigen::Index i = start; i < end; ++i) {
                            const Eigen::Index ci = needed[static_cast<std::size_t>(i)];
                            const int x = static_cast<int>(ci % n);
                            const int y = static_cast<int>((ci / n) % n);
                            const int z =
                                static_cast<int>(ci / (static_cast<Eigen::Index>(n) * n));
                            pts.col(i - start) = grid.corner_pos(x, y, z);
                        }
                        Eigen::VectorXd vals;
                        Eigen::Matrix3Xd grads;
                        field.eval_with_gradient_batch(pts, vals, grads);
                        grid.gradients.middleCols(start, end - start) = grads;
                    });
    return grid;
}

TriangleMesh extract_from_lattice(const LatticeGrid& grid, double activation_threshold,
                                  double tau_amb) {
    const double threshold = activation_threshold >= 0.0 ? activation_threshold
                                                         : 2.0 * grid.cell.norm();
    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, int> edge_vertex;
    const int res = grid.resolution;

    auto edge_key = [&](Eigen::Index a, Eigen::Index b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
    };

    for (int z = 0; z < res; ++z)
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                std::array<Eigen::Index, 8> corner;
                std::array<double, 8> dist;
                double dmin = std::numeric_limits<double>::infinity();
                for (int c = 0; c < 8; ++c) {
                    corner[c] = grid.corner_index(x + kCornerOffset[c][0],
                                                  y + kCornerOffset[c][1],
                                                  z + kCornerOffset[c][2]);
                    dist[c] = grid.distances[corner[c]];
                    dmin = std::min(dmin, dist[c]);
                }
                if (dmin >= threshold) continue;

                std::array<Vec3, 8> grads;
                bool have_grads = true;
                for (int c = 0; c < 8; ++c) {
                    const int slot = grid.gradient_slot[static_cast<std::size_t>(corner[c])];
                    if (slot < 0) {
                        have_grads = false;
                        break;
                    }
                    grads[c] = grid.gradients.col(slot);
                }
                if (!have_grads) continue;

                const std::array<int, 8> sign = assign_pseudo_signs(grads, tau_amb);
                int cube_index = 0;
                for (int c = 0; c < 8; ++c)
                    if (sign[c] < 0) cube_index |= 1 << c;
                if (mc::kEdgeTable[cube_index] == 0) continue;

                std::array<int, 12> edge_vert;
                edge_vert.fill(-1);
                for (int e = 0; e < 12; ++e) {
                    if (!(mc::kEdgeTable[cube_index] & (1 << e))) continue;
                    const int ca = mc::kEdgeCorners[e].a, cb = mc::kEdgeCorners[e].b;
                    const std::uint64_t key = edge_key(corner[ca], corner[cb]);
                    auto it = edge_vertex.find(key);
                    if (it != edge_vertex.end()) {
                        edge_vert[e] = it->second;
                        continue;
                    }
                    // unsigned distances act as oppositely-signed values
                    const double sum = dist[ca] + dist[cb];
                    const double t = sum < 1e-12 ? 0.5 : dist[ca] / sum;
                    const Vec3 pa = grid.corner_pos(x + kCornerOffset[ca][0],
                                                    y + kCornerOffset[ca][1],
                                                    z + kCornerOffset[ca][2]);
                    const Vec3 pb = grid.corner_pos(x + kCornerOffset[cb][0],
                                                    y + kCornerOffset[cb][1],
                                                    z + kCornerOffset[cb][2]);
                    const int v = static_cast<int>(mesh.vertices.size());
                    mesh.vertices.push_back(pa + t * (pb - pa));
                    edge_vertex.emplace(key, v);
                    edge_vert[e] = v;
                }

                const int* tri = mc::kTriTable[cube_index];
                for (int i = 0; tri[i] != -1; i += 3) {
                    const int a = edge_vert[tri[i]], b = edge_vert[tri[i + 1]],
                              c = edge_vert[tri[i + 2]];
                    if (a == b || b == c || a == c) continue;
                    mesh.triangles.push_back({a, b, c});
                }
            }
    return mesh;
}

TriangleMesh extract_mesh(const ScalarField& field, const MeshOptions& opts) {
    const LatticeGrid grid = build_lattice(field, opts);
    return extract_from_lattice(grid, opts.activation_threshold, opts.tau_amb);
}

TriangleMesh extract_mesh(const ScalarField& field, int resolution,
                          double activation_threshold) {
    MeshOptions opts;
    opts.resolution = resolution;
    opts.activation_threshold = activation_threshold;
    return extract_mesh(field, opts);
}

}  // namespace udf::mesher
