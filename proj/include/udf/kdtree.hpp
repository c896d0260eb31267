#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

namespace udf {

using Vec3 = Eigen::Vector3d;

// Static 3D kd-tree over a point array. Queries return the exact nearest
// point; equal distances resolve to the lowest point index.
class KdTree3 {
public:
    KdTree3() = default;

    explicit KdTree3(const std::vector<Vec3>& points) { build(points); }

    void build(const std::vector<Vec3>& points) {
        points_ = &points;
        order_.resize(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) order_[i] = static_cast<int>(i);
        nodes_.clear();
        nodes_.reserve(points.size() * 2);
        if (!points.empty()) root_ = build_range(0, static_cast<int>(points.size()), 0);
    }

    bool empty() const { return points_ == nullptr || points_->empty(); }

    struct Hit {
        int index = -1;
        double distance = std::numeric_limits<double>::infinity();
    };

    Hit nearest(const Vec3& q) const {
        Hit best;
        double best_sq = std::numeric_limits<double>::infinity();
        search(root_, q, best, best_sq);
        best.distance = std::sqrt(best_sq);
        return best;
    }

    // k nearest points, ordered by (distance, index) ascending.
    std::vector<Hit> knn(const Vec3& q, int k) const {
        std::vector<std::pair<double, int>> heap;  // max-heap on (dist_sq, -index)
        heap.reserve(static_cast<std::size_t>(k) + 1);
        search_knn(root_, q, k, heap);
        std::vector<Hit> out(heap.size());
        std::sort(heap.begin(), heap.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; i < heap.size(); ++i)
            out[i] = Hit{heap[i].second, std::sqrt(heap[i].first)};
        return out;
    }

private:
    struct Node {
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range in order_
        int axis = -1;
        double split = 0.0;
    };

    static constexpr int kLeafSize = 16;

    int build_range(int begin, int end, int depth) {
        Node node;
        if (end - begin <= kLeafSize) {
            node.begin = begin;
            node.end = end;
            // Keep leaves index-sorted so scans hit lower indices first.
            std::sort(order_.begin() + begin, order_.begin() + end);
            nodes_.push_back(node);
            return static_cast<int>(nodes_.size()) - 1;
        }
        const int axis = depth % 3;
        const int mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) {
                             const double va = (*points_)[a][axis], vb = (*points_)[b][axis];
                             if (va != vb) return va < vb;
                             return a < b;
                         });
        node.axis = axis;
        node.split = (*points_)[order_[mid]][axis];
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        const int left = build_range(begin, mid, depth + 1);
        const int right = build_range(mid, end, depth + 1);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    void search(int id, const Vec3& q, Hit& best, double& best_sq) const {
        if (id < 0) return;
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = order_[i];
                const double d = (q - (*points_)[idx]).squaredNorm();
                if (d < best_sq || (d == best_sq && idx < best.index)) {
                    best_sq = d;
                    best.index = idx;
                }
            }
            return;
        }
        const double diff = q[node.axis] - node.split;
        const int near = diff < 0.0 ? node.left : node.right;
        const int far = diff < 0.0 ? node.right : node.left;
        search(near, q, best, best_sq);
        if (diff * diff <= best_sq) search(far, q, best, best_sq);
    }

    void search_knn(int id, const Vec3& q, int k,
                    std::vector<std::pair<double, int>>& heap) const {
        if (id < 0) return;
        const Node& node = nodes_[id];
        auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second > b.second;
        };
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = order_[i];
                const double d = (q - (*points_)[idx]).squaredNorm();
                if (static_cast<int>(heap.size()) < k) {
                    heap.emplace_back(d, idx);
                    std::push_heap(heap.begin(), heap.end(), cmp);
                } else if (cmp({d, idx}, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), cmp);
                    heap.back() = {d, idx};
                    std::push_heap(heap.begin(), heap.end(), cmp);
                }
            }
            return;
        }
        const double diff = q[node.axis] - node.split;
        const int near = diff < 0.0 ? node.left : node.right;
        const int far = diff < 0.0 ? node.right : node.left;
        search_knn(near, q, k, heap);
        if (static_cast<int>(heap.size()) < k || diff * diff <= heap.front().first)
            search_knn(far, q, k, heap);
    }

    const std::vector<Vec3>* points_ = nullptr;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace udf
