#include "udf/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "udf/errors.hpp"

namespace udf {

namespace {

bool finite(const Vec3& p) {
    return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

std::string lowercase_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    return ext;
}

}  // namespace

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw DegenerateInputError("point cloud is empty");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!finite(points_[i]))
            throw DegenerateInputError("point " + std::to_string(i) + " has a non-finite component");
    }
    tree_.build(points_);
}

PointCloud::NearestHit PointCloud::nearest(const Vec3& q) const {
    const KdTree3::Hit hit = tree_.nearest(q);
    return {points_[hit.index], hit.index, hit.distance};
}

double PointCloud::knn_distance(std::size_t i, int k) const {
    k = std::min<int>(k, static_cast<int>(points_.size()) - 1);
    if (k < 1) return 0.0;
    const auto hits = tree_.knn(points_[i], k + 1);  // includes the point itself
    return hits.back().distance;
}

PointCloud normalize(const PointCloud& cloud) {
    Vec3 lo = cloud.point(0), hi = cloud.point(0);
    for (const Vec3& p : cloud.points()) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 extent = hi - lo;
    const double scale = extent.maxCoeff();
    if (scale <= 0.0)
        throw DegenerateInputError("cannot normalize a zero-extent point cloud");
    const Vec3 center = 0.5 * (lo + hi);
    std::vector<Vec3> out;
    out.reserve(cloud.size());
    for (const Vec3& p : cloud.points()) out.push_back((p - center) / scale);
    PointCloud result(std::move(out));
    result.norm_.center = cloud.normalization().center + cloud.normalization().scale * center;
    result.norm_.scale = cloud.normalization().scale * scale;
    return result;
}

double chamfer_l2(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw DegenerateInputError("chamfer_l2: empty point set");
    KdTree3 tree_a(a), tree_b(b);
    double sum_ab = 0.0;
    for (const Vec3& p : a) sum_ab += tree_b.nearest(p).distance;
    double sum_ba = 0.0;
    for (const Vec3& p : b) sum_ba += tree_a.nearest(p).distance;
    return sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size());
}

std::size_t TriangleMesh::boundary_edge_count() const {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : triangles) {
        for (int e = 0; e < 3; ++e) {
            int u = t[e], v = t[(e + 1) % 3];
            if (u > v) std::swap(u, v);
            ++edge_count[{u, v}];
        }
    }
    std::size_t boundary = 0;
    for (const auto& [edge, count] : edge_count)
        if (count == 1) ++boundary;
    return boundary;
}

int TriangleMesh::connected_component_count() const {
    std::vector<int> parent(vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<char> used(vertices.size(), 0);
    for (const auto& t : triangles) {
        used[t[0]] = used[t[1]] = used[t[2]] = 1;
        parent[find(t[1])] = find(t[0]);
        parent[find(t[2])] = find(t[0]);
    }
    int count = 0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
        if (used[i] && find(static_cast<int>(i)) == static_cast<int>(i)) ++count;
    return count;
}

double TriangleMesh::area() const {
    double total = 0.0;
    for (const auto& t : triangles) {
        const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
        const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
        total += 0.5 * e1.cross(e2).norm();
    }
    return total;
}

namespace {

PointCloud load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Vec3> points;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // skip blank and comment lines
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        Vec3 p;
        for (int c = 0; c < 3; ++c) {
            if (!(ls >> p[c]))
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": expected 3 numeric coordinates");
        }
        points.push_back(p);  // extra columns ignored
    }
    if (points.empty()) throw DegenerateInputError(path + ": no points");
    return PointCloud(std::move(points));
}

struct PlyHeader {
    bool binary_le = false;
    std::size_t vertex_count = 0;
    std::size_t face_count = 0;
    // per vertex property: (name, byte size, is_double); only x/y/z are kept
    struct Prop {
        std::string name;
        int bytes;
        bool is_double;
    };
    std::vector<Prop> vertex_props;
    std::size_t header_end = 0;
};

int ply_type_bytes(const std::string& t) {
    if (t == "float" || t == "float32" || t == "int" || t == "int32" || t == "uint" ||
        t == "uint32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    throw ParseError("unsupported ply property type: " + t);
}

PlyHeader parse_ply_header(std::istream& in, const std::string& path) {
    PlyHeader hdr;
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw ParseError(path + ": missing ply magic");
    std::string element;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii")
                hdr.binary_le = false;
            else if (fmt == "binary_little_endian")
                hdr.binary_le = true;
            else
                throw ParseError(path + ": unsupported ply format " + fmt);
        } else if (tok == "element") {
            std::size_t count;
            ls >> element >> count;
            if (element == "vertex") hdr.vertex_count = count;
            if (element == "face") hdr.face_count = count;
        } else if (tok == "property" && element == "vertex") {
            std::string type, name;
            ls >> type;
            if (type == "list") throw ParseError(path + ": list property on vertex element");
            ls >> name;
            hdr.vertex_props.push_back({name, ply_type_bytes(type), type == "double" || type == "float64"});
        } else if (tok == "end_header") {
            return hdr;
        }
    }
    throw ParseError(path + ": unterminated ply header");
}

double read_ply_scalar(const char* buf, const PlyHeader::Prop& prop) {
    if (prop.is_double) {
        double v;
        std::memcpy(&v, buf, 8);
        return v;
    }
    if (prop.bytes == 4) {
        float v;
        std::memcpy(&v, buf, 4);
        return static_cast<double>(v);
    }
    throw ParseError("ply coordinate property must be float or double");
}

std::vector<Vec3> load_ply_vertices(const std::string& path, TriangleMesh* mesh_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    PlyHeader hdr = parse_ply_header(in, path);
    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < hdr.vertex_props.size(); ++i) {
        if (hdr.vertex_props[i].name == "x") ix = static_cast<int>(i);
        if (hdr.vertex_props[i].name == "y") iy = static_cast<int>(i);
        if (hdr.vertex_props[i].name == "z") iz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError(path + ": ply vertex element lacks x/y/z");
    std::vector<Vec3> points;
    points.reserve(hdr.vertex_count);
    if (hdr.binary_le) {
        int stride = 0;
        for (const auto& p : hdr.vertex_props) stride += p.bytes;
        std::vector<char> row(stride);
        for (std::size_t i = 0; i < hdr.vertex_count; ++i) {
            if (!in.read(row.data(), stride))
                throw ParseError(path + ": truncated ply vertex data");
            Vec3 p;
            int off = 0;
            for (std::size_t j = 0; j < hdr.vertex_props.size(); ++j) {
                const auto& prop = hdr.vertex_props[j];
                if (static_cast<int>(j) == ix) p.x() = read_ply_scalar(row.data() + off, prop);
                if (static_cast<int>(j) == iy) p.y() = read_ply_scalar(row.data() + off, prop);
                if (static_cast<int>(j) == iz) p.z() = read_ply_scalar(row.data() + off, prop);
                off += prop.bytes;
            }
            points.push_back(p);
        }
    } else {
        for (std::size_t i = 0; i < hdr.vertex_count; ++i) {
            std::vector<double> vals(hdr.vertex_props.size());
            for (auto& v : vals) {
                if (!(in >> v)) throw ParseError(path + ": truncated ply vertex data");
            }
            points.emplace_back(vals[ix], vals[iy], vals[iz]);
        }
    }
    if (mesh_out) {
        mesh_out->vertices = points;
        for (std::size_t i = 0; i < hdr.face_count; ++i) {
            if (hdr.binary_le) throw ParseError(path + ": binary face data not supported");
            int n;
            if (!(in >> n)) throw ParseError(path + ": truncated ply face data");
            std::vector<int> idx(n);
            for (int& v : idx) in >> v;
            for (int k = 2; k < n; ++k)
                mesh_out->triangles.push_back({idx[0], idx[k - 1], idx[k]});
        }
    }
    return points;
}

}  // namespace

PointCloud load_point_cloud(const std::string& path, CloudFormat format) {
    if (format == CloudFormat::Xyz) return load_xyz(path);
    auto points = load_ply_vertices(path, nullptr);
    if (points.empty()) throw DegenerateInputError(path + ": no points");
    return PointCloud(std::move(points));
}

PointCloud load_point_cloud(const std::string& path) {
    const std::string ext = lowercase_ext(path);
    if (ext == "ply") return load_point_cloud(path, CloudFormat::Ply);
    return load_point_cloud(path, CloudFormat::Xyz);
}

void save_point_cloud(const std::string& path, const PointCloud& cloud, CloudFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    if (format == CloudFormat::Xyz) {
        for (const Vec3& p : cloud.points())
            out << p.x() << " " << p.y() << " " << p.z() << "\n";
    } else {
        out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
            << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
        for (const Vec3& p : cloud.points())
            out << p.x() << " " << p.y() << " " << p.z() << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

TriangleMesh load_mesh(const std::string& path) {
    const std::string ext = lowercase_ext(path);
    TriangleMesh mesh;
    if (ext == "ply") {
        load_ply_vertices(path, &mesh);
        return mesh;
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z()))
                throw ParseError(path + ":" + std::to_string(line_no) + ": bad vertex record");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // "i", "i/j", "i/j/k" forms; indices are 1-based
                idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
            }
            if (idx.size() < 3)
                throw ParseError(path + ":" + std::to_string(line_no) + ": face needs 3+ indices");
            for (std::size_t k = 2; k < idx.size(); ++k)
                mesh.triangles.push_back({idx[0], idx[k - 1], idx[k]});
        }
    }
    return mesh;
}

void save_mesh_obj(const std::string& path, const TriangleMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(12);
    for (const Vec3& v : mesh.vertices) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!out) throw IoError("write failed for " + path);
}

void save_mesh_ply(const std::string& path, const TriangleMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(12);
    out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
        << "\nproperty double x\nproperty double y\nproperty double z\nelement face "
        << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
    for (const Vec3& v : mesh.vertices) out << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace udf
