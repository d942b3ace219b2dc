#ifndef DENSIFY_GEOMETRY_CONVEX_HULL_HPP
#define DENSIFY_GEOMETRY_CONVEX_HULL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <unordered_map>
#include <vector>

#include "densify/common.hpp"

namespace densify {

struct ConvexHullResult {
  std::vector<int> vertices;  // indices of input points that are hull vertices, ascending
  int dimension = 3;          // affine dimension of the input set
};

namespace hull_detail {

inline bool lex_less(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

// Deterministic "candidate strictly better than best": larger distance wins,
// ties resolved by lexicographic point order, then by index.
inline bool better_candidate(double dc, const Eigen::Vector3d& pc, int ic,
                             double db, const Eigen::Vector3d& pb, int ib) {
  if (dc != db) return dc > db;
  if (lex_less(pc, pb)) return true;
  if (lex_less(pb, pc)) return false;
  return ic < ib;
}

struct Face {
  std::array<int, 3> v{};
  std::array<int, 3> adj{};  // neighbor across directed edge (v[i], v[(i+1)%3])
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  double offset = 0;
  std::vector<int> points;  // conflict list
  int far_point = -1;
  double far_dist = 0;
  bool alive = true;

  double dist(const Eigen::Vector3d& p) const { return normal.dot(p) - offset; }
};

inline std::vector<int> hull_1d(std::span<const Eigen::Vector3d> pts,
                                const Eigen::Vector3d& dir) {
  int imin = 0, imax = 0;
  double tmin = pts[0].dot(dir), tmax = tmin;
  for (int i = 1; i < static_cast<int>(pts.size()); ++i) {
    const double t = pts[i].dot(dir);
    if (t < tmin) { tmin = t; imin = i; }
    if (t > tmax) { tmax = t; imax = i; }
  }
  if (imin == imax) return {imin};
  std::vector<int> out{imin, imax};
  std::sort(out.begin(), out.end());
  return out;
}

// Andrew's monotone chain on points projected into the plane spanned by
// (e1, e2). Strictly convex vertices only; collinear points are dropped.
inline std::vector<int> hull_2d(std::span<const Eigen::Vector3d> pts,
                                const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& e1,
                                const Eigen::Vector3d& e2, double eps_area) {
  const int n = static_cast<int>(pts.size());
  std::vector<std::pair<Eigen::Vector2d, int>> q(n);
  for (int i = 0; i < n; ++i)
    q[i] = {{(pts[i] - origin).dot(e1), (pts[i] - origin).dot(e2)}, i};
  std::sort(q.begin(), q.end(), [](const auto& a, const auto& b) {
    if (a.first.x() != b.first.x()) return a.first.x() < b.first.x();
    if (a.first.y() != b.first.y()) return a.first.y() < b.first.y();
    return a.second < b.second;
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<int> chain;  // positions in q
  auto extend = [&](int qi) {
    while (chain.size() >= 2 &&
           cross(q[chain[chain.size() - 2]].first,
                 q[chain.back()].first, q[qi].first) <= eps_area)
      chain.pop_back();
    chain.push_back(qi);
  };
  std::vector<int> out;
  for (int k = 0; k < n; ++k) extend(k);            // lower chain
  for (int qi : chain) out.push_back(q[qi].second);
  chain.clear();
  for (int k = n - 1; k >= 0; --k) extend(k);       // upper chain
  for (int qi : chain) out.push_back(q[qi].second);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace hull_detail

// Incremental 3D convex hull: farthest-point insertion over face conflict
// lists. Deterministic — every candidate selection breaks ties on
// lexicographic point order, then index. Inputs of affine dimension < 3 fall
// through to the corresponding lower-dimensional hull. Throws Error(internal)
// on numerical breakdown (non-manifold horizon).
inline ConvexHullResult convex_hull_vertices(
    std::span<const Eigen::Vector3d> pts, double eps_factor = 1e-9) {
  using namespace hull_detail;
  const int n = static_cast<int>(pts.size());
  if (n == 0) throw Error::internal("hull-empty", "hull of empty point set");
  if (n == 1) return {{0}, 0};

  double scale = 0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = std::max(eps_factor * scale, 1e-300);

  // Initial simplex: lexicographic extremes, then farthest from line/plane.
  int i0 = 0, i1 = 0;
  for (int i = 1; i < n; ++i) {
    if (lex_less(pts[i], pts[i0])) i0 = i;
    if (lex_less(pts[i1], pts[i])) i1 = i;
  }
  if ((pts[i1] - pts[i0]).norm() <= eps) return {{i0}, 0};

  const Eigen::Vector3d dir = (pts[i1] - pts[i0]).normalized();
  int i2 = -1;
  double d2 = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d off = pts[i] - pts[i0];
    const double d = (off - off.dot(dir) * dir).norm();
    if (d <= eps) continue;
    if (i2 < 0 || better_candidate(d, pts[i], i, d2, pts[i2], i2))
      { d2 = d; i2 = i; }
  }
  if (i2 < 0) return {hull_1d(pts, dir), 1};

  const Eigen::Vector3d plane_n =
      dir.cross((pts[i2] - pts[i0]).normalized()).normalized();
  int i3 = -1;
  double d3 = 0;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(plane_n.dot(pts[i] - pts[i0]));
    if (d <= eps) continue;
    if (i3 < 0 || better_candidate(d, pts[i], i, d3, pts[i3], i3))
      { d3 = d; i3 = i; }
  }
  if (i3 < 0)
    return {hull_2d(pts, pts[i0], dir, plane_n.cross(dir),
                    eps * std::max(scale, 1.0)), 2};

  int a0 = i0, a1 = i1, a2 = i2;
  if (plane_n.dot(pts[i3] - pts[i0]) > 0) std::swap(a1, a2);

  std::vector<Face> faces;
  faces.reserve(512);
  auto make_face = [&](int a, int b, int c) -> int {
    Face f;
    f.v = {a, b, c};
    f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = f.normal.norm();
    if (len > 0) f.normal /= len;
    f.offset = f.normal.dot(pts[a]);
    faces.push_back(std::move(f));
    return static_cast<int>(faces.size()) - 1;
  };

  const int f0 = make_face(a0, a1, a2);
  const int f1 = make_face(a0, i3, a1);
  const int f2 = make_face(a1, i3, a2);
  const int f3 = make_face(a2, i3, a0);
  {
    std::unordered_map<uint64_t, int> owner;
    auto key = [](int a, int b) {
      return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) |
             static_cast<uint32_t>(b);
    };
    for (int fi : {f0, f1, f2, f3})
      for (int e = 0; e < 3; ++e)
        owner[key(faces[fi].v[e], faces[fi].v[(e + 1) % 3])] = fi;
    for (int fi : {f0, f1, f2, f3})
      for (int e = 0; e < 3; ++e)
        faces[fi].adj[e] =
            owner.at(key(faces[fi].v[(e + 1) % 3], faces[fi].v[e]));
  }

  auto assign_point = [&](int pi, std::span<const int> candidates) {
    int best_f = -1;
    double best_d = eps;
    for (int fi : candidates) {
      const double d = faces[fi].dist(pts[pi]);
      if (d > best_d) { best_d = d; best_f = fi; }
    }
    if (best_f < 0) return;
    Face& f = faces[best_f];
    f.points.push_back(pi);
    if (f.far_point < 0 ||
        better_candidate(best_d, pts[pi], pi, f.far_dist, pts[f.far_point],
                         f.far_point))
      { f.far_dist = best_d; f.far_point = pi; }
  };

  {
    const std::array<int, 4> initial{f0, f1, f2, f3};
    for (int i = 0; i < n; ++i) {
      if (i == a0 || i == a1 || i == a2 || i == i3) continue;
      assign_point(i, initial);
    }
  }

  std::deque<int> pending{f0, f1, f2, f3};
  std::vector<int> mark;          // generation stamps, lazily grown
  int generation = 0;
  std::vector<int> visible, cone;
  std::vector<std::array<int, 3>> horizon;  // (a, b, outside face)

  while (!pending.empty()) {
    const int fi = pending.front();
    pending.pop_front();
    if (!faces[fi].alive || faces[fi].points.empty()) continue;
    const int apex = faces[fi].far_point;

    // Flood-fill the region visible from the apex.
    ++generation;
    if (mark.size() < faces.size()) mark.resize(faces.size() * 2, 0);
    visible.clear();
    horizon.clear();
    std::deque<int> bfs{fi};
    mark[fi] = generation;
    while (!bfs.empty()) {
      const int g = bfs.front();
      bfs.pop_front();
      visible.push_back(g);
      for (int e = 0; e < 3; ++e) {
        const int nb = faces[g].adj[e];
        if (faces[nb].dist(pts[apex]) > eps) {
          if (mark[nb] != generation) { mark[nb] = generation; bfs.push_back(nb); }
        } else {
          horizon.push_back({faces[g].v[e], faces[g].v[(e + 1) % 3], nb});
        }
      }
    }

    // Chain horizon edges into a closed loop.
    std::unordered_map<int, size_t> next_from;
    next_from.reserve(horizon.size() * 2);
    for (size_t k = 0; k < horizon.size(); ++k)
      if (!next_from.emplace(horizon[k][0], k).second)
        throw Error::internal("hull-horizon", "non-manifold horizon");
    std::vector<std::array<int, 3>> loop;
    loop.reserve(horizon.size());
    int cursor = horizon[0][0];
    for (size_t k = 0; k < horizon.size(); ++k) {
      auto it = next_from.find(cursor);
      if (it == next_from.end())
        throw Error::internal("hull-horizon", "open horizon loop");
      loop.push_back(horizon[it->second]);
      cursor = horizon[it->second][1];
    }
    if (cursor != loop.front()[0])
      throw Error::internal("hull-horizon", "horizon loop does not close");

    // Build the cone of new faces from the apex over the horizon.
    cone.clear();
    for (const auto& edge : loop) {
      const int nf = make_face(edge[0], edge[1], apex);
      cone.push_back(nf);
      faces[nf].adj[0] = edge[2];
      Face& out_face = faces[edge[2]];
      for (int e = 0; e < 3; ++e)
        if (out_face.v[e] == edge[1] && out_face.v[(e + 1) % 3] == edge[0])
          out_face.adj[e] = nf;
    }
    const size_t m = cone.size();
    for (size_t k = 0; k < m; ++k) {
      faces[cone[k]].adj[1] = cone[(k + 1) % m];      // edge (b, apex)
      faces[cone[k]].adj[2] = cone[(k + m - 1) % m];  // edge (apex, a)
    }

    // Retire visible faces, redistribute their conflict points to the cone.
    for (int g : visible) faces[g].alive = false;
    for (int g : visible)
      for (int pi : faces[g].points)
        if (pi != apex) assign_point(pi, cone);
    for (int g : visible) { faces[g].points.clear(); faces[g].points.shrink_to_fit(); }
    for (int nf : cone)
      if (!faces[nf].points.empty()) pending.push_back(nf);
  }

  std::vector<int> verts;
  for (const Face& f : faces)
    if (f.alive) verts.insert(verts.end(), f.v.begin(), f.v.end());
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  return {std::move(verts), 3};
}

}  // namespace densify

#endif  // DENSIFY_GEOMETRY_CONVEX_HULL_HPP
