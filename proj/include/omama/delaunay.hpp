// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

// Bowyer-Watson Delaunay triangulation.
//
// The three bounding vertices are treated symbolically as points at
// infinity, so no finite super-triangle can cut off hull triangles. A
// triangle with one vertex at infinity in direction D has the open
// half-plane beyond its finite edge (on D's side) as its circumdisk; with
// two such vertices the disk degenerates to the half-plane through the
// finite vertex facing the circumcentre of (0, D1, D2).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

namespace omama {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

namespace geom {

inline double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

/// Positive when d lies strictly inside the circle through a, b, c.
inline double in_circle(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) -
                     (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady) +
                     (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
  return cross(a, b, c) > 0 ? det : -det;
}

/// True when every point lies on one line (or there are fewer than 3).
inline bool all_collinear(const std::vector<Point2>& pts) {
  if (pts.size() < 3) return true;
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max({scale, std::abs(p.x - pts[0].x), std::abs(p.y - pts[0].y)});
  const double tol = 1e-12 * scale * scale;
  std::size_t far = 1;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (std::hypot(pts[i].x - pts[0].x, pts[i].y - pts[0].y) > std::hypot(pts[far].x - pts[0].x, pts[far].y - pts[0].y))
      far = i;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (std::abs(cross(pts[0], pts[far], pts[i])) > tol) return false;
  return true;
}

}  // namespace geom

/// Triangulates the points and returns triangles as index triples (only
/// triangles whose three vertices are input points). Points must be
/// distinct; fewer than 3 points or an all-collinear set yields nothing.
inline std::vector<std::array<std::size_t, 3>> delaunay_triangles(const std::vector<Point2>& pts) {
  const std::size_t n = pts.size();
  if (n < 3 || geom::all_collinear(pts)) return {};

  // Directions of the symbolic vertices n, n+1, n+2.
  constexpr double kTheta = 0.5;
  const std::array<Point2, 3> dirs = {
      Point2{std::cos(kTheta), std::sin(kTheta)},
      Point2{std::cos(kTheta + 2.0943951023931957), std::sin(kTheta + 2.0943951023931957)},
      Point2{std::cos(kTheta + 4.1887902047863905), std::sin(kTheta + 4.1887902047863905)},
  };
  auto is_inf = [n](std::size_t v) { return v >= n; };

  auto inside = [&](const std::array<std::size_t, 3>& t, Point2 p) {
    std::array<std::size_t, 3> fin{}, inf{};
    std::size_t nf = 0, ni = 0;
    for (auto v : t) (is_inf(v) ? inf[ni++] : fin[nf++]) = v;
    if (ni == 0) return geom::in_circle(pts[fin[0]], pts[fin[1]], pts[fin[2]], p) > 0.0;
    if (ni == 3) return true;
    if (ni == 1) {
      const Point2 a = pts[fin[0]], b = pts[fin[1]], d = dirs[inf[0] - n];
      const double side_d = (b.x - a.x) * d.y - (b.y - a.y) * d.x;
      const double side_p = geom::cross(a, b, p);
      if (side_p == 0.0) {
        // On the edge's line: inside only strictly between a and b.
        const double t1 = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
        const double t2 = (p.x - b.x) * (a.x - b.x) + (p.y - b.y) * (a.y - b.y);
        return t1 > 0.0 && t2 > 0.0;
      }
      return (side_p > 0.0) == (side_d > 0.0);
    }
    // Two vertices at infinity: half-plane through the finite vertex.
    const Point2 a = pts[fin[0]], d1 = dirs[inf[0] - n], d2 = dirs[inf[1] - n];
    const double den = 2.0 * (d1.x * d2.y - d1.y * d2.x);
    const double cx = (d2.y * (d1.x * d1.x + d1.y * d1.y) - d1.y * (d2.x * d2.x + d2.y * d2.y)) / den;
    const double cy = (d1.x * (d2.x * d2.x + d2.y * d2.y) - d2.x * (d1.x * d1.x + d1.y * d1.y)) / den;
    return (p.x - a.x) * cx + (p.y - a.y) * cy > 0.0;
  };

  // Lexicographic insertion order makes cocircular tie-breaking deterministic.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return pts[i].x != pts[j].x ? pts[i].x < pts[j].x : (pts[i].y != pts[j].y ? pts[i].y < pts[j].y : i < j);
  });

  std::vector<std::array<std::size_t, 3>> tris = {{n, n + 1, n + 2}};
  for (std::size_t idx : order) {
    const Point2 p = pts[idx];
    std::map<std::pair<std::size_t, std::size_t>, int> edges;
    std::vector<std::array<std::size_t, 3>> keep;
    keep.reserve(tris.size() + 4);
    for (const auto& t : tris) {
      if (!inside(t, p)) {
        keep.push_back(t);
        continue;
      }
      for (int k = 0; k < 3; ++k) {
        auto u = t[k], v = t[(k + 1) % 3];
        if (u > v) std::swap(u, v);
        ++edges[{u, v}];
      }
    }
    for (const auto& [e, count] : edges)
      if (count == 1) keep.push_back({e.first, e.second, idx});
    tris = std::move(keep);
  }

  std::vector<std::array<std::size_t, 3>> out;
  for (const auto& t : tris)
    if (!is_inf(t[0]) && !is_inf(t[1]) && !is_inf(t[2])) out.push_back(t);
  return out;
}

}  // namespace omama
