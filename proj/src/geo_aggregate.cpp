#include "mvkit/geo_aggregate.hpp"

#include "mvkit/csv.hpp"
#include "mvkit/error.hpp"
#include "mvkit/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace mvkit::geo {

namespace {

double max_distance(const Ring& ring, const Point& p) {
  double d = 0.0;
  for (const auto& v : ring) d = std::max(d, std::hypot(v.x - p.x, v.y - p.y));
  return d;
}

Ring box_ring(const BoundingBox& b) {
  return {{b.min_x, b.min_y}, {b.max_x, b.min_y}, {b.max_x, b.max_y}, {b.min_x, b.max_y}};
}

double clipped_area(const Polygon& p, const Ring& convex_q) {
  double a = signed_area(clip_to_convex(p.outer, convex_q));
  for (const auto& h : p.holes) a += signed_area(clip_to_convex(h, convex_q));
  return std::max(0.0, a);
}

}  // namespace

double RegionSet::region_area(std::size_t i) const {
  double a = 0.0;
  for (const auto& part : parts[i]) a += area(part);
  return a;
}

bool RegionSet::contains(std::size_t i, const Point& p) const {
  return std::any_of(parts[i].begin(), parts[i].end(),
                     [&](const Polygon& part) { return point_in_polygon(p, part); });
}

void validate(const RegionSet& regions) {
  if (regions.ids.size() != regions.parts.size()) fail(ErrorCode::InvalidData, "region ids and parts differ in length");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (!seen.insert(regions.ids[i]).second) fail(ErrorCode::InvalidData, "duplicate region id '" + regions.ids[i] + "'");
    if (regions.parts[i].empty()) fail(ErrorCode::InvalidPolygon, "region '" + regions.ids[i] + "' has no parts");
    for (const auto& part : regions.parts[i]) {
      try {
        validate(part);
      } catch (const Error& e) {
        fail(ErrorCode::InvalidPolygon, "region '" + regions.ids[i] + "': " + e.what());
      }
    }
  }
}

RegionSet voronoi(const std::vector<Site>& sites, const Polygon& boundary_in) {
  if (sites.empty()) fail(ErrorCode::InvalidArgument, "voronoi needs at least one site");
  const Polygon boundary = normalize(boundary_in);
  validate(boundary);
  if (!boundary.holes.empty()) fail(ErrorCode::InvalidPolygon, "voronoi boundary must not have holes");

  {
    std::vector<std::size_t> order(sites.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sites[a].location.x < sites[b].location.x;
    });
    for (std::size_t a = 0; a < order.size(); ++a) {
      const Point& pa = sites[order[a]].location;
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        const Point& pb = sites[order[b]].location;
        if (pb.x - pa.x >= 1e-9) break;
        if (std::hypot(pb.x - pa.x, pb.y - pa.y) < 1e-9) {
          fail(ErrorCode::DuplicateSites, "sites '" + sites[order[a]].id + "' and '" + sites[order[b]].id + "' coincide");
        }
      }
    }
  }
  for (const auto& s : sites) {
    if (!point_in_polygon(s.location, boundary)) {
      fail(ErrorCode::SiteOutsideBoundary, "site '" + s.id + "' lies outside the boundary");
    }
  }

  BoundingBox box = bounds(boundary.outer);
  const double pad = std::max(box.max_x - box.min_x, box.max_y - box.min_y);
  box = {box.min_x - pad, box.min_y - pad, box.max_x + pad, box.max_y + pad};

  const bool convex_boundary = is_convex(boundary.outer);
  std::vector<std::array<Point, 3>> triangles;
  std::vector<BoundingBox> triangle_boxes;
  if (!convex_boundary) {
    triangles = triangulate(boundary.outer);
    for (const auto& t : triangles) triangle_boxes.push_back(bounds({t[0], t[1], t[2]}));
  }

  RegionSet out;
  std::vector<std::size_t> by_distance(sites.size());
  for (std::size_t j = 0; j < sites.size(); ++j) {
    const Point& s = sites[j].location;
    std::iota(by_distance.begin(), by_distance.end(), std::size_t{0});
    auto dist = [&](std::size_t k) { return std::hypot(sites[k].location.x - s.x, sites[k].location.y - s.y); };
    std::sort(by_distance.begin(), by_distance.end(), [&](std::size_t a, std::size_t b) {
      const double da = dist(a), db = dist(b);
      return da < db || (da == db && a < b);
    });
    Ring cell = box_ring(box);
    double reach = max_distance(cell, s);
    for (std::size_t k : by_distance) {
      if (k == j) continue;
      // A site farther than twice the cell's radius cannot cut it.
      if (dist(k) > 2.0 * reach) break;
      const Point& o = sites[k].location;
      const double a = o.x - s.x;
      const double b = o.y - s.y;
      const double c = 0.5 * (o.x * o.x + o.y * o.y - s.x * s.x - s.y * s.y);
      cell = clip_half_plane(cell, a, b, c);
      reach = max_distance(cell, s);
    }
    std::vector<Polygon> parts;
    if (convex_boundary) {
      Ring piece = clip_to_convex(cell, boundary.outer);
      if (!piece.empty()) parts.push_back(Polygon{std::move(piece), {}});
    } else {
      const BoundingBox cell_box = bounds(cell);
      for (std::size_t t = 0; t < triangles.size(); ++t) {
        if (!cell_box.overlaps(triangle_boxes[t])) continue;
        const auto& tri = triangles[t];
        Ring piece = clip_to_convex(Ring{tri[0], tri[1], tri[2]}, cell);
        if (piece.size() >= 3 && signed_area(piece) > 0.0) parts.push_back(Polygon{std::move(piece), {}});
      }
    }
    out.ids.push_back(sites[j].id);
    out.parts.push_back(std::move(parts));
  }
  return out;
}

double intersection_area(const Polygon& p_in, const Ring& convex_q) {
  const Polygon p = normalize(p_in);
  validate(p);
  Ring q = convex_q;
  if (signed_area(q) < 0.0) std::reverse(q.begin(), q.end());
  if (!is_convex(q)) fail(ErrorCode::InvalidPolygon, "clip polygon is not convex");
  return clipped_area(p, q);
}

OverlapMatrix overlap_matrix(const RegionSet& units_in, const RegionSet& cells_in, unsigned threads) {
  RegionSet units = units_in;
  RegionSet cells = cells_in;
  for (auto& parts : units.parts)
    for (auto& part : parts) part = normalize(part);
  for (auto& parts : cells.parts)
    for (auto& part : parts) part = normalize(part);
  validate(units);
  validate(cells);
  for (std::size_t j = 0; j < cells.size(); ++j) {
    for (const auto& part : cells.parts[j]) {
      if (!part.holes.empty() || !is_convex(part.outer)) {
        fail(ErrorCode::InvalidPolygon, "cell '" + cells.ids[j] + "' has a nonconvex part");
      }
    }
  }

  std::vector<std::vector<BoundingBox>> cell_boxes(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j)
    for (const auto& part : cells.parts[j]) cell_boxes[j].push_back(bounds(part.outer));

  OverlapMatrix out;
  out.unit_ids = units.ids;
  out.site_ids = cells.ids;
  out.gamma = Matrix::Zero(static_cast<Index>(units.size()), static_cast<Index>(cells.size()));
  parallel_for(units.size(), threads, [&](std::size_t i) {
    for (const auto& upart : units.parts[i]) {
      const BoundingBox ub = bounds(upart.outer);
      for (std::size_t j = 0; j < cells.size(); ++j) {
        for (std::size_t c = 0; c < cells.parts[j].size(); ++c) {
          if (!ub.overlaps(cell_boxes[j][c])) continue;
          out.gamma(static_cast<Index>(i), static_cast<Index>(j)) += clipped_area(upart, cells.parts[j][c].outer);
        }
      }
    }
  });
  return out;
}

FeatureMatrix aggregate_features(const OverlapMatrix& gamma, const FeatureMatrix& site_features) {
  if (gamma.gamma.cols() != static_cast<Index>(gamma.site_ids.size()) ||
      gamma.gamma.rows() != static_cast<Index>(gamma.unit_ids.size())) {
    fail(ErrorCode::ShapeMismatch, "overlap matrix labels do not match its shape");
  }
  std::unordered_map<std::string, Index> row_of;
  for (Index r = 0; r < site_features.rows(); ++r) row_of.emplace(site_features.unit_ids()[static_cast<std::size_t>(r)], r);
  Matrix aligned(gamma.gamma.cols(), site_features.cols());
  for (std::size_t j = 0; j < gamma.site_ids.size(); ++j) {
    auto it = row_of.find(gamma.site_ids[j]);
    if (it == row_of.end()) fail(ErrorCode::UnitMismatch, "no features for site '" + gamma.site_ids[j] + "'");
    aligned.row(static_cast<Index>(j)) = site_features.values().row(it->second);
  }
  Matrix out(gamma.gamma.rows(), site_features.cols());
  for (Index i = 0; i < gamma.gamma.rows(); ++i) {
    const double weight = gamma.gamma.row(i).sum();
    if (!(weight > 0.0)) fail(ErrorCode::EmptyOverlap, gamma.unit_ids[static_cast<std::size_t>(i)]);
    out.row(i) = (gamma.gamma.row(i) * aligned) / weight;
  }
  return FeatureMatrix(gamma.unit_ids, site_features.feature_names(), std::move(out));
}

namespace {

using nlohmann::json;

Ring ring_from_json(const json& coords) {
  Ring r;
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2) fail(ErrorCode::InvalidData, "GeoJSON position must be [x, y]");
    r.push_back(Point{pt[0].get<double>(), pt[1].get<double>()});
  }
  return r;
}

Polygon polygon_from_json(const json& coords) {
  if (!coords.is_array() || coords.empty()) fail(ErrorCode::InvalidData, "GeoJSON polygon without rings");
  Polygon p;
  p.outer = ring_from_json(coords[0]);
  for (std::size_t k = 1; k < coords.size(); ++k) p.holes.push_back(ring_from_json(coords[k]));
  return normalize(std::move(p));
}

std::vector<Polygon> parts_from_geometry(const json& geometry) {
  const std::string type = geometry.at("type").get<std::string>();
  const json& coords = geometry.at("coordinates");
  if (type == "Polygon") return {polygon_from_json(coords)};
  if (type == "MultiPolygon") {
    std::vector<Polygon> parts;
    for (const auto& poly : coords) parts.push_back(polygon_from_json(poly));
    return parts;
  }
  fail(ErrorCode::InvalidData, "unsupported GeoJSON geometry type '" + type + "'");
}

json ring_to_json(const Ring& r) {
  json a = json::array();
  for (const auto& p : r) a.push_back({p.x, p.y});
  if (!r.empty()) a.push_back({r.front().x, r.front().y});
  return a;
}

}  // namespace

RegionSet parse_regions_geojson(const std::string& text) {
  RegionSet out;
  try {
    const json doc = json::parse(text);
    const json& features = doc.at("features");
    std::size_t index = 0;
    for (const auto& f : features) {
      ++index;
      std::string id;
      const json* props = f.contains("properties") && f["properties"].is_object() ? &f["properties"] : nullptr;
      if (props && props->contains("id")) {
        const json& v = (*props)["id"];
        id = v.is_string() ? v.get<std::string>() : v.dump();
      } else if (f.contains("id")) {
        id = f["id"].is_string() ? f["id"].get<std::string>() : f["id"].dump();
      } else {
        fail(ErrorCode::InvalidData, "GeoJSON feature " + std::to_string(index) + " has no id");
      }
      out.ids.push_back(id);
      out.parts.push_back(parts_from_geometry(f.at("geometry")));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidData, std::string("malformed GeoJSON: ") + e.what());
  }
  return out;
}

RegionSet read_regions_geojson(const std::filesystem::path& path) {
  return parse_regions_geojson(read_text_file(path));
}

std::string regions_to_geojson(const RegionSet& regions) {
  json features = json::array();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    json polys = json::array();
    for (const auto& part : regions.parts[i]) {
      json rings = json::array();
      rings.push_back(ring_to_json(part.outer));
      for (const auto& h : part.holes) rings.push_back(ring_to_json(h));
      polys.push_back(rings);
    }
    features.push_back({{"type", "Feature"},
                        {"properties", {{"id", regions.ids[i]}}},
                        {"geometry", {{"type", "MultiPolygon"}, {"coordinates", polys}}}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump(1) + "\n";
}

Polygon read_boundary_geojson(const std::filesystem::path& path) {
  const RegionSet r = read_regions_geojson(path);
  if (r.size() == 0) fail(ErrorCode::InvalidData, path.string() + ": no boundary feature");
  if (r.parts.front().size() != 1) fail(ErrorCode::InvalidPolygon, path.string() + ": boundary must be a single polygon");
  return r.parts.front().front();
}

std::vector<Site> read_sites_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv_table(path);
  if (t.header.size() != 3) fail(ErrorCode::InvalidData, path.string() + ": expected columns id,x,y");
  std::vector<Site> sites;
  for (const auto& row : t.rows) sites.push_back(Site{row[0], Point{parse_double(row[1]), parse_double(row[2])}});
  return sites;
}

void write_overlap_csv(const std::filesystem::path& path, const OverlapMatrix& gamma) {
  CsvTable t;
  t.header.push_back("unit_id");
  t.header.insert(t.header.end(), gamma.site_ids.begin(), gamma.site_ids.end());
  for (Index i = 0; i < gamma.gamma.rows(); ++i) {
    std::vector<std::string> row{gamma.unit_ids[static_cast<std::size_t>(i)]};
    for (Index j = 0; j < gamma.gamma.cols(); ++j) row.push_back(format_double(gamma.gamma(i, j)));
    t.rows.push_back(std::move(row));
  }
  write_csv_table(path, t);
}

}  // namespace mvkit::geo
