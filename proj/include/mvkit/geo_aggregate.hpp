#pragma once

#include "mvkit/geometry.hpp"
#include "mvkit/matrix_core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mvkit::geo {

/// Named regions; each region may have several parts.
struct RegionSet {
  std::vector<std::string> ids;
  std::vector<std::vector<Polygon>> parts;

  std::size_t size() const { return ids.size(); }
  double region_area(std::size_t i) const;
  bool contains(std::size_t i, const Point& p) const;
};

/// Checks id uniqueness and validates every part. Throws InvalidPolygon with
/// the region id on the first invalid part.
void validate(const RegionSet& regions);

struct Site {
  std::string id;
  Point location;
};

/// Voronoi cells of the sites clipped to `boundary` (a simple polygon without
/// holes). Each cell is returned as one or more convex parts: a single part
/// for a convex boundary, otherwise the pieces of the cell inside each
/// triangle of the boundary's triangulation.
/// Throws DuplicateSites (pairs closer than 1e-9) and SiteOutsideBoundary.
RegionSet voronoi(const std::vector<Site>& sites, const Polygon& boundary);

/// Area of p ∩ q for a simple polygon p (holes allowed) and a convex q.
/// Throws InvalidPolygon if p is invalid or q is not convex.
double intersection_area(const Polygon& p, const Ring& convex_q);

struct OverlapMatrix {
  Matrix gamma;  // units x sites, intersection areas
  std::vector<std::string> unit_ids;
  std::vector<std::string> site_ids;
};

/// gamma(i, j) = area(unit_i ∩ cell_j), summed over parts. Every cell part
/// must be convex.
OverlapMatrix overlap_matrix(const RegionSet& units, const RegionSet& cells, unsigned threads = 1);

/// Area-weighted mean of site feature rows for each unit. Site rows are
/// matched by id. Throws EmptyOverlap when a unit's row of gamma sums to 0.
FeatureMatrix aggregate_features(const OverlapMatrix& gamma, const FeatureMatrix& site_features);

/// GeoJSON FeatureCollection of Polygon / MultiPolygon features, id taken
/// from properties.id (string or number).
RegionSet read_regions_geojson(const std::filesystem::path& path);
RegionSet parse_regions_geojson(const std::string& text);
std::string regions_to_geojson(const RegionSet& regions);
/// Polygon of the first feature (a MultiPolygon must have exactly one part).
Polygon read_boundary_geojson(const std::filesystem::path& path);

/// CSV "id,x,y".
std::vector<Site> read_sites_csv(const std::filesystem::path& path);
void write_overlap_csv(const std::filesystem::path& path, const OverlapMatrix& gamma);

}  // namespace mvkit::geo
