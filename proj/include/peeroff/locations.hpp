#pragma once

// Location datasets: CSV ingestion (id,kind,lat,lon), group attachment by radius,
// and a synthetic generator for when no dataset file is available.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "peeroff/model.hpp"
#include "peeroff/scenario.hpp"

namespace peeroff {

struct LocationSet {
    std::vector<std::string> station_ids;
    std::vector<GeoPoint> stations;
    std::vector<std::string> group_ids;
    std::vector<GeoPoint> groups;
};

/// Reads a location CSV and keeps the rows inside `box`. Throws IoError with the line
/// number on malformed rows and ConfigError when no station survives the filter.
LocationSet load_locations(const std::string& path, const BoundingBox& box);
LocationSet parse_locations(std::istream& in, const BoundingBox& box, const std::string& source = "<stream>");

/// Stations within `radius_m` of each group. Throws ConfigError listing every group without one.
std::vector<std::vector<int>> attach_groups(const std::vector<GeoPoint>& groups,
                                            const std::vector<GeoPoint>& stations, double radius_m);

/// Stations uniform in the box; each group placed uniformly within 80 m of a random station
/// (rejection-sampled to stay in the box), so every group has a station within 100 m.
LocationSet generate_locations(std::uint64_t seed, int n_stations, int n_groups,
                               const BoundingBox& box = {});

void write_locations_csv(std::ostream& out, const LocationSet& set);

}  // namespace peeroff
