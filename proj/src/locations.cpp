#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "peeroff/errors.hpp"
#include "peeroff/locations.hpp"
#include "peeroff/random.hpp"

namespace peeroff {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end && std::isfinite(out);
}

}  // namespace

LocationSet parse_locations(std::istream& in, const BoundingBox& box, const std::string& source) {
    LocationSet set;
    std::string line;
    int line_no = 0;
    bool header = false;
    auto fail = [&](const std::string& msg) {
        throw IoError(source + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(line);
        if (!header) {
            if (f.size() != 4 || lower(f[0]) != "id" || lower(f[1]) != "kind" || lower(f[2]) != "lat" || lower(f[3]) != "lon")
                fail("expected header id,kind,lat,lon");
            header = true;
            continue;
        }
        if (f.size() != 4) fail("expected 4 fields, got " + std::to_string(f.size()));
        GeoPoint p;
        if (!parse_double(f[2], p.lat) || p.lat < -90.0 || p.lat > 90.0) fail("bad latitude '" + f[2] + "'");
        if (!parse_double(f[3], p.lon) || p.lon < -180.0 || p.lon > 180.0) fail("bad longitude '" + f[3] + "'");
        const std::string kind = lower(f[1]);
        if (kind != "bs" && kind != "user") fail("unknown kind '" + f[1] + "'");
        if (!box.contains(p)) continue;
        if (kind == "bs") {
            set.station_ids.push_back(f[0]);
            set.stations.push_back(p);
        } else {
            set.group_ids.push_back(f[0]);
            set.groups.push_back(p);
        }
    }
    if (!header) throw IoError(source + ": empty location file");
    if (set.stations.empty()) throw ConfigError("dataset", "no stations in bounding box");
    return set;
}

LocationSet load_locations(const std::string& path, const BoundingBox& box) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open location file " + path);
    return parse_locations(in, box, path);
}

std::vector<std::vector<int>> attach_groups(const std::vector<GeoPoint>& groups,
                                            const std::vector<GeoPoint>& stations, double radius_m) {
    if (!(radius_m > 0.0)) throw ConfigError("arrivals.attach_radius_m", "must be positive");
    std::vector<std::vector<int>> out(groups.size());
    std::string missing;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t s = 0; s < stations.size(); ++s)
            if (great_circle_distance_m(groups[g], stations[s]) <= radius_m) out[g].push_back(static_cast<int>(s));
        if (out[g].empty()) missing += (missing.empty() ? "" : ", ") + std::to_string(g);
    }
    if (!missing.empty()) throw ConfigError("arrivals.groups", "no station within radius for group(s) " + missing);
    return out;
}

LocationSet generate_locations(std::uint64_t seed, int n_stations, int n_groups, const BoundingBox& box) {
    if (n_stations <= 0) throw ConfigError("dataset.n_stations", "must be positive");
    if (n_groups < 0) throw ConfigError("dataset.n_groups", "must be non-negative");
    Rng rng = make_stream(seed, 0);
    LocationSet set;
    for (int i = 0; i < n_stations; ++i) {
        GeoPoint p{box.lat_min + (box.lat_max - box.lat_min) * uniform01(rng),
                   box.lon_min + (box.lon_max - box.lon_min) * uniform01(rng)};
        set.station_ids.push_back("bs" + std::to_string(i));
        set.stations.push_back(p);
    }
    constexpr double kRadius = 80.0;
    constexpr double kEarth = 6371008.8;
    for (int g = 0; g < n_groups; ++g) {
        GeoPoint p;
        do {
            const auto& c = set.stations[std::min<std::size_t>(set.stations.size() - 1,
                                                                static_cast<std::size_t>(uniform01(rng) * n_stations))];
            const double r = kRadius * std::sqrt(uniform01(rng));
            const double a = 2.0 * std::numbers::pi * uniform01(rng);
            const double dlat = r * std::cos(a) / kEarth * 180.0 / std::numbers::pi;
            const double dlon = r * std::sin(a) / (kEarth * std::cos(c.lat * std::numbers::pi / 180.0)) * 180.0 / std::numbers::pi;
            p = {c.lat + dlat, c.lon + dlon};
        } while (!box.contains(p));
        set.group_ids.push_back("u" + std::to_string(g));
        set.groups.push_back(p);
    }
    return set;
}

void write_locations_csv(std::ostream& out, const LocationSet& set) {
    char buf[128];
    out << "id,kind,lat,lon\n";
    for (std::size_t i = 0; i < set.stations.size(); ++i) {
        std::snprintf(buf, sizeof buf, ",bs,%.9f,%.9f\n", set.stations[i].lat, set.stations[i].lon);
        out << set.station_ids[i] << buf;
    }
    for (std::size_t i = 0; i < set.groups.size(); ++i) {
        std::snprintf(buf, sizeof buf, ",user,%.9f,%.9f\n", set.groups[i].lat, set.groups[i].lon);
        out << set.group_ids[i] << buf;
    }
}

}  // namespace peeroff
