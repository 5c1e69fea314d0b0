#include "cstte/trajdata/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <unordered_map>

#include "cstte/error.hpp"
#include "cstte/log.hpp"

namespace cstte::traj {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) {
      f.remove_suffix(1);
    }
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

void append_double(std::string& buf, double v) {
  char tmp[32];
  auto [p, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
  buf.append(tmp, p);
}

}  // namespace

ParseResult parse_trajectories(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty trajectory file");
  const auto header = split_fields(line);
  auto column = [&](std::string_view name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto c_id = column("traj_id"), c_t = column("timestamp"), c_lon = column("lon"),
             c_lat = column("lat"), c_loc = column("loc_index");
  if (c_id < 0 || c_t < 0 || c_lon < 0 || c_lat < 0) {
    throw DataError("header must contain traj_id,timestamp,lon,lat; got '" + line + "'");
  }

  ParseResult res;
  res.has_loc_index = c_loc >= 0;
  std::unordered_map<std::string, std::size_t> slot;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    ++res.rows;
    const auto f = split_fields(line);
    VisitRecord r;
    bool ok = f.size() == header.size() && !f[c_id].empty() && parse_number(f[c_t], r.t) &&
              parse_number(f[c_lon], r.lon) && parse_number(f[c_lat], r.lat) && r.lon >= -180.0 &&
              r.lon <= 180.0 && r.lat >= -90.0 && r.lat <= 90.0;
    if (ok && c_loc >= 0) ok = parse_number(f[c_loc], r.loc);
    if (!ok) {
      ++res.skipped;
      continue;
    }
    std::string id(f[c_id]);
    auto [it, fresh] = slot.try_emplace(id, res.trajectories.size());
    if (fresh) res.trajectories.push_back({std::move(id), {}});
    res.trajectories[it->second].records.push_back(r);
  }
  if (res.rows > 0 && 2 * res.skipped > res.rows) {
    throw DataError(std::to_string(res.skipped) + " of " + std::to_string(res.rows) +
                    " rows are malformed");
  }
  if (res.skipped > 0) log_warning("skipped " + std::to_string(res.skipped) + " malformed rows");
  for (auto& t : res.trajectories) {
    std::stable_sort(t.records.begin(), t.records.end(),
                     [](const VisitRecord& a, const VisitRecord& b) { return a.t < b.t; });
  }
  return res;
}

ParseResult parse_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read trajectory file " + path.string());
  return parse_trajectories(in);
}

void write_trajectories(std::ostream& os, std::span<const Trajectory> trajs, bool with_loc_index) {
  os << (with_loc_index ? "traj_id,timestamp,lon,lat,loc_index\n" : "traj_id,timestamp,lon,lat\n");
  std::string buf;
  for (const auto& t : trajs) {
    for (const auto& r : t.records) {
      buf.clear();
      buf += t.id;
      buf += ',';
      buf += std::to_string(r.t);
      buf += ',';
      append_double(buf, r.lon);
      buf += ',';
      append_double(buf, r.lat);
      if (with_loc_index) {
        buf += ',';
        buf += std::to_string(r.loc);
      }
      buf += '\n';
      os << buf;
    }
  }
}

void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajs,
                        bool with_loc_index) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_trajectories(out, trajs, with_loc_index);
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace cstte::traj
