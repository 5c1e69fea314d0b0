#include "cstte/trajdata/metadata.hpp"

#include <fstream>

#include "cstte/error.hpp"
#include "cstte/trajdata/csv.hpp"
#include "json.hpp"

namespace cstte::traj {

using nlohmann::json;

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void save_dataset(const std::filesystem::path& csv_path, const Dataset& ds) {
  write_trajectories(csv_path, ds.trajectories, true);
  json j;
  j["format"] = "cstte-dataset-1";
  j["vocabulary"] = ds.mode == VocabularyMode::grid ? "grid" : "passthrough";
  j["n_locations"] = ds.n_locations;
  if (ds.mode == VocabularyMode::grid) {
    j["grid"] = {{"min_lon", ds.grid.min_lon()},       {"min_lat", ds.grid.min_lat()},
                 {"max_lon", ds.grid.max_lon()},       {"max_lat", ds.grid.max_lat()},
                 {"cell_size_m", ds.grid.cell_size()}, {"n_cols", ds.grid.n_cols()},
                 {"n_rows", ds.grid.n_rows()}};
  }
  j["normalization"] = {{"epoch", ds.normalization.epoch},
                        {"seconds_per_unit", ds.normalization.seconds_per_unit}};
  j["split"] = {
      {"train", ds.split.train}, {"validation", ds.split.validation}, {"test", ds.split.test}};
  std::ofstream out(metadata_path(csv_path));
  if (!out) throw DataError("cannot write " + metadata_path(csv_path).string());
  out << j.dump(1) << '\n';
}

Dataset load_dataset(const std::filesystem::path& csv_path) {
  const auto meta_path = metadata_path(csv_path);
  std::ifstream in(meta_path);
  if (!in) throw DataError("missing dataset metadata " + meta_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("bad dataset metadata " + meta_path.string() + ": " + e.what());
  }

  auto parsed = parse_trajectories(csv_path);
  if (!parsed.has_loc_index) throw DataError(csv_path.string() + " has no loc_index column");
  Dataset ds;
  try {
    ds.mode = j.at("vocabulary") == "grid" ? VocabularyMode::grid : VocabularyMode::passthrough;
    ds.n_locations = j.at("n_locations").get<std::size_t>();
    if (ds.mode == VocabularyMode::grid) {
      const auto& g = j.at("grid");
      ds.grid = GridSpec(g.at("min_lon"), g.at("min_lat"), g.at("max_lon"), g.at("max_lat"),
                         g.at("cell_size_m"));
    }
    ds.normalization.epoch = j.at("normalization").at("epoch").get<std::int64_t>();
    ds.normalization.seconds_per_unit = j.at("normalization").at("seconds_per_unit");
    ds.split.train = j.at("split").at("train").get<std::vector<std::string>>();
    ds.split.validation = j.at("split").at("validation").get<std::vector<std::string>>();
    ds.split.test = j.at("split").at("test").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError("bad dataset metadata " + meta_path.string() + ": " + e.what());
  }
  for (const auto& t : parsed.trajectories) {
    for (const auto& r : t.records) {
      if (r.loc >= ds.n_locations) {
        throw DataError("trajectory " + t.id + " has loc_index " + std::to_string(r.loc) +
                        " >= " + std::to_string(ds.n_locations));
      }
    }
  }
  ds.trajectories = std::move(parsed.trajectories);
  return ds;
}

}  // namespace cstte::traj
