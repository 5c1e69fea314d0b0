#pragma once

#include <filesystem>

#include "cstte/trajdata/preprocess.hpp"

namespace cstte::traj {

/// Processed dataset on disk: `<stem>.csv` with a loc_index column and
/// `<stem>.meta.json` holding grid, normalisation and split.
void save_dataset(const std::filesystem::path& csv_path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& csv_path);

std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

}  // namespace cstte::traj
