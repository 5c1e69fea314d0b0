#include "cstte/encoder/config.hpp"

#include <string>

#include "cstte/encoder/config_json.hpp"
#include "cstte/error.hpp"

namespace cstte::enc {

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("encoder: " + msg); };
  if (d_model == 0 || d_model % 2 != 0) fail("d_model must be a positive even number");
  if (heads == 0 || d_model % heads != 0) {
    fail("d_model " + std::to_string(d_model) + " is not divisible by " + std::to_string(heads) +
         " heads");
  }
  if (coord_width() % 2 != 0) fail("d_model/2 must be even for the coordinate encodings");
  if (anchors.empty()) fail("at least one layer is required");
  for (auto a : anchors) {
    if (a == 0) fail("anchor lengths must be positive");
  }
  if (ffn_hidden == 0) fail("ffn_hidden must be positive");
  if (use_location && n_locations == 0) fail("n_locations must be positive");
  if (!use_location && !use_time && !use_coords && !use_position) {
    fail("every input feature is disabled");
  }
  if (!(norm_eps >= 0.0)) fail("norm_eps must be non-negative");
}

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"d_model", c.d_model},
          {"anchors", c.anchors},
          {"heads", c.heads},
          {"ffn_hidden", c.ffn_hidden},
          {"n_locations", c.n_locations},
          {"use_location", c.use_location},
          {"use_time", c.use_time},
          {"use_coords", c.use_coords},
          {"use_position", c.use_position},
          {"norm_eps", c.norm_eps}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j, EncoderConfig c) {
  try {
    if (j.contains("d_model")) c.d_model = j.at("d_model").get<std::size_t>();
    if (j.contains("anchors")) c.anchors = j.at("anchors").get<std::vector<std::size_t>>();
    if (j.contains("heads")) c.heads = j.at("heads").get<std::size_t>();
    if (j.contains("ffn_hidden")) c.ffn_hidden = j.at("ffn_hidden").get<std::size_t>();
    if (j.contains("n_locations")) c.n_locations = j.at("n_locations").get<std::size_t>();
    if (j.contains("use_location")) c.use_location = j.at("use_location").get<bool>();
    if (j.contains("use_time")) c.use_time = j.at("use_time").get<bool>();
    if (j.contains("use_coords")) c.use_coords = j.at("use_coords").get<bool>();
    if (j.contains("use_position")) c.use_position = j.at("use_position").get<bool>();
    if (j.contains("norm_eps")) c.norm_eps = j.at("norm_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("encoder: ") + e.what());
  }
  return c;
}

}  // namespace cstte::enc
