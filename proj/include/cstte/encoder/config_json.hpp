#pragma once

#include "cstte/encoder/config.hpp"
#include "json.hpp"

namespace cstte::enc {

nlohmann::json to_json(const EncoderConfig& c);
/// Reads the keys present in `j` over the defaults; does not validate.
/// ConfigError on wrong value types.
EncoderConfig encoder_config_from_json(const nlohmann::json& j, EncoderConfig base = {});

}  // namespace cstte::enc
