#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace hclm {

// Training hyperparameters. Defaults follow the reference configuration
// (600-dimensional embeddings and hidden units, cache size 100, Adam at
// 0.002, gradient norm clipped at 10, dropout 0.5 on non-recurrent
// connections, 35-word truncation). Config files are flat `key = value`
// text with these exact field names as keys; CLI flags are the kebab-case
// mirrors and override file values.
struct TrainConfig {
  std::string model = "hclm-cache";  // lstm-baseline | hclm | hclm-cache
  int d = 600;
  double lr = 0.002;
  double clip = 10.0;
  double dropout = 0.5;
  int batch = 8;
  int trunc = 35;
  int cache_size = 100;
  int epochs = 10;
  int min_count = 25;
  std::uint64_t seed = 1;
  int threads = 1;
};

TrainConfig parse_config_file(const std::filesystem::path& path);
// Unknown keys or unparsable values throw ConfigError naming the key.
void apply_config_entry(TrainConfig& config, const std::string& key, const std::string& value);
std::string config_to_text(const TrainConfig& config);

}  // namespace hclm
