#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hclm/cache.hpp"
#include "hclm/config.hpp"
#include "hclm/model.hpp"

namespace hclm {

// Serializable image of a cache so an evaluation can resume exactly.
struct CacheSnapshot {
  struct Slot {
    std::vector<double> key;
    std::string word;
    std::uint64_t last_used = 0;
  };
  std::size_t capacity = 0;
  std::uint64_t clock = 0;
  std::vector<Slot> slots;

  static CacheSnapshot of(const Cache& cache);
  Cache restore() const;
};

struct Checkpoint {
  TrainConfig config;
  Model model;
  std::optional<CacheSnapshot> cache_state;
};

// Versioned container: magic + JSON header (config, vocabulary codepoints,
// tensor index, optional cache) followed by raw little-endian doubles in
// index order. save(load(x)) is byte-identical to x.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hclm
