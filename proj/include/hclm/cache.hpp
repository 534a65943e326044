#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hclm/tensor.hpp"

namespace hclm {

struct CacheSlot {
  Tensor key;          // hidden-state key, dimension d
  std::string word;    // nonempty; pairwise distinct across slots
  std::uint64_t last_used = 0;
};

// Bounded key-value word memory with LRU replacement. Re-inserting a cached
// word averages its key with the new hidden state and refreshes recency;
// recency is refreshed on writes only, never on attention reads.
class Cache {
 public:
  explicit Cache(std::size_t capacity);

  // Rebuilds a cache from serialized parts (slot order, stamps and clock are
  // taken as-is).
  static Cache restore(std::size_t capacity, std::uint64_t clock,
                       std::vector<CacheSlot> slots);

  // Returns the evicted word, if the insert displaced one. Keys of live
  // slots keep their graph links until detach_keys() is called.
  std::optional<std::string> insert(const std::string& word, const Tensor& h);

  // Clears all slots; the clock is preserved.
  void reset();

  // Cuts every key out of the autodiff graph (segment boundary).
  void detach_keys();

  std::optional<std::size_t> find(const std::string& word) const;

  const std::vector<CacheSlot>& slots() const { return slots_; }
  std::size_t size() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return slots_.empty(); }
  std::uint64_t clock() const { return clock_; }
  void set_clock(std::uint64_t c) { clock_ = c; }

 private:
  std::vector<CacheSlot> slots_;
  std::size_t capacity_;
  std::uint64_t clock_ = 0;
};

// Attention projections: query r = tanh(W_q h + b_q), per-slot copy score
// u_i = v . tanh(W_u k_i + r).
struct CacheParams {
  Tensor w_q;  // {d, d}
  Tensor b_q;  // {d}
  Tensor w_u;  // {d, d}
  Tensor v;    // {d}

  static CacheParams create(int d, const Initializer& init, Rng* rng);
  void collect(std::vector<NamedTensor>& out) const;
};

Tensor query_vector(const Tensor& h, const CacheParams& params);

// One score per occupied slot, in slot order; throws EmptyCacheError if the
// cache is empty.
Tensor copy_scores(const Tensor& query, const Cache& cache, const CacheParams& params);

// Distribution over occupied slots.
Tensor p_mem(const Tensor& scores);

// Word-space pointer probability: mass of the slot holding `word`, 0 if absent.
double p_ptr(const Cache& cache, const Tensor& mem_probs, const std::string& word);

}  // namespace hclm
