#include "hclm/cache.hpp"

namespace hclm {

Cache::Cache(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractViolation("Cache: capacity must be positive");
}

Cache Cache::restore(std::size_t capacity, std::uint64_t clock, std::vector<CacheSlot> slots) {
  Cache cache(capacity);
  if (slots.size() > capacity) throw ContractViolation("Cache::restore: too many slots");
  cache.slots_ = std::move(slots);
  cache.clock_ = clock;
  return cache;
}

std::optional<std::string> Cache::insert(const std::string& word, const Tensor& h) {
  if (word.empty()) throw ContractViolation("Cache::insert: empty word");
  if (!slots_.empty() && h.size() != slots_.front().key.size())
    throw InvalidShapeError("Cache::insert: key dimension mismatch");
  ++clock_;
  if (auto idx = find(word)) {
    CacheSlot& slot = slots_[*idx];
    slot.key = scale(add(slot.key, h), 0.5);  // arithmetic average with the existing key
    slot.last_used = clock_;
    return std::nullopt;
  }
  if (slots_.size() < capacity_) {
    slots_.push_back({h, word, clock_});
    return std::nullopt;
  }
  std::size_t victim = 0;
  for (std::size_t i = 1; i < slots_.size(); ++i)
    if (slots_[i].last_used < slots_[victim].last_used) victim = i;
  std::string evicted = std::move(slots_[victim].word);
  slots_[victim] = {h, word, clock_};
  return evicted;
}

void Cache::reset() { slots_.clear(); }

void Cache::detach_keys() {
  for (CacheSlot& slot : slots_) slot.key = slot.key.detach();
}

std::optional<std::size_t> Cache::find(const std::string& word) const {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].word == word) return i;
  return std::nullopt;
}

CacheParams CacheParams::create(int d, const Initializer& init, Rng* rng) {
  CacheParams p;
  p.w_q = make_parameter({d, d}, init, rng, "cache.w_q");
  p.b_q = make_parameter({d}, init, rng, "cache.b_q");
  p.w_u = make_parameter({d, d}, init, rng, "cache.w_u");
  p.v = make_parameter({d}, init, rng, "cache.v");
  return p;
}

void CacheParams::collect(std::vector<NamedTensor>& out) const {
  out.push_back({"cache.w_q", w_q});
  out.push_back({"cache.b_q", b_q});
  out.push_back({"cache.w_u", w_u});
  out.push_back({"cache.v", v});
}

Tensor query_vector(const Tensor& h, const CacheParams& params) {
  if (h.rank() != 1 || h.dim(0) != params.w_q.dim(1))
    throw InvalidShapeError("query_vector: dimension mismatch");
  return tanh(add(matmul(params.w_q, h), params.b_q));
}

Tensor copy_scores(const Tensor& query, const Cache& cache, const CacheParams& params) {
  if (cache.empty()) throw EmptyCacheError("copy_scores: cache is empty");
  std::vector<Tensor> scores;
  scores.reserve(cache.size());
  for (const CacheSlot& slot : cache.slots())
    scores.push_back(dot(params.v, tanh(add(matmul(params.w_u, slot.key), query))));
  return concat(scores);
}

Tensor p_mem(const Tensor& scores) {
  if (scores.size() == 0) throw EmptyCacheError("p_mem: no scores");
  return softmax(scores);
}

double p_ptr(const Cache& cache, const Tensor& mem_probs, const std::string& word) {
  if (mem_probs.size() != cache.size())
    throw ContractViolation("p_ptr: distribution is not aligned with the cache slots");
  if (auto idx = cache.find(word)) return mem_probs[*idx];
  return 0.0;
}

}  // namespace hclm
