#include "hclm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace hclm {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'H', 'C', 'L', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
  for (double d : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    write_u64(out, bits);
  }
}

std::vector<double> read_doubles(std::istream& in, std::size_t n) {
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bits = read_u64(in);
    std::memcpy(&values[i], &bits, sizeof(double));
  }
  return values;
}

json config_to_json(const TrainConfig& c) {
  return json{{"model", c.model},       {"d", c.d},
              {"lr", c.lr},             {"clip", c.clip},
              {"dropout", c.dropout},   {"batch", c.batch},
              {"trunc", c.trunc},       {"cache_size", c.cache_size},
              {"epochs", c.epochs},     {"min_count", c.min_count},
              {"seed", c.seed},         {"threads", c.threads}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.model = j.at("model").get<std::string>();
  c.d = j.at("d").get<int>();
  c.lr = j.at("lr").get<double>();
  c.clip = j.at("clip").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.batch = j.at("batch").get<int>();
  c.trunc = j.at("trunc").get<int>();
  c.cache_size = j.at("cache_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.min_count = j.at("min_count").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  return c;
}

}  // namespace

CacheSnapshot CacheSnapshot::of(const Cache& cache) {
  CacheSnapshot snap;
  snap.capacity = cache.capacity();
  snap.clock = cache.clock();
  for (const CacheSlot& slot : cache.slots())
    snap.slots.push_back({slot.key.values(), slot.word, slot.last_used});
  return snap;
}

Cache CacheSnapshot::restore() const {
  std::vector<CacheSlot> rebuilt;
  rebuilt.reserve(slots.size());
  for (const Slot& s : slots)
    rebuilt.push_back({make_constant({static_cast<int>(s.key.size())}, s.key), s.word,
                       s.last_used});
  return Cache::restore(capacity, clock, std::move(rebuilt));
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json header;
  header["format"] = "hclm-checkpoint";
  header["kind"] = to_string(ckpt.model.kind);
  header["d"] = ckpt.model.d;
  header["cache_capacity"] = ckpt.model.cache_capacity;
  header["config"] = config_to_json(ckpt.config);

  std::vector<std::uint32_t> codepoints;
  for (char32_t c : ckpt.model.vocab.chars()) codepoints.push_back(static_cast<std::uint32_t>(c));
  header["vocab_chars"] = codepoints;

  const auto params = ckpt.model.named_params();
  json tensors = json::array();
  for (const auto& p : params) {
    tensors.push_back(json{{"name", p.name}, {"shape", p.tensor.shape()}});
  }
  header["tensors"] = tensors;

  if (ckpt.cache_state) {
    json cache;
    cache["capacity"] = ckpt.cache_state->capacity;
    cache["clock"] = ckpt.cache_state->clock;
    json slots = json::array();
    for (const auto& s : ckpt.cache_state->slots)
      slots.push_back(json{{"word", s.word}, {"last_used", s.last_used},
                           {"key_dim", s.key.size()}});
    cache["slots"] = slots;
    header["cache"] = cache;
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  const std::string header_text = header.dump();
  write_u64(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& p : params) write_doubles(out, p.tensor.values());
  if (ckpt.cache_state)
    for (const auto& s : ckpt.cache_state->slots) write_doubles(out, s.key);
  if (!out) throw IoError("write failure on checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a checkpoint file: " + path.string());
  const std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t header_len = read_u64(in);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("truncated checkpoint header: " + path.string());

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw FormatError("corrupt checkpoint header: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  try {
    ckpt.config = config_from_json(header.at("config"));
    std::vector<char32_t> chars;
    for (const auto& cp : header.at("vocab_chars"))
      chars.push_back(static_cast<char32_t>(cp.get<std::uint32_t>()));
    Vocabulary vocab = Vocabulary::from_chars(chars);
    ckpt.model = Model::create(model_kind_from_string(header.at("kind").get<std::string>()),
                               vocab, header.at("d").get<int>(),
                               header.at("cache_capacity").get<std::size_t>(),
                               Initializer::zeros(), nullptr);

    auto params = ckpt.model.named_params();
    const json& tensors = header.at("tensors");
    if (tensors.size() != params.size())
      throw FormatError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const json& t = tensors[i];
      if (t.at("name").get<std::string>() != params[i].name)
        throw FormatError("checkpoint tensor name mismatch at index " + std::to_string(i));
      const Shape shape = t.at("shape").get<Shape>();
      if (shape != params[i].tensor.shape())
        throw FormatError("checkpoint tensor shape mismatch for " + params[i].name);
      params[i].tensor.mutable_values() = read_doubles(in, params[i].tensor.size());
    }

    if (header.contains("cache")) {
      const json& cache = header.at("cache");
      CacheSnapshot snap;
      snap.capacity = cache.at("capacity").get<std::size_t>();
      snap.clock = cache.at("clock").get<std::uint64_t>();
      for (const auto& s : cache.at("slots")) {
        CacheSnapshot::Slot slot;
        slot.word = s.at("word").get<std::string>();
        slot.last_used = s.at("last_used").get<std::uint64_t>();
        slot.key = read_doubles(in, s.at("key_dim").get<std::size_t>());
        snap.slots.push_back(std::move(slot));
      }
      ckpt.cache_state = std::move(snap);
    }
  } catch (const json::exception& e) {
    throw FormatError("corrupt checkpoint header: " + std::string(e.what()));
  }
  if (!in) throw FormatError("truncated checkpoint data: " + path.string());
  return ckpt;
}

}  // namespace hclm
