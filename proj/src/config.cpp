#include "hclm/config.hpp"

#include <fstream>
#include <sstream>

#include "hclm/errors.hpp"

namespace hclm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T out{};
  is >> out;
  if (is.fail() || !(is >> std::ws).eof())
    throw ConfigError("config key '" + key + "': cannot parse value '" + value + "'");
  return out;
}

}  // namespace

void apply_config_entry(TrainConfig& config, const std::string& key, const std::string& value) {
  if (key == "model")
    config.model = value;
  else if (key == "d")
    config.d = parse_number<int>(key, value);
  else if (key == "lr")
    config.lr = parse_number<double>(key, value);
  else if (key == "clip")
    config.clip = parse_number<double>(key, value);
  else if (key == "dropout")
    config.dropout = parse_number<double>(key, value);
  else if (key == "batch")
    config.batch = parse_number<int>(key, value);
  else if (key == "trunc")
    config.trunc = parse_number<int>(key, value);
  else if (key == "cache_size")
    config.cache_size = parse_number<int>(key, value);
  else if (key == "epochs")
    config.epochs = parse_number<int>(key, value);
  else if (key == "min_count")
    config.min_count = parse_number<int>(key, value);
  else if (key == "seed")
    config.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads")
    config.threads = parse_number<int>(key, value);
  else
    throw ConfigError("unknown config key: " + key);
}

TrainConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  TrainConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

std::string config_to_text(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "model = " << c.model << "\n";
  os << "d = " << c.d << "\n";
  os << "lr = " << c.lr << "\n";
  os << "clip = " << c.clip << "\n";
  os << "dropout = " << c.dropout << "\n";
  os << "batch = " << c.batch << "\n";
  os << "trunc = " << c.trunc << "\n";
  os << "cache_size = " << c.cache_size << "\n";
  os << "epochs = " << c.epochs << "\n";
  os << "min_count = " << c.min_count << "\n";
  os << "seed = " << c.seed << "\n";
  os << "threads = " << c.threads << "\n";
  return os.str();
}

}  // namespace hclm
