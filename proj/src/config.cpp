#include "cdcl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace cdcl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError(key + ": must be finite");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << v;
  return out.str();
}

/// Binds config keys to struct fields for both directions.
class FieldTable {
 public:
  void add(std::string key, std::function<void(const std::string&)> set,
           std::function<std::string()> get) {
    fields_.push_back({std::move(key), std::move(set), std::move(get)});
  }
  void index(const std::string& key, Index& field) {
    add(key, [&field, key](const std::string& v) { field = parse_number<Index>(key, v); },
        [&field] { return std::to_string(field); });
  }
  void real(const std::string& key, double& field) {
    add(key, [&field, key](const std::string& v) { field = parse_number<double>(key, v); },
        [&field] { return format_double(field); });
  }
  void boolean(const std::string& key, bool& field) {
    add(key, [&field, key](const std::string& v) { field = parse_bool(key, v); },
        [&field] { return std::string(field ? "true" : "false"); });
  }
  void path(const std::string& key, std::filesystem::path& field) {
    add(key, [&field](const std::string& v) { field = v; }, [&field] { return field.string(); });
  }

  void apply(const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
      auto it = std::find_if(fields_.begin(), fields_.end(),
                             [&](const Field& f) { return f.key == key; });
      if (it == fields_.end()) throw ConfigError(key + ": unknown key");
      try {
        it->set(value);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
      }
    }
  }

  std::string format() const {
    std::string out;
    for (const Field& f : fields_) out += f.key + " = " + f.get() + "\n";
    return out;
  }

 private:
  struct Field {
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  std::vector<Field> fields_;
};

FieldTable run_fields(RunConfig& c) {
  FieldTable t;
  t.path("train_path", c.train_path);
  t.path("test_path", c.test_path);
  t.path("out_dir", c.out_dir);
  t.boolean("normalize", c.normalize);
  t.index("window_length", c.window.window_length);
  t.index("suspect_offset", c.window.suspect_offset);
  t.index("stride", c.window.stride);
  t.index("input_channels", c.encoder.input_channels);
  t.index("hidden_dim", c.encoder.hidden_dim);
  t.index("blocks", c.encoder.blocks);
  t.add(
      "kernel_set",
      [&c](const std::string& v) {
        std::vector<Index> kernels;
        std::stringstream in(v);
        std::string item;
        while (std::getline(in, item, ',')) kernels.push_back(parse_number<Index>("kernel_set", trim(item)));
        c.encoder.kernel_set = std::move(kernels);
      },
      [&c] {
        std::string out;
        for (std::size_t i = 0; i < c.encoder.kernel_set.size(); ++i)
          out += (i ? "," : "") + std::to_string(c.encoder.kernel_set[i]);
        return out;
      });
  t.index("dilation_base", c.encoder.dilation_base);
  t.boolean("use_bias", c.encoder.use_bias);
  t.real("bn_momentum", c.encoder.bn_momentum);
  t.real("bn_eps", c.encoder.bn_eps);
  t.index("transforms", c.transforms);
  t.add(
      "mode",
      [&c](const std::string& v) { c.loss.mode = parse_loss_mode(v); },
      [&c] { return std::string(to_string(c.loss.mode)); });
  t.real("temperature", c.loss.temperature);
  t.real("hinge_gamma", c.loss.hinge_gamma);
  t.real("var_eps", c.loss.var_eps);
  t.real("weight_decay", c.loss.weight_decay);
  t.real("learning_rate", c.train.learning_rate);
  t.index("max_epochs", c.train.max_epochs);
  t.index("patience", c.train.patience);
  t.index("batch_size", c.train.batch_size);
  t.real("val_fraction", c.train.val_fraction);
  t.add(
      "seed",
      [&c](const std::string& v) { c.set_seed(parse_number<std::uint64_t>("seed", v)); },
      [&c] { return std::to_string(c.train.seed); });
  return t;
}

FieldTable synth_fields(SynthSpec& s) {
  FieldTable t;
  t.index("train_length", s.train_length);
  t.index("test_length", s.test_length);
  t.real("period", s.period);
  t.real("amplitude", s.amplitude);
  t.real("noise_std", s.noise_std);
  t.real("anomaly_ratio", s.anomaly_ratio);
  for (AnomalyType type : kAllAnomalyTypes)
    t.real("weight." + std::string(to_string(type)), s.weight(type));
  t.add(
      "seed", [&s](const std::string& v) { s.seed = parse_number<std::uint64_t>("seed", v); },
      [&s] { return std::to_string(s.seed); });
  t.index("min_gap", s.min_gap);
  t.index("edge_margin", s.edge_margin);
  t.index("interval_length", s.interval_length);
  t.real("global_shift", s.global_shift);
  t.real("contextual_shift", s.contextual_shift);
  t.real("contextual_factor", s.contextual_factor);
  t.index("local_radius", s.local_radius);
  t.real("seasonal_factor", s.seasonal_factor);
  t.real("trend_slope", s.trend_slope);
  return t;
}

void rethrow_as_config_error(const std::function<void()>& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    if (!kv.emplace(key, trim(body.substr(eq + 1))).second)
      throw ConfigError(key + ": duplicate key on line " + std::to_string(number));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  encoder.seed = seed;
}

void RunConfig::validate(bool check_paths) const {
  rethrow_as_config_error([&] {
    window.validate();
    encoder.validate();
    loss.validate();
    train.validate();
  });
  if (uses_transforms(loss.mode) && transforms < 2)
    throw ConfigError("transforms: mode " + std::string(to_string(loss.mode)) + " needs >= 2");
  if (transforms < 0) throw ConfigError("transforms: must be >= 0");
  if (check_paths) {
    if (train_path.empty()) throw ConfigError("train_path: not set");
    if (!std::filesystem::exists(train_path))
      throw ConfigError("train_path: '" + train_path.string() + "' does not exist");
    if (!test_path.empty() && !std::filesystem::exists(test_path))
      throw ConfigError("test_path: '" + test_path.string() + "' does not exist");
  }
}

RunConfig parse_run_config(const KeyValues& kv) {
  RunConfig config;
  run_fields(config).apply(kv);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig config = parse_run_config(read_key_values(path));
  // Relative data paths are taken relative to the config file.
  const auto base = path.parent_path();
  for (auto* p : {&config.train_path, &config.test_path})
    if (!p->empty() && p->is_relative()) *p = base / *p;
  return config;
}

std::string format_run_config(const RunConfig& config) {
  RunConfig copy = config;
  return run_fields(copy).format();
}

SynthSpec parse_synth_spec(const KeyValues& kv) {
  SynthSpec spec;
  synth_fields(spec).apply(kv);
  rethrow_as_config_error([&] { spec.validate(); });
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  return parse_synth_spec(read_key_values(path));
}

std::string format_synth_spec(const SynthSpec& spec) {
  SynthSpec copy = spec;
  return synth_fields(copy).format();
}

}  // namespace cdcl
