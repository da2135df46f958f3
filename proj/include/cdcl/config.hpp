#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "cdcl/data.hpp"
#include "cdcl/encoder.hpp"
#include "cdcl/losses.hpp"
#include "cdcl/synthgen.hpp"
#include "cdcl/trainer.hpp"

namespace cdcl {

/// Invalid configuration. The message starts with the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered `key = value` pairs. Blank lines and lines starting with '#' are
/// skipped; duplicate keys and lines without '=' are errors.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

struct RunConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path out_dir = "out";
  bool normalize = true;
  WindowSpec window;
  EncoderConfig encoder;
  Index transforms = 6;
  LossConfig loss;
  TrainConfig train;

  /// Sets the one seed shared by initialization and batch shuffling.
  void set_seed(std::uint64_t seed);
  /// Range checks of every owning type. With `check_paths` the train path
  /// (and the test path when set) must exist.
  void validate(bool check_paths) const;
};

/// Unknown keys are rejected; missing keys keep their defaults.
RunConfig parse_run_config(const KeyValues& kv);
RunConfig load_run_config(const std::filesystem::path& path);
/// Every key with round-trip precision; parse_run_config inverts it.
std::string format_run_config(const RunConfig& config);

SynthSpec parse_synth_spec(const KeyValues& kv);
SynthSpec load_synth_spec(const std::filesystem::path& path);
std::string format_synth_spec(const SynthSpec& spec);

}  // namespace cdcl
