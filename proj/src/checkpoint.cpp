#include "cdcl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

namespace cdcl {

namespace {

constexpr const char* kMagic = "cdcl-checkpoint";

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

using ArrayView = std::pair<std::string, Eigen::Map<Matrix>>;

/// Every stored array of a checkpoint, by name.
std::vector<ArrayView> all_arrays(Checkpoint& c) {
  std::vector<ArrayView> out;
  for (auto& [name, m] : c.model.named_arrays())
    out.emplace_back(name, Eigen::Map<Matrix>(m->data(), m->rows(), m->cols()));
  auto add_vector = [&](const std::string& name, Vector& v) {
    out.emplace_back(name, Eigen::Map<Matrix>(v.data(), v.size(), 1));
  };
  if (c.model.mode() == LossMode::OCC) add_vector("occ.center", c.model.loss.occ_center);
  add_vector("norm.min", c.normalization.min);
  add_vector("norm.max", c.normalization.max);
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return out.str();
}

}  // namespace

TrainSummary summarize(const TrainReport& report) {
  return {static_cast<Index>(report.epochs.size()), report.best_epoch,
          report.best_validation_loss, report.stopped_early};
}

Model build_model(const RunConfig& config) {
  return Model(config.encoder, config.transforms, config.loss);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  Checkpoint c = checkpoint;
  std::string header;
  header += std::string(kMagic) + "\n";
  header += "format_version = " + std::to_string(kCheckpointVersion) + "\n";
  header += "[config]\n" + format_run_config(c.config);
  header += "[report]\n";
  header += "epochs = " + std::to_string(c.summary.epochs) + "\n";
  header += "best_epoch = " + std::to_string(c.summary.best_epoch) + "\n";
  header += "best_validation_loss = " + format_double(c.summary.best_validation_loss) + "\n";
  header += std::string("stopped_early = ") + (c.summary.stopped_early ? "true" : "false") + "\n";
  header += "[arrays]\n";

  std::string payload;
  for (auto& [name, m] : all_arrays(c)) {
    header += name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + " " +
              std::to_string(payload.size()) + "\n";
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) put_le(payload, m(i, j));
  }
  header += "end\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write '" + path.string() + "'");
  out << header << payload;
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "'" + path.string() + "': ";

  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw CheckpointError(where + "truncated header");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  if (next_line() != kMagic) throw CheckpointError(where + "not a checkpoint file");
  const std::string version_line = next_line();
  const std::string expected = "format_version = " + std::to_string(kCheckpointVersion);
  if (version_line != expected)
    throw CheckpointError(where + "format version mismatch: file has '" + version_line +
                          "', this build reads version " + std::to_string(kCheckpointVersion));
  if (next_line() != "[config]") throw CheckpointError(where + "missing [config] section");

  std::string config_text, line;
  while ((line = next_line()) != "[report]") config_text += line + "\n";
  std::string report_text;
  while ((line = next_line()) != "[arrays]") report_text += line + "\n";
  struct Entry {
    std::string name;
    Index rows, cols;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  while ((line = next_line()) != "end") {
    std::istringstream row(line);
    Entry e;
    if (!(row >> e.name >> e.rows >> e.cols >> e.offset) || e.rows < 0 || e.cols < 0)
      throw CheckpointError(where + "bad array entry '" + line + "'");
    entries.push_back(e);
  }
  const std::size_t data_start = pos;

  Checkpoint c;
  try {
    c.config = parse_run_config(parse_key_values(config_text));
    const KeyValues report = parse_key_values(report_text);
    c.summary.epochs = std::stoll(report.at("epochs"));
    c.summary.best_epoch = std::stoll(report.at("best_epoch"));
    c.summary.best_validation_loss = std::stod(report.at("best_validation_loss"));
    c.summary.stopped_early = report.at("stopped_early") == "true";
  } catch (const std::exception& e) {
    throw CheckpointError(where + "bad header: " + e.what());
  }
  c.model = build_model(c.config);
  c.normalization.min = Vector::Zero(c.config.encoder.input_channels);
  c.normalization.max = Vector::Zero(c.config.encoder.input_channels);

  auto targets = all_arrays(c);
  if (targets.size() != entries.size())
    throw CheckpointError(where + "expected " + std::to_string(targets.size()) + " arrays, found " +
                          std::to_string(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Entry& e = entries[k];
    auto& [name, m] = targets[k];
    if (e.name != name || e.rows != m.rows() || e.cols != m.cols())
      throw CheckpointError(where + "array '" + e.name + "' does not match the configured model");
    const std::size_t need = static_cast<std::size_t>(e.rows * e.cols) * 8;
    if (data_start + e.offset + need > bytes.size())
      throw CheckpointError(where + "array '" + e.name + "' is truncated");
    const char* p = bytes.data() + data_start + e.offset;
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j, p += 8) m(i, j) = get_le(p);
  }
  return c;
}

}  // namespace cdcl
