#include "bfseg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include <fmt/format.h>

#include "bfseg/errors.hpp"
#include "bfseg/io.hpp"

namespace bfseg {
namespace {

constexpr std::string_view kMagic = "BFSEG-CHECKPOINT";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::string line() {
    const auto end = bytes_.find('\n', pos_);
    if (end == std::string::npos) throw IoError("truncated checkpoint header");
    std::string out = bytes_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }

  std::string value(std::string_view key) {
    const std::string l = line();
    if (l.size() <= key.size() || l.compare(0, key.size(), key) != 0 || l[key.size()] != '=') {
      throw IoError(fmt::format("checkpoint: expected '{}=', found '{}'", key, l));
    }
    return l.substr(key.size() + 1);
  }

  void raw(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError("truncated checkpoint payload");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint Checkpoint::from_model(const Model& model, int epoch) {
  return Checkpoint{model.config(), model.parameters(), epoch};
}

Model Checkpoint::to_model() const { return Model(config, params); }

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  const auto& c = ckpt.config;
  out += fmt::format("{}\nversion={}\n", kMagic, kCheckpointVersion);
  out += fmt::format("input_channels={}\nencoder_base_channels={}\ndecoder_width={}\nactivation={}\nseed={}\n",
                     c.input_channels, c.encoder_base_channels, c.decoder_width, to_string(c.activation), c.seed);
  out += fmt::format("epoch={}\nparams={}\n", ckpt.epoch, ckpt.params.size());
  for (const auto& p : ckpt.params) {
    out += fmt::format("param={} {}", p.name, p.shape.size());
    for (int d : p.shape) out += fmt::format(" {}", d);
    out += '\n';
    out.append(reinterpret_cast<const char*>(p.values.data()), p.values.size() * sizeof(double));
    out += '\n';
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.line() != kMagic) throw IoError("not a checkpoint file");
  const int version = std::stoi(r.value("version"));
  if (version != kCheckpointVersion) throw IoError(fmt::format("unsupported checkpoint version {}", version));
  Checkpoint ckpt;
  ckpt.config.input_channels = std::stoi(r.value("input_channels"));
  ckpt.config.encoder_base_channels = std::stoi(r.value("encoder_base_channels"));
  ckpt.config.decoder_width = std::stoi(r.value("decoder_width"));
  ckpt.config.activation = parse_activation(r.value("activation"));
  ckpt.config.seed = std::stoull(r.value("seed"));
  ckpt.epoch = std::stoi(r.value("epoch"));
  const auto count = std::stoul(r.value("params"));
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream header(r.value("param"));
    std::string name;
    std::size_t ndim = 0;
    header >> name >> ndim;
    std::vector<int> shape(ndim);
    for (auto& d : shape) header >> d;
    if (!header) throw IoError("malformed parameter header in checkpoint");
    const auto idx = ckpt.params.add(name, shape);
    auto& values = ckpt.params[idx].values;
    r.raw(values.data(), values.size() * sizeof(double));
    char nl = 0;
    r.raw(&nl, 1);
    if (nl != '\n') throw IoError("corrupt checkpoint payload for " + name);
  }
  ckpt.config.validate();
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace bfseg
