#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bandit_icl/digest.hpp"
#include "bandit_icl/error.hpp"
#include "bandit_icl/training.hpp"
#include "json.hpp"

namespace bandit_icl {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'B', 'I', 'C', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

void put_bytes(std::vector<std::uint8_t>& out, const std::string& s) {
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::CorruptCheckpoint, "checkpoint ends early");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string config_to_json(const TransformerConfig& c) {
  return nlohmann::json{{"n_layers", c.n_layers},
                        {"n_heads", c.n_heads},
                        {"d_embd", c.d_embd},
                        {"context_len", c.context_len},
                        {"num_arms", c.num_arms},
                        {"learning_rate", c.learning_rate},
                        {"batch_size", c.batch_size},
                        {"max_epochs", c.max_epochs},
                        {"seed", c.seed},
                        {"patience", c.patience},
                        {"min_delta", c.min_delta}}
      .dump();
}

TransformerConfig config_from_json(const std::string& text) {
  TransformerConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_embd = j.at("d_embd").get<int>();
    c.context_len = j.at("context_len").get<int>();
    c.num_arms = j.at("num_arms").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.patience = j.at("patience").get<int>();
    c.min_delta = j.at("min_delta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put<std::uint32_t>(out, kCheckpointFormatVersion);
  nlohmann::json header = {{"config", nlohmann::json::parse(config_to_json(ckpt.params.config()))},
                           {"mode", to_string(ckpt.mode)},
                           {"metadata", nlohmann::json::parse(ckpt.metadata_json)}};
  const std::string header_text = header.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header_text.size()));
  put_bytes(out, header_text);
  const auto& tensors = ckpt.params.layout().tensors;
  const auto values = ckpt.params.data();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const TensorInfo& t : tensors) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    put_bytes(out, t.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int s : t.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
    for (std::size_t i = 0; i < t.size; ++i) put<float>(out, values[t.offset + i]);
  }
  const Sha256 digest = sha256(out);
  out.insert(out.end(), digest.begin(), digest.end());

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorKind::Io, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < kMagic.size() + 4 + 32) fail(ErrorKind::CorruptCheckpoint, "checkpoint is truncated");
  const std::span<const std::uint8_t> body(bytes.data(), bytes.size() - 32);
  const Sha256 digest = sha256(body);
  if (!std::equal(digest.begin(), digest.end(), bytes.end() - 32)) {
    fail(ErrorKind::CorruptCheckpoint, "checkpoint digest mismatch");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    fail(ErrorKind::CorruptCheckpoint, "not a checkpoint file");
  }
  Reader r(body.subspan(kMagic.size()));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointFormatVersion) {
    fail(ErrorKind::VersionMismatch, "checkpoint format version " + std::to_string(version));
  }
  const std::string header_text = r.get_string(r.get<std::uint32_t>());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::CorruptCheckpoint, std::string("checkpoint header: ") + e.what());
  }
  Checkpoint ckpt{TransformerParams<float>(config_from_json(header.at("config").dump())),
                  parse_loss_mode(header.at("mode").get<std::string>()), header.at("metadata").dump()};
  const auto& tensors = ckpt.params.layout().tensors;
  if (r.get<std::uint32_t>() != tensors.size()) fail(ErrorKind::CorruptCheckpoint, "tensor count mismatch");
  auto values = ckpt.params.mutable_data();
  for (const TensorInfo& t : tensors) {
    const std::string name = r.get_string(r.get<std::uint16_t>());
    if (name != t.name) fail(ErrorKind::CorruptCheckpoint, "unexpected tensor '" + name + "'");
    const auto ndim = r.get<std::uint32_t>();
    if (ndim != t.shape.size()) fail(ErrorKind::CorruptCheckpoint, "rank mismatch for " + name);
    for (int s : t.shape) {
      if (r.get<std::uint32_t>() != static_cast<std::uint32_t>(s)) {
        fail(ErrorKind::CorruptCheckpoint, "shape mismatch for " + name);
      }
    }
    for (std::size_t i = 0; i < t.size; ++i) values[t.offset + i] = r.get<float>();
  }
  if (!r.done()) fail(ErrorKind::CorruptCheckpoint, "trailing bytes in checkpoint");
  return ckpt;
}

}  // namespace bandit_icl
