#include "vgan/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace vgan::models {

namespace {

constexpr char kMagic[8] = {'V', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t k = 0; k < sizeof(T); ++k) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * k)) & 0xffU));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  void expect_magic() {
    if (bytes_.size() < sizeof(kMagic) || std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
      throw std::runtime_error("checkpoint: bad magic");
    }
    pos_ = sizeof(kMagic);
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.params.widths.size()));
  for (std::size_t w : ckpt.params.widths) put_le<std::uint64_t>(out, w);
  put_le<std::uint64_t>(out, ckpt.seed);
  put_le<std::uint64_t>(out, ckpt.params.values.size());
  for (double v : ckpt.params.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  r.expect_magic();
  if (const auto version = r.get<std::uint32_t>(); version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_widths = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_widths; ++i) ckpt.params.widths.push_back(r.get<std::uint64_t>());
  ckpt.seed = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();
  if (!ckpt.params.widths.empty()) {
    MlpSpec spec;
    spec.widths = ckpt.params.widths;
    if (spec.param_count() != count) {
      throw std::runtime_error("checkpoint: parameter count does not match widths");
    }
  }
  ckpt.params.values.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    ckpt.params.values.push_back(std::bit_cast<double>(r.get<std::uint64_t>()));
  }
  if (!r.at_end()) throw std::runtime_error("checkpoint: trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  const std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace vgan::models
