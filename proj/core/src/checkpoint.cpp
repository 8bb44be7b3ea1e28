#include "pcar/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace pcar {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'A', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

template <typename T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& buf, const std::filesystem::path& path)
      : buf_(buf), path_(path) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > buf_.size()) fail("truncated");
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_bytes(std::size_t n) {
    if (pos_ + n > buf_.size()) fail("truncated");
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == buf_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("checkpoint " + path_.string() + ": " + what +
                             " at byte " + std::to_string(pos_));
  }

 private:
  const std::string& buf_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net) {
  const NetConfig& cfg = net.config();
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(buf, kVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.depth));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.base_channels));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.head_mode));
  put<std::uint64_t>(buf, cfg.train.seed);
  put<double>(buf, cfg.train.lr);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.train.steps));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(cfg.train.batch));

  const auto& params = net.parameters();
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.size()));
  for (const Tensor& t : params) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.name.size()));
    buf.append(t.name);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.shape.size()));
    for (std::int64_t d : t.shape) put<std::int64_t>(buf, d);
    const char* raw = reinterpret_cast<const char*>(t.data.data());
    buf.append(raw, t.data.size() * sizeof(double));
  }

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());

  Reader r(buf, path);
  if (r.get_bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    r.fail("bad magic (not a checkpoint file)");
  }
  const std::uint32_t version = r.get<std::uint32_t>();
  if (version != kVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }

  NetConfig cfg;
  cfg.depth = static_cast<int>(r.get<std::uint32_t>());
  cfg.base_channels = static_cast<int>(r.get<std::uint32_t>());
  const std::uint32_t mode = r.get<std::uint32_t>();
  if (mode > 2) r.fail("invalid head mode " + std::to_string(mode));
  cfg.head_mode = static_cast<HeadMode>(mode);
  cfg.train.seed = r.get<std::uint64_t>();
  cfg.train.lr = r.get<double>();
  cfg.train.steps = static_cast<int>(r.get<std::uint32_t>());
  cfg.train.batch = static_cast<int>(r.get<std::uint32_t>());
  if (cfg.depth < 1 || cfg.depth > 16 || cfg.base_channels < 1) {
    r.fail("implausible network config");
  }

  Network net(cfg);
  auto& params = net.parameters();
  const std::uint32_t count = r.get<std::uint32_t>();
  if (count != params.size()) {
    r.fail("tensor count " + std::to_string(count) + " does not match config (" +
           std::to_string(params.size()) + " expected)");
  }
  for (Tensor& t : params) {
    const std::uint32_t name_len = r.get<std::uint32_t>();
    const std::string name = r.get_bytes(name_len);
    if (name != t.name) r.fail("tensor '" + name + "' where '" + t.name + "' expected");
    const std::uint32_t ndim = r.get<std::uint32_t>();
    std::vector<std::int64_t> shape(ndim);
    for (auto& d : shape) d = r.get<std::int64_t>();
    if (shape != t.shape) r.fail("shape mismatch for tensor '" + name + "'");
    const std::string payload = r.get_bytes(t.data.size() * sizeof(double));
    std::memcpy(t.data.data(), payload.data(), payload.size());
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return net;
}

}  // namespace pcar
