#include "vlanet/checkpoint.hpp"
#include "vlanet/error.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vlanet {

namespace {

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  const char* take(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw FormatError("truncated checkpoint: need " + std::to_string(n) + " bytes at offset " +
                        std::to_string(pos_) + ", file has " + std::to_string(data_.size()));
    }
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(4));
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(8));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) { return std::string(take(n), n); }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  const std::string config = config_to_json(ckpt.config);
  w.u64(config.size());
  w.bytes(config.data(), config.size());
  w.u64(ckpt.epoch);
  w.u32(static_cast<std::uint32_t>(ckpt.history.size()));
  for (const EpochStats& s : ckpt.history) {
    w.u64(s.epoch);
    w.f64(s.mean_pos_sim);
    w.f64(s.mean_neg_sim);
    w.f64(s.loss);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [path, m] : ckpt.params) {
    w.str32(path);
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4), kCheckpointMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));
  }
  Checkpoint ckpt;
  const std::uint64_t config_len = r.u64();
  ckpt.config = config_from_json(r.str(config_len));
  ckpt.epoch = r.u64();
  const std::uint32_t history = r.u32();
  for (std::uint32_t i = 0; i < history; ++i) {
    EpochStats s;
    s.epoch = r.u64();
    s.mean_pos_sim = r.f64();
    s.mean_neg_sim = r.f64();
    s.loss = r.f64();
    ckpt.history.push_back(s);
  }
  const std::uint32_t tensors = r.u32();
  for (std::uint32_t i = 0; i < tensors; ++i) {
    const std::string path = r.str(r.u32());
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = r.f64();
    ckpt.params.set(path, std::move(m));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes after parameter block");
  check_compatible(ckpt.params, ckpt.config.model);
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history) {
  out << "epoch,mean_pos_sim,mean_neg_sim,loss\n";
  char line[160];
  for (const EpochStats& s : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g\n", s.epoch, s.mean_pos_sim,
                  s.mean_neg_sim, s.loss);
    out << line;
  }
}

}  // namespace vlanet
