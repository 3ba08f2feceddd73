#include "toxigan/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "toxigan/errors.hpp"
#include "toxigan/kernels.hpp"
#include "toxigan/rng.hpp"

namespace toxigan {

std::size_t ParameterSet::add(std::string name, std::size_t rows, std::size_t cols) {
  Entry e{std::move(name), rows, cols, data_.size()};
  data_.resize(data_.size() + rows * cols, 0.0);
  entries_.push_back(std::move(e));
  return entries_.size() - 1;
}

std::size_t ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw LoadError("parameter array not found: " + name);
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out = *this;
  out.fill(0.0);
  return out;
}

void ParameterSet::fill(double v) {
  for (auto& x : data_) x = v;
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return true;
}

bool ParameterSet::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double ParameterSet::norm() const { return std::sqrt(kernels::dot(data_, data_)); }

namespace {

constexpr char kMagic[8] = {'T', 'X', 'G', 'N', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw LoadError("checkpoint truncated");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t write_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                               const ParameterSet& params) {
  std::string buf(kMagic, sizeof(kMagic));
  put<std::uint32_t>(buf, kCheckpointVersion);
  const std::string meta_text = meta.dump();
  put<std::uint64_t>(buf, meta_text.size());
  buf += meta_text;
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.entries().size()));
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    const auto& e = params.entries()[i];
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(e.name.size()));
    buf += e.name;
    put<std::uint64_t>(buf, e.rows);
    put<std::uint64_t>(buf, e.cols);
    for (double v : params.tensor(i)) put<double>(buf, v);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  return fnv1a64(buf.data(), buf.size());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint: " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(buf);
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw LoadError("not a checkpoint file: " + path.string());
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw LoadError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  const auto meta_len = r.get<std::uint64_t>();
  try {
    ck.meta = nlohmann::json::parse(r.bytes(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name = r.bytes(name_len);
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    const auto id = ck.params.add(std::move(name), rows, cols);
    for (double& v : ck.params.tensor(id)) v = r.get<double>();
  }
  if (!r.done()) throw LoadError("trailing bytes in checkpoint: " + path.string());
  ck.content_hash = fnv1a64(buf.data(), buf.size());
  return ck;
}

}  // namespace toxigan
