#include "cip/numkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "cip/numkit/error.hpp"

namespace cip {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'I', 'P', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    need(sizeof(T));
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_doubles(double* dst, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("checkpoint: truncated file");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<CheckpointRecord>& records) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    if (rec.role.size() > 0xffff) throw ConfigError("checkpoint: role tag too long");
    put<std::uint32_t>(out, rec.layer);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(rec.role.size()));
    out += rec.role;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.data.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.data.cols()));
    // Matrix is row-major, so the raw buffer is already in file order.
    out.append(reinterpret_cast<const char*>(rec.data.data()),
               static_cast<std::size_t>(rec.data.size()) * sizeof(double));
  }
  return out;
}

std::vector<CheckpointRecord> decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw Error("checkpoint: bad magic");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  std::vector<CheckpointRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointRecord rec;
    rec.layer = in.get<std::uint32_t>();
    rec.role = in.take(in.get<std::uint16_t>());
    const auto rows = in.get<std::uint32_t>();
    const auto cols = in.get<std::uint32_t>();
    rec.data.resize(rows, cols);
    in.read_doubles(rec.data.data(), static_cast<std::size_t>(rows) * cols);
    records.push_back(std::move(rec));
  }
  if (!in.done()) throw Error("checkpoint: trailing bytes");
  return records;
}

void save_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("checkpoint: cannot open " + path + " for writing");
  const std::string bytes = encode_checkpoint(records);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("checkpoint: write failed for " + path);
}

std::vector<CheckpointRecord> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

void append_mlp_records(std::vector<CheckpointRecord>& out, const std::string& name,
                        const MlpParams& params) {
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    out.push_back({static_cast<std::uint32_t>(k), name + "/weight", layer.weight});
    out.push_back({static_cast<std::uint32_t>(k), name + "/bias", layer.bias.transpose()});
  }
}

MlpParams extract_mlp(const std::vector<CheckpointRecord>& records, const std::string& name) {
  std::map<std::uint32_t, DenseLayer> layers;
  std::map<std::uint32_t, int> seen;
  for (const auto& rec : records) {
    if (rec.role == name + "/weight") {
      layers[rec.layer].weight = rec.data;
      seen[rec.layer] |= 1;
    } else if (rec.role == name + "/bias") {
      if (rec.data.rows() != 1) throw Error("checkpoint: bias record for " + name + " is not a row");
      layers[rec.layer].bias = rec.data.row(0).transpose();
      seen[rec.layer] |= 2;
    }
  }
  if (layers.empty()) throw Error("checkpoint: no records for " + name);
  MlpParams params;
  std::uint32_t expect = 0;
  for (auto& [index, layer] : layers) {
    if (index != expect++ || seen[index] != 3) {
      throw Error("checkpoint: incomplete layer " + std::to_string(index) + " for " + name);
    }
    params.layers.push_back(std::move(layer));
  }
  for (std::size_t k = 0; k + 1 < params.layers.size(); ++k) {
    if (params.layers[k].weight.cols() != params.layers[k + 1].weight.rows()) {
      throw Error("checkpoint: layer shapes do not compose for " + name);
    }
  }
  return params;
}

}  // namespace cip
