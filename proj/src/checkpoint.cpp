#include "projectron/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

#include "projectron/io_util.hpp"

namespace projectron {

namespace {

constexpr char kMagic[8] = {'P', 'J', 'T', 'R', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <class T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw, raw + sizeof(T));
    }
    bytes_.insert(bytes_.end(), raw, raw + sizeof(T));
  }
  void put_raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw, raw + sizeof(T));
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }
  void get_raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

// Guards allocations driven by header fields.
constexpr std::uint64_t kMaxWidth = std::uint64_t{1} << 32;

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
  model.validate();
  Writer w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.kind));
  w.put<std::uint64_t>(model.input_width);
  w.put<std::uint64_t>(model.classes);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      w.put<std::uint32_t>(0);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(d->activation));
      w.put<std::uint64_t>(d->in_width());
      w.put<std::uint64_t>(d->out_width());
    } else {
      const auto& r = std::get<RbfPairLayer>(layer);
      w.put<std::uint32_t>(1);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(Activation::none));
      w.put<std::uint64_t>(r.in_width());
      w.put<std::uint64_t>(r.out_width());
    }
  }
  for (const auto& layer : model.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      w.put<std::uint64_t>(static_cast<std::uint64_t>(d->weights.size()));
      for (Eigen::Index r = 0; r < d->weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < d->weights.cols(); ++c) w.put<double>(d->weights(r, c));
      }
      w.put<std::uint64_t>(static_cast<std::uint64_t>(d->biases.size()));
      for (double b : d->biases) w.put<double>(b);
    } else {
      const auto& r = std::get<RbfPairLayer>(layer);
      w.put<std::uint64_t>(static_cast<std::uint64_t>(r.gammas.size()));
      for (double g : r.gammas) w.put<double>(g);
    }
  }
  return w.take();
}

Model deserialize_model(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[sizeof(kMagic)];
  r.get_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Model m;
  const auto kind = r.get<std::uint32_t>();
  if (kind > 1) throw std::runtime_error("unknown model kind " + std::to_string(kind));
  m.kind = static_cast<ModelKind>(kind);
  m.input_width = r.get<std::uint64_t>();
  m.classes = r.get<std::uint64_t>();
  const auto layer_count = r.get<std::uint32_t>();
  if (layer_count == 0 || layer_count > 1024) {
    throw std::runtime_error("implausible layer count " + std::to_string(layer_count));
  }

  struct Descriptor {
    std::uint32_t kind, activation;
    std::uint64_t in, out;
  };
  std::vector<Descriptor> descs;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    Descriptor d{r.get<std::uint32_t>(), r.get<std::uint32_t>(),
                 r.get<std::uint64_t>(), r.get<std::uint64_t>()};
    if (d.kind > 1 || d.activation > 1 || d.in == 0 || d.out == 0 ||
        d.in > kMaxWidth || d.out > kMaxWidth) {
      throw std::runtime_error("malformed layer descriptor " + std::to_string(i));
    }
    descs.push_back(d);
  }

  auto read_tensor = [&](std::uint64_t expected) {
    const auto count = r.get<std::uint64_t>();
    if (count != expected) throw std::runtime_error("checkpoint tensor size mismatch");
    std::vector<double> values(count);
    for (auto& v : values) v = r.get<double>();
    return values;
  };

  for (const auto& d : descs) {
    if (d.kind == 0) {
      DenseLayer layer;
      layer.activation = static_cast<Activation>(d.activation);
      const auto rows = static_cast<Eigen::Index>(d.out);
      const auto cols = static_cast<Eigen::Index>(d.in);
      const auto w = read_tensor(d.in * d.out);
      layer.weights.resize(rows, cols);
      for (Eigen::Index rr = 0; rr < rows; ++rr) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          layer.weights(rr, c) = w[static_cast<std::size_t>(rr * cols + c)];
        }
      }
      const auto b = read_tensor(d.out);
      layer.biases = Eigen::Map<const Vector>(b.data(), rows);
      m.layers.emplace_back(std::move(layer));
    } else {
      if (d.in != 2 * d.out) throw std::runtime_error("rbf-pair layer widths inconsistent");
      const auto g = read_tensor(d.out);
      m.layers.emplace_back(RbfPairLayer{
          Eigen::Map<const Vector>(g.data(), static_cast<Eigen::Index>(d.out))});
    }
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after checkpoint");
  m.validate();
  return m;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  auto out = open_for_write(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  finish_write(out, path);
}

Model load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file_bytes(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace projectron
