#include "sdfedit/numerics/checkpoint.hpp"

#include "sdfedit/common/io.hpp"

#include <set>

namespace sdfedit::nn {

namespace {
constexpr char kMagic[] = "SDFECKPT";
constexpr std::uint8_t kFloat64 = 1;
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  ByteWriter w;
  w.raw(std::string_view(kMagic, 8));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.raw(t.name);
    w.u8(kFloat64);
    w.u8(static_cast<std::uint8_t>(t.value.rank()));
    for (std::size_t e : t.value.shape()) w.u64(e);
  }
  for (const auto& t : tensors) {
    for (double v : t.value.values()) w.f64(v);
  }
  return w.take();
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes,
                                           const std::string& source) {
  ByteReader r(bytes, source);
  if (r.raw(8) != std::string_view(kMagic, 8)) throw FormatError(source + ": bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(source + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  std::vector<Shape> shapes;
  std::set<std::string> seen;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t len = r.u32();
    std::string name = r.raw(len);
    if (!seen.insert(name).second) throw FormatError(source + ": duplicate tensor " + name);
    const std::uint8_t dtype = r.u8();
    if (dtype != kFloat64) {
      throw FormatError(source + ": tensor " + name + " has unsupported element type " +
                        std::to_string(dtype));
    }
    const std::uint8_t rank = r.u8();
    Shape shape(rank);
    for (auto& e : shape) e = r.u64();
    out.push_back({std::move(name), {}});
    shapes.push_back(std::move(shape));
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::vector<double> data(element_count(shapes[k]));
    for (double& v : data) v = r.f64();
    out[k].value = Tensor(shapes[k], std::move(data));
  }
  if (!r.at_end()) throw FormatError(source + ": trailing bytes after payloads");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  const auto bytes = encode_checkpoint(tensors);
  atomic_write(path, bytes);
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return decode_checkpoint(bytes, path.string());
}

const Tensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw FormatError("checkpoint lacks tensor '" + name + "'");
}

}  // namespace sdfedit::nn
