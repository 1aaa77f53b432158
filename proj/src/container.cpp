#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "clasp/contrastive/container.hpp"
#include "clasp/error.hpp"

namespace clasp::contrastive {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'S', 'P'};

template <typename U>
void put(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get(std::string_view in, std::size_t offset) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename U>
  U read() {
    need(sizeof(U));
    const U v = get<U>(data_, pos_);
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    const auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw CheckpointError("container truncated");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (const auto d : dims) {
    if (d != 0 && n > UINT64_MAX / d) throw CheckpointError("record dimensions overflow");
    n *= d;
  }
  return n;
}

}  // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::bytes: return 1;
    case DType::u32: return 4;
    case DType::i64: return 8;
  }
  throw CheckpointError("unknown dtype tag " + std::to_string(static_cast<int>(t)));
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

Record make_record(const std::string& name, const numerics::Tensor& t) {
  Record r;
  r.name = name;
  r.dtype = DType::f32;
  r.dims.assign(t.shape().begin(), t.shape().end());
  r.payload.reserve(t.size() * 4);
  for (const float v : t.data()) put(r.payload, std::bit_cast<std::uint32_t>(v));
  return r;
}

Record make_record(const std::string& name, std::string_view bytes) {
  Record r;
  r.name = name;
  r.dtype = DType::bytes;
  r.dims = {bytes.size()};
  r.payload = std::string(bytes);
  return r;
}

Record make_u32_record(const std::string& name, std::uint32_t value) {
  Record r;
  r.name = name;
  r.dtype = DType::u32;
  r.dims = {1};
  put(r.payload, value);
  return r;
}

numerics::Tensor record_tensor(const Record& r) {
  if (r.dtype != DType::f32) throw CheckpointError("record '" + r.name + "' is not f32");
  numerics::Shape shape(r.dims.begin(), r.dims.end());
  std::vector<float> data(r.payload.size() / 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get<std::uint32_t>(r.payload, 4 * i));
  }
  try {
    return numerics::Tensor(std::move(shape), std::move(data));
  } catch (const ShapeError& e) {
    throw CheckpointError("record '" + r.name + "': " + e.what());
  }
}

std::string record_bytes(const Record& r) {
  if (r.dtype != DType::bytes) throw CheckpointError("record '" + r.name + "' is not a byte string");
  return r.payload;
}

std::uint32_t record_u32(const Record& r) {
  if (r.dtype != DType::u32 || r.payload.size() != 4) {
    throw CheckpointError("record '" + r.name + "' is not a u32 scalar");
  }
  return get<std::uint32_t>(r.payload, 0);
}

std::string write_container(const std::vector<Record>& records) {
  std::string out(kMagic, 4);
  put(out, kContainerVersion);
  for (const auto& r : records) {
    if (r.payload.size() != element_count(r.dims) * dtype_size(r.dtype)) {
      throw CheckpointError("record '" + r.name + "' payload does not match its dimensions");
    }
    put(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    out.push_back(static_cast<char>(r.dtype));
    put(out, static_cast<std::uint32_t>(r.dims.size()));
    for (const auto d : r.dims) put(out, d);
    out += r.payload;
  }
  put(out, crc32_of(out));
  return out;
}

std::vector<Record> read_container(std::string_view bytes) {
  if (bytes.size() < 12) throw CheckpointError("container truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("bad container magic");
  const auto body = bytes.substr(0, bytes.size() - 4);
  if (get<std::uint32_t>(bytes, bytes.size() - 4) != crc32_of(body)) {
    throw CheckpointError("container CRC mismatch (file corrupt or truncated)");
  }
  Reader in(body.substr(4));
  const auto version = in.read<std::uint32_t>();
  if (version != kContainerVersion) {
    throw CheckpointError("container version " + std::to_string(version) + ", expected " +
                          std::to_string(kContainerVersion));
  }
  std::vector<Record> out;
  while (!in.done()) {
    Record r;
    r.name = std::string(in.take(in.read<std::uint32_t>()));
    const auto tag = in.read<std::uint8_t>();
    if (tag > static_cast<std::uint8_t>(DType::i64)) {
      throw CheckpointError("record '" + r.name + "' has unknown dtype " + std::to_string(tag));
    }
    r.dtype = static_cast<DType>(tag);
    const auto rank = in.read<std::uint32_t>();
    for (std::uint32_t i = 0; i < rank; ++i) r.dims.push_back(in.read<std::uint64_t>());
    const auto count = element_count(r.dims);
    if (count > bytes.size()) throw CheckpointError("record '" + r.name + "' larger than file");
    r.payload = std::string(in.take(count * dtype_size(r.dtype)));
    out.push_back(std::move(r));
  }
  return out;
}

const Record& find_record(const std::vector<Record>& records, std::string_view name) {
  for (const auto& r : records) {
    if (r.name == name) return r;
  }
  throw CheckpointError("missing record '" + std::string(name) + "'");
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace clasp::contrastive
