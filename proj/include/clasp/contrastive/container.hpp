#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "clasp/numerics/tensor.hpp"

namespace clasp::contrastive {

// Binary container shared by checkpoints and indexes:
//   "CLSP" | u32 version | records... | u32 CRC32 of all preceding bytes
// record: u32 name length | name | u8 dtype | u32 rank | u64 dims[rank] | payload
// All integers and reals little-endian.
inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { f32 = 0, f64 = 1, bytes = 2, u32 = 3, i64 = 4 };

std::size_t dtype_size(DType t);

struct Record {
  std::string name;
  DType dtype = DType::bytes;
  std::vector<std::uint64_t> dims;
  std::string payload;  // raw little-endian bytes

  friend bool operator==(const Record&, const Record&) = default;
};

Record make_record(const std::string& name, const numerics::Tensor& t);
Record make_record(const std::string& name, std::string_view bytes);
Record make_u32_record(const std::string& name, std::uint32_t value);

numerics::Tensor record_tensor(const Record& r);
std::string record_bytes(const Record& r);
std::uint32_t record_u32(const Record& r);

std::string write_container(const std::vector<Record>& records);
// Throws CheckpointError on bad magic, version, CRC or truncation.
std::vector<Record> read_container(std::string_view bytes);

const Record& find_record(const std::vector<Record>& records, std::string_view name);

std::uint32_t crc32_of(std::string_view bytes);

void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace clasp::contrastive
