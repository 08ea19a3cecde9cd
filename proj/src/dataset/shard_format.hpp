#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>

namespace burstnet::dataset {

// magic[8] | u32 version | u32 dtype | u64 sample_len | u64 record_count
inline constexpr char kShardMagic[9] = "BNSHARD1";
inline constexpr std::uint32_t kShardDtypeF32 = 1;
inline constexpr std::size_t kShardHeaderBytes = 32;

inline std::string shard_relative_path(std::size_t class_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "shards/class_%05zu.bin", class_id);
  return buf;
}

}  // namespace burstnet::dataset
