#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cip/numkit/linalg.hpp"
#include "cip/numkit/mlp.hpp"

namespace cip {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// One tensor in a checkpoint. Biases are stored as (1 x n) rows.
struct CheckpointRecord {
  std::uint32_t layer = 0;
  std::string role;  // e.g. "policy/weight", "critic1/bias"
  Matrix data;
};

/// Byte layout: docs/file_formats.md.
std::string encode_checkpoint(const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> load_checkpoint(const std::string& path);

/// Appends "<name>/weight" and "<name>/bias" records for every layer.
void append_mlp_records(std::vector<CheckpointRecord>& out, const std::string& name,
                        const MlpParams& params);

/// Rebuilds a network from the records written by append_mlp_records.
MlpParams extract_mlp(const std::vector<CheckpointRecord>& records, const std::string& name);

}  // namespace cip
