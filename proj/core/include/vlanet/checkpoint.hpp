#pragma once

#include "vlanet/training.hpp"

#include <filesystem>
#include <ostream>

namespace vlanet {

// Checkpoint layout (little-endian):
//   "VLCK" | u32 version | u64 n + n bytes config JSON | u64 epoch
//   | u32 history rows, each u64 epoch + 3 x f64 (pos, neg, loss)
//   | u32 tensors, each u32 n + n bytes path, u32 rows, u32 cols, rows*cols f64
// Tensors are written in canonical path order.
inline constexpr char kCheckpointMagic[4] = {'V', 'L', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CSV with header `epoch,mean_pos_sim,mean_neg_sim,loss`.
void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history);

}  // namespace vlanet
