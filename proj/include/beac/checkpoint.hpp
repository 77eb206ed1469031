#pragma once

#include <filesystem>
#include <string>

#include "beac/graph.hpp"
#include "json.hpp"

namespace beac::ad {

// Binary checkpoint: 8-byte magic "BEACCKPT", u32 format version, u64 header
// length, a JSON header, then the float64 payload (little-endian) of every
// tensor in name order. The header lists name/shape/offset for each tensor and
// carries whatever metadata the caller supplies under "meta".
struct Checkpoint {
  nlohmann::json meta;
  Bindings tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

// Writes to "<path>.tmp" then renames, so an interrupted write never leaves a
// partial file at `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Shared helper for other artifact writers.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace beac::ad
