#pragma once

#include <filesystem>

#include "pcar/unet.hpp"

namespace pcar {

// Checkpoint container, little-endian throughout:
//
//   bytes 0..7   magic "PCARCKPT"
//   u32          version (currently 1)
//   u32 u32 u32  depth, base_channels, head_mode (0 one_hot, 1 soft, 2 direct)
//   u64          seed
//   f64 u32 u32  lr, steps, batch
//   u32          tensor count
//   per tensor:  u32 name length, name bytes,
//                u32 ndim, i64 dims[ndim],
//                f64 payload, row-major
//
// Saves are atomic (temp file + rename) and byte-identical for identical
// networks. Loading validates the magic, version, and that every stored
// tensor matches the network the config builds; mismatches throw.
void save_checkpoint(const std::filesystem::path& path, const Network& net);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace pcar
