#pragma once

#include <filesystem>
#include <stdexcept>

#include "pcar/point_cloud.hpp"

namespace pcar {

enum class PlyFormat { Ascii, BinaryLittleEndian };

// Parse/IO failures carry the file offset that triggered them: a line number
// for header and ascii-body errors, a byte offset for binary-body errors.
class PlyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads ascii or binary_little_endian PLY 1.0. The vertex element must carry
// x,y,z as float32/float64/int32 (one common type); every other vertex
// property is preserved as opaque payload and written back unchanged.
PointCloud read_ply(const std::filesystem::path& path);

// Writes the cloud so read_ply reproduces it exactly. Positions are emitted
// with the cloud's declared geometry type unless some coordinate is no longer
// representable in it (fractional after aggregation), in which case the
// geometry type is promoted to float64. Output is written to a temp file and
// renamed into place, so a failed write never leaves a partial file.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

}  // namespace pcar
