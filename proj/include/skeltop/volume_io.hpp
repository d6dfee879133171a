#pragma once

#include <filesystem>

#include "skeltop/volume.hpp"

namespace skeltop {

/// On-disk volume encodings.
///
/// RawJson: a `<name>.json` sidecar
///   {"dims":[d,h,w], "spacing":[sz,sy,sx], "kind":"probability"|"binary",
///    "dtype":"f32"|"u8", "data_file":"<name>.raw"}
/// with a little-endian depth-major payload; `data_file` is resolved relative
/// to the sidecar.
///
/// Nrrd: the attached-header subset `NRRD0004`, `type: uint8|float`,
/// `dimension: 3`, `sizes: w h d`, `encoding: raw`, `endian: little` and an
/// optional `spacings: sx sy sz`. uint8 maps to a binary volume, float to a
/// probability volume.
enum class VolumeFormat { RawJson, Nrrd };

/// `.nrrd` selects Nrrd; anything else RawJson.
VolumeFormat format_from_path(const std::filesystem::path& path);

Volume3D read_volume(const std::filesystem::path& path, VolumeFormat format);
Volume3D read_volume(const std::filesystem::path& path);

void write_volume(const Volume3D& vol, const std::filesystem::path& path, VolumeFormat format);
void write_volume(const Volume3D& vol, const std::filesystem::path& path);

}  // namespace skeltop
