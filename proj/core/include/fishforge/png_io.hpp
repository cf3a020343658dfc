#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fishforge/image.hpp"

namespace fishforge {

/// Writes an 8-bit RGB PNG. Compression settings are fixed so identical
/// patches produce identical bytes.
void write_png(const std::filesystem::path& path, const Patch& patch);

/// Reads any 8/16-bit gray/RGB(A)/palette PNG as RGB in [0,1]. Gray images
/// are replicated across the three channels; alpha is dropped.
Patch read_png(const std::filesystem::path& path);

/// In-memory 8-bit RGB PNG encoding (used by write_png).
std::vector<std::uint8_t> encode_png(const Patch& patch);

}  // namespace fishforge
