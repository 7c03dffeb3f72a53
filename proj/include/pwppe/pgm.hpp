#pragma once

#include <string>

#include "pwppe/common.hpp"

namespace pwppe {

/// Writes intensities in [0,1] as binary 16-bit PGM (maxval 65535, big-endian samples).
void write_pgm16(const std::string& path, const Image& image);
/// Reads an 8- or 16-bit binary PGM and scales samples to [0,1].
Image read_pgm(const std::string& path);

void write_mask_pgm(const std::string& path, const Mask& mask);
Mask read_mask_pgm(const std::string& path);

}  // namespace pwppe
