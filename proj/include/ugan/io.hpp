#pragma once

#include "types.hpp"

#include <filesystem>

namespace ugan {

// 16-bit binary portable graymap (P5, maxval 65535, big-endian samples) of |x|, scaled so the
// largest magnitude maps to 65535. An all-zero image writes zeros.
void WritePgm16(std::filesystem::path const &file, CTensor const &x);
// Reads back the samples of a file written by WritePgm16 as [H, W] integers in [0, 65535]
Tensor ReadPgm16(std::filesystem::path const &file);

// Raw complex dump: little-endian float64, interleaved (re, im), row-major, no header
void WriteRaw(std::filesystem::path const &file, CTensor const &x);
CTensor ReadRaw(std::filesystem::path const &file, Shape const &shape);

std::string ReadText(std::filesystem::path const &file);

} // namespace ugan
