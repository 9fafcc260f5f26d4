#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iform/tensor.hpp"

namespace iform {

// IFTN binary tensor file:
//   magic "IFTN", u8 version=1, u8 dtype (0 = f64), u8 rank,
//   little-endian u64 dims[rank], row-major little-endian f64 payload.
std::vector<std::uint8_t> encode_iftn(const Tensor& t);
void write_iftn(const std::string& path, const Tensor& t);
Tensor read_iftn(const std::string& path);

// In-buffer variants used by container formats; offset advances past the blob
// and is reported in FormatError messages relative to the whole buffer.
void append_iftn(std::vector<std::uint8_t>& buf, const Tensor& t);
Tensor decode_iftn(const std::vector<std::uint8_t>& buf, std::size_t& offset);

// Binary PGM (P5) and PPM (P6), maxval 255. Values are doubles in [0,1];
// writing quantizes with round(v*255).
void write_pgm(const std::string& path, std::size_t height, std::size_t width,
               const std::vector<double>& values);
void read_pgm(const std::string& path, std::size_t& height, std::size_t& width,
              std::vector<double>& values);
// interleaved r,g,b planes flattened as 3*H*W (plane-major)
void write_ppm(const std::string& path, std::size_t height, std::size_t width,
               const std::vector<double>& rgb_planes);
void read_ppm(const std::string& path, std::size_t& height, std::size_t& width,
              std::vector<double>& rgb_planes);

// Whole-file helpers. Writes go through a temp file in the same directory
// followed by rename, so consumers never observe partial artifacts.
void write_file_atomic(const std::string& path, const void* data, std::size_t size);
void write_file_atomic(const std::string& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::string& path);
std::string read_text_file(const std::string& path);

}  // namespace iform
