#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gmvae {

/// Shortest text form of a double that round-trips bit-exactly.
std::string format_double(double v);

/// Write a file through a temp-and-rename so readers never see partial
/// content and reruns produce byte-identical results.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);
void atomic_write_bytes(const std::filesystem::path& path, const void* data, std::size_t size);

std::string read_text(const std::filesystem::path& path);

/// Little-endian 64-bit-float blobs used by checkpoints and bundles.
void write_f64_blob(const std::filesystem::path& path, const std::vector<double>& values);
std::vector<double> read_f64_blob(const std::filesystem::path& path, std::size_t expected_count);

} // namespace gmvae
