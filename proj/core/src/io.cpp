#include "gmvae/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "gmvae/errors.hpp"

namespace gmvae {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    // max_digits10 guarantees the value parses back to the same bits
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write_bytes(const fs::path& path, const void* data, std::size_t size) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw FormatError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void atomic_write_text(const fs::path& path, const std::string& content) {
    atomic_write_bytes(path, content.data(), content.size());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

void write_f64_blob(const fs::path& path, const std::vector<double>& values) {
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native == std::endian::little) {
        atomic_write_bytes(path, values.data(), values.size() * 8);
    } else {
        std::vector<unsigned char> bytes(values.size() * 8);
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint64_t u;
            std::memcpy(&u, &values[i], 8);
            for (int b = 0; b < 8; ++b)
                bytes[i * 8 + static_cast<std::size_t>(b)] =
                    static_cast<unsigned char>((u >> (8 * b)) & 0xFF);
        }
        atomic_write_bytes(path, bytes.data(), bytes.size());
    }
}

std::vector<double> read_f64_blob(const fs::path& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != expected_count * 8)
        throw FormatError(path.string() + ": expected " + std::to_string(expected_count * 8) +
                          " bytes, found " + std::to_string(bytes.size()));
    std::vector<double> values(expected_count);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < expected_count; ++i) {
            std::uint64_t u = 0;
            for (int b = 7; b >= 0; --b)
                u = (u << 8) |
                    static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)]);
            std::memcpy(&values[i], &u, 8);
        }
    }
    return values;
}

} // namespace gmvae
