#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace senti {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(std::string_view text);
std::string to_hex(const Digest& digest);
Digest digest_from_hex(std::string_view hex);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
// Writes to a sibling temporary and renames, so readers never observe a partial file.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::filesystem::path& path, std::string_view text);

// Little-endian encoder for the binary artifact formats.
class ByteWriter {
public:
    void raw(std::span<const std::uint8_t> bytes);
    void raw(std::string_view bytes);
    void u32(std::uint32_t value);
    void f32(float value);
    void digest(const Digest& d) { raw(std::span<const std::uint8_t>(d)); }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t>&& take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

// Bounds-checked little-endian decoder. Every read past the end throws FormatError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::span<const std::uint8_t> raw(std::size_t n);
    void expect(std::string_view magic, std::string_view what);
    std::uint32_t u32();
    float f32();
    Digest digest();

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace senti
