#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeseg {

struct Spacing {
    double x = 1.0;
    double y = 1.0;
    double z = 1.0;

    friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Read-only view of one slice, row-major with x fastest.
struct SliceView {
    int width = 0;
    int height = 0;
    std::span<const std::int16_t> pixels;

    std::int16_t at(int x, int y) const noexcept { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// 16-bit signed voxel grid. Immutable once constructed; image_id is the
/// SHA-256 (hex) of the little-endian intensity bytes.
class ImageVolume {
public:
    ImageVolume() = default;
    ImageVolume(int width, int height, int depth, Spacing spacing, std::vector<std::int16_t> voxels,
                std::string source_path = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int depth() const noexcept { return depth_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    std::span<const std::int16_t> voxels() const noexcept { return voxels_; }
    const std::string& image_id() const noexcept { return image_id_; }
    const std::string& source_path() const noexcept { return source_path_; }

    /// Throws Error{SliceOutOfRange}.
    SliceView slice(int z) const;

private:
    int width_ = 0;
    int height_ = 0;
    int depth_ = 0;
    Spacing spacing_;
    std::vector<std::int16_t> voxels_;
    std::string image_id_;
    std::string source_path_;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// `.gsv`: ASCII header `GSV1 iw ih depth sx sy sz\n` then iw*ih*depth
/// little-endian int16 values. Errors: BadMagic, DimensionMismatch,
/// TruncatedData, IoFailure.
ImageVolume parse_volume(std::span<const std::uint8_t> bytes, std::string source_path = {});
ImageVolume load_volume(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_volume(const ImageVolume& vol);
void write_volume(const std::filesystem::path& path, const ImageVolume& vol);

std::int16_t min_intensity(SliceView slice) noexcept;
std::int16_t max_intensity(SliceView slice) noexcept;

/// Maps [center - width/2, center + width/2] linearly onto [0, 255],
/// clamped, rounding half up.
std::uint8_t window_value(double value, double center, double width) noexcept;
std::vector<std::uint8_t> window_normalize(SliceView slice, double center, double width);

/// Binary mask, one byte per pixel (0 or 1), row-major.
struct Bitmask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    Bitmask() = default;
    Bitmask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const noexcept;

    friend bool operator==(const Bitmask&, const Bitmask&) = default;
};

/// Alternating run lengths over the row-major scan, starting with a
/// (possibly zero-length) background run.
std::vector<std::uint32_t> rle_encode(const Bitmask& mask);
/// Throws Error{LengthMismatch} when the runs do not sum to width*height.
Bitmask rle_decode(std::span<const std::uint32_t> runs, int width, int height);

struct MaskSlice {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> runs;
    std::uint64_t version = 0;

    static MaskSlice from_bitmask(const Bitmask& mask, std::uint64_t version);
    Bitmask to_bitmask() const { return rle_decode(runs, width, height); }
    /// Runs sum to width*height.
    bool consistent() const noexcept;

    friend bool operator==(const MaskSlice&, const MaskSlice&) = default;
};

struct MaskMeta {
    std::string image_id;
    int slice = 0;
    std::uint64_t revision = 0;
    std::string mode;
};

std::vector<std::uint8_t> encode_pgm(const Bitmask& mask);
Bitmask decode_pgm(std::span<const std::uint8_t> bytes);

/// Writes `path` (binary PGM, foreground 255) and `path.meta`.
void save_mask(const Bitmask& mask, const MaskMeta& meta, const std::filesystem::path& path);
Bitmask load_mask(const std::filesystem::path& path);
MaskMeta load_mask_meta(const std::filesystem::path& meta_path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace gazeseg
