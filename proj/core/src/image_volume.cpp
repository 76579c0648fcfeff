#include "gazeseg/image_volume.hpp"

#include "gazeseg/errors.hpp"
#include "text_util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <memory>
#include <numeric>
#include <sstream>

namespace gazeseg {

namespace {

std::vector<std::uint8_t> voxel_bytes(std::span<const std::int16_t> voxels)
{
    std::vector<std::uint8_t> out(voxels.size() * 2);
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        const auto u = static_cast<std::uint16_t>(voxels[i]);
        out[2 * i] = static_cast<std::uint8_t>(u & 0xff);
        out[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
    }
    return out;
}

} // namespace

ImageVolume::ImageVolume(int width, int height, int depth, Spacing spacing, std::vector<std::int16_t> voxels,
                         std::string source_path)
    : width_(width), height_(height), depth_(depth), spacing_(spacing), voxels_(std::move(voxels)),
      source_path_(std::move(source_path))
{
    if (width_ < 1 || height_ < 1 || depth_ < 1)
        fail(ErrorKind::DimensionMismatch, "volume dimensions must be >= 1");
    if (static_cast<std::size_t>(width_) * height_ * depth_ != voxels_.size())
        fail(ErrorKind::DimensionMismatch, "voxel count does not match iw*ih*depth");
    if (!(spacing_.x > 0.0 && spacing_.y > 0.0 && spacing_.z > 0.0))
        fail(ErrorKind::DimensionMismatch, "spacing components must be positive");
    image_id_ = sha256_hex(voxel_bytes(voxels_));
}

SliceView ImageVolume::slice(int z) const
{
    if (z < 0 || z >= depth_)
        fail(ErrorKind::SliceOutOfRange, "slice " + std::to_string(z) + " outside [0, " + std::to_string(depth_) + ")");
    const auto plane = static_cast<std::size_t>(width_) * height_;
    return {width_, height_, std::span<const std::int16_t>(voxels_).subspan(plane * z, plane)};
}

std::string sha256_hex(std::span<const std::uint8_t> bytes)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        fail(ErrorKind::IoFailure, "SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

ImageVolume parse_volume(std::span<const std::uint8_t> bytes, std::string source_path)
{
    const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
    if (nl == bytes.end())
        fail(bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "GSV1") ? ErrorKind::TruncatedData
                                                                                          : ErrorKind::BadMagic,
             "missing .gsv header line");
    const std::string header(bytes.begin(), nl);
    const auto tok = detail::split_ws(header);
    if (tok.empty() || tok[0] != "GSV1")
        fail(ErrorKind::BadMagic, "not a GSV1 volume");
    if (tok.size() != 7)
        fail(ErrorKind::DimensionMismatch, "header needs `GSV1 iw ih depth sx sy sz`");
    std::array<int, 3> dims{};
    for (std::size_t i = 0; i < 3; ++i) {
        auto v = detail::parse_number<int>(tok[1 + i]);
        if (!v || *v < 1)
            fail(ErrorKind::DimensionMismatch, "bad dimension '" + std::string(tok[1 + i]) + "'");
        dims[i] = *v;
    }
    std::array<double, 3> sp{};
    for (std::size_t i = 0; i < 3; ++i) {
        auto v = detail::parse_number<double>(tok[4 + i]);
        if (!v || !(*v > 0.0) || !std::isfinite(*v))
            fail(ErrorKind::DimensionMismatch, "bad spacing '" + std::string(tok[4 + i]) + "'");
        sp[i] = *v;
    }
    const auto count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    const auto payload = bytes.subspan(static_cast<std::size_t>(nl - bytes.begin()) + 1);
    if (payload.size() < count * 2)
        fail(ErrorKind::TruncatedData, "header declares " + std::to_string(count) + " voxels, payload carries " +
                                           std::to_string(payload.size() / 2));
    if (payload.size() > count * 2)
        fail(ErrorKind::DimensionMismatch, "payload is longer than the declared dimensions");
    std::vector<std::int16_t> voxels(count);
    for (std::size_t i = 0; i < count; ++i)
        voxels[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(payload[2 * i]) |
                                              static_cast<std::uint16_t>(payload[2 * i + 1]) << 8);
    return ImageVolume(dims[0], dims[1], dims[2], {sp[0], sp[1], sp[2]}, std::move(voxels), std::move(source_path));
}

ImageVolume load_volume(const std::filesystem::path& path)
{
    return parse_volume(read_file_bytes(path), path.string());
}

std::vector<std::uint8_t> serialize_volume(const ImageVolume& vol)
{
    const auto& s = vol.spacing();
    const std::string header = "GSV1 " + std::to_string(vol.width()) + ' ' + std::to_string(vol.height()) + ' ' +
                               std::to_string(vol.depth()) + ' ' + detail::format_double(s.x) + ' ' +
                               detail::format_double(s.y) + ' ' + detail::format_double(s.z) + '\n';
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const auto body = voxel_bytes(vol.voxels());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

void write_volume(const std::filesystem::path& path, const ImageVolume& vol)
{
    write_file_bytes(path, serialize_volume(vol));
}

std::int16_t min_intensity(SliceView slice) noexcept
{
    return slice.pixels.empty() ? 0 : *std::min_element(slice.pixels.begin(), slice.pixels.end());
}

std::int16_t max_intensity(SliceView slice) noexcept
{
    return slice.pixels.empty() ? 0 : *std::max_element(slice.pixels.begin(), slice.pixels.end());
}

std::uint8_t window_value(double value, double center, double width) noexcept
{
    const double x = (value - center) * 255.0 / width + 127.5;
    const double r = std::floor(x + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

std::vector<std::uint8_t> window_normalize(SliceView slice, double center, double width)
{
    if (!(width > 0.0))
        fail(ErrorKind::InvalidArgument, "window width must be positive");
    std::vector<std::uint8_t> out(slice.pixels.size());
    std::transform(slice.pixels.begin(), slice.pixels.end(), out.begin(),
                   [&](std::int16_t v) { return window_value(v, center, width); });
    return out;
}

std::size_t Bitmask::count() const noexcept
{
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

std::vector<std::uint32_t> rle_encode(const Bitmask& mask)
{
    std::vector<std::uint32_t> runs;
    std::uint8_t current = 0;
    std::uint32_t length = 0;
    for (auto b : mask.bits) {
        const std::uint8_t v = b ? 1 : 0;
        if (v != current) {
            runs.push_back(length);
            current = v;
            length = 0;
        }
        ++length;
    }
    runs.push_back(length);
    return runs;
}

Bitmask rle_decode(std::span<const std::uint32_t> runs, int width, int height)
{
    if (width < 0 || height < 0)
        fail(ErrorKind::LengthMismatch, "negative mask dimensions");
    const auto total = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
    const auto sum = std::accumulate(runs.begin(), runs.end(), std::uint64_t{0});
    if (sum != total)
        fail(ErrorKind::LengthMismatch,
             "runs sum to " + std::to_string(sum) + ", mask has " + std::to_string(total) + " pixels");
    Bitmask mask(width, height);
    std::size_t pos = 0;
    std::uint8_t v = 0;
    for (auto r : runs) {
        std::fill_n(mask.bits.begin() + static_cast<std::ptrdiff_t>(pos), r, v);
        pos += r;
        v ^= 1;
    }
    return mask;
}

MaskSlice MaskSlice::from_bitmask(const Bitmask& mask, std::uint64_t version)
{
    return {mask.width, mask.height, rle_encode(mask), version};
}

bool MaskSlice::consistent() const noexcept
{
    return std::accumulate(runs.begin(), runs.end(), std::uint64_t{0}) ==
           static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
}

std::vector<std::uint8_t> encode_pgm(const Bitmask& mask)
{
    const std::string header = "P5\n" + std::to_string(mask.width) + ' ' + std::to_string(mask.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + mask.bits.size());
    for (auto b : mask.bits)
        out.push_back(b ? 255 : 0);
    return out;
}

Bitmask decode_pgm(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos]))
            tok.push_back(static_cast<char>(bytes[pos++]));
        return tok;
    };
    if (next_token() != "P5")
        fail(ErrorKind::BadMagic, "not a binary PGM (P5) file");
    auto w = detail::parse_number<int>(next_token());
    auto h = detail::parse_number<int>(next_token());
    auto maxval = detail::parse_number<int>(next_token());
    if (!w || !h || !maxval || *w < 0 || *h < 0 || *maxval != 255)
        fail(ErrorKind::DimensionMismatch, "unsupported PGM header");
    ++pos;  // single whitespace byte before raster
    const auto n = static_cast<std::size_t>(*w) * *h;
    if (pos > bytes.size() || bytes.size() - pos < n)
        fail(ErrorKind::TruncatedData, "PGM raster shorter than header declares");
    Bitmask mask(*w, *h);
    for (std::size_t i = 0; i < n; ++i)
        mask.bits[i] = bytes[pos + i] ? 1 : 0;
    return mask;
}

void save_mask(const Bitmask& mask, const MaskMeta& meta, const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    write_file_bytes(path, encode_pgm(mask));
    std::ostringstream m;
    m << "image_id=" << meta.image_id << '\n'
      << "slice=" << meta.slice << '\n'
      << "revision=" << meta.revision << '\n'
      << "mode=" << meta.mode << '\n';
    const auto text = m.str();
    auto meta_path = path;
    meta_path += ".meta";
    write_file_bytes(meta_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bitmask load_mask(const std::filesystem::path& path)
{
    return decode_pgm(read_file_bytes(path));
}

MaskMeta load_mask_meta(const std::filesystem::path& meta_path)
{
    std::ifstream in(meta_path);
    if (!in)
        fail(ErrorKind::IoFailure, "cannot open " + meta_path.string());
    MaskMeta meta;
    for (const auto& kv : detail::read_key_values(in)) {
        if (kv.key == "image_id")
            meta.image_id = kv.value;
        else if (kv.key == "slice")
            meta.slice = detail::parse_number<int>(kv.value).value_or(0);
        else if (kv.key == "revision")
            meta.revision = detail::parse_number<std::uint64_t>(kv.value).value_or(0);
        else if (kv.key == "mode")
            meta.mode = kv.value;
    }
    return meta;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::IoFailure, "cannot open " + path.string());
    std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        fail(ErrorKind::IoFailure, "read failed: " + path.string());
    return out;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(ErrorKind::IoFailure, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
        fail(ErrorKind::IoFailure, "write failed: " + path.string());
}

} // namespace gazeseg
