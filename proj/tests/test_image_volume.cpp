#include "support.hpp"

#include "gazeseg/errors.hpp"
#include "gazeseg/image_volume.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

using namespace gazeseg;
using gazeseg::testing::TempDir;

namespace {

std::vector<std::uint8_t> gsv(const std::string& header, std::vector<std::int16_t> vals)
{
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (auto v : vals) {
        const auto u = static_cast<std::uint16_t>(v);
        out.push_back(static_cast<std::uint8_t>(u & 0xff));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    return out;
}

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::InvalidState;
}

int floor_div(long long a, long long b)
{
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return static_cast<int>(q);
}

} // namespace

TEST(Volume, LoadsTinyVolume)
{
    const auto vol = parse_volume(gsv("GSV1 2 2 1 1 1 1\n", {0, 1, 2, 3}));
    EXPECT_EQ(vol.width(), 2);
    EXPECT_EQ(vol.height(), 2);
    EXPECT_EQ(vol.depth(), 1);
    const auto s = vol.slice(0);
    EXPECT_EQ(s.at(0, 0), 0);
    EXPECT_EQ(s.at(1, 0), 1);
    EXPECT_EQ(s.at(0, 1), 2);
    EXPECT_EQ(s.at(1, 1), 3);
}

TEST(Volume, ImageIdIsHashOfVoxelBytes)
{
    const auto bytes = gsv("GSV1 2 2 1 1 1 1\n", {0, 1, 2, 3});
    const auto a = parse_volume(bytes);
    const auto b = parse_volume(bytes);
    EXPECT_EQ(a.image_id(), b.image_id());
    EXPECT_EQ(a.image_id().size(), 64u);
    const std::vector<std::uint8_t> payload(bytes.end() - 8, bytes.end());
    EXPECT_EQ(a.image_id(), sha256_hex(payload));
    // header-only differences do not change identity
    EXPECT_EQ(parse_volume(gsv("GSV1 2 2 1 0.5 0.5 2\n", {0, 1, 2, 3})).image_id(), a.image_id());
    EXPECT_NE(parse_volume(gsv("GSV1 2 2 1 1 1 1\n", {0, 1, 2, 4})).image_id(), a.image_id());
}

TEST(Volume, Sha256KnownVector)
{
    const std::string abc = "abc";
    EXPECT_EQ(sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size())),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Volume, TruncatedPayload)
{
    EXPECT_EQ(kind_of([] { parse_volume(gsv("GSV1 2 2 1 1 1 1\n", {0, 1, 2})); }), ErrorKind::TruncatedData);
    auto odd = gsv("GSV1 2 2 1 1 1 1\n", {0, 1, 2, 3});
    odd.pop_back();
    EXPECT_EQ(kind_of([&] { parse_volume(odd); }), ErrorKind::TruncatedData);
    EXPECT_EQ(kind_of([] { parse_volume(gsv("GSV1 2 2", {})); }), ErrorKind::TruncatedData);
}

TEST(Volume, HeaderErrors)
{
    EXPECT_EQ(kind_of([] { parse_volume(gsv("NOPE 2 2 1 1 1 1\n", {0, 1, 2, 3})); }), ErrorKind::BadMagic);
    EXPECT_EQ(kind_of([] { parse_volume(gsv("GSV1 2 0 1 1 1 1\n", {})); }), ErrorKind::DimensionMismatch);
    EXPECT_EQ(kind_of([] { parse_volume(gsv("GSV1 2 2 1 1 1\n", {0, 1, 2, 3})); }), ErrorKind::DimensionMismatch);
    EXPECT_EQ(kind_of([] { parse_volume(gsv("GSV1 2 2 1 1 1 1\n", {0, 1, 2, 3, 4})); }),
              ErrorKind::DimensionMismatch);
}

TEST(Volume, SliceOutOfRange)
{
    const auto vol = parse_volume(gsv("GSV1 1 1 3 1 1 1\n", {5, 6, 7}));
    EXPECT_EQ(vol.slice(2).at(0, 0), 7);
    EXPECT_EQ(kind_of([&] { vol.slice(3); }), ErrorKind::SliceOutOfRange);
    EXPECT_EQ(kind_of([&] { vol.slice(-1); }), ErrorKind::SliceOutOfRange);
}

TEST(Volume, NegativeValuesAreLittleEndianSigned)
{
    const auto vol = parse_volume(gsv("GSV1 3 1 1 1 1 1\n", {-1, -32768, 32767}));
    EXPECT_EQ(vol.slice(0).at(0, 0), -1);
    EXPECT_EQ(vol.slice(0).at(1, 0), -32768);
    EXPECT_EQ(vol.slice(0).at(2, 0), 32767);
}

TEST(Volume, FileRoundTripIsByteExact)
{
    TempDir dir;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto vol = gazeseg::testing::random_volume(rng, 1 + i % 7, 1 + i % 5, 1 + i % 3, -32768, 32767);
        const auto bytes = serialize_volume(vol);
        const auto path = dir / ("v" + std::to_string(i) + ".gsv");
        write_volume(path, vol);
        EXPECT_EQ(read_file_bytes(path), bytes);
        const auto back = load_volume(path);
        EXPECT_EQ(serialize_volume(back), bytes);
        EXPECT_EQ(back.image_id(), vol.image_id());
    }
    EXPECT_EQ(kind_of([&] { load_volume(dir / "missing.gsv"); }), ErrorKind::IoFailure);
}

TEST(Window, CenterAndClamp)
{
    EXPECT_EQ(window_value(40, 40, 400), 128);
    EXPECT_EQ(window_value(-1000, 40, 400), 0);
    EXPECT_EQ(window_value(3000, 40, 400), 255);
    EXPECT_EQ(window_value(240, 40, 400), 255);
    EXPECT_EQ(window_value(-160, 40, 400), 0);
}

TEST(Window, MatchesIntegerOracle)
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> val(-2000, 2000), cen(-500, 500), wid(1, 3000);
    for (int i = 0; i < 20000; ++i) {
        const int v = val(rng), c = cen(rng), w = wid(rng);
        // floor((v-c)*255/w + 127.5 + 0.5), in exact integer arithmetic
        const int expect = std::clamp(floor_div(static_cast<long long>(v - c) * 255, w) + 128, 0, 255);
        ASSERT_EQ(window_value(v, c, w), expect) << v << " " << c << " " << w;
    }
}

TEST(Window, NormalizeSlice)
{
    const auto vol = parse_volume(gsv("GSV1 2 2 1 1 1 1\n", {0, 100, 200, 300}));
    const auto px = window_normalize(vol.slice(0), 150, 300);
    EXPECT_EQ(px, (std::vector<std::uint8_t>{0, 85, 170, 255}));
    EXPECT_EQ(min_intensity(vol.slice(0)), 0);
    EXPECT_EQ(max_intensity(vol.slice(0)), 300);
    EXPECT_THROW(window_normalize(vol.slice(0), 0, 0), Error);
}

TEST(Rle, Examples)
{
    Bitmask empty(2, 2);
    EXPECT_EQ(rle_encode(empty), (std::vector<std::uint32_t>{4}));
    Bitmask m(2, 2);
    m.at(1, 0) = 1;
    m.at(0, 1) = 1;
    m.at(1, 1) = 1;
    EXPECT_EQ(rle_encode(m), (std::vector<std::uint32_t>{1, 3}));
    Bitmask full(2, 2);
    full.bits.assign(4, 1);
    EXPECT_EQ(rle_encode(full), (std::vector<std::uint32_t>{0, 4}));
}

TEST(Rle, DecodeLengthMismatch)
{
    const std::vector<std::uint32_t> runs{1, 2};
    EXPECT_EQ(kind_of([&] { rle_decode(runs, 2, 2); }), ErrorKind::LengthMismatch);
    const std::vector<std::uint32_t> over{3, 3};
    EXPECT_EQ(kind_of([&] { rle_decode(over, 2, 2); }), ErrorKind::LengthMismatch);
}

TEST(Rle, RandomRoundTripMatchesOracle)
{
    std::mt19937_64 rng(4);
    for (int i = 0; i < 300; ++i) {
        const int w = 1 + static_cast<int>(rng() % 40), h = 1 + static_cast<int>(rng() % 40);
        Bitmask m(w, h);
        const double p = (rng() % 100) / 100.0;
        for (auto& b : m.bits)
            b = (rng() % 1000) < p * 1000 ? 1 : 0;
        const auto runs = rle_encode(m);
        EXPECT_EQ(runs, gazeseg::testing::oracle::runs(m.bits));
        EXPECT_EQ(rle_decode(runs, w, h), m);
        const auto ms = MaskSlice::from_bitmask(m, 7);
        EXPECT_TRUE(ms.consistent());
        EXPECT_EQ(ms.to_bitmask(), m);
    }
}

TEST(Pgm, PayloadAndRoundTrip)
{
    Bitmask m(2, 2);
    m.at(1, 0) = 1;
    m.at(0, 1) = 1;
    m.at(1, 1) = 1;
    const auto bytes = encode_pgm(m);
    const std::string header = "P5\n2 2\n255\n";
    ASSERT_EQ(bytes.size(), header.size() + 4);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + static_cast<long>(header.size())), header);
    EXPECT_EQ(std::vector<std::uint8_t>(bytes.end() - 4, bytes.end()), (std::vector<std::uint8_t>{0, 255, 255, 255}));
    EXPECT_EQ(decode_pgm(bytes), m);
    EXPECT_THROW(decode_pgm(std::vector<std::uint8_t>{'P', '2'}), Error);
}

TEST(Pgm, SaveWritesMeta)
{
    TempDir dir;
    Bitmask m(3, 1);
    m.at(2, 0) = 1;
    const auto path = dir / "sub" / "m.pgm";
    save_mask(m, {"abc", 2, 9, "all_points"}, path);
    EXPECT_EQ(load_mask(path), m);
    const auto meta = load_mask_meta(path.string() + ".meta");
    EXPECT_EQ(meta.image_id, "abc");
    EXPECT_EQ(meta.slice, 2);
    EXPECT_EQ(meta.revision, 9u);
    EXPECT_EQ(meta.mode, "all_points");
}
