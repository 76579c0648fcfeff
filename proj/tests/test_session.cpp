#include "support.hpp"

#include "gazeseg/errors.hpp"
#include "gazeseg/session.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace gazeseg;
using namespace gazeseg::testing;

namespace {

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

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(SessionWriter, DenseSequenceNumbers)
{
    std::ostringstream out;
    SessionWriter w(out);
    EXPECT_EQ(w.record(10, event::SliceChanged{1}).seq, 0u);
    EXPECT_EQ(w.record(10, event::Cleared{}).seq, 1u);
    EXPECT_EQ(w.next_seq(), 2u);
    std::istringstream in(out.str());
    const auto events = parse_session(in);
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[1].seq, 1u);
    EXPECT_EQ(events[0].payload, EventPayload{event::SliceChanged{1}});
}

TEST(SessionWriter, TimestampRegressionThrows)
{
    std::ostringstream out;
    SessionWriter w(out);
    w.record(100, event::Cleared{});
    EXPECT_EQ(kind_of([&] { w.record(99, event::Cleared{}); }), ErrorKind::TimestampRegression);
    EXPECT_EQ(w.next_seq(), 1u);
}

TEST(SessionLog, LineLayout)
{
    const SessionEvent e{3, 42, event::SliceChanged{7}};
    EXPECT_EQ(serialize_event(e), R"({"seq":3,"t_us":42,"kind":"slice_changed","payload":{"z":7}})");
    EXPECT_EQ(parse_event(serialize_event(e)), e);
}

TEST(SessionLog, RandomEventsRoundTripByteExact)
{
    std::mt19937_64 rng(99);
    for (int i = 0; i < 2000; ++i) {
        const SessionEvent e{static_cast<std::uint64_t>(i), static_cast<std::int64_t>(rng() % 1'000'000'000),
                             random_payload(rng)};
        const auto line = serialize_event(e);
        const auto back = parse_event(line);
        ASSERT_EQ(back, e) << line;
        ASSERT_EQ(serialize_event(back), line);
    }
}

TEST(SessionLog, TenThousandEventLog)
{
    std::mt19937_64 rng(1);
    std::ostringstream out;
    SessionWriter w(out);
    std::vector<SessionEvent> written;
    std::int64_t t = 0;
    for (int i = 0; i < 10'000; ++i) {
        t += static_cast<std::int64_t>(rng() % 3);
        written.push_back(w.record(t, random_payload(rng)));
    }
    std::istringstream in(out.str());
    const auto back = parse_session(in);
    EXPECT_EQ(back, written);
    std::ostringstream again;
    for (const auto& e : back)
        again << serialize_event(e) << '\n';
    EXPECT_EQ(again.str(), out.str());
}

TEST(SessionLog, CorruptionIsDetected)
{
    std::ostringstream out;
    SessionWriter w(out);
    for (int i = 0; i < 5; ++i)
        w.record(i, event::SliceChanged{i});
    const auto text = out.str();

    auto read = [](const std::string& s) {
        std::istringstream in(s);
        return parse_session(in);
    };
    EXPECT_EQ(read(text).size(), 5u);
    EXPECT_EQ(kind_of([&] { read(text.substr(0, text.size() - 7)); }), ErrorKind::CorruptLog);
    EXPECT_EQ(kind_of([&] { read(text.substr(0, text.size() - 1)); }), ErrorKind::CorruptLog);
    std::string gap = text;
    gap.replace(gap.find("\"seq\":2"), 7, "\"seq\":9");
    EXPECT_EQ(kind_of([&] { read(gap); }), ErrorKind::CorruptLog);
    EXPECT_EQ(kind_of([&] { read(text + "{\"seq\":5,\"t_us\":0,\"kind\":\"cleared\",\"payload\":{}}\n"); }),
              ErrorKind::CorruptLog);
    EXPECT_EQ(kind_of([&] { read(text + "{\"seq\":5,\"t_us\":9,\"kind\":\"bogus\",\"payload\":{}}\n"); }),
              ErrorKind::CorruptLog);
    EXPECT_EQ(kind_of([&] { parse_event(R"({"seq":0,"t_us":0,"kind":"slice_changed","payload":{}})"); }),
              ErrorKind::CorruptLog);
}

TEST(SessionWriter, ReopenTruncatesPartialLineAndContinues)
{
    TempDir dir;
    const auto path = dir / "s.gss";
    {
        auto w = SessionWriter::open(path);
        w->record(5, event::Cleared{});
        w->record(6, event::SliceChanged{2});
    }
    {
        std::ofstream crash(path, std::ios::app | std::ios::binary);
        crash << R"({"seq":2,"t_us":7,"ki)";
    }
    EXPECT_THROW(read_session(path), Error);
    {
        auto w = SessionWriter::open(path);
        EXPECT_EQ(w->next_seq(), 2u);
        EXPECT_EQ(kind_of([&] { w->record(4, event::Cleared{}); }), ErrorKind::TimestampRegression);
        w->record(8, event::Cleared{});
    }
    const auto events = read_session(path);
    ASSERT_EQ(events.size(), 3u);
    EXPECT_EQ(events[2].seq, 2u);
    EXPECT_EQ(events[2].t_us, 8);
}

class ExportTest : public ::testing::Test {
protected:
    void write_session(bool with_saves)
    {
        vol_path_ = dir_ / "v.gsv";
        const ImageVolume vol(4, 3, 2, Spacing{}, std::vector<std::int16_t>(24, 1));
        write_volume(vol_path_, vol);
        image_id_ = vol.image_id();

        auto w = SessionWriter::open(dir_ / "s.gss");
        w->record(0, event::SessionStarted{});
        w->record(0, event::ImageLoaded{vol_path_.string(), image_id_, 4, 3, 2, Viewport::native(4, 3)});
        w->record(1, event::Gaze{GazeSample{1, {1, 1}, true}});
        w->record(2, event::Gaze{GazeSample{2, {1.5, 1}, false}});
        PromptSet p{image_id_, 0, PromptMode::AllPoints, {{1, 1, PointLabel::Foreground, 1}}, 3};
        w->record(3, event::PromptIssued{1, p});
        w->record(4, event::MaskProduced{1, 1, {5, 7}});
        if (with_saves)
            w->record(5, event::MaskSaved{"a.pgm"});
        w->record(6, event::SliceChanged{1});
        w->record(7, event::Gaze{GazeSample{7, {2, 2}, true}});
        w->record(8, event::MaskProduced{2, 2, {0, 12}});
        if (with_saves)
            w->record(9, event::MaskSaved{"b.pgm"});
    }

    TempDir dir_;
    std::filesystem::path vol_path_;
    std::string image_id_;
};

TEST_F(ExportTest, TwoSavesTwoTriples)
{
    write_session(true);
    const auto m = export_dataset(dir_ / "s.gss", dir_ / "out");
    ASSERT_EQ(m.entries.size(), 2u);
    EXPECT_EQ(m.entries[0].slice, 0);
    EXPECT_EQ(m.entries[1].slice, 1);
    EXPECT_EQ(m.entries[0].image_id, image_id_);

    const auto out = dir_ / "out";
    std::ifstream g0(out / m.entries[0].gaze_path);
    EXPECT_EQ(read_gaze_log(g0).size(), 2u);
    std::ifstream g1(out / m.entries[1].gaze_path);
    EXPECT_EQ(read_gaze_log(g1).size(), 3u);
    EXPECT_EQ(load_mask(out / m.entries[0].mask_path), rle_decode(std::vector<std::uint32_t>{5, 7}, 4, 3));
    EXPECT_EQ(load_mask(out / m.entries[1].mask_path).count(), 12u);
    EXPECT_EQ(load_mask_meta((out / m.entries[0].mask_path).string() + ".meta").revision, 3u);

    const auto manifest = slurp(m.manifest_path);
    EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 2);
    EXPECT_NE(manifest.find("volume=" + vol_path_.string() + " gaze=triple_0_gaze.log mask=triple_0_mask.pgm slice=0"),
              std::string::npos);
}

TEST_F(ExportTest, NoSavesEmptyManifest)
{
    write_session(false);
    const auto m = export_dataset(dir_ / "s.gss", dir_ / "out");
    EXPECT_TRUE(m.entries.empty());
    EXPECT_TRUE(std::filesystem::exists(m.manifest_path));
    EXPECT_EQ(slurp(m.manifest_path), "");
}
