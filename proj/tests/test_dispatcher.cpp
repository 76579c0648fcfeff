#include "support.hpp"

#include "gazeseg/dispatcher.hpp"

#include <gtest/gtest.h>

#include <mutex>

using namespace gazeseg;
using namespace gazeseg::testing;

namespace {

struct Collected {
    std::mutex m;
    std::vector<std::uint64_t> results;
    std::vector<DispatchFailure> failures;

    Dispatcher::Sink sink()
    {
        return [this](DispatchOutcome o) {
            std::lock_guard lock(m);
            if (auto* r = std::get_if<SegmentResult>(&o))
                results.push_back(r->request_id);
            else
                failures.push_back(std::get<DispatchFailure>(o));
        };
    }
    std::vector<std::uint64_t> ids()
    {
        std::lock_guard lock(m);
        return results;
    }
};

std::shared_ptr<ImageVolume> small_volume()
{
    return std::make_shared<ImageVolume>(8, 8, 2, Spacing{}, std::vector<std::int16_t>(128, 3));
}

SegmentRequest req(std::uint64_t id, const ImageVolume& vol, int slice = 0)
{
    SegmentRequest r;
    r.request_id = id;
    r.image_id = vol.image_id();
    r.slice_index = slice;
    r.prompt.image_id = vol.image_id();
    r.prompt.slice_index = slice;
    r.prompt.points = {{static_cast<int>(id % 8), 1, PointLabel::Foreground, 0}};
    return r;
}

} // namespace

TEST(SynchronousDispatcher, RunsEveryRequestInline)
{
    auto vol = small_volume();
    Collected c;
    SynchronousDispatcher d(std::make_shared<ReferenceBackend>(), c.sink());
    d.prepare(vol, 0);
    for (std::uint64_t id = 1; id <= 4; ++id)
        d.submit(req(id, *vol));
    EXPECT_EQ(c.ids(), (std::vector<std::uint64_t>{1, 2, 3, 4}));
    EXPECT_EQ(d.backend_calls(), 4u);
    EXPECT_EQ(d.poll()->request_id, 4u);
}

TEST(SynchronousDispatcher, OlderResultAfterNewerIsDiscarded)
{
    auto vol = small_volume();
    Collected c;
    SynchronousDispatcher d(std::make_shared<ReferenceBackend>(), c.sink());
    d.prepare(vol, 0);
    d.submit(req(5, *vol));
    d.submit(req(3, *vol));
    EXPECT_EQ(c.ids(), (std::vector<std::uint64_t>{5}));
    EXPECT_EQ(d.poll()->request_id, 5u);
}

TEST(SynchronousDispatcher, FailuresAreReported)
{
    auto vol = small_volume();
    Collected c;
    SynchronousDispatcher d(std::make_shared<ReferenceBackend>(), c.sink());
    d.submit(req(1, *vol));  // not prepared
    d.prepare(vol, 9);       // out of range
    ASSERT_EQ(c.failures.size(), 2u);
    EXPECT_EQ(c.failures[0].request_id, 1u);
    EXPECT_EQ(c.failures[0].kind, ErrorKind::NotPrepared);
    EXPECT_EQ(c.failures[1].request_id, 0u);
    EXPECT_EQ(c.failures[1].kind, ErrorKind::SliceOutOfRange);
    EXPECT_FALSE(d.poll());
}

TEST(LatestWinsDispatcher, BurstDeliversOnlyNewest)
{
    auto vol = small_volume();
    auto backend = std::make_shared<GatedBackend>();
    Collected c;
    LatestWinsDispatcher d(backend, c.sink());
    d.prepare(vol, 0);
    d.submit(req(1, *vol));
    ASSERT_TRUE(backend->wait_started(1));
    for (std::uint64_t id = 2; id <= 5; ++id)
        d.submit(req(id, *vol));
    backend->open();
    d.wait_idle();
    EXPECT_EQ(backend->seen(), (std::vector<std::uint64_t>{1, 5}));
    EXPECT_EQ(c.ids(), (std::vector<std::uint64_t>{5}));
    EXPECT_EQ(d.poll()->request_id, 5u);
    EXPECT_EQ(d.backend_calls(), 2u);
}

TEST(LatestWinsDispatcher, IdleRequestRunsImmediately)
{
    auto vol = small_volume();
    auto backend = std::make_shared<GatedBackend>();
    backend->open();
    Collected c;
    LatestWinsDispatcher d(backend, c.sink());
    d.prepare(vol, 0);
    for (std::uint64_t id = 1; id <= 3; ++id) {
        d.submit(req(id, *vol));
        d.wait_idle();
    }
    EXPECT_EQ(c.ids(), (std::vector<std::uint64_t>{1, 2, 3}));
}

TEST(LatestWinsDispatcher, PrepareSupersedesPendingRequest)
{
    auto vol = small_volume();
    auto backend = std::make_shared<GatedBackend>();
    Collected c;
    LatestWinsDispatcher d(backend, c.sink());
    d.prepare(vol, 0);
    d.submit(req(1, *vol));
    ASSERT_TRUE(backend->wait_started(1));
    d.submit(req(2, *vol));
    d.prepare(vol, 1);
    backend->open();
    d.wait_idle();
    EXPECT_EQ(backend->seen(), (std::vector<std::uint64_t>{1}));
    EXPECT_TRUE(c.ids().empty());
    EXPECT_EQ(backend->prepares(), 2);
    d.submit(req(3, *vol, 1));
    d.wait_idle();
    EXPECT_EQ(c.ids(), (std::vector<std::uint64_t>{3}));
}

TEST(LatestWinsDispatcher, DestructionWithWorkPendingDoesNotHang)
{
    auto vol = small_volume();
    auto backend = std::make_shared<GatedBackend>();
    {
        LatestWinsDispatcher d(backend, nullptr);
        d.prepare(vol, 0);
        d.submit(req(1, *vol));
        ASSERT_TRUE(backend->wait_started(1));
        d.submit(req(2, *vol));
        backend->open();
    }
    EXPECT_LE(backend->seen().size(), 2u);
}
