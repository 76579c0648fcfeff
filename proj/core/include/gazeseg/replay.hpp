#pragma once

#include "gazeseg/backend.hpp"
#include "gazeseg/image_volume.hpp"
#include "gazeseg/session.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gazeseg {

struct ReplayReport {
    /// Last mask per (image_id, slice).
    std::map<std::pair<std::string, int>, MaskSlice> final_masks;
    /// Files written for each recorded MaskSaved, in order.
    std::vector<std::filesystem::path> saved_masks;
    /// Final-state masks written as `final_<id12>_z<z>.pgm`.
    std::vector<std::filesystem::path> final_mask_files;
    std::uint64_t gaze_events = 0;
    std::uint64_t prompts_issued = 0;
    /// Recorded MaskProduced events whose request_id was also produced on
    /// replay but with different runs (nonzero means the live run diverged).
    std::uint64_t mask_mismatches = 0;
};

/// Re-runs a recorded session through the same engine pipeline with
/// synchronous dispatch, so every prompt revision is segmented. Saved masks
/// are written to `out_dir` under their recorded file names.
/// Errors: CorruptLog, BackendUnavailable.
ReplayReport replay(const std::filesystem::path& session_path, std::shared_ptr<SegmentationBackend> backend,
                    const std::filesystem::path& out_dir);

} // namespace gazeseg
