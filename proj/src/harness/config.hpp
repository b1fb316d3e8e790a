#pragma once

#include "backbone/backbone.hpp"
#include "losses/losses.hpp"
#include "stdc/stdc.hpp"
#include "videodata/video.hpp"

#include "json.hpp"

#include <string>

namespace dvface {

struct StageSchedule {
    int iterations = 100;
    double lr = 8e-5;
    int batch = 2;
};

// Whole-run configuration. Serialized as JSON; hashing uses the sorted-key
// dump so field order in the file never changes the hash.
struct RunConfig {
    DatasetParams data;
    int test_clips = 4;

    StdcConfig stdc;
    RestorerConfig restorer;
    LossWeights weights;

    StageSchedule stage0{2000, 1e-3, 2};
    StageSchedule stage1{2000, 8e-5, 2};
    StageSchedule stage1p{1500, 8e-5, 2};
    StageSchedule stage2{600, 3e-5, 2};

    uint64_t seed = 1;
    std::string out_dir = "out";

    // Derives token-grid dims from the dataset shape and encoder strides and
    // checks that the prior grid equals the backbone grid.
    void derive();
    void validate() const;
    uint64_t hash() const;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;

    // Small defaults sized so the full schedule runs in minutes.
    static RunConfig desk_default();
};

}  // namespace dvface
