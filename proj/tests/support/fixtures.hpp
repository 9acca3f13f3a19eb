#pragma once

#include <string>
#include <vector>

#include "firescope/domain.hpp"
#include "firescope/manifest.hpp"
#include "firescope/mock_provider.hpp"

#include "support/temp_dir.hpp"

namespace fstest {

/// Reads a golden file; tolerates one trailing newline added by editors.
inline std::string read_golden(const std::string& name) {
    std::string text = read_file(std::string(FIRESCOPE_GOLDEN_DIR) + "/" + name);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

/// Writes a household's images into dir, embedding the given damage markers
/// per view, and returns the record. markers_per_view[i] lists the indicator
/// questions whose markers image i carries (index 0 = front view).
inline firescope::HouseholdRecord marked_household(
    const TempDir& dir, const std::string& id,
    firescope::RawDamageCategory ground_truth,
    const std::vector<std::vector<std::string>>& markers_per_view,
    const std::string& event = "eaton") {
    firescope::HouseholdRecord r;
    r.id = id;
    r.event = firescope::Event::parse(event);
    r.ground_truth = ground_truth;
    for (std::size_t i = 0; i < markers_per_view.size(); ++i) {
        const auto bytes = firescope::synthetic_image_bytes(markers_per_view[i], id + "#" +
                                                                std::to_string(i));
        const auto path =
            dir.write_bytes("img/" + id + "_" + std::to_string(i) + ".png", bytes);
        r.images.push_back(
            {path, i == 0 ? firescope::ImageView::Front : firescope::ImageView::Other});
    }
    return r;
}

}  // namespace fstest
