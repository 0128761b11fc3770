#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vizkb/chart.hpp"

namespace vizkb {

// Built-in hard constraints. A chart violating any of them is illegal.
//   H1  every used channel has exactly one scale (two scale types on one channel,
//       or none, is illegal)
//   H2  log scales need a positive number field (extent.min > 0, unbinned) or counts
//   H3  scale type must suit the data: ordinal/categorical need a discrete field
//       (string, boolean or binned number); linear needs number, datetime or
//       counts; the shape channel needs a discrete scale
//   H4  bin, mean and sum need a number field
//   H5  bar, area and line marks need at least one positional channel
//   H6  channels are unique within a layer
//   H7  the facet field is discrete (string, boolean or binned number)
enum class HardRule { H1, H2, H3, H4, H5, H6, H7 };

std::string_view to_string(HardRule r);

struct HardViolation {
    HardRule rule;
    std::string detail;
    bool operator==(const HardViolation&) const = default;
};

// Empty result means the chart is valid. Throws StructuralError when the chart
// cannot be interpreted (see check_structure).
std::vector<HardViolation> validate(const ChartSpec& spec);

inline bool is_valid(const ChartSpec& spec) { return validate(spec).empty(); }

}  // namespace vizkb
