#pragma once

#include <map>
#include <string>
#include <vector>

#include "vizkb/chart.hpp"

namespace vizkb {

// Multiset of identifier-free design primitives, e.g. "color", "color.quantitative",
// "color.log", "mark.line", "facet.row". Value = multiplicity (> 0).
using TokenBag = std::map<std::string, int>;

// Tokens emitted:
//   mark.<type>                      per layer
//   <ch>, <ch>.<fieldtype>           per encoding (quantitative/nominal/temporal)
//   <ch>.<scale>                     per encoding, from the channel's scale
//   <ch>.<aggregate>                 when aggregated (count/mean/sum)
//   <ch>.bin, <ch>.bin.<n>           when binned
//   <ch>.stack.<mode>                when stacked
//   facet.<dir>, facet.<dir>.bin     when faceted
//   coordinates.<system>             once
TokenBag abstract_primitives(const ChartSpec& spec);

// Token group: the segment before the first '.', e.g. "color" for "color.log".
std::string token_group(const std::string& token);

bool contains(const TokenBag& haystack, const TokenBag& needle);
TokenBag bag_union(TokenBag a, const TokenBag& b);
// a - b, dropping non-positive multiplicities.
TokenBag bag_minus(TokenBag a, const TokenBag& b);
std::vector<std::string> flatten(const TokenBag& bag);

}  // namespace vizkb
