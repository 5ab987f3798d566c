#pragma once

#include <string>
#include <string_view>

namespace fop {

// Porter stem of a lowercased word. Words shorter than three characters
// and tokens containing non-letters are returned unchanged (lowercased).
std::string porter_stem(std::string_view word);

}  // namespace fop
