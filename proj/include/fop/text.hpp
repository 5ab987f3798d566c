#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fop {

// Lowercases ASCII letters; other bytes pass through unchanged.
std::string lowercase(std::string_view text);

// Splits on whitespace and punctuation (both dropped), lowercasing as it
// goes. Tokens are maximal runs of ASCII alphanumerics.
std::vector<std::string> tokenize(std::string_view text);

// Space-joins tokens. tokenize(join_tokens(t)) == t for any tokenize output.
std::string join_tokens(const std::vector<std::string>& tokens);

// Fixed 100-word English stopword list used by control-word selection.
const std::vector<std::string>& stopword_list();
bool is_stopword(const std::string& token);

}  // namespace fop
