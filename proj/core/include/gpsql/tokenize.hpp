#pragma once

#include <string>
#include <vector>

namespace gpsql {

/// Lowercases and splits on whitespace and punctuation; punctuation survives
/// as its own token. Decimal numbers ("1.5") stay in one piece.
std::vector<std::string> tokenize(const std::string& text);

/// Name tokenization for schema identifiers: underscores act as spaces.
std::vector<std::string> tokenize_name(const std::string& name);

/// Cell-value normalization used before matching: trim, lowercase, collapse
/// internal whitespace, canonical decimal form for numerics.
std::string normalize_cell(const std::string& raw);

bool is_numeric_token(const std::string& tok);

std::string join_tokens(const std::vector<std::string>& toks);

}  // namespace gpsql
