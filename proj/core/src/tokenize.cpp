#include "gpsql/tokenize.hpp"

#include <cctype>

namespace gpsql {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// "1.5" and "-3" count; a lone "." or "-" does not.
bool numeric_text(const std::string& s) {
    size_t i = 0;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
    size_t digits = 0, dots = 0;
    for (; i < s.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++digits;
        } else if (s[i] == '.') {
            ++dots;
        } else {
            return false;
        }
    }
    return digits > 0 && dots <= 1;
}

}  // namespace

bool is_numeric_token(const std::string& tok) { return numeric_text(tok); }

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    const size_t n = text.size();
    size_t i = 0;
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (std::isdigit(c)) {
            // digits plus at most one interior dot form a single token
            size_t j = i;
            bool dot = false;
            while (j < n) {
                unsigned char d = static_cast<unsigned char>(text[j]);
                if (std::isdigit(d)) {
                    ++j;
                } else if (d == '.' && !dot && j + 1 < n &&
                           std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
                    dot = true;
                    ++j;
                } else {
                    break;
                }
            }
            out.emplace_back(text.substr(i, j - i));
            i = j;
            continue;
        }
        if (is_word_char(text[i])) {
            size_t j = i;
            std::string tok;
            while (j < n && is_word_char(text[j])) {
                tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[j]))));
                ++j;
            }
            out.push_back(std::move(tok));
            i = j;
            continue;
        }
        out.emplace_back(1, text[i]);
        ++i;
    }
    return out;
}

std::vector<std::string> tokenize_name(const std::string& name) {
    std::string spaced = name;
    for (char& c : spaced)
        if (c == '_') c = ' ';
    return tokenize(spaced);
}

std::string normalize_cell(const std::string& raw) {
    // trim + collapse whitespace + lowercase
    std::string s;
    bool in_space = true;
    for (char ch : raw) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!in_space) s.push_back(' ');
            in_space = true;
        } else {
            s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            in_space = false;
        }
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();

    if (!numeric_text(s)) return s;

    // canonical decimal: no leading zeros, no trailing fraction zeros, no bare dot
    std::string sign;
    std::string body = s;
    if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
        if (body[0] == '-') sign = "-";
        body.erase(0, 1);
    }
    std::string ipart = body, fpart;
    if (auto dot = body.find('.'); dot != std::string::npos) {
        ipart = body.substr(0, dot);
        fpart = body.substr(dot + 1);
    }
    size_t nz = 0;
    while (nz + 1 < ipart.size() && ipart[nz] == '0') ++nz;
    ipart.erase(0, nz);
    if (ipart.empty()) ipart = "0";
    while (!fpart.empty() && fpart.back() == '0') fpart.pop_back();
    std::string out = sign + ipart;
    if (!fpart.empty()) out += "." + fpart;
    if (out == "-0") out = "0";
    return out;
}

std::string join_tokens(const std::vector<std::string>& toks) {
    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out += ' ';
        out += toks[i];
    }
    return out;
}

}  // namespace gpsql
