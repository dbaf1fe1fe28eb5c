#include "gpsql/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "gpsql/errors.hpp"
#include "gpsql/link.hpp"

namespace gpsql {

Vocab::Vocab() {
    add("<unk>");
    add(kBos);
    add(kEos);
}

void Vocab::add(const std::string& token) {
    if (index_.count(token)) return;
    index_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& token_lists) {
    std::set<std::string> uniq;
    for (const auto& list : token_lists)
        for (const auto& tok : list) uniq.insert(tok);
    uniq.erase("<unk>");
    uniq.erase(kBos);
    uniq.erase(kEos);
    Vocab v;
    for (const auto& tok : uniq) v.add(tok);
    return v;
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    Vocab v;
    v.tokens_.clear();
    v.index_.clear();
    std::string line;
    while (std::getline(in, line)) v.add(line);
    if (v.size() < 3 || v.tokens_[0] != "<unk>" || v.tokens_[1] != kBos || v.tokens_[2] != kEos)
        throw MalformedInput(path, "vocabulary must start with <unk>, <s>, </s>");
    return v;
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FileNotFound(path);
    for (const auto& tok : tokens_) out << tok << '\n';
}

int Vocab::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

}  // namespace gpsql
