#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace gpsql {

/// Token vocabulary with reserved entries: 0 = <unk>, 1 = <s>, 2 = </s>.
/// Remaining tokens are sorted lexicographically so builds are deterministic.
class Vocab {
  public:
    static constexpr int kUnk = 0;
    static constexpr int kBosId = 1;
    static constexpr int kEosId = 2;

    Vocab();

    /// Builds from any collection of token lists (questions, names, values).
    static Vocab build(const std::vector<std::vector<std::string>>& token_lists);

    static Vocab load(const std::string& path);
    void save(const std::string& path) const;

    int size() const { return static_cast<int>(tokens_.size()); }
    /// OOV maps to kUnk.
    int id(const std::string& token) const;
    const std::string& token(int id) const { return tokens_.at(id); }

    bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;

    void add(const std::string& token);
};

}  // namespace gpsql
