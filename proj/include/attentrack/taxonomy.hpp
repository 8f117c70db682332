#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace attentrack {

// Three-level motivation hierarchy: category -> factor -> code.
// Indices into categories()/factors()/codes() are stable for a given taxonomy.
class CodeTaxonomy {
public:
    struct Node {
        std::string id;
        std::string label;
        std::size_t parent = 0;  // index into the level above; unused for categories
    };

    CodeTaxonomy() = default;

    // Shipped default: 4 categories, 16 factors, 46 codes.
    static const CodeTaxonomy& default_taxonomy();

    // JSON tree: {"categories":[{"id","label","factors":[{"id","label","codes":[{"id","label"}]}]}]}
    static CodeTaxonomy from_json(const nlohmann::json& tree);
    static CodeTaxonomy load(const std::string& path);
    nlohmann::json to_json() const;

    const std::vector<Node>& categories() const noexcept { return categories_; }
    const std::vector<Node>& factors() const noexcept { return factors_; }
    const std::vector<Node>& codes() const noexcept { return codes_; }

    std::optional<std::size_t> code_index(std::string_view id) const;
    std::optional<std::size_t> factor_index(std::string_view id) const;
    std::size_t factor_of_code(std::size_t code) const { return codes_[code].parent; }
    std::size_t category_of_factor(std::size_t factor) const { return factors_[factor].parent; }

    bool operator==(const CodeTaxonomy& other) const;

private:
    void add_category(std::string id, std::string label);
    void add_factor(std::string id, std::string label);
    void add_code(std::string id, std::string label);

    std::vector<Node> categories_;
    std::vector<Node> factors_;
    std::vector<Node> codes_;
    std::unordered_map<std::string, std::size_t> code_lookup_;
    std::unordered_map<std::string, std::size_t> factor_lookup_;
};

}  // namespace attentrack
