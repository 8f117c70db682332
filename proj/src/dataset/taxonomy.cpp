#include "attentrack/taxonomy.hpp"

#include <fstream>
#include <unordered_set>

#include "attentrack/error.hpp"

namespace attentrack {
namespace {

struct FactorSpec {
    const char* id;
    const char* label;
    std::vector<std::pair<const char*, const char*>> codes;
};

struct CategorySpec {
    const char* id;
    const char* label;
    std::vector<FactorSpec> factors;
};

std::vector<CategorySpec> default_spec() {
    return {
        {"notification_content",
         "Notification content",
         {
             {"not_important",
              "Not important/not interested",
              {{"not_important.direct_expression", "Direct expression"},
               {"not_important.irrelevant_to_me", "Irrelevant to me"},
               {"not_important.ads_marketing", "Ads/marketing"}}},
             {"important",
              "Important/interested",
              {{"important.direct_expression", "Direct expression"},
               {"important.needs_reply", "Needs reply"},
               {"important.people_mentioned", "People mentioned"},
               {"important.relevant_to_me", "Relevant to me"}}},
             {"requires_action",
              "Requires action",
              {{"requires_action.answer_call", "Answer a call"},
               {"requires_action.dismiss_alarm", "Dismiss alarm"},
               {"requires_action.check_verification_code", "Check verification code"}}},
             {"check_elsewhere", "Check elsewhere/known content", {}},
         }},
        {"behavioral_patterns",
         "Behavioral patterns",
         {
             {"entertainment",
              "Entertainment",
              {{"entertainment.watching_media", "Watching media"},
               {"entertainment.leisure_phone_use", "Leisure phone use"},
               {"entertainment.browsing_apps", "Browsing apps"},
               {"entertainment.playing_games", "Playing games"}}},
             {"daily_life",
              "Daily life",
              {{"daily_life.eating", "Eating"},
               {"daily_life.driving_cycling", "Driving/cycling"},
               {"daily_life.on_the_way", "On the way to somewhere"},
               {"daily_life.walking", "Walking"},
               {"daily_life.washing_up", "Washing up"},
               {"daily_life.viewing_something", "Viewing something"},
               {"daily_life.shopping", "Shopping"},
               {"daily_life.exercising", "Exercising"},
               {"daily_life.waiting", "Waiting"}}},
             {"cognitive_engagement",
              "Cognitive engagement",
              {{"cognitive_engagement.working", "Working"},
               {"cognitive_engagement.reading", "Reading"},
               {"cognitive_engagement.doing_experiment", "Doing experiment"},
               {"cognitive_engagement.in_a_meeting", "In a meeting"},
               {"cognitive_engagement.in_class", "In class"},
               {"cognitive_engagement.coding", "Coding"},
               {"cognitive_engagement.studying", "Studying"},
               {"cognitive_engagement.reviewing", "Reviewing"},
               {"cognitive_engagement.writing", "Writing"}}},
             {"task_switching",
              "Task-switching state",
              {{"task_switching.just_done", "Just done something"},
               {"task_switching.about_to_do", "Just about to do something"}}},
             {"socializing",
              "Socializing",
              {{"socializing.on_a_call", "On a call"},
               {"socializing.replying_to_messages", "Replying to messages"},
               {"socializing.chatting", "Chatting"}}},
             {"sleep_rest",
              "Sleep or rest",
              {{"sleep_rest.sleeping", "Sleeping"}, {"sleep_rest.resting", "Resting"}}},
         }},
        {"individual_state",
         "Individual state",
         {
             {"level_of_busyness",
              "Level of busyness",
              {{"level_of_busyness.busy", "Busy"}, {"level_of_busyness.free", "Free"}}},
             {"mental_emotional",
              "Mental/emotional",
              {{"mental_emotional.mental_state", "Mental state"},
               {"mental_emotional.emotional_state", "Emotional state"}}},
         }},
        {"personal_others",
         "Personal-others",
         {
             {"personal_negligence", "Personal negligence", {}},
             {"personal_habits", "Personal habits", {}},
             {"personal_feelings", "Personal feelings", {}},
             {"personal_others",
              "Personal-others",
              {{"personal_others.right_timing", "Right timing"},
               {"personal_others.poor_timing", "Poor timing"},
               {"personal_others.notification_overload", "Notification overload"}}},
         }},
    };
}

CodeTaxonomy build_default() {
    nlohmann::json tree;
    tree["categories"] = nlohmann::json::array();
    for (const auto& cat : default_spec()) {
        nlohmann::json c{{"id", cat.id}, {"label", cat.label}, {"factors", nlohmann::json::array()}};
        for (const auto& f : cat.factors) {
            nlohmann::json fj{{"id", f.id}, {"label", f.label}, {"codes", nlohmann::json::array()}};
            for (const auto& [id, label] : f.codes) fj["codes"].push_back({{"id", id}, {"label", label}});
            c["factors"].push_back(std::move(fj));
        }
        tree["categories"].push_back(std::move(c));
    }
    return CodeTaxonomy::from_json(tree);
}

std::string required_string(const nlohmann::json& node, const char* key, const char* where) {
    if (!node.is_object() || !node.contains(key) || !node[key].is_string())
        throw SchemaError(0, key, std::string("taxonomy ") + where + " node needs a string '" + key + "'");
    return node[key].get<std::string>();
}

const nlohmann::json& required_array(const nlohmann::json& node, const char* key, const char* where) {
    static const nlohmann::json empty = nlohmann::json::array();
    if (!node.contains(key)) return empty;
    if (!node[key].is_array())
        throw SchemaError(0, key, std::string("taxonomy ") + where + " '" + key + "' must be an array");
    return node[key];
}

}  // namespace

const CodeTaxonomy& CodeTaxonomy::default_taxonomy() {
    static const CodeTaxonomy taxonomy = build_default();
    return taxonomy;
}

void CodeTaxonomy::add_category(std::string id, std::string label) {
    categories_.push_back({std::move(id), std::move(label), 0});
}

void CodeTaxonomy::add_factor(std::string id, std::string label) {
    if (factor_lookup_.contains(id)) throw SchemaError(0, "factors", "duplicate factor id '" + id + "'");
    factor_lookup_.emplace(id, factors_.size());
    factors_.push_back({std::move(id), std::move(label), categories_.size() - 1});
}

void CodeTaxonomy::add_code(std::string id, std::string label) {
    if (code_lookup_.contains(id)) throw SchemaError(0, "codes", "duplicate code id '" + id + "'");
    code_lookup_.emplace(id, codes_.size());
    codes_.push_back({std::move(id), std::move(label), factors_.size() - 1});
}

CodeTaxonomy CodeTaxonomy::from_json(const nlohmann::json& tree) {
    CodeTaxonomy t;
    std::unordered_set<std::string> category_ids;
    for (const auto& c : required_array(tree, "categories", "root")) {
        auto cid = required_string(c, "id", "category");
        if (!category_ids.insert(cid).second)
            throw SchemaError(0, "categories", "duplicate category id '" + cid + "'");
        t.add_category(cid, required_string(c, "label", "category"));
        for (const auto& f : required_array(c, "factors", "category")) {
            t.add_factor(required_string(f, "id", "factor"), required_string(f, "label", "factor"));
            for (const auto& code : required_array(f, "codes", "factor"))
                t.add_code(required_string(code, "id", "code"), required_string(code, "label", "code"));
        }
    }
    if (t.categories_.empty()) throw SchemaError(0, "categories", "taxonomy has no categories");
    return t;
}

CodeTaxonomy CodeTaxonomy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open taxonomy file '" + path + "'");
    nlohmann::json tree;
    try {
        in >> tree;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(0, "", "taxonomy file '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(tree);
}

nlohmann::json CodeTaxonomy::to_json() const {
    nlohmann::json tree;
    tree["categories"] = nlohmann::json::array();
    for (std::size_t ci = 0; ci < categories_.size(); ++ci) {
        nlohmann::json c{{"id", categories_[ci].id}, {"label", categories_[ci].label}, {"factors", nlohmann::json::array()}};
        for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
            if (factors_[fi].parent != ci) continue;
            nlohmann::json f{{"id", factors_[fi].id}, {"label", factors_[fi].label}, {"codes", nlohmann::json::array()}};
            for (const auto& code : codes_)
                if (code.parent == fi) f["codes"].push_back({{"id", code.id}, {"label", code.label}});
            c["factors"].push_back(std::move(f));
        }
        tree["categories"].push_back(std::move(c));
    }
    return tree;
}

std::optional<std::size_t> CodeTaxonomy::code_index(std::string_view id) const {
    auto it = code_lookup_.find(std::string(id));
    if (it == code_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> CodeTaxonomy::factor_index(std::string_view id) const {
    auto it = factor_lookup_.find(std::string(id));
    if (it == factor_lookup_.end()) return std::nullopt;
    return it->second;
}

bool CodeTaxonomy::operator==(const CodeTaxonomy& other) const {
    auto same = [](const std::vector<Node>& a, const std::vector<Node>& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].id != b[i].id || a[i].label != b[i].label || a[i].parent != b[i].parent) return false;
        return true;
    };
    return same(categories_, other.categories_) && same(factors_, other.factors_) && same(codes_, other.codes_);
}

}  // namespace attentrack
