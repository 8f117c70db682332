#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace attentrack {

enum class TimeOfDay : std::uint8_t { morning, afternoon, evening, night };

enum class Activity : std::uint8_t {
    sitting,
    lying,
    standing_still,
    walking,
    taking_elevator,
    cycling_driving,
    taking_transportation,
    up_down_stairs,
    running,
};

// 22 app categories; home_screen is only legal for the foreground app.
enum class AppCategory : std::uint8_t {
    communication,
    social,
    entertainment,
    utilities,
    shopping,
    lifestyle,
    music,
    education,
    productivity,
    photo_video,
    system,
    health_fitness,
    finance,
    news,
    navigation,
    travel,
    games,
    books,
    food_drink,
    business,
    weather,
    sports,
    home_screen,
};
inline constexpr int kNotifCategoryCount = 22;
inline constexpr int kForegroundCategoryCount = 23;

enum class ResponseBehavior : std::uint8_t {
    click_to_view,
    swipe_clear,
    swipe_cancel_popup,
    ignore,
    didnt_notice,
    adjust_settings,
};

enum class CoarseBehavior : std::uint8_t {
    click_to_view,
    swipe_clear,
    swipe_cancel_popup,
    no_response,
    adjust_settings,
};

enum class Gender : std::uint8_t { male, female };
enum class Occupation : std::uint8_t { studying, working };

template <typename E>
struct EnumTokens;

template <>
struct EnumTokens<TimeOfDay> {
    static constexpr std::array<std::string_view, 4> names{"morning", "afternoon", "evening", "night"};
};
template <>
struct EnumTokens<Activity> {
    static constexpr std::array<std::string_view, 9> names{
        "sitting",         "lying",          "standing_still",
        "walking",         "taking_elevator", "cycling_driving",
        "taking_transportation", "up_down_stairs", "running"};
};
template <>
struct EnumTokens<AppCategory> {
    static constexpr std::array<std::string_view, 23> names{
        "communication", "social",     "entertainment", "utilities", "shopping",
        "lifestyle",     "music",      "education",     "productivity", "photo_video",
        "system",        "health_fitness", "finance",   "news",      "navigation",
        "travel",        "games",      "books",         "food_drink", "business",
        "weather",       "sports",     "home_screen"};
};
template <>
struct EnumTokens<ResponseBehavior> {
    static constexpr std::array<std::string_view, 6> names{
        "click_to_view", "swipe_clear", "swipe_cancel_popup",
        "ignore",        "didnt_notice", "adjust_settings"};
};
template <>
struct EnumTokens<CoarseBehavior> {
    static constexpr std::array<std::string_view, 5> names{
        "click_to_view", "swipe_clear", "swipe_cancel_popup", "no_response", "adjust_settings"};
};
template <>
struct EnumTokens<Gender> {
    static constexpr std::array<std::string_view, 2> names{"male", "female"};
};
template <>
struct EnumTokens<Occupation> {
    static constexpr std::array<std::string_view, 2> names{"studying", "working"};
};

template <typename E>
constexpr std::size_t enum_size() {
    return EnumTokens<E>::names.size();
}

template <typename E>
constexpr std::string_view to_token(E e) {
    return EnumTokens<E>::names[static_cast<std::size_t>(e)];
}

template <typename E>
constexpr std::optional<E> from_token(std::string_view s) {
    const auto& names = EnumTokens<E>::names;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    return std::nullopt;
}

// "a, b, c" for error messages.
template <typename E>
std::string allowed_tokens() {
    std::string out;
    for (auto name : EnumTokens<E>::names) {
        if (!out.empty()) out += ", ";
        out += name;
    }
    return out;
}

}  // namespace attentrack
