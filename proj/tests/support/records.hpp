#pragma once

#include <string>

#include "attentrack/dataset.hpp"

namespace fixture {

// A valid record clicked at `clicked_epoch` (UTC+8), with derived fields filled in.
inline attentrack::EsmRecord record(const std::string& user, std::int64_t clicked_epoch, int attention,
                                    std::int64_t response_time_s = 30) {
    using namespace attentrack;
    EsmRecord r;
    r.user_id = user;
    r.round = 1;
    r.clicked_at = {clicked_epoch, 8 * 3600};
    r.received_at = {clicked_epoch - response_time_s, 8 * 3600};
    r.response_time_s = response_time_s;
    const auto tf = derive_time_fields(r.clicked_at);
    r.time_of_day = tf.time_of_day;
    r.day_of_week = tf.day_of_week;
    r.weekday = tf.weekday;
    r.activity = Activity::sitting;
    r.foreground_app = std::string(kHomeScreenApp);
    r.foreground_category = AppCategory::home_screen;
    r.notif_app = "com.example.chat";
    r.notif_category = AppCategory::communication;
    r.response_behavior = ResponseBehavior::click_to_view;
    r.attention = attention;
    return r;
}

inline attentrack::UserProfile profile(const std::string& user, attentrack::Occupation occ = attentrack::Occupation::studying,
                                       attentrack::Gender g = attentrack::Gender::female) {
    attentrack::UserProfile p;
    p.user_id = user;
    p.gender = g;
    p.age = 24;
    p.occupation = occ;
    p.education = "master";
    p.phone_brand = "acme";
    p.rounds = {1};
    return p;
}

// 2024-03-04 00:00:00 UTC+8 (a Monday).
inline constexpr std::int64_t kMondayMidnight = 1709481600;

}  // namespace fixture

#include <random>

namespace fixture {

// Users whose activity and response behavior depend on attention.
inline attentrack::Dataset toy_dataset(int n_users, int per_user, std::uint64_t seed) {
    using namespace attentrack;
    std::mt19937_64 rng(seed);
    Dataset d;
    for (int u = 0; u < n_users; ++u) {
        const std::string id = "user" + std::to_string(u);
        d.profiles.push_back(profile(id, u % 2 ? Occupation::working : Occupation::studying,
                                     u % 3 ? Gender::female : Gender::male));
        for (int i = 0; i < per_user; ++i) {
            const int a = 1 + static_cast<int>(rng() % 5);
            auto r = record(id, kMondayMidnight + i * 5400 + u, a, static_cast<std::int64_t>(rng() % 120));
            const bool follow = rng() % 4 != 0;
            r.activity = follow ? (a >= 3 ? Activity::sitting : Activity::walking) : static_cast<Activity>(rng() % 9);
            r.response_behavior = follow ? (a >= 3 ? ResponseBehavior::click_to_view : ResponseBehavior::ignore)
                                         : static_cast<ResponseBehavior>(rng() % 6);
            r.notif_category = static_cast<AppCategory>(rng() % kNotifCategoryCount);
            d.records.push_back(r);
        }
    }
    return d;
}

}  // namespace fixture
