#include "attentrack/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "attentrack/error.hpp"
#include "csv.hpp"

namespace attentrack {
namespace {

using detail::CsvReader;

constexpr std::size_t kRecordColumns = 22;
constexpr std::size_t kProfileColumns = 7;

enum Col : std::size_t {
    c_user_id,
    c_round,
    c_received_at,
    c_clicked_at,
    c_weekday,
    c_day_of_week,
    c_time_of_day,
    c_activity,
    c_accel_x,
    c_accel_y,
    c_accel_z,
    c_gyro_x,
    c_gyro_y,
    c_gyro_z,
    c_foreground_app,
    c_foreground_category,
    c_notif_app,
    c_notif_category,
    c_response_behavior,
    c_attention,
    c_codes,
    c_motivation_text,
};

const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> cols = detail::split(kRecordCsvHeader, ',');
    return cols;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::optional<double> parse_double(std::string_view s) {
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <typename E>
E parse_enum(std::string_view token, std::size_t line, const std::string& field) {
    if (auto e = from_token<E>(token)) return *e;
    throw SchemaError(line, field, "unknown token '" + std::string(token) + "'; allowed: " + allowed_tokens<E>());
}

std::optional<Vec3> parse_vec(const std::vector<std::string>& f, std::size_t first, std::size_t line) {
    const auto& cols = record_columns();
    const bool all_empty = f[first].empty() && f[first + 1].empty() && f[first + 2].empty();
    if (all_empty) return std::nullopt;
    double v[3];
    for (std::size_t k = 0; k < 3; ++k) {
        auto d = parse_double(f[first + k]);
        if (!d) throw SchemaError(line, cols[first + k], "expected a finite number (all three axes or none)");
        v[k] = *d;
    }
    return Vec3{v[0], v[1], v[2]};
}

EsmRecord parse_record_fields(const std::vector<std::string>& f, std::size_t line, const CodeTaxonomy& taxonomy) {
    const auto& cols = record_columns();
    if (f.size() != kRecordColumns)
        throw SchemaError(line, "", "expected " + std::to_string(kRecordColumns) + " fields, got " +
                                        std::to_string(f.size()));
    EsmRecord r;
    r.user_id = f[c_user_id];
    if (r.user_id.empty()) throw SchemaError(line, cols[c_user_id], "must not be empty");

    auto round = parse_int<int>(f[c_round]);
    if (!round || (*round != 1 && *round != 2)) throw SchemaError(line, cols[c_round], "expected 1 or 2");
    r.round = *round;

    auto ts = [&](Col c) {
        try {
            return parse_timestamp(f[c]);
        } catch (const Error& e) {
            throw SchemaError(line, cols[c], e.what());
        }
    };
    r.received_at = ts(c_received_at);
    r.clicked_at = ts(c_clicked_at);
    if (r.clicked_at.epoch_s < r.received_at.epoch_s)
        throw SchemaError(line, cols[c_clicked_at], "clicked_at precedes received_at");
    r.response_time_s = r.clicked_at.epoch_s - r.received_at.epoch_s;

    if (f[c_weekday] == "true") {
        r.weekday = true;
    } else if (f[c_weekday] == "false") {
        r.weekday = false;
    } else {
        throw SchemaError(line, cols[c_weekday], "expected true or false");
    }
    auto dow = parse_int<int>(f[c_day_of_week]);
    if (!dow || *dow < 0 || *dow > 6) throw SchemaError(line, cols[c_day_of_week], "expected an integer 0-6");
    r.day_of_week = *dow;
    r.time_of_day = parse_enum<TimeOfDay>(f[c_time_of_day], line, cols[c_time_of_day]);

    const TimeFields derived = derive_time_fields(r.clicked_at);
    if (derived.time_of_day != r.time_of_day)
        throw SchemaError(line, cols[c_time_of_day],
                          "does not match clicked_at (expected " + std::string(to_token(derived.time_of_day)) + ")");
    if (derived.day_of_week != r.day_of_week)
        throw SchemaError(line, cols[c_day_of_week],
                          "does not match clicked_at (expected " + std::to_string(derived.day_of_week) + ")");
    if (derived.weekday != r.weekday)
        throw SchemaError(line, cols[c_weekday], "does not match clicked_at");

    r.activity = parse_enum<Activity>(f[c_activity], line, cols[c_activity]);
    r.accel = parse_vec(f, c_accel_x, line);
    r.gyro = parse_vec(f, c_gyro_x, line);

    r.foreground_app = f[c_foreground_app];
    r.foreground_category = parse_enum<AppCategory>(f[c_foreground_category], line, cols[c_foreground_category]);
    const bool home = r.foreground_category == AppCategory::home_screen;
    if (home != (r.foreground_app == kHomeScreenApp))
        throw SchemaError(line, cols[c_foreground_app],
                          "HOME_SCREEN app and home_screen category must appear together");
    if (r.foreground_app.empty()) throw SchemaError(line, cols[c_foreground_app], "must not be empty");

    r.notif_app = f[c_notif_app];
    if (r.notif_app.empty()) throw SchemaError(line, cols[c_notif_app], "must not be empty");
    r.notif_category = parse_enum<AppCategory>(f[c_notif_category], line, cols[c_notif_category]);
    if (r.notif_category == AppCategory::home_screen)
        throw SchemaError(line, cols[c_notif_category], "home_screen is not a notification category");

    r.response_behavior = parse_enum<ResponseBehavior>(f[c_response_behavior], line, cols[c_response_behavior]);

    auto attention = parse_int<int>(f[c_attention]);
    if (!attention || *attention < 1 || *attention > 5)
        throw SchemaError(line, cols[c_attention], "expected an integer 1-5, got '" + f[c_attention] + "'");
    r.attention = *attention;

    r.codes = detail::split(f[c_codes], '|');
    std::unordered_set<std::string> seen;
    for (const auto& code : r.codes) {
        if (!taxonomy.code_index(code)) throw SchemaError(line, cols[c_codes], "unknown code id '" + code + "'");
        if (!seen.insert(code).second) throw SchemaError(line, cols[c_codes], "duplicate code id '" + code + "'");
    }
    r.motivation_text = f[c_motivation_text];
    return r;
}

std::vector<std::string> json_to_fields(const nlohmann::json& obj, std::size_t line) {
    if (!obj.is_object()) throw SchemaError(line, "", "expected a JSON object");
    std::vector<std::string> fields;
    fields.reserve(kRecordColumns);
    for (const auto& key : record_columns()) {
        if (!obj.contains(key)) {
            fields.emplace_back();
            continue;
        }
        const auto& v = obj[key];
        if (v.is_null()) {
            fields.emplace_back();
        } else if (v.is_string()) {
            fields.push_back(v.get<std::string>());
        } else if (v.is_boolean()) {
            fields.emplace_back(v.get<bool>() ? "true" : "false");
        } else if (v.is_number_integer()) {
            fields.push_back(std::to_string(v.get<std::int64_t>()));
        } else if (v.is_number()) {
            fields.push_back(format_double(v.get<double>()));
        } else if (v.is_array() && key == "codes") {
            std::string joined;
            for (const auto& c : v) {
                if (!c.is_string()) throw SchemaError(line, key, "code ids must be strings");
                if (!joined.empty()) joined += '|';
                joined += c.get<std::string>();
            }
            fields.push_back(std::move(joined));
        } else {
            throw SchemaError(line, key, "unsupported JSON value type");
        }
    }
    for (const auto& [key, _] : obj.items()) {
        if (std::find(record_columns().begin(), record_columns().end(), key) == record_columns().end())
            throw SchemaError(line, key, "unknown key");
    }
    return fields;
}

void check_duplicates(const std::vector<EsmRecord>& records, const std::vector<std::size_t>& lines) {
    std::set<std::tuple<std::string_view, std::int64_t, std::string_view>> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!seen.emplace(r.user_id, r.clicked_at.epoch_s, r.notif_app).second)
            throw SchemaError(lines.empty() ? 0 : lines[i], "clicked_at",
                              "duplicate (user_id, clicked_at, notif_app) = (" + r.user_id + ", " +
                                  format_timestamp(r.clicked_at) + ", " + r.notif_app + ")");
    }
}

std::string join_codes(const std::vector<std::string>& codes) {
    std::string out;
    for (const auto& c : codes) {
        if (!out.empty()) out += '|';
        out += c;
    }
    return out;
}

}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Timestamp parse_timestamp(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS then Z or (+|-)HH:MM
    auto bad = [&] { return Error("malformed timestamp '" + std::string(s) + "' (want YYYY-MM-DDTHH:MM:SS+HH:MM)"); };
    if (s.size() < 20) throw bad();
    auto num = [&](std::size_t pos, std::size_t len) {
        auto v = parse_int<int>(s.substr(pos, len));
        if (!v) throw bad();
        return *v;
    };
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':') throw bad();
    const int year = num(0, 4), month = num(5, 2), day = num(8, 2);
    const int hour = num(11, 2), minute = num(14, 2), second = num(17, 2);
    if (hour > 23 || minute > 59 || second > 59) throw bad();
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                          std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) throw bad();

    int offset = 0;
    const auto tz = s.substr(19);
    if (tz == "Z") {
        offset = 0;
    } else if (tz.size() == 6 && (tz[0] == '+' || tz[0] == '-') && tz[3] == ':') {
        const int oh = num(20, 2), om = num(23, 2);
        if (oh > 23 || om > 59) throw bad();
        offset = (oh * 3600 + om * 60) * (tz[0] == '-' ? -1 : 1);
    } else {
        throw bad();
    }
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    const std::int64_t local = static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second;
    return Timestamp{local - offset, offset};
}

std::string format_timestamp(const Timestamp& t) {
    const std::int64_t local = t.local_s();
    std::int64_t days = local / 86400;
    std::int64_t rem = local % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                  static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
    std::string out(buf);
    if (t.utc_offset_s == 0) return out + "Z";
    const int off = std::abs(t.utc_offset_s);
    std::snprintf(buf, sizeof buf, "%c%02d:%02d", t.utc_offset_s < 0 ? '-' : '+', off / 3600, (off / 60) % 60);
    return out + buf;
}

TimeOfDay time_of_day_for_hour(int h) {
    if (h < 0 || h > 23) throw UsageError("hour out of range: " + std::to_string(h));
    if (h >= 6 && h < 12) return TimeOfDay::morning;
    if (h >= 12 && h < 18) return TimeOfDay::afternoon;
    if (h >= 18 && h < 24) return TimeOfDay::evening;
    return TimeOfDay::night;
}

TimeFields derive_time_fields(const Timestamp& clicked_at) {
    const std::int64_t local = clicked_at.local_s();
    std::int64_t days = local / 86400;
    std::int64_t rem = local % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{days}}};
    const int dow = static_cast<int>(wd.iso_encoding()) - 1;
    return TimeFields{time_of_day_for_hour(static_cast<int>(rem / 3600)), dow, dow < 5};
}

CoarseBehavior coarsen_behavior(ResponseBehavior b) {
    switch (b) {
        case ResponseBehavior::click_to_view: return CoarseBehavior::click_to_view;
        case ResponseBehavior::swipe_clear: return CoarseBehavior::swipe_clear;
        case ResponseBehavior::swipe_cancel_popup: return CoarseBehavior::swipe_cancel_popup;
        case ResponseBehavior::ignore:
        case ResponseBehavior::didnt_notice: return CoarseBehavior::no_response;
        case ResponseBehavior::adjust_settings: return CoarseBehavior::adjust_settings;
    }
    throw UsageError("invalid response behavior");
}

std::vector<std::string> Dataset::user_ids() const {
    std::vector<std::string> ids;
    std::unordered_set<std::string_view> seen;
    for (const auto& r : records)
        if (seen.insert(r.user_id).second) ids.push_back(r.user_id);
    return ids;
}

const UserProfile* Dataset::profile(std::string_view user_id) const {
    for (const auto& p : profiles)
        if (p.user_id == user_id) return &p;
    return nullptr;
}

DataFormat format_from_path(const std::string& path) {
    return path.ends_with(".jsonl") ? DataFormat::jsonl : DataFormat::csv;
}

std::vector<EsmRecord> parse_records(std::istream& in, DataFormat format, const CodeTaxonomy& taxonomy) {
    std::vector<EsmRecord> records;
    std::vector<std::size_t> lines;
    if (format == DataFormat::csv) {
        CsvReader reader(in);
        std::vector<std::string> fields;
        if (!reader.next(fields)) throw SchemaError(1, "", "empty file (missing header)");
        if (fields != record_columns())
            throw SchemaError(1, "", "header must be exactly: " + std::string(kRecordCsvHeader));
        while (reader.next(fields)) {
            if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
            records.push_back(parse_record_fields(fields, reader.line(), taxonomy));
            lines.push_back(reader.line());
        }
    } else {
        std::string text;
        std::size_t line = 0;
        while (std::getline(in, text)) {
            ++line;
            if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(text);
            } catch (const nlohmann::json::exception& e) {
                throw SchemaError(line, "", std::string("invalid JSON: ") + e.what());
            }
            records.push_back(parse_record_fields(json_to_fields(obj, line), line, taxonomy));
            lines.push_back(line);
        }
    }
    check_duplicates(records, lines);
    return records;
}

std::vector<UserProfile> parse_profiles(std::istream& in) {
    CsvReader reader(in);
    std::vector<std::string> f;
    if (!reader.next(f)) throw SchemaError(1, "", "empty profiles file (missing header)");
    if (f != detail::split(kProfileCsvHeader, ','))
        throw SchemaError(1, "", "profiles header must be exactly: " + std::string(kProfileCsvHeader));
    const auto cols = detail::split(kProfileCsvHeader, ',');
    std::vector<UserProfile> profiles;
    std::unordered_set<std::string> ids;
    while (reader.next(f)) {
        const auto line = reader.line();
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != kProfileColumns)
            throw SchemaError(line, "", "expected " + std::to_string(kProfileColumns) + " fields");
        UserProfile p;
        p.user_id = f[0];
        if (p.user_id.empty()) throw SchemaError(line, cols[0], "must not be empty");
        if (!ids.insert(p.user_id).second) throw SchemaError(line, cols[0], "duplicate user_id '" + p.user_id + "'");
        p.gender = parse_enum<Gender>(f[1], line, cols[1]);
        auto age = parse_int<int>(f[2]);
        if (!age || *age < 0) throw SchemaError(line, cols[2], "expected a non-negative integer");
        p.age = *age;
        p.occupation = parse_enum<Occupation>(f[3], line, cols[3]);
        p.education = f[4];
        p.phone_brand = f[5];
        for (const auto& part : detail::split(f[6], '|')) {
            auto round = parse_int<int>(part);
            if (!round || (*round != 1 && *round != 2)) throw SchemaError(line, cols[6], "rounds must be 1 and/or 2");
            p.rounds.push_back(*round);
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

Dataset parse_dataset(const std::string& path, DataFormat format, const CodeTaxonomy& taxonomy) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset file '" + path + "'");
    Dataset d;
    d.taxonomy = taxonomy;
    d.records = parse_records(in, format, taxonomy);
    return d;
}

Dataset load_dataset(const std::string& records_path, const std::string& profiles_path,
                     const std::string& taxonomy_path) {
    const CodeTaxonomy taxonomy =
        taxonomy_path.empty() ? CodeTaxonomy::default_taxonomy() : CodeTaxonomy::load(taxonomy_path);
    Dataset d = parse_dataset(records_path, format_from_path(records_path), taxonomy);
    if (!profiles_path.empty()) {
        std::ifstream in(profiles_path, std::ios::binary);
        if (!in) throw Error("cannot open profiles file '" + profiles_path + "'");
        d.profiles = parse_profiles(in);
    }
    validate_dataset(d);
    return d;
}

void validate_dataset(const Dataset& d) {
    std::unordered_set<std::string_view> profile_ids;
    for (const auto& p : d.profiles)
        if (!profile_ids.insert(p.user_id).second)
            throw SchemaError(0, "user_id", "duplicate profile for '" + p.user_id + "'");
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const auto& r = d.records[i];
        const std::size_t line = i + 2;
        if (r.attention < 1 || r.attention > 5) throw SchemaError(line, "attention", "expected 1-5");
        if (r.clicked_at.epoch_s < r.received_at.epoch_s)
            throw SchemaError(line, "clicked_at", "clicked_at precedes received_at");
        if (r.response_time_s != r.clicked_at.epoch_s - r.received_at.epoch_s)
            throw SchemaError(line, "response_time_s", "inconsistent with timestamps");
        const auto tf = derive_time_fields(r.clicked_at);
        if (tf.time_of_day != r.time_of_day || tf.day_of_week != r.day_of_week || tf.weekday != r.weekday)
            throw SchemaError(line, "time_of_day", "time fields inconsistent with clicked_at");
        if (r.user_id.empty()) throw SchemaError(line, "user_id", "must not be empty");
        if (r.round != 1 && r.round != 2) throw SchemaError(line, "round", "expected 1 or 2");
        if (static_cast<std::size_t>(r.activity) >= enum_size<Activity>() ||
            static_cast<std::size_t>(r.foreground_category) >= enum_size<AppCategory>() ||
            static_cast<std::size_t>(r.notif_category) >= enum_size<AppCategory>() ||
            static_cast<std::size_t>(r.response_behavior) >= enum_size<ResponseBehavior>())
            throw SchemaError(line, "", "enum field holds an undeclared value");
        if ((r.foreground_category == AppCategory::home_screen) != (r.foreground_app == kHomeScreenApp))
            throw SchemaError(line, "foreground_app", "HOME_SCREEN app and home_screen category must appear together");
        if (r.foreground_app.empty()) throw SchemaError(line, "foreground_app", "must not be empty");
        if (r.notif_app.empty()) throw SchemaError(line, "notif_app", "must not be empty");
        if (r.notif_category == AppCategory::home_screen)
            throw SchemaError(line, "notif_category", "home_screen is not a notification category");
        for (const auto& v : {r.accel, r.gyro})
            if (v && !(std::isfinite(v->x) && std::isfinite(v->y) && std::isfinite(v->z)))
                throw SchemaError(line, "", "sensor values must be finite");
        std::unordered_set<std::string_view> seen;
        for (const auto& code : r.codes) {
            if (!d.taxonomy.code_index(code)) throw SchemaError(line, "codes", "unknown code id '" + code + "'");
            if (!seen.insert(code).second) throw SchemaError(line, "codes", "duplicate code id '" + code + "'");
        }
        if (!d.profiles.empty() && !profile_ids.contains(r.user_id))
            throw SchemaError(line, "user_id", "user '" + r.user_id + "' has no profile");
    }
    check_duplicates(d.records, {});
}

void write_records(std::ostream& out, const std::vector<EsmRecord>& records, DataFormat format) {
    if (format == DataFormat::csv) {
        out << kRecordCsvHeader << '\n';
        std::string row;
        for (const auto& r : records) {
            row.clear();
            bool first = true;
            auto field = [&](std::string_view v) {
                if (!first) row += ',';
                first = false;
                detail::append_csv_field(row, v);
            };
            auto vec = [&](const std::optional<Vec3>& v) {
                for (double c : {v ? v->x : 0.0, v ? v->y : 0.0, v ? v->z : 0.0}) field(v ? format_double(c) : "");
            };
            field(r.user_id);
            field(std::to_string(r.round));
            field(format_timestamp(r.received_at));
            field(format_timestamp(r.clicked_at));
            field(r.weekday ? "true" : "false");
            field(std::to_string(r.day_of_week));
            field(to_token(r.time_of_day));
            field(to_token(r.activity));
            vec(r.accel);
            vec(r.gyro);
            field(r.foreground_app);
            field(to_token(r.foreground_category));
            field(r.notif_app);
            field(to_token(r.notif_category));
            field(to_token(r.response_behavior));
            field(std::to_string(r.attention));
            field(join_codes(r.codes));
            field(r.motivation_text);
            out << row << '\n';
        }
        return;
    }
    for (const auto& r : records) {
        nlohmann::ordered_json obj;
        obj["user_id"] = r.user_id;
        obj["round"] = r.round;
        obj["received_at"] = format_timestamp(r.received_at);
        obj["clicked_at"] = format_timestamp(r.clicked_at);
        obj["weekday"] = r.weekday;
        obj["day_of_week"] = r.day_of_week;
        obj["time_of_day"] = to_token(r.time_of_day);
        obj["activity"] = to_token(r.activity);
        const char* axes[] = {"_x", "_y", "_z"};
        for (auto [name, v] : {std::pair{"accel", &r.accel}, std::pair{"gyro", &r.gyro}}) {
            const double comps[3] = {*v ? (*v)->x : 0.0, *v ? (*v)->y : 0.0, *v ? (*v)->z : 0.0};
            for (int k = 0; k < 3; ++k) {
                const std::string key = std::string(name) + axes[k];
                if (*v)
                    obj[key] = comps[k];
                else
                    obj[key] = nullptr;
            }
        }
        obj["foreground_app"] = r.foreground_app;
        obj["foreground_category"] = to_token(r.foreground_category);
        obj["notif_app"] = r.notif_app;
        obj["notif_category"] = to_token(r.notif_category);
        obj["response_behavior"] = to_token(r.response_behavior);
        obj["attention"] = r.attention;
        obj["codes"] = r.codes;
        if (r.motivation_text.empty())
            obj["motivation_text"] = nullptr;
        else
            obj["motivation_text"] = r.motivation_text;
        out << obj.dump() << '\n';
    }
}

void write_profiles(std::ostream& out, const std::vector<UserProfile>& profiles) {
    out << kProfileCsvHeader << '\n';
    for (const auto& p : profiles) {
        std::string row;
        detail::append_csv_field(row, p.user_id);
        row += ',';
        row += to_token(p.gender);
        row += ',' + std::to_string(p.age) + ',';
        row += to_token(p.occupation);
        row += ',';
        detail::append_csv_field(row, p.education);
        row += ',';
        detail::append_csv_field(row, p.phone_brand);
        row += ',';
        for (std::size_t i = 0; i < p.rounds.size(); ++i) {
            if (i) row += '|';
            row += std::to_string(p.rounds[i]);
        }
        out << row << '\n';
    }
}

void write_records_file(const std::string& path, const std::vector<EsmRecord>& records, DataFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_records(out, records, format);
}

void write_profiles_file(const std::string& path, const std::vector<UserProfile>& profiles) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_profiles(out, profiles);
}

FilterResult filter_users(const Dataset& d, std::size_t min_records, bool drop_constant_attention) {
    struct Counts {
        std::size_t total = 0;
        std::array<std::size_t, 6> by_level{};
    };
    std::unordered_map<std::string_view, Counts> counts;
    for (const auto& r : d.records) {
        auto& c = counts[r.user_id];
        ++c.total;
        ++c.by_level[static_cast<std::size_t>(r.attention)];
    }
    FilterResult result;
    std::unordered_set<std::string_view> removed;
    for (const auto& id : d.user_ids()) {
        const auto& c = counts[id];
        if (c.total < min_records) {
            result.report.removed_insufficient.push_back(id);
            removed.insert(counts.find(id)->first);
            continue;
        }
        const auto mode = *std::max_element(c.by_level.begin(), c.by_level.end());
        if (drop_constant_attention &&
            static_cast<double>(mode) >= kConstantAttentionShare * static_cast<double>(c.total)) {
            result.report.removed_constant.push_back(id);
            removed.insert(counts.find(id)->first);
            continue;
        }
        ++result.report.kept_users;
    }
    result.dataset.taxonomy = d.taxonomy;
    for (const auto& p : d.profiles)
        if (!removed.contains(p.user_id)) result.dataset.profiles.push_back(p);
    for (const auto& r : d.records)
        if (!removed.contains(r.user_id)) result.dataset.records.push_back(r);
    return result;
}

}  // namespace attentrack
