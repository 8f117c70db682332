#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attentrack/enums.hpp"
#include "attentrack/taxonomy.hpp"

namespace attentrack {

// Instant with the UTC offset it was observed in; local civil time = epoch + offset.
struct Timestamp {
    std::int64_t epoch_s = 0;
    std::int32_t utc_offset_s = 0;

    std::int64_t local_s() const noexcept { return epoch_s + utc_offset_s; }
    friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

// RFC 3339 with seconds and either `Z` or a numeric offset.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(const Timestamp& t);

struct Vec3 {
    double x = 0, y = 0, z = 0;
    double norm() const;
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct EsmRecord {
    std::string user_id;
    int round = 1;
    Timestamp received_at;
    Timestamp clicked_at;
    std::int64_t response_time_s = 0;
    bool weekday = false;
    int day_of_week = 0;  // 0 = Monday
    TimeOfDay time_of_day = TimeOfDay::morning;
    Activity activity = Activity::sitting;
    std::optional<Vec3> accel;
    std::optional<Vec3> gyro;
    std::string foreground_app;
    AppCategory foreground_category = AppCategory::home_screen;
    std::string notif_app;
    AppCategory notif_category = AppCategory::communication;
    ResponseBehavior response_behavior = ResponseBehavior::click_to_view;
    std::string motivation_text;     // empty = absent
    std::vector<std::string> codes;  // taxonomy code ids
    int attention = 1;

    friend bool operator==(const EsmRecord&, const EsmRecord&) = default;
};

inline constexpr std::string_view kHomeScreenApp = "HOME_SCREEN";

struct UserProfile {
    std::string user_id;
    Gender gender = Gender::male;
    int age = 0;
    Occupation occupation = Occupation::studying;
    std::string education;
    std::string phone_brand;
    std::vector<int> rounds;

    friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

struct Dataset {
    std::vector<EsmRecord> records;
    std::vector<UserProfile> profiles;
    CodeTaxonomy taxonomy = CodeTaxonomy::default_taxonomy();

    // Distinct user ids in first-appearance order.
    std::vector<std::string> user_ids() const;
    const UserProfile* profile(std::string_view user_id) const;
};

enum class DataFormat { csv, jsonl };
DataFormat format_from_path(const std::string& path);

inline constexpr std::string_view kRecordCsvHeader =
    "user_id,round,received_at,clicked_at,weekday,day_of_week,time_of_day,activity,"
    "accel_x,accel_y,accel_z,gyro_x,gyro_y,gyro_z,foreground_app,foreground_category,"
    "notif_app,notif_category,response_behavior,attention,codes,motivation_text";
inline constexpr std::string_view kProfileCsvHeader =
    "user_id,gender,age,occupation,education,phone_brand,rounds";

// Parses records; every record is checked against the EsmRecord invariants.
// Throws SchemaError naming the line and field of the first violation.
std::vector<EsmRecord> parse_records(std::istream& in, DataFormat format,
                                     const CodeTaxonomy& taxonomy = CodeTaxonomy::default_taxonomy());
std::vector<UserProfile> parse_profiles(std::istream& in);

Dataset parse_dataset(const std::string& path, DataFormat format,
                      const CodeTaxonomy& taxonomy = CodeTaxonomy::default_taxonomy());
// Records + optional profiles + optional taxonomy; checks record/profile membership
// when profiles are given.
Dataset load_dataset(const std::string& records_path, const std::string& profiles_path = {},
                     const std::string& taxonomy_path = {});

void write_records(std::ostream& out, const std::vector<EsmRecord>& records, DataFormat format);
void write_profiles(std::ostream& out, const std::vector<UserProfile>& profiles);
void write_records_file(const std::string& path, const std::vector<EsmRecord>& records, DataFormat format);
void write_profiles_file(const std::string& path, const std::vector<UserProfile>& profiles);

// Dataset-level invariants (profile membership, unique profiles, taxonomy codes,
// duplicate triples). Throws SchemaError.
void validate_dataset(const Dataset& d);

struct TimeFields {
    TimeOfDay time_of_day;
    int day_of_week;  // 0 = Monday
    bool weekday;     // Monday-Friday
    friend bool operator==(const TimeFields&, const TimeFields&) = default;
};

TimeFields derive_time_fields(const Timestamp& clicked_at);
TimeOfDay time_of_day_for_hour(int local_hour);

struct FilterReport {
    std::vector<std::string> removed_insufficient;
    std::vector<std::string> removed_constant;
    std::size_t kept_users = 0;
};

struct FilterResult {
    Dataset dataset;
    FilterReport report;
};

inline constexpr double kConstantAttentionShare = 0.95;

FilterResult filter_users(const Dataset& d, std::size_t min_records, bool drop_constant_attention);

CoarseBehavior coarsen_behavior(ResponseBehavior b);

}  // namespace attentrack
