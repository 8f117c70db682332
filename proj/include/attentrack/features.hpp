#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attentrack/dataset.hpp"

namespace attentrack {

enum class SchemeName { CONTEXT_ONLY, DISTRACTION_ONLY, FULL, FULL_FINE_RESPONSE, FULL_WITH_FACTORS };
enum class LabelerName { ATTENTRACK_I, ATTENTRACK_II, ATTENTRACK_III };

std::string_view to_string(SchemeName s);
std::string_view to_string(LabelerName l);
SchemeName parse_scheme(std::string_view s);    // throws UsageError listing valid names
LabelerName parse_labeler(std::string_view s);  // throws UsageError listing valid names

struct FeatureDescriptor {
    enum class Kind { numeric, one_hot, multi_hot };
    std::string name;
    Kind kind;
    std::size_t cardinality;  // 1 for numeric
};

// Hooks for feature ablations. Disabled blocks keep their columns (dimensionality is
// fixed per scheme) but encode as zero.
struct EncodingOptions {
    bool use_sensors = true;
    bool use_response_time = true;
};

class EncodingScheme {
public:
    // FULL_WITH_FACTORS reads its factor list from `taxonomy`.
    explicit EncodingScheme(SchemeName name, const CodeTaxonomy& taxonomy = CodeTaxonomy::default_taxonomy(),
                            EncodingOptions options = {});

    SchemeName name() const noexcept { return name_; }
    const std::vector<FeatureDescriptor>& descriptors() const noexcept { return descriptors_; }
    std::size_t dimension() const noexcept { return dimension_; }
    // One name per output column, e.g. "activity=sitting".
    const std::vector<std::string>& column_names() const noexcept { return columns_; }

    std::vector<double> encode(const EsmRecord& r) const;
    void encode_into(const EsmRecord& r, std::span<double> out) const;

private:
    SchemeName name_;
    CodeTaxonomy taxonomy_;
    EncodingOptions options_;
    std::vector<FeatureDescriptor> descriptors_;
    std::vector<std::string> columns_;
    std::size_t dimension_ = 0;
};

inline std::vector<double> encode_record(const EsmRecord& r, const EncodingScheme& s) { return s.encode(r); }

class Labeler {
public:
    explicit Labeler(LabelerName name) : name_(name) {}

    LabelerName name() const noexcept { return name_; }
    const std::vector<std::string>& class_names() const;
    std::size_t class_count() const { return class_names().size(); }
    // Class index for an attention level 1-5; throws UsageError otherwise.
    int label(int attention) const;

private:
    LabelerName name_;
};

inline int label(int attention, const Labeler& l) { return l.label(attention); }

struct FeatureMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> rows;  // row-major n_rows x n_cols
    std::vector<int> labels;
    std::vector<std::string> user_ids;
    std::vector<std::size_t> record_index;  // row -> index into the source dataset
    SchemeName scheme = SchemeName::FULL;
    LabelerName labeler = LabelerName::ATTENTRACK_I;
    std::vector<std::string> class_names;
    std::vector<std::string> column_names;

    std::span<const double> row(std::size_t i) const { return {rows.data() + i * n_cols, n_cols}; }
    // Copy of the given rows, in the given order.
    FeatureMatrix subset(std::span<const std::size_t> row_ids) const;
};

FeatureMatrix build_matrix(const Dataset& d, const EncodingScheme& s, const Labeler& l);

}  // namespace attentrack
