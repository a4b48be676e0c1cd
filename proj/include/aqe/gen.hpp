#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "aqe/scramble.hpp"

namespace aqe {

// Synthetic table description. Numeric columns draw from a base
// distribution, can be shifted per category of some categorical column, and
// can mix in a rare outlier band.
struct GenDist {
    enum class Kind { uniform, normal } kind = Kind::uniform;
    double a = 0.0;  // uniform: lo, normal: mean
    double b = 1.0;  // uniform: hi, normal: stddev
};

struct GenColumn {
    std::string name;
    ColumnType type = ColumnType::numeric;

    GenDist dist;                      // numeric
    std::string offsets_by;            // optional categorical column name
    std::vector<double> offsets;       // one per category of offsets_by

    std::vector<std::string> values;   // categorical
    std::vector<double> weights;       // relative; defaults to uniform

    double outlier_prob = 0.0;         // numeric: chance of an outlier draw
    double outlier_lo = 0.0;
    double outlier_hi = 0.0;
};

struct GenSpec {
    uint64_t rows = 0;
    uint64_t seed = 0;
    std::vector<GenColumn> columns;

    static GenSpec from_json_text(const std::string& text);
};

TableData generate_table(const GenSpec& spec);

}  // namespace aqe
