#include "aqe/gen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "aqe/rng.hpp"

namespace aqe {

GenSpec GenSpec::from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    GenSpec spec;
    spec.rows = j.at("rows").get<uint64_t>();
    spec.seed = j.value("seed", 0ULL);
    for (const auto& cj : j.at("columns")) {
        GenColumn col;
        col.name = cj.at("name").get<std::string>();
        const std::string kind = cj.value("kind", std::string("numeric"));
        if (kind == "categorical") {
            col.type = ColumnType::categorical;
            col.values = cj.at("values").get<std::vector<std::string>>();
            if (col.values.empty())
                throw std::invalid_argument("categorical column needs values");
            if (cj.contains("weights")) {
                col.weights = cj.at("weights").get<std::vector<double>>();
                if (col.weights.size() != col.values.size())
                    throw std::invalid_argument("weights must match values");
            }
        } else if (kind == "numeric") {
            col.type = ColumnType::numeric;
            const auto& dj = cj.at("dist");
            const std::string dist = dj.at("type").get<std::string>();
            if (dist == "uniform") {
                col.dist = {GenDist::Kind::uniform, dj.at("lo").get<double>(),
                            dj.at("hi").get<double>()};
            } else if (dist == "normal") {
                col.dist = {GenDist::Kind::normal, dj.at("mean").get<double>(),
                            dj.at("stddev").get<double>()};
            } else {
                throw std::invalid_argument("unknown distribution: " + dist);
            }
            if (cj.contains("group_offsets")) {
                col.offsets_by = cj.at("group_offsets").at("column").get<std::string>();
                col.offsets = cj.at("group_offsets").at("offsets").get<std::vector<double>>();
            }
            if (cj.contains("outliers")) {
                col.outlier_prob = cj.at("outliers").at("prob").get<double>();
                col.outlier_lo = cj.at("outliers").at("lo").get<double>();
                col.outlier_hi = cj.at("outliers").at("hi").get<double>();
            }
        } else {
            throw std::invalid_argument("unknown column kind: " + kind);
        }
        spec.columns.push_back(std::move(col));
    }
    if (spec.columns.empty()) throw std::invalid_argument("spec declares no columns");
    return spec;
}

namespace {

double draw(const GenDist& d, Xoshiro256& rng) {
    if (d.kind == GenDist::Kind::uniform) return rng.uniform(d.a, d.b);
    // Box-Muller; one draw per call keeps the stream discipline simple
    const double u1 = std::max(rng.unit(), 1e-300);
    const double u2 = rng.unit();
    return d.a + d.b * std::sqrt(-2.0 * std::log(u1)) *
                     std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

TableData generate_table(const GenSpec& spec) {
    TableData table;
    for (const auto& col : spec.columns)
        table.schema.columns.push_back({col.name, col.type});
    table.n_rows = spec.rows;
    table.numeric.resize(spec.columns.size());
    table.categorical.resize(spec.columns.size());

    // categorical columns first so numeric offsets can reference them
    std::vector<std::vector<uint32_t>> cat_codes(spec.columns.size());
    for (size_t c = 0; c < spec.columns.size(); ++c) {
        const GenColumn& col = spec.columns[c];
        if (col.type != ColumnType::categorical) continue;
        std::vector<double> cum;
        double total = 0;
        for (size_t i = 0; i < col.values.size(); ++i) {
            total += col.weights.empty() ? 1.0 : col.weights[i];
            cum.push_back(total);
        }
        Xoshiro256 rng(derive_stream(spec.seed, 1000 + c));
        cat_codes[c].resize(spec.rows);
        table.categorical[c].resize(spec.rows);
        for (uint64_t r = 0; r < spec.rows; ++r) {
            const double u = rng.unit() * total;
            uint32_t code = 0;
            while (u > cum[code]) ++code;
            cat_codes[c][r] = code;
            table.categorical[c][r] = col.values[code];
        }
    }
    for (size_t c = 0; c < spec.columns.size(); ++c) {
        const GenColumn& col = spec.columns[c];
        if (col.type != ColumnType::numeric) continue;
        const std::vector<uint32_t>* by = nullptr;
        if (!col.offsets_by.empty()) {
            const size_t idx = table.schema.index_of(col.offsets_by);
            if (spec.columns[idx].type != ColumnType::categorical)
                throw std::invalid_argument("group_offsets column must be categorical");
            if (col.offsets.size() != spec.columns[idx].values.size())
                throw std::invalid_argument("group_offsets must cover every category");
            by = &cat_codes[idx];
        }
        Xoshiro256 rng(derive_stream(spec.seed, 2000 + c));
        table.numeric[c].resize(spec.rows);
        for (uint64_t r = 0; r < spec.rows; ++r) {
            double v;
            if (col.outlier_prob > 0 && rng.unit() < col.outlier_prob)
                v = rng.uniform(col.outlier_lo, col.outlier_hi);
            else
                v = draw(col.dist, rng);
            if (by) v += col.offsets[(*by)[r]];
            table.numeric[c][r] = v;
        }
    }
    return table;
}

}  // namespace aqe
