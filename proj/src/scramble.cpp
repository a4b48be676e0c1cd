#include "aqe/scramble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "aqe/rng.hpp"

namespace aqe {

size_t Schema::index_of(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return i;
    throw std::invalid_argument("schema has no column named " + name);
}

Schema Schema::from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Schema schema;
    for (const auto& col : j.at("columns")) {
        const std::string type = col.at("type").get<std::string>();
        ColumnType t;
        if (type == "numeric") t = ColumnType::numeric;
        else if (type == "categorical") t = ColumnType::categorical;
        else throw std::invalid_argument("unknown column type: " + type);
        schema.columns.push_back({col.at("name").get<std::string>(), t});
    }
    if (schema.columns.empty()) throw std::invalid_argument("schema declares no columns");
    return schema;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size() && std::isfinite(out);
}

}  // namespace

TableData ingest_csv_text(const std::string& text, const Schema& schema) {
    TableData table;
    table.schema = schema;
    table.numeric.resize(schema.columns.size());
    table.categorical.resize(schema.columns.size());

    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) return table;  // empty file: zero rows

    const std::vector<std::string> header = split_csv_line(line);
    std::vector<size_t> positions(schema.columns.size());
    for (size_t i = 0; i < schema.columns.size(); ++i) {
        const auto it = std::find(header.begin(), header.end(), schema.columns[i].name);
        if (it == header.end())
            throw std::invalid_argument("csv is missing column " + schema.columns[i].name);
        positions[i] = static_cast<size_t>(it - header.begin());
    }

    std::vector<double> nums(schema.columns.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        bool ok = true;
        for (size_t i = 0; i < schema.columns.size() && ok; ++i) {
            if (positions[i] >= fields.size()) ok = false;
            else if (schema.columns[i].type == ColumnType::numeric)
                ok = parse_double(fields[positions[i]], nums[i]);
        }
        if (!ok) {
            ++table.rows_dropped;
            continue;
        }
        for (size_t i = 0; i < schema.columns.size(); ++i) {
            if (schema.columns[i].type == ColumnType::numeric)
                table.numeric[i].push_back(nums[i]);
            else
                table.categorical[i].push_back(fields[positions[i]]);
        }
        ++table.n_rows;
    }
    return table;
}

TableData ingest_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return ingest_csv_text(buf.str(), schema);
}

void write_csv(const TableData& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (size_t i = 0; i < table.schema.columns.size(); ++i)
        out << (i ? "," : "") << table.schema.columns[i].name;
    out << "\n";
    char buf[32];
    for (uint64_t r = 0; r < table.n_rows; ++r) {
        for (size_t i = 0; i < table.schema.columns.size(); ++i) {
            if (i) out << ",";
            if (table.schema.columns[i].type == ColumnType::numeric) {
                std::snprintf(buf, sizeof buf, "%.17g", table.numeric[i][r]);
                out << buf;
            } else {
                out << table.categorical[i][r];
            }
        }
        out << "\n";
    }
}

uint32_t Scramble::code_of(size_t column, const std::string& value) const {
    const auto& dict = dicts.at(column);
    for (uint32_t c = 0; c < dict.size(); ++c)
        if (dict[c] == value) return c;
    throw std::invalid_argument("value not in dictionary: " + value);
}

bool Scramble::block_has_code(size_t column, uint32_t code, uint64_t block) const {
    const auto& bits = bitmaps.at(column).at(code);
    return (bits[block >> 6] >> (block & 63)) & 1;
}

BlockSpan scan_block(const Scramble& s, uint64_t block_index) {
    if (block_index >= s.n_blocks()) throw std::out_of_range("block index out of range");
    s.count_fetch();
    return {s.block_begin(block_index), s.block_end(block_index)};
}

std::vector<uint64_t> blocks_with_any(const Scramble& s, size_t column,
                                      const std::vector<uint32_t>& codes) {
    const auto& col_maps = s.bitmaps.at(column);
    const size_t words = (s.n_blocks() + 63) / 64;
    std::vector<uint64_t> out(words, 0);
    for (uint32_t code : codes) {
        if (code >= col_maps.size()) throw std::invalid_argument("unknown category code");
        for (size_t w = 0; w < words; ++w) out[w] |= col_maps[code][w];
    }
    return out;
}

Scramble build_scramble(const TableData& table, uint64_t seed, const BuildOptions& opts) {
    if (opts.block_size == 0) throw std::invalid_argument("block size must be positive");
    Scramble s;
    s.n_rows = table.n_rows;
    s.block_size = opts.block_size;
    s.seed = seed;
    s.schema = table.schema;

    const size_t n_cols = table.schema.columns.size();
    s.numeric.resize(n_cols);
    s.codes.resize(n_cols);
    s.dicts.resize(n_cols);
    s.bitmaps.resize(n_cols);

    // Dictionaries in first-appearance order over the source rows, so codes
    // are a deterministic function of the input alone.
    std::vector<std::unordered_map<std::string, uint32_t>> dict_index(n_cols);
    std::vector<std::vector<uint32_t>> source_codes(n_cols);
    for (size_t c = 0; c < n_cols; ++c) {
        if (table.schema.columns[c].type != ColumnType::categorical) continue;
        source_codes[c].reserve(table.n_rows);
        for (const std::string& v : table.categorical[c]) {
            auto [it, inserted] =
                dict_index[c].emplace(v, static_cast<uint32_t>(s.dicts[c].size()));
            if (inserted) s.dicts[c].push_back(v);
            source_codes[c].push_back(it->second);
        }
    }

    Xoshiro256 rng(derive_stream(seed, 0));
    const std::vector<uint64_t> perm = random_permutation(table.n_rows, rng);

    for (size_t c = 0; c < n_cols; ++c) {
        if (table.schema.columns[c].type == ColumnType::numeric) {
            s.numeric[c].resize(table.n_rows);
            for (uint64_t i = 0; i < table.n_rows; ++i)
                s.numeric[c][i] = table.numeric[c][perm[i]];
        } else {
            s.codes[c].resize(table.n_rows);
            for (uint64_t i = 0; i < table.n_rows; ++i)
                s.codes[c][i] = source_codes[c][perm[i]];
        }
    }

    // Catalog ranges (exact min/max, optionally widened) and block bitmaps in
    // one pass over the permuted layout.
    s.ranges.resize(n_cols, NumericRange{0.0, 0.0});
    const uint64_t n_blocks = s.n_blocks();
    const size_t words = (n_blocks + 63) / 64;
    for (size_t c = 0; c < n_cols; ++c) {
        if (table.schema.columns[c].type == ColumnType::numeric) {
            if (table.n_rows > 0) {
                double lo = s.numeric[c][0], hi = lo;
                for (double v : s.numeric[c]) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                if (opts.widen_factor != 1.0) {
                    const double mid = (lo + hi) / 2.0;
                    const double half = (hi - lo) / 2.0 * opts.widen_factor;
                    lo = mid - half;
                    hi = mid + half;
                }
                s.ranges[c] = {lo, hi};
            }
        } else {
            s.bitmaps[c].assign(s.dicts[c].size(), std::vector<uint64_t>(words, 0));
            for (uint64_t i = 0; i < table.n_rows; ++i) {
                const uint64_t block = i / opts.block_size;
                s.bitmaps[c][s.codes[c][i]][block >> 6] |= 1ULL << (block & 63);
            }
        }
    }
    return s;
}

// --- FFS1 container -----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'F', 'F', 'S', '1'};
constexpr uint16_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
    for (size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put<uint64_t>(out, bits);
}

struct Reader {
    const std::string& data;
    size_t pos = 0;

    template <typename T>
    T get() {
        if (pos + sizeof(T) > data.size()) throw std::runtime_error("truncated scramble file");
        uint64_t v = 0;
        for (size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += sizeof(T);
        return static_cast<T>(v);
    }
    double get_f64() {
        const uint64_t bits = get<uint64_t>();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string get_bytes(size_t n) {
        if (pos + n > data.size()) throw std::runtime_error("truncated scramble file");
        std::string out = data.substr(pos, n);
        pos += n;
        return out;
    }
};

nlohmann::json catalog_json(const Scramble& s) {
    nlohmann::json cols = nlohmann::json::array();
    for (size_t c = 0; c < s.schema.columns.size(); ++c) {
        nlohmann::json col;
        col["name"] = s.schema.columns[c].name;
        if (s.schema.columns[c].type == ColumnType::numeric) {
            col["type"] = "numeric";
            col["min"] = s.ranges[c].min;
            col["max"] = s.ranges[c].max;
        } else {
            col["type"] = "categorical";
            col["dict_size"] = s.dicts[c].size();
        }
        cols.push_back(col);
    }
    nlohmann::json j;
    j["n_rows"] = s.n_rows;
    j["block_size"] = s.block_size;
    j["columns"] = cols;
    j["seed"] = s.seed;
    return j;
}

}  // namespace

void save_scramble(const Scramble& s, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put<uint16_t>(out, kVersion);
    put<uint64_t>(out, s.n_rows);
    put<uint32_t>(out, s.block_size);
    put<uint16_t>(out, static_cast<uint16_t>(s.schema.columns.size()));
    for (const auto& col : s.schema.columns) {
        put<uint16_t>(out, static_cast<uint16_t>(col.name.size()));
        out.append(col.name);
        put<uint8_t>(out, col.type == ColumnType::numeric ? 0 : 1);
    }
    for (size_t c = 0; c < s.schema.columns.size(); ++c) {
        if (s.schema.columns[c].type == ColumnType::numeric)
            for (double v : s.numeric[c]) put_f64(out, v);
        else
            for (uint32_t v : s.codes[c]) put<uint32_t>(out, v);
    }
    for (size_t c = 0; c < s.schema.columns.size(); ++c) {
        if (s.schema.columns[c].type != ColumnType::categorical) continue;
        put<uint32_t>(out, static_cast<uint32_t>(s.dicts[c].size()));
        for (const auto& v : s.dicts[c]) {
            put<uint16_t>(out, static_cast<uint16_t>(v.size()));
            out.append(v);
        }
    }
    const uint64_t n_blocks = s.n_blocks();
    const size_t n_bytes = static_cast<size_t>((n_blocks + 7) / 8);
    for (size_t c = 0; c < s.schema.columns.size(); ++c) {
        if (s.schema.columns[c].type != ColumnType::categorical) continue;
        put<uint32_t>(out, static_cast<uint32_t>(s.dicts[c].size()));
        put<uint32_t>(out, static_cast<uint32_t>(n_blocks));
        for (const auto& bits : s.bitmaps[c])
            for (size_t byte = 0; byte < n_bytes; ++byte)
                out.push_back(static_cast<char>((bits[byte >> 3] >> (8 * (byte & 7))) & 0xff));
    }
    const std::string catalog = catalog_json(s).dump();
    put<uint64_t>(out, catalog.size());
    out.append(catalog);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Scramble load_scramble(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    const std::string data = buf.str();
    Reader in{data};

    if (in.get_bytes(4) != std::string(kMagic, 4))
        throw std::runtime_error("not a scramble file (bad magic)");
    if (in.get<uint16_t>() != kVersion) throw std::runtime_error("unsupported format version");

    Scramble s;
    s.n_rows = in.get<uint64_t>();
    s.block_size = in.get<uint32_t>();
    const uint16_t n_cols = in.get<uint16_t>();
    for (uint16_t c = 0; c < n_cols; ++c) {
        const uint16_t len = in.get<uint16_t>();
        std::string name = in.get_bytes(len);
        const uint8_t tag = in.get<uint8_t>();
        s.schema.columns.push_back(
            {std::move(name), tag == 0 ? ColumnType::numeric : ColumnType::categorical});
    }
    s.numeric.resize(n_cols);
    s.codes.resize(n_cols);
    s.dicts.resize(n_cols);
    s.bitmaps.resize(n_cols);
    s.ranges.resize(n_cols, NumericRange{0.0, 0.0});

    for (uint16_t c = 0; c < n_cols; ++c) {
        if (s.schema.columns[c].type == ColumnType::numeric) {
            s.numeric[c].resize(s.n_rows);
            for (uint64_t i = 0; i < s.n_rows; ++i) s.numeric[c][i] = in.get_f64();
        } else {
            s.codes[c].resize(s.n_rows);
            for (uint64_t i = 0; i < s.n_rows; ++i) s.codes[c][i] = in.get<uint32_t>();
        }
    }
    for (uint16_t c = 0; c < n_cols; ++c) {
        if (s.schema.columns[c].type != ColumnType::categorical) continue;
        const uint32_t dict_size = in.get<uint32_t>();
        s.dicts[c].reserve(dict_size);
        for (uint32_t i = 0; i < dict_size; ++i) {
            const uint16_t len = in.get<uint16_t>();
            s.dicts[c].push_back(in.get_bytes(len));
        }
    }
    const uint64_t n_blocks = s.n_blocks();
    const size_t n_bytes = static_cast<size_t>((n_blocks + 7) / 8);
    const size_t words = (n_blocks + 63) / 64;
    for (uint16_t c = 0; c < n_cols; ++c) {
        if (s.schema.columns[c].type != ColumnType::categorical) continue;
        const uint32_t n_codes = in.get<uint32_t>();
        if (n_codes != s.dicts[c].size())
            throw std::runtime_error("bitmap section disagrees with dictionary");
        if (in.get<uint32_t>() != n_blocks)
            throw std::runtime_error("bitmap section disagrees with block count");
        s.bitmaps[c].assign(n_codes, std::vector<uint64_t>(words, 0));
        for (uint32_t code = 0; code < n_codes; ++code) {
            const std::string bytes = in.get_bytes(n_bytes);
            for (size_t byte = 0; byte < n_bytes; ++byte)
                s.bitmaps[c][code][byte >> 3] |=
                    static_cast<uint64_t>(static_cast<unsigned char>(bytes[byte]))
                    << (8 * (byte & 7));
        }
    }
    const uint64_t json_len = in.get<uint64_t>();
    const nlohmann::json catalog = nlohmann::json::parse(in.get_bytes(json_len));
    if (catalog.at("n_rows").get<uint64_t>() != s.n_rows)
        throw std::runtime_error("catalog disagrees with header");
    s.seed = catalog.at("seed").get<uint64_t>();
    const auto& cols = catalog.at("columns");
    for (uint16_t c = 0; c < n_cols; ++c) {
        if (s.schema.columns[c].type != ColumnType::numeric) continue;
        s.ranges[c] = {cols.at(c).at("min").get<double>(), cols.at(c).at("max").get<double>()};
    }
    return s;
}

}  // namespace aqe
