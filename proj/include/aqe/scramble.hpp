#pragma once
#include <atomic>
#include <utility>
#include <cstdint>
#include <string>
#include <vector>

namespace aqe {

enum class ColumnType { numeric, categorical };

struct ColumnSchema {
    std::string name;
    ColumnType type;
};

struct Schema {
    std::vector<ColumnSchema> columns;

    size_t index_of(const std::string& name) const;  // throws if absent
    static Schema from_json_text(const std::string& text);
};

// Typed rows in source order, before shuffling.
struct TableData {
    Schema schema;
    uint64_t n_rows = 0;
    uint64_t rows_dropped = 0;
    std::vector<std::vector<double>> numeric;            // per column; empty if categorical
    std::vector<std::vector<std::string>> categorical;   // per column; empty if numeric
};

TableData ingest_csv(const std::string& path, const Schema& schema);
TableData ingest_csv_text(const std::string& text, const Schema& schema);
void write_csv(const TableData& table, const std::string& path);

struct NumericRange {
    double min;
    double max;
};

// Randomly permuted columnar copy of a table. A scan is a without-replacement
// sample under any predicate fixed independently of the permutation. Immutable
// once built; the fetch counter is the only mutable member.
class Scramble {
public:
    uint64_t n_rows = 0;
    uint32_t block_size = 0;
    uint64_t seed = 0;
    Schema schema;
    std::vector<std::vector<double>> numeric;          // permuted values
    std::vector<std::vector<uint32_t>> codes;          // permuted dictionary codes
    std::vector<std::vector<std::string>> dicts;       // per categorical column
    std::vector<NumericRange> ranges;                  // per numeric column (maybe widened)
    // bitmaps[col][code] is a packed bitset over blocks: bit j set iff block j
    // contains at least one row with that code
    std::vector<std::vector<std::vector<uint64_t>>> bitmaps;

    uint64_t n_blocks() const {
        return block_size == 0 ? 0 : (n_rows + block_size - 1) / block_size;
    }
    uint64_t block_begin(uint64_t block) const { return block * block_size; }
    uint64_t block_end(uint64_t block) const {
        const uint64_t e = (block + 1) * static_cast<uint64_t>(block_size);
        return e < n_rows ? e : n_rows;
    }
    uint64_t block_rows(uint64_t block) const { return block_end(block) - block_begin(block); }

    uint32_t code_of(size_t column, const std::string& value) const;  // throws if unknown
    bool block_has_code(size_t column, uint32_t code, uint64_t block) const;

    uint64_t blocks_fetched() const { return blocks_fetched_.load(std::memory_order_relaxed); }
    void reset_metrics() const { blocks_fetched_.store(0, std::memory_order_relaxed); }
    void count_fetch() const { blocks_fetched_.fetch_add(1, std::memory_order_relaxed); }

    Scramble() = default;
    Scramble(Scramble&& other) noexcept { *this = std::move(other); }
    Scramble& operator=(Scramble&& other) noexcept {
        if (this != &other) {
            n_rows = other.n_rows;
            block_size = other.block_size;
            seed = other.seed;
            schema = std::move(other.schema);
            numeric = std::move(other.numeric);
            codes = std::move(other.codes);
            dicts = std::move(other.dicts);
            ranges = std::move(other.ranges);
            bitmaps = std::move(other.bitmaps);
            blocks_fetched_.store(other.blocks_fetched_.load(std::memory_order_relaxed),
                                  std::memory_order_relaxed);
        }
        return *this;
    }
    Scramble(const Scramble&) = delete;
    Scramble& operator=(const Scramble&) = delete;

private:
    mutable std::atomic<uint64_t> blocks_fetched_{0};
};

struct BlockSpan {
    uint64_t row_begin;
    uint64_t row_end;
};

// Fetch one block (bumps the blocks-fetched metric). Out of range throws.
BlockSpan scan_block(const Scramble& s, uint64_t block_index);

// Union of the per-code block bitsets for one categorical column.
std::vector<uint64_t> blocks_with_any(const Scramble& s, size_t column,
                                      const std::vector<uint32_t>& codes);

struct BuildOptions {
    uint32_t block_size = 40000;
    double widen_factor = 1.0;  // stretch catalog ranges about their midpoint
};

Scramble build_scramble(const TableData& table, uint64_t seed, const BuildOptions& opts = {});

// FFS1 container, little-endian throughout; see README for the exact layout.
void save_scramble(const Scramble& s, const std::string& path);
Scramble load_scramble(const std::string& path);

}  // namespace aqe
