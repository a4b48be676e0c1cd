#pragma once
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aqe/expr.hpp"

namespace aqe {

// Syntax error with the offset of the offending token in the query text.
struct ParseError : std::runtime_error {
    size_t offset;
    ParseError(const std::string& message, size_t offset_)
        : std::runtime_error(message + " (at offset " + std::to_string(offset_) + ")"),
          offset(offset_) {}
};

enum class AggFn { avg, sum, count };
enum class CmpOp { eq, ne, lt, le, gt, ge };

std::string to_string(AggFn fn);
std::string to_string(CmpOp op);

struct Aggregate {
    AggFn fn;
    ExprPtr expr;        // over Query::expr_columns indices; null for COUNT(*)
    std::string label;   // canonical rendering, e.g. "AVG(DepDelay)"
};

struct FilterAtom {
    std::string column;
    CmpOp op;
    bool literal_is_number;
    double number = 0.0;
    std::string text;    // categorical literal
    size_t offset;       // for error reporting at plan time
};

struct Having {
    size_t aggregate_index;  // into Query::aggregates
    CmpOp op;                // lt/le/gt/ge
    double value;
};

struct Query {
    std::vector<std::string> select_columns;  // bare identifiers in the select list
    std::vector<Aggregate> aggregates;
    std::string table;
    std::vector<FilterAtom> filter;           // conjunction
    std::optional<std::string> group_by;
    std::optional<Having> having;
    std::vector<std::string> expr_columns;    // names referenced by aggregate expressions
};

// Parses the mini-SQL dialect (see README for the grammar). Keywords are
// case-insensitive; identifiers are not.
Query parse_query(const std::string& text);

}  // namespace aqe
