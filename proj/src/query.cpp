#include "aqe/query.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace aqe {

std::string to_string(AggFn fn) {
    switch (fn) {
        case AggFn::avg: return "AVG";
        case AggFn::sum: return "SUM";
        case AggFn::count: return "COUNT";
    }
    return "?";
}

std::string to_string(CmpOp op) {
    switch (op) {
        case CmpOp::eq: return "=";
        case CmpOp::ne: return "!=";
        case CmpOp::lt: return "<";
        case CmpOp::le: return "<=";
        case CmpOp::gt: return ">";
        case CmpOp::ge: return ">=";
    }
    return "?";
}

namespace {

enum class Tok { ident, number, string, symbol, end };

struct Token {
    Tok kind;
    std::string text;   // ident/symbol/string content
    double number = 0;
    size_t offset = 0;
};

struct Lexer {
    const std::string& src;
    size_t pos = 0;

    Token next() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
        if (pos >= src.size()) return {Tok::end, "", 0, pos};
        const size_t start = pos;
        const char c = src[pos];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
                ++pos;
            return {Tok::ident, src.substr(start, pos - start), 0, start};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos + 1 < src.size() &&
             std::isdigit(static_cast<unsigned char>(src[pos + 1])))) {
            char* end = nullptr;
            const double v = std::strtod(src.c_str() + pos, &end);
            pos = static_cast<size_t>(end - src.c_str());
            return {Tok::number, src.substr(start, pos - start), v, start};
        }
        if (c == '\'') {
            ++pos;
            std::string out;
            while (pos < src.size() && src[pos] != '\'') out.push_back(src[pos++]);
            if (pos >= src.size()) throw ParseError("unterminated string literal", start);
            ++pos;
            return {Tok::string, out, 0, start};
        }
        if (c == '!' || c == '<' || c == '>') {
            ++pos;
            if (pos < src.size() && src[pos] == '=') {
                ++pos;
                return {Tok::symbol, src.substr(start, 2), 0, start};
            }
            if (c == '!') throw ParseError("expected != ", start);
            return {Tok::symbol, std::string(1, c), 0, start};
        }
        if (std::string("(),*+-/^=").find(c) != std::string::npos) {
            ++pos;
            return {Tok::symbol, std::string(1, c), 0, start};
        }
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
};

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

struct Parser {
    Lexer lex;
    Token tok;
    Query query;

    explicit Parser(const std::string& text) : lex{text} { tok = lex.next(); }

    void advance() { tok = lex.next(); }

    bool at_keyword(const char* kw) const {
        return tok.kind == Tok::ident && upper(tok.text) == kw;
    }
    void expect_keyword(const char* kw) {
        if (!at_keyword(kw)) throw ParseError(std::string("expected ") + kw, tok.offset);
        advance();
    }
    bool at_symbol(const char* s) const { return tok.kind == Tok::symbol && tok.text == s; }
    void expect_symbol(const char* s) {
        if (!at_symbol(s)) throw ParseError(std::string("expected '") + s + "'", tok.offset);
        advance();
    }

    size_t column_index(const std::string& name) {
        for (size_t i = 0; i < query.expr_columns.size(); ++i)
            if (query.expr_columns[i] == name) return i;
        query.expr_columns.push_back(name);
        return query.expr_columns.size() - 1;
    }

    std::optional<AggFn> peek_agg() const {
        if (tok.kind != Tok::ident) return std::nullopt;
        const std::string kw = upper(tok.text);
        if (kw == "AVG") return AggFn::avg;
        if (kw == "SUM") return AggFn::sum;
        if (kw == "COUNT") return AggFn::count;
        return std::nullopt;
    }

    // expr := term {(+|-) term}; term := factor {(*|/) factor};
    // factor := ["-"] power; power := atom ["^" INT]
    ExprPtr parse_expr() {
        ExprPtr left = parse_term();
        while (at_symbol("+") || at_symbol("-")) {
            const bool plus = tok.text == "+";
            advance();
            left = Expr::make_binary(plus ? ExprOp::add : ExprOp::sub, left, parse_term());
        }
        return left;
    }
    ExprPtr parse_term() {
        ExprPtr left = parse_factor();
        while (at_symbol("*") || at_symbol("/")) {
            const bool times = tok.text == "*";
            advance();
            left = Expr::make_binary(times ? ExprOp::mul : ExprOp::div, left, parse_factor());
        }
        return left;
    }
    ExprPtr parse_factor() {
        if (at_symbol("-")) {
            advance();
            return Expr::make_neg(parse_factor());
        }
        return parse_power();
    }
    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        while (at_symbol("^")) {
            advance();
            if (tok.kind != Tok::number || tok.number < 0 ||
                tok.number != std::floor(tok.number))
                throw ParseError("exponent must be a nonnegative integer", tok.offset);
            base = Expr::make_pow(base, static_cast<uint32_t>(tok.number));
            advance();
        }
        return base;
    }
    ExprPtr parse_atom() {
        if (tok.kind == Tok::number) {
            const double v = tok.number;
            advance();
            return Expr::make_const(v);
        }
        if (tok.kind == Tok::ident) {
            const std::string name = tok.text;
            advance();
            return Expr::make_column(column_index(name));
        }
        if (at_symbol("(")) {
            advance();
            ExprPtr e = parse_expr();
            expect_symbol(")");
            return e;
        }
        throw ParseError("expected expression", tok.offset);
    }

    Aggregate parse_aggregate(AggFn fn) {
        advance();  // the function keyword
        expect_symbol("(");
        Aggregate agg;
        agg.fn = fn;
        if (fn == AggFn::count) {
            if (!at_symbol("*")) throw ParseError("COUNT takes *", tok.offset);
            advance();
            agg.label = "COUNT(*)";
        } else {
            agg.expr = parse_expr();
            agg.label = to_string(fn) + "(" + expr_to_string(*agg.expr, query.expr_columns) + ")";
        }
        expect_symbol(")");
        return agg;
    }

    CmpOp parse_cmp() {
        if (tok.kind != Tok::symbol) throw ParseError("expected comparison operator", tok.offset);
        CmpOp op;
        if (tok.text == "=") op = CmpOp::eq;
        else if (tok.text == "!=") op = CmpOp::ne;
        else if (tok.text == "<") op = CmpOp::lt;
        else if (tok.text == "<=") op = CmpOp::le;
        else if (tok.text == ">") op = CmpOp::gt;
        else if (tok.text == ">=") op = CmpOp::ge;
        else throw ParseError("expected comparison operator", tok.offset);
        advance();
        return op;
    }

    Query parse() {
        expect_keyword("SELECT");
        for (;;) {
            if (auto fn = peek_agg()) {
                query.aggregates.push_back(parse_aggregate(*fn));
            } else if (tok.kind == Tok::ident) {
                query.select_columns.push_back(tok.text);
                advance();
            } else {
                throw ParseError("expected column or aggregate", tok.offset);
            }
            if (!at_symbol(",")) break;
            advance();
        }
        expect_keyword("FROM");
        if (tok.kind != Tok::ident) throw ParseError("expected table name", tok.offset);
        query.table = tok.text;
        advance();

        if (at_keyword("WHERE")) {
            advance();
            for (;;) {
                if (tok.kind != Tok::ident) throw ParseError("expected column name", tok.offset);
                FilterAtom atom;
                atom.column = tok.text;
                atom.offset = tok.offset;
                advance();
                atom.op = parse_cmp();
                if (tok.kind == Tok::number) {
                    atom.literal_is_number = true;
                    atom.number = tok.number;
                } else if (tok.kind == Tok::string || tok.kind == Tok::ident) {
                    atom.literal_is_number = false;
                    atom.text = tok.text;
                } else if (at_symbol("-")) {
                    advance();
                    if (tok.kind != Tok::number) throw ParseError("expected number", tok.offset);
                    atom.literal_is_number = true;
                    atom.number = -tok.number;
                } else {
                    throw ParseError("expected literal", tok.offset);
                }
                advance();
                query.filter.push_back(std::move(atom));
                if (!at_keyword("AND")) break;
                advance();
            }
        }
        if (at_keyword("GROUP")) {
            advance();
            expect_keyword("BY");
            if (tok.kind != Tok::ident) throw ParseError("expected group column", tok.offset);
            query.group_by = tok.text;
            advance();
        }
        if (at_keyword("HAVING")) {
            advance();
            const auto fn = peek_agg();
            if (!fn) throw ParseError("HAVING needs an aggregate", tok.offset);
            const size_t fn_offset = tok.offset;
            const Aggregate agg = parse_aggregate(*fn);
            size_t index = query.aggregates.size();
            for (size_t i = 0; i < query.aggregates.size(); ++i)
                if (query.aggregates[i].label == agg.label) index = i;
            if (index == query.aggregates.size())
                throw ParseError("HAVING must reference a selected aggregate", fn_offset);
            Having having;
            having.aggregate_index = index;
            having.op = parse_cmp();
            if (having.op == CmpOp::eq || having.op == CmpOp::ne)
                throw ParseError("HAVING supports <, <=, >, >=", fn_offset);
            bool negative = false;
            if (at_symbol("-")) {
                negative = true;
                advance();
            }
            if (tok.kind != Tok::number) throw ParseError("expected threshold value", tok.offset);
            having.value = negative ? -tok.number : tok.number;
            advance();
            query.having = having;
        }
        if (tok.kind != Tok::end) throw ParseError("unexpected trailing input", tok.offset);
        if (query.aggregates.empty())
            throw ParseError("query must select at least one aggregate", 0);
        return query;
    }
};

}  // namespace

Query parse_query(const std::string& text) {
    if (text.empty()) throw ParseError("empty query", 0);
    Parser p(text);
    return p.parse();
}

}  // namespace aqe
