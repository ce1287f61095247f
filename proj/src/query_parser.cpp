#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "vizex/query.hpp"
#include "vizex/series.hpp"

namespace vizex {

namespace {

constexpr std::array<std::string_view, 12> kKeywords{"SELECT", "FROM",    "WHERE", "BECAUSE",   "OR",    "AND",
                                                     "RISING", "FALLING", "WITH",  "BANDWIDTH", "DELTA", "ALPHA"};

enum class Tok { keyword, ident, number, star, comma, cmp, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;  // keywords uppercased
    double number = 0.0;
    Comparator cmp = Comparator::eq;
    SourcePosition pos;
};

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

[[noreturn]] void syntax_error(const SourcePosition& pos, const std::string& msg) {
    throw Error(ErrorCode::SyntaxError,
                "line " + std::to_string(pos.line) + ", col " + std::to_string(pos.col) + ": " + msg, pos);
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : s_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            Token t;
            t.pos = {line_, col_};
            if (i_ >= s_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = s_[i_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const auto start = i_;
                while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) advance();
                t.text = std::string(s_.substr(start, i_ - start));
                if (is_keyword(t.text)) {
                    t.kind = Tok::keyword;
                    t.text = upper(t.text);
                } else {
                    t.kind = Tok::ident;
                }
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
                lex_number(t);
            } else if (c == '*') {
                t.kind = Tok::star;
                t.text = "*";
                advance();
            } else if (c == ',') {
                t.kind = Tok::comma;
                t.text = ",";
                advance();
            } else if (c == '=' || c == '<' || c == '>' || c == '!') {
                lex_comparator(t);
            } else {
                syntax_error(t.pos, "unexpected character '" + std::string(1, c) + "'");
            }
            out.push_back(std::move(t));
        }
    }

private:
    void advance() {
        if (s_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    void skip_space() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) advance();
    }

    bool digit_at(std::size_t k) const { return k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k])); }

    // -?digits[.digits][(e|E)[+-]digits], or -?.digits
    void lex_number(Token& t) {
        const auto start = i_;
        std::size_t k = i_;
        if (s_[k] == '-') ++k;
        std::size_t digits = 0;
        while (digit_at(k)) ++k, ++digits;
        if (k < s_.size() && s_[k] == '.') {
            ++k;
            while (digit_at(k)) ++k, ++digits;
        }
        if (digits == 0) syntax_error(t.pos, "malformed number");
        if (k < s_.size() && (s_[k] == 'e' || s_[k] == 'E')) {
            std::size_t e = k + 1;
            if (e < s_.size() && (s_[e] == '+' || s_[e] == '-')) ++e;
            if (!digit_at(e)) syntax_error(t.pos, "malformed exponent");
            while (digit_at(e)) ++e;
            k = e;
        }
        if (k < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[k])) || s_[k] == '_' || s_[k] == '.')) {
            syntax_error(t.pos, "malformed number");
        }
        const auto text = s_.substr(start, k - start);
        double v = 0.0;
        const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v)) {
            syntax_error(t.pos, "number out of range");
        }
        t.kind = Tok::number;
        t.text = std::string(text);
        t.number = v;
        while (i_ < k) advance();
    }

    void lex_comparator(Token& t) {
        const char c = s_[i_];
        const char next = i_ + 1 < s_.size() ? s_[i_ + 1] : '\0';
        t.kind = Tok::cmp;
        if (c == '=') {
            t.cmp = Comparator::eq;
            t.text = "=";
        } else if (c == '!' && next == '=') {
            t.cmp = Comparator::ne;
            t.text = "!=";
        } else if (c == '<') {
            t.cmp = next == '=' ? Comparator::le : Comparator::lt;
            t.text = next == '=' ? "<=" : "<";
        } else if (c == '>') {
            t.cmp = next == '=' ? Comparator::ge : Comparator::gt;
            t.text = next == '=' ? ">=" : ">";
        } else {
            syntax_error(t.pos, "unexpected character '!'");
        }
        for (std::size_t k = 0; k < t.text.size(); ++k) advance();
    }

    std::string_view s_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::end: return "end of input";
        case Tok::keyword: return "keyword " + t.text;
        case Tok::ident: return "identifier '" + t.text + "'";
        case Tok::number: return "number " + t.text;
        default: return "'" + t.text + "'";
    }
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    QueryAst run() {
        QueryAst q;
        keyword("SELECT");
        if (peek().kind == Tok::star) {
            next();
            q.select_all = true;
        } else {
            q.select_all = false;
            q.select_list.push_back(ident({"'*'", "identifier"}).text);
            while (peek().kind == Tok::comma) {
                next();
                q.select_list.push_back(ident({"identifier"}).text);
            }
        }
        keyword("FROM");
        q.source = ident({"identifier"}).text;
        keyword("WHERE");
        const auto& m = ident({"identifier"});
        q.predicate.metric = m.text;
        q.predicate.pos = m.pos;
        q.predicate.cmp = expect(Tok::cmp, {"comparator"}).cmp;
        q.predicate.literal = expect(Tok::number, {"number"}).number;
        keyword("BECAUSE");
        q.because.push_back(conjunction());
        while (at_keyword("OR")) {
            next();
            q.because.push_back(conjunction());
        }
        if (at_keyword("WITH")) {
            next();
            option(q.options);
            while (peek().kind == Tok::comma) {
                next();
                option(q.options);
            }
        }
        if (peek().kind != Tok::end) {
            fail(q.options == QueryOptions{} ? std::vector<std::string>{"AND", "OR", "RISING", "FALLING", "WITH", "end of input"}
                                             : std::vector<std::string>{"','", "end of input"});
        }
        return q;
    }

private:
    const Token& peek() const { return toks_[i_]; }
    const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
    bool at_keyword(std::string_view kw) const { return peek().kind == Tok::keyword && peek().text == kw; }

    [[noreturn]] void fail(const std::vector<std::string>& expected) const {
        std::string list;
        for (std::size_t k = 0; k < expected.size(); ++k) {
            if (k) list += k + 1 == expected.size() ? " or " : ", ";
            list += expected[k];
        }
        syntax_error(peek().pos, "expected " + list + ", found " + describe(peek()));
    }

    void keyword(std::string_view kw) {
        if (!at_keyword(kw)) fail({std::string(kw)});
        next();
    }

    const Token& expect(Tok kind, const std::vector<std::string>& expected) {
        if (peek().kind != kind) fail(expected);
        return next();
    }

    const Token& ident(const std::vector<std::string>& expected) { return expect(Tok::ident, expected); }

    Conjunction conjunction() {
        Conjunction c;
        c.atoms.push_back(atom());
        while (at_keyword("AND")) {
            next();
            c.atoms.push_back(atom());
        }
        return c;
    }

    KpiAtom atom() {
        const auto& t = ident({"KPI identifier"});
        KpiAtom a{t.text, SignConstraint::any, t.pos};
        if (at_keyword("RISING")) {
            next();
            a.sign = SignConstraint::rising;
        } else if (at_keyword("FALLING")) {
            next();
            a.sign = SignConstraint::falling;
        }
        return a;
    }

    void option(QueryOptions& o) {
        const Token& name = peek();
        std::optional<double>* slot = nullptr;
        if (at_keyword("BANDWIDTH")) slot = &o.bandwidth;
        else if (at_keyword("DELTA")) slot = &o.delta;
        else if (at_keyword("ALPHA")) slot = &o.alpha;
        else fail({"BANDWIDTH", "DELTA", "ALPHA"});
        if (slot->has_value()) syntax_error(name.pos, "duplicate option " + name.text);
        next();
        if (peek().kind != Tok::cmp || peek().cmp != Comparator::eq) fail({"'='"});
        next();
        *slot = expect(Tok::number, {"number"}).number;
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

}  // namespace

bool is_keyword(std::string_view word) {
    const auto u = upper(word);
    return std::find(kKeywords.begin(), kKeywords.end(), u) != kKeywords.end();
}

std::string_view to_string(Comparator c) {
    switch (c) {
        case Comparator::eq: return "=";
        case Comparator::ne: return "!=";
        case Comparator::lt: return "<";
        case Comparator::le: return "<=";
        case Comparator::gt: return ">";
        case Comparator::ge: return ">=";
    }
    return "?";
}

std::string_view to_string(SignConstraint s) {
    switch (s) {
        case SignConstraint::any: return "any";
        case SignConstraint::rising: return "rising";
        case SignConstraint::falling: return "falling";
    }
    return "?";
}

bool compare(double v, Comparator c, double lit) {
    switch (c) {
        case Comparator::eq: return v == lit;
        case Comparator::ne: return v != lit;
        case Comparator::lt: return v < lit;
        case Comparator::le: return v <= lit;
        case Comparator::gt: return v > lit;
        case Comparator::ge: return v >= lit;
    }
    return false;
}

QueryAst parse_query(std::string_view text) { return Parser(Lexer(text).run()).run(); }

std::string pretty_print(const QueryAst& q) {
    std::string out = "SELECT ";
    if (q.select_all) {
        out += "*";
    } else {
        for (std::size_t i = 0; i < q.select_list.size(); ++i) out += (i ? ", " : "") + q.select_list[i];
    }
    out += " FROM " + q.source + " WHERE " + q.predicate.metric + " " + std::string(to_string(q.predicate.cmp)) + " " +
           format_double(q.predicate.literal) + " BECAUSE ";
    for (std::size_t d = 0; d < q.because.size(); ++d) {
        if (d) out += " OR ";
        const auto& atoms = q.because[d].atoms;
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            if (a) out += " AND ";
            out += atoms[a].kpi;
            if (atoms[a].sign == SignConstraint::rising) out += " RISING";
            if (atoms[a].sign == SignConstraint::falling) out += " FALLING";
        }
    }
    std::vector<std::string> opts;
    if (q.options.bandwidth) opts.push_back("BANDWIDTH = " + format_double(*q.options.bandwidth));
    if (q.options.delta) opts.push_back("DELTA = " + format_double(*q.options.delta));
    if (q.options.alpha) opts.push_back("ALPHA = " + format_double(*q.options.alpha));
    for (std::size_t i = 0; i < opts.size(); ++i) out += (i ? ", " : " WITH ") + opts[i];
    return out;
}

}  // namespace vizex
