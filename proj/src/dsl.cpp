#include "aptc/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <variant>

namespace aptc {
namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok {
    Ident,
    Int,
    Dot,
    DotDot,
    Plus,
    Minus,
    Star,
    Slash,
    Pipe,
    PipePipe,
    Amp,
    UnlessOp,  // <|
    Leq,       // <=
    Arrow,     // ->
    LPar,
    RPar,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Colon,
    Eq,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int col = 1;
};

class Lexer {
  public:
    Lexer(const std::string& src, std::vector<SpecDiagnostic>& diags)
        : src_(src), diags_(diags) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_blank();
            Token t = next();
            out.push_back(t);
            if (t.kind == Tok::End) break;
        }
        return out;
    }

  private:
    const std::string& src_;
    std::vector<SpecDiagnostic>& diags_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }
    char take() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_blank() {
        for (;;) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                take();
            } else if (c == '#' || (c == '/' && peek(1) == '/')) {
                while (peek() != '\n' && peek() != '\0') take();
            } else {
                return;
            }
        }
    }

    Token make(Tok k, std::string text, int line, int col) {
        return {k, std::move(text), line, col};
    }

    Token next() {
        int line = line_, col = col_;
        char c = peek();
        if (c == '\0') return make(Tok::End, "", line, col);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string id;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
                id.push_back(take());
            return make(Tok::Ident, std::move(id), line, col);
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            while (std::isdigit(static_cast<unsigned char>(peek()))) num.push_back(take());
            return make(Tok::Int, std::move(num), line, col);
        }
        take();
        switch (c) {
            case '.':
                if (peek() == '.') {
                    take();
                    return make(Tok::DotDot, "..", line, col);
                }
                return make(Tok::Dot, ".", line, col);
            case '+': return make(Tok::Plus, "+", line, col);
            case '-':
                if (peek() == '>') {
                    take();
                    return make(Tok::Arrow, "->", line, col);
                }
                return make(Tok::Minus, "-", line, col);
            case '*': return make(Tok::Star, "*", line, col);
            case '/': return make(Tok::Slash, "/", line, col);
            case '|':
                if (peek() == '|') {
                    take();
                    return make(Tok::PipePipe, "||", line, col);
                }
                return make(Tok::Pipe, "|", line, col);
            case '&': return make(Tok::Amp, "&", line, col);
            case '<':
                if (peek() == '|') {
                    take();
                    return make(Tok::UnlessOp, "<|", line, col);
                }
                if (peek() == '=') {
                    take();
                    return make(Tok::Leq, "<=", line, col);
                }
                break;
            case '(': return make(Tok::LPar, "(", line, col);
            case ')': return make(Tok::RPar, ")", line, col);
            case '{': return make(Tok::LBrace, "{", line, col);
            case '}': return make(Tok::RBrace, "}", line, col);
            case '[': return make(Tok::LBrack, "[", line, col);
            case ']': return make(Tok::RBrack, "]", line, col);
            case ',': return make(Tok::Comma, ",", line, col);
            case ';': return make(Tok::Semi, ";", line, col);
            case ':': return make(Tok::Colon, ":", line, col);
            case '=': return make(Tok::Eq, "=", line, col);
            default: break;
        }
        diags_.push_back({line, col, Severity::Error,
                          std::string("unexpected character '") + c + "'"});
        return next();
    }
};

// ---------------------------------------------------------------------------
// Raw syntax trees (pre-expansion)
// ---------------------------------------------------------------------------

struct IdxExpr;
using IdxPtr = std::shared_ptr<IdxExpr>;

// Index/argument expressions: integers, symbols (parameters, bound
// variables, or literal data values), arithmetic, and data-map application.
struct IdxExpr {
    enum Kind { Num, Sym, Add, Sub, Mul, Neg, MapApp } kind = Num;
    int num = 0;
    std::string sym;  // Sym: symbol; MapApp: function name
    IdxPtr lhs, rhs;  // Add/Sub/Mul; Neg/MapApp use lhs
    int line = 0, col = 0;
};

struct RawName {
    std::string base;
    std::vector<IdxPtr> idx;
    int line = 0, col = 0;
};

struct RawEvent {
    RawName name;
    std::vector<IdxPtr> args;
};

struct RawTerm;
using RawPtr = std::shared_ptr<RawTerm>;

struct Binder {
    std::string var;
    enum Dom { OverDelta, OverSet, OverRange } dom = OverDelta;
    std::vector<std::string> set_values;
    IdxPtr lo, hi;
    int line = 0, col = 0;
};

struct RawTerm {
    enum Kind {
        Ev,       // action occurrence or process reference (resolved later)
        TauK,
        DeltaK,
        ShadowPlain,
        Shadow,   // shadow(event, index)
        Sum,
        SeqK,
        AltK,
        ParK,
        CommK,
        WParK,
        UnlessK,
        ThetaK,
        EncapsK,
        AbstrK,
        StateK,
    } kind = TauK;
    RawEvent ev;                     // Ev / Shadow base
    IdxPtr shadow_idx;               // Shadow
    std::vector<Binder> binders;     // Sum
    std::vector<RawName> names;      // EncapsK / AbstrK
    std::string state;               // StateK
    RawPtr a, b;                     // operands
    int line = 0, col = 0;
};

struct RawStmt {
    enum Kind {
        Pattern,
        Param,
        DeltaDecl,
        ActionDecl,
        MapDecl,
        Proc,
        Gamma,
        Conflict,
        Race,
        Causal,
        Block,
        Hide,
        States,
        Table,
        Compose,
        Claim,
    } kind = Pattern;
    int line = 0, col = 0;

    std::string ident;                              // Pattern/Param/MapDecl name, Table state
    int value = 0;                                  // Param
    std::vector<std::string> values;                // DeltaDecl / States
    std::vector<std::pair<RawName, int>> actions;   // ActionDecl: name/arity
    std::vector<std::pair<std::string, std::string>> map_rows;  // MapDecl
    RawName proc_name;                              // Proc
    RawPtr term;                                    // Proc body / Compose / Claim
    RawEvent e1, e2, e3;                            // Gamma(e1,e2)=e3 / Conflict / Race / Causal
    std::vector<RawName> name_list;                 // Block / Hide
    std::vector<Binder> for_clause;
    RawName table_action, table_result;             // Table row
    std::string table_goto;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
  public:
    Parser(std::vector<Token> toks, std::vector<SpecDiagnostic>& diags)
        : toks_(std::move(toks)), diags_(diags) {}

    std::vector<RawStmt> run() {
        std::vector<RawStmt> out;
        while (!at(Tok::End)) {
            if (auto s = statement())
                out.push_back(std::move(*s));
            else
                sync();  // resume at the next statement boundary
        }
        return out;
    }

  private:
    std::vector<Token> toks_;
    std::vector<SpecDiagnostic>& diags_;
    std::size_t pos_ = 0;

    const Token& cur() const { return toks_[pos_]; }
    bool at(Tok k) const { return cur().kind == k; }
    bool at_ident(const char* kw) const { return at(Tok::Ident) && cur().text == kw; }
    Token take() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }

    void error_here(const std::string& msg) {
        diags_.push_back({cur().line, cur().col, Severity::Error, msg});
    }
    bool expect(Tok k, const char* what) {
        if (at(k)) {
            take();
            return true;
        }
        error_here(std::string("expected ") + what);
        return false;
    }
    // Skip to just past the next ';' (or to the end) after a syntax error.
    void sync() {
        while (!at(Tok::End)) {
            if (take().kind == Tok::Semi) return;
        }
    }

    std::optional<std::string> ident(const char* what) {
        if (at(Tok::Ident)) return take().text;
        error_here(std::string("expected ") + what);
        return std::nullopt;
    }

    // --- index expressions -------------------------------------------------

    IdxPtr idx_expr() {
        IdxPtr e = idx_term();
        while (e && (at(Tok::Plus) || at(Tok::Minus))) {
            Token op = take();
            IdxPtr r = idx_term();
            if (!r) return nullptr;
            auto n = std::make_shared<IdxExpr>();
            n->kind = op.kind == Tok::Plus ? IdxExpr::Add : IdxExpr::Sub;
            n->lhs = e;
            n->rhs = r;
            n->line = op.line;
            n->col = op.col;
            e = n;
        }
        return e;
    }
    IdxPtr idx_term() {
        IdxPtr e = idx_factor();
        while (e && at(Tok::Star)) {
            Token op = take();
            IdxPtr r = idx_factor();
            if (!r) return nullptr;
            auto n = std::make_shared<IdxExpr>();
            n->kind = IdxExpr::Mul;
            n->lhs = e;
            n->rhs = r;
            n->line = op.line;
            n->col = op.col;
            e = n;
        }
        return e;
    }
    IdxPtr idx_factor() {
        auto n = std::make_shared<IdxExpr>();
        n->line = cur().line;
        n->col = cur().col;
        if (at(Tok::Minus)) {
            take();
            n->kind = IdxExpr::Neg;
            n->lhs = idx_factor();
            return n->lhs ? n : nullptr;
        }
        if (at(Tok::Int)) {
            n->kind = IdxExpr::Num;
            n->num = std::stoi(take().text);
            return n;
        }
        if (at(Tok::LPar)) {
            take();
            IdxPtr inner = idx_expr();
            expect(Tok::RPar, "')'");
            return inner;
        }
        if (at(Tok::Ident)) {
            std::string name = take().text;
            if (at(Tok::LPar)) {  // data-map application F(expr)
                take();
                n->kind = IdxExpr::MapApp;
                n->sym = std::move(name);
                n->lhs = idx_expr();
                expect(Tok::RPar, "')'");
                return n->lhs ? n : nullptr;
            }
            n->kind = IdxExpr::Sym;
            n->sym = std::move(name);
            return n;
        }
        error_here("expected an index expression");
        return nullptr;
    }

    // --- names, events, binders --------------------------------------------

    std::optional<RawName> raw_name() {
        RawName n;
        n.line = cur().line;
        n.col = cur().col;
        auto base = ident("a name");
        if (!base) return std::nullopt;
        n.base = *base;
        if (at(Tok::LBrack)) {
            take();
            for (;;) {
                IdxPtr e = idx_expr();
                if (!e) return std::nullopt;
                n.idx.push_back(std::move(e));
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
            if (!expect(Tok::RBrack, "']'")) return std::nullopt;
        }
        return n;
    }

    std::optional<RawEvent> raw_event() {
        RawEvent e;
        auto n = raw_name();
        if (!n) return std::nullopt;
        e.name = std::move(*n);
        if (at(Tok::LPar)) {
            take();
            if (!at(Tok::RPar)) {
                for (;;) {
                    IdxPtr a = idx_expr();
                    if (!a) return std::nullopt;
                    e.args.push_back(std::move(a));
                    if (at(Tok::Comma)) {
                        take();
                        continue;
                    }
                    break;
                }
            }
            if (!expect(Tok::RPar, "')'")) return std::nullopt;
        }
        return e;
    }

    std::optional<Binder> binder() {
        Binder b;
        b.line = cur().line;
        b.col = cur().col;
        auto v = ident("a binder variable");
        if (!v) return std::nullopt;
        b.var = *v;
        if (!at_ident("in")) {
            error_here("expected 'in'");
            return std::nullopt;
        }
        take();
        if (at_ident("Delta")) {
            take();
            b.dom = Binder::OverDelta;
            return b;
        }
        if (at(Tok::LBrace)) {
            take();
            b.dom = Binder::OverSet;
            for (;;) {
                if (at(Tok::Ident) || at(Tok::Int)) {
                    b.set_values.push_back(take().text);
                } else {
                    error_here("expected a value");
                    return std::nullopt;
                }
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
            if (!expect(Tok::RBrace, "'}'")) return std::nullopt;
            return b;
        }
        b.dom = Binder::OverRange;
        b.lo = idx_expr();
        if (!b.lo) return std::nullopt;
        if (!expect(Tok::DotDot, "'..'")) return std::nullopt;
        b.hi = idx_expr();
        if (!b.hi) return std::nullopt;
        return b;
    }

    std::optional<std::vector<Binder>> binder_list() {
        std::vector<Binder> out;
        for (;;) {
            auto b = binder();
            if (!b) return std::nullopt;
            out.push_back(std::move(*b));
            if (at(Tok::Comma)) {
                take();
                continue;
            }
            return out;
        }
    }

    // Optional trailing `for i in ..., j in ...` on a declaration.
    std::optional<std::vector<Binder>> opt_for_clause() {
        if (!at_ident("for")) return std::vector<Binder>{};
        take();
        return binder_list();
    }

    // --- terms -------------------------------------------------------------
    // Precedence, loosest to tightest: +  <|  &  |  ||  .
    // `sum` swallows everything to its right up to the enclosing delimiter.

    RawPtr node(RawTerm::Kind k) {
        auto n = std::make_shared<RawTerm>();
        n->kind = k;
        n->line = cur().line;
        n->col = cur().col;
        return n;
    }

    RawPtr term() {
        if (at_ident("sum")) {
            RawPtr n = node(RawTerm::Sum);
            take();
            auto bs = binder_list();
            if (!bs) return nullptr;
            n->binders = std::move(*bs);
            if (!expect(Tok::Colon, "':'")) return nullptr;
            n->a = term();
            return n->a ? n : nullptr;
        }
        return alt_expr();
    }

    RawPtr alt_expr() {
        RawPtr e = unless_expr();
        while (e && at(Tok::Plus)) {
            RawPtr n = node(RawTerm::AltK);
            take();
            RawPtr r = at_ident("sum") ? term() : unless_expr();
            if (!r) return nullptr;
            n->a = e;
            n->b = r;
            e = n;
        }
        return e;
    }
    RawPtr unless_expr() {
        RawPtr e = wpar_expr();
        while (e && at(Tok::UnlessOp)) {
            RawPtr n = node(RawTerm::UnlessK);
            take();
            RawPtr r = wpar_expr();
            if (!r) return nullptr;
            n->a = e;
            n->b = r;
            e = n;
        }
        return e;
    }
    RawPtr wpar_expr() {
        RawPtr e = comm_expr();
        while (e && at(Tok::Amp)) {
            RawPtr n = node(RawTerm::WParK);
            take();
            RawPtr r = comm_expr();
            if (!r) return nullptr;
            n->a = e;
            n->b = r;
            e = n;
        }
        return e;
    }
    RawPtr comm_expr() {
        RawPtr e = par_expr();
        while (e && at(Tok::Pipe)) {
            RawPtr n = node(RawTerm::CommK);
            take();
            RawPtr r = par_expr();
            if (!r) return nullptr;
            n->a = e;
            n->b = r;
            e = n;
        }
        return e;
    }
    RawPtr par_expr() {
        RawPtr e = seq_expr();
        while (e && at(Tok::PipePipe)) {
            RawPtr n = node(RawTerm::ParK);
            take();
            RawPtr r = seq_expr();
            if (!r) return nullptr;
            n->a = e;
            n->b = r;
            e = n;
        }
        return e;
    }
    RawPtr seq_expr() {
        RawPtr e = primary();
        if (!e) return nullptr;
        if (at(Tok::Dot)) {
            RawPtr n = node(RawTerm::SeqK);
            take();
            RawPtr r = seq_expr();  // right-associated
            if (!r) return nullptr;
            n->a = e;
            n->b = r;
            return n;
        }
        return e;
    }

    std::optional<std::vector<RawName>> brace_names() {
        if (!expect(Tok::LBrace, "'{'")) return std::nullopt;
        std::vector<RawName> out;
        if (!at(Tok::RBrace)) {
            for (;;) {
                auto n = raw_name();
                if (!n) return std::nullopt;
                out.push_back(std::move(*n));
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
        }
        if (!expect(Tok::RBrace, "'}'")) return std::nullopt;
        return out;
    }

    RawPtr primary() {
        if (at(Tok::LPar)) {
            take();
            RawPtr e = term();
            if (!e) return nullptr;
            expect(Tok::RPar, "')'");
            return e;
        }
        if (at_ident("tau")) {
            RawPtr n = node(RawTerm::TauK);
            take();
            return n;
        }
        if (at_ident("delta")) {
            RawPtr n = node(RawTerm::DeltaK);
            take();
            return n;
        }
        if (at_ident("theta")) {
            RawPtr n = node(RawTerm::ThetaK);
            take();
            if (!expect(Tok::LPar, "'('")) return nullptr;
            n->a = term();
            if (!n->a) return nullptr;
            expect(Tok::RPar, "')'");
            return n;
        }
        if (at_ident("encap") || at_ident("abs")) {
            RawPtr n = node(cur().text == "encap" ? RawTerm::EncapsK : RawTerm::AbstrK);
            take();
            auto names = brace_names();
            if (!names) return nullptr;
            n->names = std::move(*names);
            if (!expect(Tok::LPar, "'('")) return nullptr;
            n->a = term();
            if (!n->a) return nullptr;
            expect(Tok::RPar, "')'");
            return n;
        }
        if (at_ident("state")) {
            RawPtr n = node(RawTerm::StateK);
            take();
            if (!expect(Tok::LBrack, "'['")) return nullptr;
            auto s = ident("a state id");
            if (!s) return nullptr;
            n->state = *s;
            if (!expect(Tok::RBrack, "']'")) return nullptr;
            if (!expect(Tok::LPar, "'('")) return nullptr;
            n->a = term();
            if (!n->a) return nullptr;
            expect(Tok::RPar, "')'");
            return n;
        }
        if (at_ident("shadow")) {
            RawPtr n = node(RawTerm::ShadowPlain);
            take();
            if (at(Tok::LPar)) {
                take();
                n->kind = RawTerm::Shadow;
                auto e = raw_event();
                if (!e) return nullptr;
                n->ev = std::move(*e);
                if (!expect(Tok::Comma, "','")) return nullptr;
                n->shadow_idx = idx_expr();
                if (!n->shadow_idx) return nullptr;
                expect(Tok::RPar, "')'");
            }
            return n;
        }
        if (at(Tok::Ident)) {
            RawPtr n = node(RawTerm::Ev);
            auto e = raw_event();
            if (!e) return nullptr;
            n->ev = std::move(*e);
            return n;
        }
        error_here("expected a term");
        return nullptr;
    }

    // --- statements --------------------------------------------------------

    std::optional<RawStmt> statement() {
        RawStmt s;
        s.line = cur().line;
        s.col = cur().col;
        if (!at(Tok::Ident)) {
            error_here("expected a statement");
            return std::nullopt;
        }
        const std::string kw = cur().text;

        auto finish = [&]() -> std::optional<RawStmt> {
            if (!expect(Tok::Semi, "';'")) return std::nullopt;
            return s;
        };
        auto with_for = [&]() -> bool {
            auto fc = opt_for_clause();
            if (!fc) return false;
            s.for_clause = std::move(*fc);
            return true;
        };

        if (kw == "pattern") {
            take();
            s.kind = RawStmt::Pattern;
            auto n = ident("a pattern name");
            if (!n) return std::nullopt;
            s.ident = *n;
            return finish();
        }
        if (kw == "param") {
            take();
            s.kind = RawStmt::Param;
            auto n = ident("a parameter name");
            if (!n) return std::nullopt;
            s.ident = *n;
            if (!expect(Tok::Eq, "'='")) return std::nullopt;
            if (!at(Tok::Int)) {
                error_here("expected an integer");
                return std::nullopt;
            }
            s.value = std::stoi(take().text);
            return finish();
        }
        if (kw == "delta") {
            take();
            s.kind = RawStmt::DeltaDecl;
            if (!expect(Tok::Eq, "'='")) return std::nullopt;
            if (!expect(Tok::LBrace, "'{'")) return std::nullopt;
            if (!at(Tok::RBrace)) {
                for (;;) {
                    if (at(Tok::Ident) || at(Tok::Int)) {
                        s.values.push_back(take().text);
                    } else {
                        error_here("expected a data value");
                        return std::nullopt;
                    }
                    if (at(Tok::Comma)) {
                        take();
                        continue;
                    }
                    break;
                }
            }
            if (!expect(Tok::RBrace, "'}'")) return std::nullopt;
            return finish();
        }
        if (kw == "action") {
            take();
            s.kind = RawStmt::ActionDecl;
            for (;;) {
                auto n = raw_name();
                if (!n) return std::nullopt;
                int arity = 0;
                if (at(Tok::Slash)) {
                    take();
                    if (!at(Tok::Int)) {
                        error_here("expected an arity");
                        return std::nullopt;
                    }
                    arity = std::stoi(take().text);
                }
                s.actions.emplace_back(std::move(*n), arity);
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
            if (!with_for()) return std::nullopt;
            return finish();
        }
        if (kw == "map") {
            take();
            s.kind = RawStmt::MapDecl;
            auto n = ident("a map name");
            if (!n) return std::nullopt;
            s.ident = *n;
            if (!expect(Tok::Colon, "':'")) return std::nullopt;
            for (;;) {
                if (!(at(Tok::Ident) || at(Tok::Int))) {
                    error_here("expected a value");
                    return std::nullopt;
                }
                std::string from = take().text;
                if (!expect(Tok::Arrow, "'->'")) return std::nullopt;
                if (!(at(Tok::Ident) || at(Tok::Int))) {
                    error_here("expected a value");
                    return std::nullopt;
                }
                s.map_rows.emplace_back(std::move(from), take().text);
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
            return finish();
        }
        if (kw == "proc") {
            take();
            s.kind = RawStmt::Proc;
            auto n = raw_name();
            if (!n) return std::nullopt;
            s.proc_name = std::move(*n);
            if (!expect(Tok::Eq, "'='")) return std::nullopt;
            s.term = term();
            if (!s.term) return std::nullopt;
            if (!with_for()) return std::nullopt;
            return finish();
        }
        if (kw == "gamma") {
            take();
            s.kind = RawStmt::Gamma;
            if (!expect(Tok::LPar, "'('")) return std::nullopt;
            auto a = raw_event();
            if (!a) return std::nullopt;
            s.e1 = std::move(*a);
            if (!expect(Tok::Comma, "','")) return std::nullopt;
            auto b = raw_event();
            if (!b) return std::nullopt;
            s.e2 = std::move(*b);
            if (!expect(Tok::RPar, "')'")) return std::nullopt;
            if (!expect(Tok::Eq, "'='")) return std::nullopt;
            auto c = raw_event();
            if (!c) return std::nullopt;
            s.e3 = std::move(*c);
            if (!with_for()) return std::nullopt;
            return finish();
        }
        if (kw == "conflict" || kw == "race") {
            take();
            s.kind = kw == "conflict" ? RawStmt::Conflict : RawStmt::Race;
            if (!expect(Tok::LPar, "'('")) return std::nullopt;
            auto a = raw_event();
            if (!a) return std::nullopt;
            s.e1 = std::move(*a);
            if (!expect(Tok::Comma, "','")) return std::nullopt;
            auto b = raw_event();
            if (!b) return std::nullopt;
            s.e2 = std::move(*b);
            if (!expect(Tok::RPar, "')'")) return std::nullopt;
            if (!with_for()) return std::nullopt;
            return finish();
        }
        if (kw == "causal") {
            take();
            s.kind = RawStmt::Causal;
            if (!expect(Tok::LPar, "'('")) return std::nullopt;
            auto a = raw_event();
            if (!a) return std::nullopt;
            s.e1 = std::move(*a);
            if (!expect(Tok::Leq, "'<='")) return std::nullopt;
            auto b = raw_event();
            if (!b) return std::nullopt;
            s.e2 = std::move(*b);
            if (!expect(Tok::RPar, "')'")) return std::nullopt;
            if (!with_for()) return std::nullopt;
            return finish();
        }
        if (kw == "block" || kw == "hide") {
            take();
            s.kind = kw == "block" ? RawStmt::Block : RawStmt::Hide;
            for (;;) {
                auto n = raw_name();
                if (!n) return std::nullopt;
                s.name_list.push_back(std::move(*n));
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
            if (!with_for()) return std::nullopt;
            return finish();
        }
        if (kw == "states") {
            take();
            s.kind = RawStmt::States;
            for (;;) {
                auto n = ident("a state id");
                if (!n) return std::nullopt;
                s.values.push_back(*n);
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
            return finish();
        }
        if (kw == "table") {
            take();
            s.kind = RawStmt::Table;
            auto st = ident("a state id");
            if (!st) return std::nullopt;
            s.ident = *st;
            if (!expect(Tok::Colon, "':'")) return std::nullopt;
            auto act = raw_name();
            if (!act) return std::nullopt;
            s.table_action = std::move(*act);
            if (!expect(Tok::Arrow, "'->'")) return std::nullopt;
            auto res = raw_name();
            if (!res) return std::nullopt;
            s.table_result = std::move(*res);
            if (at_ident("goto")) {
                take();
                auto tgt = ident("a state id");
                if (!tgt) return std::nullopt;
                s.table_goto = *tgt;
            }
            if (!with_for()) return std::nullopt;
            return finish();
        }
        if (kw == "compose" || kw == "claim") {
            take();
            s.kind = kw == "compose" ? RawStmt::Compose : RawStmt::Claim;
            if (!expect(Tok::Eq, "'='")) return std::nullopt;
            s.term = term();
            if (!s.term) return std::nullopt;
            return finish();
        }
        error_here("unknown statement '" + kw + "'");
        return std::nullopt;
    }
};

// ---------------------------------------------------------------------------
// Expansion: families, binders and declarations to a concrete PatternSpec
// ---------------------------------------------------------------------------

using Bindings = std::map<std::string, std::string>;

class Expander {
  public:
    Expander(std::vector<RawStmt> stmts, std::map<std::string, int> overrides,
             std::vector<SpecDiagnostic>& diags)
        : stmts_(std::move(stmts)), overrides_(std::move(overrides)), diags_(diags) {}

    std::optional<PatternSpec> run() {
        collect_globals();
        enumerate_procs();
        expand_bodies();
        expand_env();
        close_spec();
        if (had_error_) return std::nullopt;
        validate();
        if (had_error_) return std::nullopt;
        return std::move(spec_);
    }

  private:
    std::vector<RawStmt> stmts_;
    std::map<std::string, int> overrides_;
    std::vector<SpecDiagnostic>& diags_;
    PatternSpec spec_;
    bool had_error_ = false;

    std::set<std::string> proc_names_;
    std::map<std::string, Term> equations_;
    std::vector<std::string> state_ids_;
    StateSpec table_;
    bool any_table_ = false;
    // gamma directions as literally written, to drive the symmetry warning
    std::set<std::pair<std::string, std::string>> gamma_written_;

    void report(int line, int col, Severity sev, std::string msg) {
        if (sev == Severity::Error) had_error_ = true;
        diags_.push_back({line, col, sev, std::move(msg)});
    }

    // --- evaluation of index expressions -----------------------------------

    // A value is a string; numeric strings take part in arithmetic.
    static std::optional<long> as_int(const std::string& v) {
        if (v.empty()) return std::nullopt;
        std::size_t i = v[0] == '-' ? 1 : 0;
        if (i == v.size()) return std::nullopt;
        for (std::size_t j = i; j < v.size(); ++j)
            if (!std::isdigit(static_cast<unsigned char>(v[j]))) return std::nullopt;
        return std::stol(v);
    }

    std::optional<std::string> eval(const IdxPtr& e, const Bindings& b) {
        switch (e->kind) {
            case IdxExpr::Num: return std::to_string(e->num);
            case IdxExpr::Sym: {
                auto it = b.find(e->sym);
                if (it != b.end()) return it->second;
                auto pit = spec_.params.find(e->sym);
                if (pit != spec_.params.end()) return std::to_string(pit->second);
                return e->sym;  // a literal data value
            }
            case IdxExpr::Neg: {
                auto v = eval_num(e->lhs, b);
                if (!v) return std::nullopt;
                return std::to_string(-*v);
            }
            case IdxExpr::MapApp: {
                auto v = eval(e->lhs, b);
                if (!v) return std::nullopt;
                return spec_.env.apply_data_map(e->sym, *v);
            }
            default: {
                auto l = eval_num(e->lhs, b), r = eval_num(e->rhs, b);
                if (!l || !r) return std::nullopt;
                long v = e->kind == IdxExpr::Add   ? *l + *r
                         : e->kind == IdxExpr::Sub ? *l - *r
                                                   : *l * *r;
                return std::to_string(v);
            }
        }
    }
    std::optional<long> eval_num(const IdxPtr& e, const Bindings& b) {
        auto v = eval(e, b);
        if (!v) return std::nullopt;
        auto n = as_int(*v);
        if (!n) {
            report(e->line, e->col, Severity::Error,
                   "arithmetic on non-numeric value '" + *v + "'");
            return std::nullopt;
        }
        return n;
    }

    std::optional<std::string> eval_name(const RawName& n, const Bindings& b) {
        std::string out = n.base;
        if (!n.idx.empty()) {
            out += "[";
            for (std::size_t i = 0; i < n.idx.size(); ++i) {
                auto v = eval(n.idx[i], b);
                if (!v) return std::nullopt;
                if (i) out += ",";
                out += *v;
            }
            out += "]";
        }
        return out;
    }

    std::optional<ActionLabel> eval_event(const RawEvent& e, const Bindings& b,
                                          bool record_arity = true) {
        auto name = eval_name(e.name, b);
        if (!name) return std::nullopt;
        std::vector<std::string> args;
        for (const auto& a : e.args) {
            auto v = eval(a, b);
            if (!v) return std::nullopt;
            args.push_back(*v);
        }
        if (record_arity) note_arity(*name, static_cast<int>(args.size()), e.name.line, e.name.col);
        return ActionLabel::ordinary(*name, std::move(args));
    }

    void note_arity(const std::string& name, int arity, int line, int col) {
        auto [it, fresh] = spec_.actions.emplace(name, arity);
        if (!fresh && it->second != arity)
            report(line, col, Severity::Error,
                   "action '" + name + "' used with " + std::to_string(arity) +
                       " argument(s) but declared/used with " + std::to_string(it->second));
    }

    // --- binder products ---------------------------------------------------

    std::optional<std::vector<std::vector<std::string>>> domain_values(const Binder& bd,
                                                                       const Bindings& outer) {
        std::vector<std::string> vals;
        switch (bd.dom) {
            case Binder::OverDelta:
                vals = spec_.delta;
                if (vals.empty())
                    report(bd.line, bd.col, Severity::Warning,
                           "binder over Delta but the data domain is empty");
                break;
            case Binder::OverSet: vals = bd.set_values; break;
            case Binder::OverRange: {
                auto lo = eval_num(bd.lo, outer), hi = eval_num(bd.hi, outer);
                if (!lo || !hi) return std::nullopt;
                for (long v = *lo; v <= *hi; ++v) vals.push_back(std::to_string(v));
                break;
            }
        }
        return std::vector<std::vector<std::string>>{std::move(vals)};
    }

    // All assignments of the binder list, in declaration-major order. Later
    // binder domains may mention earlier binders (e.g. `j in i+1..n`).
    std::optional<std::vector<Bindings>> assignments(const std::vector<Binder>& bs,
                                                     const Bindings& outer) {
        std::vector<Bindings> out{outer};
        for (const auto& bd : bs) {
            std::vector<Bindings> next;
            for (const auto& base : out) {
                auto doms = domain_values(bd, base);
                if (!doms) return std::nullopt;
                for (const auto& v : (*doms)[0]) {
                    Bindings b2 = base;
                    b2[bd.var] = v;
                    next.push_back(std::move(b2));
                }
            }
            out = std::move(next);
        }
        return out;
    }

    // --- term expansion ----------------------------------------------------

    // `resolve` maps a fully expanded bare name to a reference term, or null
    // when the name is an ordinary action.
    template <typename Resolve>
    Term expand_term(const RawPtr& t, const Bindings& b, const Resolve& resolve) {
        switch (t->kind) {
            case RawTerm::TauK: return tau_term();
            case RawTerm::DeltaK: return delta_term();
            case RawTerm::ShadowPlain: return atom(ActionLabel::shadow_plain());
            case RawTerm::Shadow: {
                auto base = eval_event(t->ev, b);
                if (!base) return nullptr;
                auto idx = eval_num(t->shadow_idx, b);
                if (!idx) return nullptr;
                if (*idx < 1) {
                    report(t->line, t->col, Severity::Error,
                           "shadow index must be at least 1");
                    return nullptr;
                }
                return atom(ActionLabel::shadow(base->name, base->args,
                                                static_cast<int>(*idx)));
            }
            case RawTerm::Ev: {
                auto name = eval_name(t->ev.name, b);
                if (!name) return nullptr;
                if (t->ev.args.empty()) {
                    bool before = had_error_;
                    if (Term ref = resolve(*name, t->line, t->col)) return ref;
                    if (had_error_ && !before) return nullptr;
                } else if (proc_names_.count(*name)) {
                    report(t->line, t->col, Severity::Error,
                           "process reference '" + *name + "' cannot take data arguments");
                    return nullptr;
                }
                auto ev = eval_event(t->ev, b);
                if (!ev) return nullptr;
                return atom(*ev);
            }
            case RawTerm::Sum: {
                auto asn = assignments(t->binders, b);
                if (!asn) return nullptr;
                std::vector<Term> arms;
                for (const auto& b2 : *asn) {
                    Term arm = expand_term(t->a, b2, resolve);
                    if (!arm) return nullptr;
                    arms.push_back(std::move(arm));
                }
                if (arms.empty()) return delta_term();  // an empty sum offers nothing
                return alt(std::move(arms));
            }
            case RawTerm::SeqK: {
                Term l = expand_term(t->a, b, resolve), r = l ? expand_term(t->b, b, resolve) : nullptr;
                return r ? seq(l, r) : nullptr;
            }
            case RawTerm::AltK: {
                Term l = expand_term(t->a, b, resolve), r = l ? expand_term(t->b, b, resolve) : nullptr;
                return r ? alt(l, r) : nullptr;
            }
            case RawTerm::ParK: {
                Term l = expand_term(t->a, b, resolve), r = l ? expand_term(t->b, b, resolve) : nullptr;
                return r ? par(l, r) : nullptr;
            }
            case RawTerm::CommK: {
                Term l = expand_term(t->a, b, resolve), r = l ? expand_term(t->b, b, resolve) : nullptr;
                return r ? comm(l, r) : nullptr;
            }
            case RawTerm::WParK: {
                Term l = expand_term(t->a, b, resolve), r = l ? expand_term(t->b, b, resolve) : nullptr;
                return r ? wpar(l, r) : nullptr;
            }
            case RawTerm::UnlessK: {
                Term l = expand_term(t->a, b, resolve), r = l ? expand_term(t->b, b, resolve) : nullptr;
                return r ? unless(l, r) : nullptr;
            }
            case RawTerm::ThetaK: {
                Term k = expand_term(t->a, b, resolve);
                return k ? theta(k) : nullptr;
            }
            case RawTerm::EncapsK:
            case RawTerm::AbstrK: {
                std::vector<std::string> names;
                for (const auto& n : t->names) {
                    auto v = eval_name(n, b);
                    if (!v) return nullptr;
                    names.push_back(*v);
                }
                Term k = expand_term(t->a, b, resolve);
                if (!k) return nullptr;
                return t->kind == RawTerm::EncapsK ? encaps(std::move(names), k)
                                                   : abstr(std::move(names), k);
            }
            case RawTerm::StateK: {
                Term k = expand_term(t->a, b, resolve);
                return k ? state_op(t->state, k) : nullptr;
            }
        }
        return nullptr;
    }

    // --- statement phases --------------------------------------------------

    void collect_globals() {
        bool named = false;
        for (const auto& s : stmts_) {
            switch (s.kind) {
                case RawStmt::Pattern:
                    if (named)
                        report(s.line, s.col, Severity::Error, "pattern name declared twice");
                    spec_.name = s.ident;
                    named = true;
                    break;
                case RawStmt::Param:
                    spec_.params[s.ident] = s.value;
                    break;
                case RawStmt::DeltaDecl:
                    if (!spec_.delta.empty())
                        report(s.line, s.col, Severity::Error, "data domain declared twice");
                    spec_.delta = s.values;
                    break;
                case RawStmt::MapDecl: {
                    auto& m = spec_.env.data_maps[s.ident];
                    for (const auto& [from, to] : s.map_rows) {
                        auto [it, fresh] = m.emplace(from, to);
                        if (!fresh && it->second != to)
                            report(s.line, s.col, Severity::Error,
                                   "map '" + s.ident + "' redefines '" + from + "'");
                    }
                    break;
                }
                case RawStmt::States:
                    for (const auto& id : s.values) state_ids_.push_back(id);
                    break;
                default: break;
            }
        }
        for (auto& [k, v] : overrides_) spec_.params[k] = v;
        // The special parameter "delta" regenerates the data domain.
        auto dit = spec_.params.find("delta");
        if (dit != spec_.params.end()) {
            spec_.delta.clear();
            for (int i = 1; i <= dit->second; ++i)
                spec_.delta.push_back("d" + std::to_string(i));
        }
        std::sort(state_ids_.begin(), state_ids_.end());
        state_ids_.erase(std::unique(state_ids_.begin(), state_ids_.end()), state_ids_.end());

        // Declared action arities (after params, for indexed families).
        for (const auto& s : stmts_) {
            if (s.kind != RawStmt::ActionDecl) continue;
            auto asn = assignments(s.for_clause, {});
            if (!asn) continue;
            for (const auto& b : *asn)
                for (const auto& [name, arity] : s.actions) {
                    auto v = eval_name(name, b);
                    if (v) note_arity(*v, arity, name.line, name.col);
                }
        }
    }

    void enumerate_procs() {
        for (const auto& s : stmts_) {
            if (s.kind != RawStmt::Proc) continue;
            auto asn = assignments(s.for_clause, {});
            if (!asn) continue;
            for (const auto& b : *asn) {
                auto name = eval_name(s.proc_name, b);
                if (!name) continue;
                if (*name == "CLAIM") {
                    report(s.line, s.col, Severity::Error,
                           "'CLAIM' is reserved for the claim's self-reference");
                    continue;
                }
                if (!proc_names_.insert(*name).second)
                    report(s.line, s.col, Severity::Error,
                           "process '" + *name + "' defined twice");
            }
        }
    }

    void expand_bodies() {
        auto resolve = [&](const std::string& name, int line, int col) -> Term {
            if (name == "CLAIM") {
                report(line, col, Severity::Error,
                       "'CLAIM' cannot be referenced from a process");
                return nullptr;
            }
            if (proc_names_.count(name)) return var_ref(name);
            return nullptr;
        };
        for (const auto& s : stmts_) {
            if (s.kind != RawStmt::Proc) continue;
            auto asn = assignments(s.for_clause, {});
            if (!asn) continue;
            for (const auto& b : *asn) {
                auto name = eval_name(s.proc_name, b);
                if (!name) continue;
                Term body = expand_term(s.term, b, resolve);
                if (body) equations_[*name] = std::move(body);
            }
        }
    }

    void expand_env() {
        for (const auto& s : stmts_) {
            auto asn = assignments(s.for_clause, {});
            if (!asn) continue;
            switch (s.kind) {
                case RawStmt::Gamma:
                    for (const auto& b : *asn) {
                        auto a = eval_event(s.e1, b), bb = eval_event(s.e2, b),
                             c = eval_event(s.e3, b);
                        if (!a || !bb || !c) continue;
                        if (auto prior = spec_.env.gamma_of(*a, *bb); prior && !(*prior == *c)) {
                            report(s.line, s.col, Severity::Error,
                                   "communication of " + a->str() + " and " + bb->str() +
                                       " declared twice with different results");
                            continue;
                        }
                        gamma_written_.insert({a->str(), bb->str()});
                        spec_.env.add_gamma(*a, *bb, *c);
                    }
                    break;
                case RawStmt::Conflict:
                case RawStmt::Race:
                    for (const auto& b : *asn) {
                        auto a = eval_event(s.e1, b), bb = eval_event(s.e2, b);
                        if (!a || !bb) continue;
                        if (*a == *bb) {
                            // a family sweep legitimately crosses the diagonal;
                            // a literal self-relation is a mistake
                            if (s.for_clause.empty())
                                report(s.line, s.col, Severity::Error,
                                       "a relation of an event with itself is not allowed");
                            continue;
                        }
                        if (s.kind == RawStmt::Conflict)
                            spec_.env.add_conflict(*a, *bb);
                        else
                            spec_.env.add_race(*a, *bb);
                    }
                    break;
                case RawStmt::Causal:
                    for (const auto& b : *asn) {
                        auto a = eval_event(s.e1, b), bb = eval_event(s.e2, b);
                        if (!a || !bb) continue;
                        spec_.env.causality.push_back({*a, *bb});
                    }
                    break;
                case RawStmt::Block:
                case RawStmt::Hide:
                    for (const auto& b : *asn)
                        for (const auto& n : s.name_list) {
                            auto v = eval_name(n, b);
                            if (!v) continue;
                            (s.kind == RawStmt::Block ? spec_.block_set : spec_.hide_set)
                                .push_back(*v);
                        }
                    break;
                case RawStmt::Table: {
                    if (std::find(state_ids_.begin(), state_ids_.end(), s.ident) ==
                        state_ids_.end()) {
                        report(s.line, s.col, Severity::Error,
                               "table row for undeclared state '" + s.ident + "'");
                        break;
                    }
                    if (!s.table_goto.empty() &&
                        std::find(state_ids_.begin(), state_ids_.end(), s.table_goto) ==
                            state_ids_.end()) {
                        report(s.line, s.col, Severity::Error,
                               "table row targets undeclared state '" + s.table_goto + "'");
                        break;
                    }
                    any_table_ = true;
                    for (const auto& b : *asn) {
                        auto act = eval_name(s.table_action, b);
                        auto res = eval_name(s.table_result, b);
                        if (!act || !res) continue;
                        // identity rows are the default; keep the tables canonical
                        if (*res != *act) table_.action[{s.ident, *act}] = *res;
                        if (!s.table_goto.empty() && s.table_goto != s.ident)
                            table_.effect[{s.ident, *act}] = s.table_goto;
                    }
                    break;
                }
                default: break;
            }
        }

        // One warning per gamma statement whose mirrored direction was never
        // written out: the symmetric entry is assumed.
        for (const auto& s : stmts_) {
            if (s.kind != RawStmt::Gamma) continue;
            auto asn = assignments(s.for_clause, {});
            if (!asn || asn->empty()) continue;
            auto a = eval_event(s.e1, (*asn)[0], false), b = eval_event(s.e2, (*asn)[0], false);
            if (!a || !b) continue;
            if (!gamma_written_.count({b->str(), a->str()}))
                report(s.line, s.col, Severity::Warning,
                       "communication declared in one direction only; the symmetric "
                       "direction is assumed");
        }

        if (!state_ids_.empty() || any_table_) {
            table_.states = state_ids_;
            spec_.env.state_spec = table_;
        }

        auto canon = [](std::vector<std::string>& v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        };
        canon(spec_.block_set);
        canon(spec_.hide_set);
        std::sort(spec_.env.causality.begin(), spec_.env.causality.end());
        spec_.env.causality.erase(
            std::unique(spec_.env.causality.begin(), spec_.env.causality.end(),
                        [](const CausalPair& x, const CausalPair& y) {
                            return !(x < y) && !(y < x);
                        }),
            spec_.env.causality.end());
    }

    void close_spec() {
        spec_.processes = RecursiveSpec::make(equations_);

        auto resolve_sys = [&](const std::string& name, int line, int col) -> Term {
            if (name == "CLAIM") {
                report(line, col, Severity::Error,
                       "'CLAIM' cannot be referenced from the composition");
                return nullptr;
            }
            if (proc_names_.count(name)) return rec_ref(name, spec_.processes);
            return nullptr;
        };
        bool claim_self_ref = false;
        auto resolve_claim = [&](const std::string& name, int line, int col) -> Term {
            if (name == "CLAIM") {
                claim_self_ref = true;
                return var_ref("CLAIM");
            }
            if (proc_names_.count(name)) {
                report(line, col, Severity::Error,
                       "the claim describes external behavior and can only reference "
                       "itself (as CLAIM), not process '" + name + "'");
                return nullptr;
            }
            return nullptr;
        };

        bool saw_compose = false, saw_claim = false;
        for (const auto& s : stmts_) {
            if (s.kind == RawStmt::Compose) {
                if (saw_compose) {
                    report(s.line, s.col, Severity::Error, "composition declared twice");
                    continue;
                }
                saw_compose = true;
                spec_.system = expand_term(s.term, {}, resolve_sys);
            } else if (s.kind == RawStmt::Claim) {
                if (saw_claim) {
                    report(s.line, s.col, Severity::Error, "claim declared twice");
                    continue;
                }
                saw_claim = true;
                claim_self_ref = false;
                Term body = expand_term(s.term, {}, resolve_claim);
                if (!body) continue;
                if (claim_self_ref) {
                    auto cspec = RecursiveSpec::make({{"CLAIM", body}});
                    spec_.claim = rec_ref("CLAIM", cspec);
                } else {
                    spec_.claim = body;
                }
            }
        }
        if (!spec_.system && equations_.size() == 1)
            spec_.system = rec_ref(equations_.begin()->first, spec_.processes);
    }

    void validate() {
        // Everything the composition could make visible: its own alphabet,
        // communication results, and state-table renamings.
        std::set<std::string> producible;
        for (const auto& [name, body] : equations_) {
            (void)name;
            for (const auto& n : alphabet_names(body)) producible.insert(n);
        }
        if (spec_.system)
            for (const auto& n : alphabet_names(spec_.system)) producible.insert(n);
        for (const auto& [pair, result] : spec_.env.gamma) {
            (void)pair;
            producible.insert(result.name);
        }
        if (spec_.env.state_spec)
            for (const auto& [key, result] : spec_.env.state_spec->action) {
                (void)key;
                if (result != "tau" && result != "delta") producible.insert(result);
            }

        for (const auto& n : spec_.block_set)
            if (!producible.count(n))
                report(0, 0, Severity::Warning,
                       "blocked action '" + n + "' is never produced by the composition");
        for (const auto& n : spec_.hide_set)
            if (!producible.count(n))
                report(0, 0, Severity::Warning,
                       "hidden action '" + n + "' is never produced by the composition");

        if (spec_.claim) {
            for (const auto& n : alphabet_names(spec_.claim)) {
                if (std::binary_search(spec_.block_set.begin(), spec_.block_set.end(), n))
                    report(0, 0, Severity::Error,
                           "the claim uses blocked action '" + n + "'");
                else if (std::binary_search(spec_.hide_set.begin(), spec_.hide_set.end(), n))
                    report(0, 0, Severity::Error,
                           "the claim uses hidden action '" + n + "'");
                else if (!producible.count(n))
                    report(0, 0, Severity::Warning,
                           "claimed action '" + n + "' is never produced by the composition");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Canonical rendering
// ---------------------------------------------------------------------------

// Binding strength of a node's top operator in the surface grammar.
int prec_of(const Term& t) {
    switch (t->op) {
        case Op::Alt: return 0;
        case Op::Unless: return 1;
        case Op::WholePar: return 2;
        case Op::Comm: return 3;
        case Op::Par: return 4;
        case Op::Seq: return 5;
        default: return 6;
    }
}

std::string render_event(const ActionLabel& e) {
    if (e.is_tau()) return "tau";
    if (e.is_delta()) return "delta";
    if (e.is_plain_shadow()) return "shadow";
    if (e.is_shadow()) {
        std::string base = e.name;
        if (!e.args.empty()) {
            base += "(";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) base += ",";
                base += e.args[i];
            }
            base += ")";
        }
        return "shadow(" + base + "," + std::to_string(e.shadow_index) + ")";
    }
    std::string out = e.name;
    if (!e.args.empty()) {
        out += "(";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) out += ",";
            out += e.args[i];
        }
        out += ")";
    }
    return out;
}

std::string render(const Term& t, int min_prec);

std::string render_join(const std::vector<Term>& kids, const char* sep, int kid_prec) {
    std::string out;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        if (i) out += sep;
        out += render(kids[i], kid_prec);
    }
    return out;
}

std::string render_set(const std::vector<std::string>& names) {
    std::string out = "{";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out + "}";
}

std::string render(const Term& t, int min_prec) {
    std::string out;
    switch (t->op) {
        case Op::Empty: out = "shadow"; break;  // the plain shadow is skip
        case Op::Atom: out = render_event(t->atom); break;
        case Op::Alt: out = render_join(t->kids, " + ", 1); break;
        case Op::Unless:
            out = render(t->kids[0], 2) + " <| " + render(t->kids[1], 2);
            break;
        case Op::WholePar: out = render_join(t->kids, " & ", 3); break;
        case Op::Comm:
            out = render(t->kids[0], 4) + " | " + render(t->kids[1], 4);
            break;
        case Op::Par:
            out = render(t->kids[0], 5) + " || " + render(t->kids[1], 5);
            break;
        case Op::Seq:
            out = render(t->kids[0], 6) + " . " + render(t->kids[1], 5);
            break;
        case Op::Theta: out = "theta(" + render(t->kids[0], 0) + ")"; break;
        case Op::Encaps:
            out = "encap" + render_set(t->label_set) + "(" + render(t->kids[0], 0) + ")";
            break;
        case Op::Abstract:
            out = "abs" + render_set(t->label_set) + "(" + render(t->kids[0], 0) + ")";
            break;
        case Op::StateOp:
            out = "state[" + t->state + "](" + render(t->kids[0], 0) + ")";
            break;
        case Op::Var: out = t->var; break;
        case Op::RecRef: out = t->var; break;
    }
    if (prec_of(t) < min_prec) return "(" + out + ")";
    return out;
}

}  // namespace

std::string render_term(const Term& t) { return render(t, 0); }

std::string SpecDiagnostic::render() const {
    std::ostringstream os;
    if (line > 0) os << line << ":" << col << ": ";
    os << (severity == Severity::Error ? "error: " : "warning: ") << message;
    return os.str();
}

SpecParseResult parse_pattern(const std::string& text,
                              const std::map<std::string, int>& overrides) {
    SpecParseResult result;
    Lexer lex(text, result.diagnostics);
    Parser parser(lex.run(), result.diagnostics);
    std::vector<RawStmt> stmts = parser.run();
    bool syntax_ok = std::none_of(result.diagnostics.begin(), result.diagnostics.end(),
                                  [](const SpecDiagnostic& d) {
                                      return d.severity == Severity::Error;
                                  });
    if (!syntax_ok) return result;
    Expander ex(std::move(stmts), overrides, result.diagnostics);
    result.spec = ex.run();
    return result;
}

std::string pretty_print(const PatternSpec& spec) {
    std::ostringstream os;
    if (!spec.name.empty()) os << "pattern " << spec.name << ";\n";
    for (const auto& [k, v] : spec.params) os << "param " << k << " = " << v << ";\n";
    if (!spec.delta.empty()) {
        os << "delta = { ";
        for (std::size_t i = 0; i < spec.delta.size(); ++i) {
            if (i) os << ", ";
            os << spec.delta[i];
        }
        os << " };\n";
    }
    if (!spec.actions.empty()) {
        os << "action ";
        bool first = true;
        for (const auto& [name, arity] : spec.actions) {
            if (!first) os << ", ";
            os << name << "/" << arity;
            first = false;
        }
        os << ";\n";
    }
    for (const auto& [fn, rows] : spec.env.data_maps) {
        os << "map " << fn << ": ";
        bool first = true;
        for (const auto& [from, to] : rows) {
            if (!first) os << ", ";
            os << from << " -> " << to;
            first = false;
        }
        os << ";\n";
    }
    if (spec.processes)
        for (const auto& [name, body] : spec.processes->equations)
            os << "proc " << name << " = " << render_term(body) << ";\n";
    for (const auto& [pair, result] : spec.env.gamma)
        os << "gamma(" << pair.first << ", " << pair.second << ") = "
           << render_event(result) << ";\n";
    for (const auto& [a, b] : spec.env.conflicts)
        if (a < b) os << "conflict(" << a << ", " << b << ");\n";
    for (const auto& [a, b] : spec.env.races)
        if (a < b) os << "race(" << a << ", " << b << ");\n";
    for (const auto& cp : spec.env.causality)
        os << "causal(" << render_event(cp.send) << " <= " << render_event(cp.receive)
           << ");\n";
    if (!spec.block_set.empty()) {
        os << "block ";
        for (std::size_t i = 0; i < spec.block_set.size(); ++i) {
            if (i) os << ", ";
            os << spec.block_set[i];
        }
        os << ";\n";
    }
    if (!spec.hide_set.empty()) {
        os << "hide ";
        for (std::size_t i = 0; i < spec.hide_set.size(); ++i) {
            if (i) os << ", ";
            os << spec.hide_set[i];
        }
        os << ";\n";
    }
    if (spec.env.state_spec) {
        const StateSpec& sp = *spec.env.state_spec;
        if (!sp.states.empty()) {
            os << "states ";
            for (std::size_t i = 0; i < sp.states.size(); ++i) {
                if (i) os << ", ";
                os << sp.states[i];
            }
            os << ";\n";
        }
        // one row per (state, action) with a non-default entry
        std::set<std::pair<std::string, std::string>> rows;
        for (const auto& [key, v] : sp.action) {
            (void)v;
            rows.insert(key);
        }
        for (const auto& [key, v] : sp.effect) {
            (void)v;
            rows.insert(key);
        }
        for (const auto& [st, act] : rows) {
            os << "table " << st << ": " << act << " -> " << sp.apply_action(st, act);
            std::string tgt = sp.apply_effect(st, act);
            if (tgt != st) os << " goto " << tgt;
            os << ";\n";
        }
    }
    if (spec.system) os << "compose = " << render_term(spec.system) << ";\n";
    if (spec.claim) {
        Term body = spec.claim;
        if (body->op == Op::RecRef && body->var == "CLAIM" && body->spec)
            body = body->spec->equations.at("CLAIM");
        os << "claim = " << render_term(body) << ";\n";
    }
    return os.str();
}

bool specs_equal(const PatternSpec& a, const PatternSpec& b) {
    auto term_key = [](const Term& t) { return t ? t->key : std::string(); };
    auto eq_equations = [&]() {
        const auto& ea = a.processes ? a.processes->equations
                                     : std::map<std::string, Term>{};
        const auto& eb = b.processes ? b.processes->equations
                                     : std::map<std::string, Term>{};
        if (ea.size() != eb.size()) return false;
        for (auto ia = ea.begin(), ib = eb.begin(); ia != ea.end(); ++ia, ++ib)
            if (ia->first != ib->first || ia->second->key != ib->second->key) return false;
        return true;
    };
    auto eq_state = [&]() {
        const auto& sa = a.env.state_spec;
        const auto& sb = b.env.state_spec;
        if (sa.has_value() != sb.has_value()) return false;
        if (!sa) return true;
        return sa->states == sb->states && sa->action == sb->action &&
               sa->effect == sb->effect;
    };
    auto eq_gamma = [&]() {
        if (a.env.gamma.size() != b.env.gamma.size()) return false;
        for (auto ia = a.env.gamma.begin(), ib = b.env.gamma.begin();
             ia != a.env.gamma.end(); ++ia, ++ib)
            if (ia->first != ib->first || !(ia->second == ib->second)) return false;
        return true;
    };
    auto eq_causality = [&]() {
        if (a.env.causality.size() != b.env.causality.size()) return false;
        for (std::size_t i = 0; i < a.env.causality.size(); ++i) {
            const auto& x = a.env.causality[i];
            const auto& y = b.env.causality[i];
            if (x < y || y < x) return false;
        }
        return true;
    };
    return a.name == b.name && a.delta == b.delta && a.params == b.params &&
           a.actions == b.actions && eq_equations() && eq_gamma() &&
           a.env.conflicts == b.env.conflicts && a.env.races == b.env.races &&
           eq_causality() && a.env.data_maps == b.env.data_maps && eq_state() &&
           a.block_set == b.block_set && a.hide_set == b.hide_set &&
           term_key(a.system) == term_key(b.system) &&
           term_key(a.claim) == term_key(b.claim);
}

}  // namespace aptc
