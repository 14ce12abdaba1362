// Template analysis: segment, parse, enumerate paths, taint, synthesize.
#include "xssforge/template_analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>
#include <utility>

namespace xssforge {

namespace {

using StatementList = std::vector<std::unique_ptr<Statement>>;

std::unique_ptr<Expr> make_expr(Expr::Kind kind, std::string text, int line) {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->text = std::move(text);
    e->line = line;
    return e;
}

// --- Segmentation ---------------------------------------------------------

std::vector<Segment> segment_source(const std::string& src) {
    std::vector<Segment> segments;
    std::size_t pos = 0;
    int line = 1;
    auto advance_lines = [&](std::size_t from, std::size_t to) {
        for (std::size_t i = from; i < to; ++i) {
            if (src[i] == '\n') ++line;
        }
    };
    while (pos < src.size()) {
        std::size_t open = src.find("<%", pos);
        std::string html = src.substr(pos, (open == std::string::npos
                                                ? src.size()
                                                : open) - pos);
        if (!html.empty()) {
            std::size_t stray = html.find("%>");
            if (stray != std::string::npos) {
                int at = line;
                for (std::size_t i = 0; i < stray; ++i) {
                    if (html[i] == '\n') ++at;
                }
                throw AnalysisError("unbalanced-delimiter", at,
                                    "%> without matching <%");
            }
            segments.push_back({Segment::Kind::HtmlText, html, line});
        }
        if (open == std::string::npos) break;
        advance_lines(pos, open);
        int open_line = line;
        bool is_sink = open + 2 < src.size() && src[open + 2] == '=';
        std::size_t body = open + (is_sink ? 3 : 2);
        std::size_t close = src.find("%>", body);
        if (close == std::string::npos) {
            throw AnalysisError("unbalanced-delimiter", open_line,
                                "<% without matching %>");
        }
        segments.push_back({is_sink ? Segment::Kind::ExprSink
                                    : Segment::Kind::Scriptlet,
                            src.substr(body, close - body), open_line});
        advance_lines(open, close + 2);
        pos = close + 2;
    }
    return segments;
}

// --- Lexing ----------------------------------------------------------------

struct Tok {
    enum class Kind { Ident, Number, Str, Punct, Html, Sink, End };
    Kind kind = Kind::End;
    std::string text;  // name, digits, decoded string content, or punct
    std::string raw;   // original lexeme, used to echo condition source
    int line = 0;
    const Segment* seg = nullptr;  // Html and Sink tokens
};

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Lex one scriptlet (or sink expression) body. Dotted names like
// out.write lex as a single identifier.
void lex_code(const std::string& text, int start_line, std::vector<Tok>& out) {
    std::size_t i = 0;
    int line = start_line;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
            i += 2;
            while (i + 1 < text.size() &&
                   !(text[i] == '*' && text[i + 1] == '/')) {
                if (text[i] == '\n') ++line;
                ++i;
            }
            if (i + 1 >= text.size()) {
                throw AnalysisError("statement-syntax-error", line,
                                    "unterminated comment");
            }
            i += 2;
            continue;
        }
        if (ident_start(c)) {
            std::size_t b = i;
            while (i < text.size() && ident_char(text[i])) ++i;
            // dotted continuation: request.getParameter, prf.Name
            while (i + 1 < text.size() && text[i] == '.' &&
                   ident_start(text[i + 1])) {
                ++i;
                while (i < text.size() && ident_char(text[i])) ++i;
            }
            std::string name = text.substr(b, i - b);
            out.push_back({Tok::Kind::Ident, name, name, line, nullptr});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t b = i;
            while (i < text.size() &&
                   std::isdigit(static_cast<unsigned char>(text[i]))) {
                ++i;
            }
            std::string digits = text.substr(b, i - b);
            out.push_back({Tok::Kind::Number, digits, digits, line, nullptr});
            continue;
        }
        if (c == '"') {
            int at = line;
            std::size_t b = i++;
            std::string content;
            bool closed = false;
            while (i < text.size()) {
                char d = text[i];
                if (d == '\\' && i + 1 < text.size()) {
                    char e = text[i + 1];
                    switch (e) {
                        case 'n': content += '\n'; break;
                        case 't': content += '\t'; break;
                        case 'r': content += '\r'; break;
                        default: content += e;
                    }
                    i += 2;
                    continue;
                }
                if (d == '"') {
                    ++i;
                    closed = true;
                    break;
                }
                if (d == '\n') ++line;
                content += d;
                ++i;
            }
            if (!closed) {
                throw AnalysisError("statement-syntax-error", at,
                                    "unterminated string literal");
            }
            out.push_back({Tok::Kind::Str, content, text.substr(b, i - b), at,
                           nullptr});
            continue;
        }
        // multi-char operators first so == is not mistaken for assignment
        static const char* kTwo[] = {"==", "!=", "<=", ">=", "&&", "||"};
        bool two = false;
        for (const char* op : kTwo) {
            if (text.compare(i, 2, op) == 0) {
                out.push_back({Tok::Kind::Punct, op, op, line, nullptr});
                i += 2;
                two = true;
                break;
            }
        }
        if (two) continue;
        std::string p(1, c);
        out.push_back({Tok::Kind::Punct, p, p, line, nullptr});
        ++i;
    }
}

// --- Parsing ---------------------------------------------------------------

const std::set<std::string> kOutSinks = {"out.write", "out.print",
                                         "out.println", "out.append"};
const std::set<std::string> kLoopKeywords = {"for", "while", "do"};

class Parser {
  public:
    explicit Parser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

    StatementList parse_program() {
        StatementList stmts = parse_block(false);
        if (!at_end()) {
            throw AnalysisError("unbalanced-delimiter", cur().line,
                                "} without matching {");
        }
        return stmts;
    }

    // Parse one expression from a standalone token stream (sink bodies).
    std::unique_ptr<Expr> parse_whole_expr() {
        auto e = parse_expr();
        if (!at_end()) {
            throw AnalysisError("statement-syntax-error", cur().line,
                                "trailing tokens after expression");
        }
        return e;
    }

  private:
    std::vector<Tok> toks_;
    std::size_t pos_ = 0;

    const Tok& cur() const {
        static const Tok kEnd{};
        return pos_ < toks_.size() ? toks_[pos_] : kEnd;
    }
    const Tok& peek(std::size_t n) const {
        static const Tok kEnd{};
        return pos_ + n < toks_.size() ? toks_[pos_ + n] : kEnd;
    }
    bool at_end() const { return pos_ >= toks_.size(); }
    void advance() { ++pos_; }
    bool is_punct(const Tok& t, const char* p) const {
        return t.kind == Tok::Kind::Punct && t.text == p;
    }
    int line_here() const {
        if (pos_ < toks_.size()) return toks_[pos_].line;
        return toks_.empty() ? 1 : toks_.back().line;
    }
    void expect_punct(const char* p, const char* what) {
        if (!is_punct(cur(), p)) {
            throw AnalysisError("statement-syntax-error", line_here(),
                                std::string("expected ") + what);
        }
        advance();
    }

    StatementList parse_block(bool inside_braces) {
        StatementList stmts;
        while (!at_end()) {
            if (is_punct(cur(), "}")) {
                if (inside_braces) return stmts;
                break;  // caller reports the stray brace
            }
            stmts.push_back(parse_statement());
        }
        if (inside_braces) {
            throw AnalysisError("unbalanced-delimiter", line_here(),
                                "{ without matching }");
        }
        return stmts;
    }

    std::unique_ptr<Statement> parse_statement() {
        const Tok& t = cur();
        if (t.kind == Tok::Kind::Html) {
            auto s = std::make_unique<Statement>();
            s->kind = Statement::Kind::Output;
            s->line = t.line;
            s->is_sink = false;
            s->expr = make_expr(Expr::Kind::Literal, t.text, t.line);
            advance();
            return s;
        }
        if (t.kind == Tok::Kind::Sink) {
            auto s = std::make_unique<Statement>();
            s->kind = Statement::Kind::Output;
            s->line = t.line;
            s->is_sink = true;
            std::vector<Tok> sub;
            lex_code(t.text, t.line, sub);
            if (sub.empty()) {
                throw AnalysisError("statement-syntax-error", t.line,
                                    "empty expression sink");
            }
            Parser p(std::move(sub));
            s->expr = p.parse_whole_expr();
            advance();
            return s;
        }
        if (t.kind != Tok::Kind::Ident) {
            throw AnalysisError("statement-syntax-error", t.line,
                                "unexpected token '" + t.raw + "'");
        }
        if (t.text == "if") return parse_if();
        if (t.text == "switch") return parse_switch();
        if (kLoopKeywords.count(t.text)) {
            throw AnalysisError("statement-syntax-error", t.line,
                                "loops are not supported");
        }
        if (t.text == "else" || t.text == "case" || t.text == "default" ||
            t.text == "break") {
            throw AnalysisError("statement-syntax-error", t.line,
                                "unexpected '" + t.text + "'");
        }
        const Tok& n = peek(1);
        if (n.kind == Tok::Kind::Ident || is_punct(n, "<")) {
            return parse_declare();
        }
        if (is_punct(n, "=")) return parse_assign();
        if (is_punct(n, "(")) {
            if (!kOutSinks.count(t.text)) {
                throw AnalysisError("statement-syntax-error", t.line,
                                    "unsupported call statement '" + t.text +
                                        "'");
            }
            auto s = std::make_unique<Statement>();
            s->kind = Statement::Kind::Output;
            s->line = t.line;
            s->is_sink = true;
            advance();
            advance();  // name (
            s->expr = parse_expr();
            expect_punct(")", ") after sink argument");
            expect_punct(";", "; after sink statement");
            return s;
        }
        throw AnalysisError("statement-syntax-error", t.line,
                            "cannot parse statement at '" + t.raw + "'");
    }

    std::unique_ptr<Statement> parse_declare() {
        int line = cur().line;
        advance();  // type name
        if (is_punct(cur(), "<")) {
            int depth = 0;
            while (!at_end()) {
                if (is_punct(cur(), "<")) ++depth;
                if (is_punct(cur(), ">")) {
                    --depth;
                    if (depth == 0) {
                        advance();
                        break;
                    }
                }
                advance();
            }
        }
        if (cur().kind != Tok::Kind::Ident) {
            throw AnalysisError("statement-syntax-error", line,
                                "expected variable name in declaration");
        }
        auto s = std::make_unique<Statement>();
        s->kind = Statement::Kind::Declare;
        s->line = line;
        s->var = cur().text;
        advance();
        if (is_punct(cur(), "=")) {
            advance();
            s->expr = parse_expr();
        }
        expect_punct(";", "; after declaration");
        return s;
    }

    std::unique_ptr<Statement> parse_assign() {
        auto s = std::make_unique<Statement>();
        s->kind = Statement::Kind::Assign;
        s->line = cur().line;
        s->var = cur().text;
        advance();
        advance();  // name =
        s->expr = parse_expr();
        expect_punct(";", "; after assignment");
        return s;
    }

    // Conditions are captured as raw balanced-paren source; a bare = inside
    // one is the only way the dialect could mutate state there, so reject it.
    std::string parse_condition() {
        expect_punct("(", "( after keyword");
        std::string text;
        int depth = 1;
        while (!at_end()) {
            if (cur().kind == Tok::Kind::Html ||
                cur().kind == Tok::Kind::Sink) {
                throw AnalysisError("statement-syntax-error", cur().line,
                                    "template text inside a condition");
            }
            if (is_punct(cur(), "(")) ++depth;
            if (is_punct(cur(), ")")) {
                --depth;
                if (depth == 0) {
                    advance();
                    return text;
                }
            }
            if (is_punct(cur(), "=")) {
                throw AnalysisError("statement-syntax-error", cur().line,
                                    "assignment inside a condition");
            }
            if (!text.empty()) text += ' ';
            text += cur().raw;
            advance();
        }
        throw AnalysisError("statement-syntax-error", line_here(),
                            "unterminated condition");
    }

    std::unique_ptr<Statement> parse_if() {
        auto s = std::make_unique<Statement>();
        s->kind = Statement::Kind::If;
        s->line = cur().line;
        advance();  // if
        s->cond_text = parse_condition();
        expect_punct("{", "{ after if condition");
        s->then_block = parse_block(true);
        advance();  // }
        if (cur().kind == Tok::Kind::Ident && cur().text == "else") {
            advance();
            if (cur().kind == Tok::Kind::Ident && cur().text == "if") {
                s->else_block.push_back(parse_if());
            } else {
                expect_punct("{", "{ after else");
                s->else_block = parse_block(true);
                advance();  // }
            }
        }
        return s;
    }

    // switch/case desugars to an if/else chain, one arm per case plus the
    // default; break separators are consumed, fallthrough is not modeled.
    std::unique_ptr<Statement> parse_switch() {
        int line = cur().line;
        advance();  // switch
        std::string selector = parse_condition();
        expect_punct("{", "{ after switch selector");
        struct Arm {
            std::string label;  // empty = default
            StatementList body;
            int line;
        };
        std::vector<Arm> arms;
        while (!at_end() && !is_punct(cur(), "}")) {
            const Tok& t = cur();
            bool is_default = t.kind == Tok::Kind::Ident &&
                              t.text == "default";
            bool is_case = t.kind == Tok::Kind::Ident && t.text == "case";
            if (!is_case && !is_default) {
                throw AnalysisError("statement-syntax-error", t.line,
                                    "expected case or default");
            }
            Arm arm;
            arm.line = t.line;
            advance();
            if (is_case) {
                while (!at_end() && !is_punct(cur(), ":")) {
                    if (!arm.label.empty()) arm.label += ' ';
                    arm.label += cur().raw;
                    advance();
                }
            }
            expect_punct(":", ": after case label");
            while (!at_end() && !is_punct(cur(), "}")) {
                const Tok& u = cur();
                if (u.kind == Tok::Kind::Ident &&
                    (u.text == "case" || u.text == "default")) {
                    break;
                }
                if (u.kind == Tok::Kind::Ident && u.text == "break") {
                    advance();
                    expect_punct(";", "; after break");
                    break;
                }
                arm.body.push_back(parse_statement());
            }
            arms.push_back(std::move(arm));
        }
        expect_punct("}", "} closing switch");

        // Build the chain back to front: default is the innermost else.
        StatementList else_chain;
        for (auto it = arms.rbegin(); it != arms.rend(); ++it) {
            if (it->label.empty()) {
                if (!else_chain.empty()) {
                    throw AnalysisError("statement-syntax-error", it->line,
                                        "default must be the last arm");
                }
                else_chain = std::move(it->body);
                continue;
            }
            auto arm_if = std::make_unique<Statement>();
            arm_if->kind = Statement::Kind::If;
            arm_if->line = it->line;
            arm_if->cond_text = selector + " == " + it->label;
            arm_if->then_block = std::move(it->body);
            arm_if->else_block = std::move(else_chain);
            else_chain.clear();
            else_chain.push_back(std::move(arm_if));
        }
        if (else_chain.empty()) {
            throw AnalysisError("statement-syntax-error", line,
                                "switch with no case arms");
        }
        if (else_chain.size() != 1 ||
            else_chain.front()->kind != Statement::Kind::If) {
            // Only a default arm: it always runs, but keep branch shape so
            // the capture still documents the selector.
            auto arm_if = std::make_unique<Statement>();
            arm_if->kind = Statement::Kind::If;
            arm_if->line = line;
            arm_if->cond_text = selector + " == default";
            arm_if->then_block = std::move(else_chain);
            else_chain.clear();
            else_chain.push_back(std::move(arm_if));
        }
        return std::move(else_chain.front());
    }

    // expr := primary (+ primary)*
    std::unique_ptr<Expr> parse_expr() {
        std::vector<std::unique_ptr<Expr>> parts;
        parts.push_back(parse_primary());
        while (is_punct(cur(), "+")) {
            advance();
            parts.push_back(parse_primary());
        }
        if (parts.size() == 1) return std::move(parts.front());
        auto e = make_expr(Expr::Kind::Concat, "", parts.front()->line);
        e->parts = std::move(parts);
        return e;
    }

    std::unique_ptr<Expr> parse_primary() {
        const Tok& t = cur();
        if (t.kind == Tok::Kind::Str || t.kind == Tok::Kind::Number) {
            advance();
            return make_expr(Expr::Kind::Literal, t.text, t.line);
        }
        if (t.kind == Tok::Kind::Ident) {
            advance();
            if (!is_punct(cur(), "(")) {
                return make_expr(Expr::Kind::Variable, t.text, t.line);
            }
            advance();
            auto call = make_expr(Expr::Kind::Call, t.text, t.line);
            if (!is_punct(cur(), ")")) {
                call->parts.push_back(parse_expr());
                while (is_punct(cur(), ",")) {
                    advance();
                    call->parts.push_back(parse_expr());
                }
            }
            expect_punct(")", ") closing call");
            return call;
        }
        if (is_punct(t, "(")) {
            // (Type)expr casts are dropped; anything else is grouping.
            if (peek(1).kind == Tok::Kind::Ident && is_punct(peek(2), ")") &&
                (peek(3).kind == Tok::Kind::Ident ||
                 peek(3).kind == Tok::Kind::Str ||
                 peek(3).kind == Tok::Kind::Number || is_punct(peek(3), "("))) {
                advance();
                advance();
                advance();
                return parse_primary();
            }
            advance();
            auto inner = parse_expr();
            expect_punct(")", ") closing group");
            return inner;
        }
        throw AnalysisError("statement-syntax-error", t.line,
                            "expected expression at '" + t.raw + "'");
    }
};

std::vector<Tok> build_token_stream(const std::vector<Segment>& segments) {
    std::vector<Tok> toks;
    for (const Segment& seg : segments) {
        switch (seg.kind) {
            case Segment::Kind::HtmlText:
                toks.push_back({Tok::Kind::Html, seg.text, seg.text, seg.line,
                                &seg});
                break;
            case Segment::Kind::ExprSink:
                toks.push_back({Tok::Kind::Sink, seg.text, seg.text, seg.line,
                                &seg});
                break;
            case Segment::Kind::Scriptlet:
                lex_code(seg.text, seg.line, toks);
                break;
        }
    }
    return toks;
}

// --- Taint interpretation ---------------------------------------------------

struct Piece {
    bool tainted = false;
    std::string text;     // literal content when untainted
    std::string carrier;  // sink-expression occurrence that delivered it
    std::vector<std::string> chain;
    int first_enc_line = 0;
    std::string first_enc;
};
using Value = std::vector<Piece>;

struct OutputEvent {
    int line = 0;
    bool is_sink = false;
    Value value;
};

struct PathEval {
    std::vector<OutputEvent> events;
    std::vector<SinkTaint> sinks;       // one entry per sink event, in order
    std::vector<std::size_t> sink_events;  // event index per sinks entry
};

class Interpreter {
  public:
    Interpreter(const AnalyzerConfig& config) : config_(config) {}

    PathEval run(const ExecutionPath& path) {
        PathEval out;
        for (const PathStep& step : path.steps) {
            if (step.kind != PathStep::Kind::Statement) continue;
            const Statement& s = *step.stmt;
            switch (s.kind) {
                case Statement::Kind::Declare:
                case Statement::Kind::Assign:
                    env_[s.var] = s.expr ? eval(*s.expr, false) : Value{};
                    break;
                case Statement::Kind::Output: {
                    OutputEvent ev;
                    ev.line = s.line;
                    ev.is_sink = s.is_sink;
                    ev.value = eval(*s.expr, s.is_sink);
                    if (s.is_sink) {
                        out.sinks.push_back(summarize(ev));
                        out.sink_events.push_back(out.events.size());
                    }
                    out.events.push_back(std::move(ev));
                    break;
                }
                case Statement::Kind::If:
                    break;  // paths never contain branches
            }
        }
        return out;
    }

  private:
    const AnalyzerConfig& config_;
    std::map<std::string, Value> env_;

    static SinkTaint summarize(const OutputEvent& ev) {
        SinkTaint st;
        st.sink_line = ev.line;
        for (const Piece& p : ev.value) {
            if (!p.tainted || p.carrier.empty()) continue;
            if (st.chains.count(p.carrier)) continue;
            st.variables.push_back(p.carrier);
            st.chains[p.carrier] = p.chain;
            if (p.chain.empty()) {
                st.injections[p.carrier] = {ev.line, ""};
            } else {
                st.injections[p.carrier] = {p.first_enc_line, p.first_enc};
            }
        }
        return st;
    }

    Value eval(const Expr& e, bool in_sink) {
        switch (e.kind) {
            case Expr::Kind::Literal:
                return {Piece{false, e.text, "", {}, 0, ""}};
            case Expr::Kind::Variable: {
                std::string base = e.text.substr(0, e.text.find('.'));
                auto it = env_.find(base);
                if (it == env_.end()) return {};  // unknown: empty value
                Value v = it->second;
                if (in_sink) {
                    for (Piece& p : v) {
                        if (p.tainted) p.carrier = e.text;
                    }
                }
                return v;
            }
            case Expr::Kind::Call: return eval_call(e, in_sink);
            case Expr::Kind::Concat: {
                Value v;
                for (const auto& part : e.parts) {
                    Value pv = eval(*part, in_sink);
                    v.insert(v.end(), pv.begin(), pv.end());
                }
                return v;
            }
        }
        return {};
    }

    Value eval_call(const Expr& e, bool in_sink) {
        if (config_.taint.sources.count(e.text)) {
            Piece p;
            p.tainted = true;
            if (in_sink) p.carrier = e.text;
            return {p};
        }
        if (config_.encoders.contains(e.text)) {
            if (e.parts.size() != 1) {
                throw AnalysisError("statement-syntax-error", e.line,
                                    "encoder " + e.text +
                                        " takes exactly one argument");
            }
            Value v = eval(*e.parts.front(), in_sink);
            const auto& enc = config_.encoders.by_name(e.text);
            for (Piece& p : v) {
                if (!p.tainted) {
                    p.text = enc.transform(p.text);
                } else {
                    p.chain.push_back(e.text);
                    if (p.chain.size() == 1) {
                        p.first_enc_line = e.line;
                        p.first_enc = e.text;
                    }
                }
            }
            return v;
        }
        // Unknown host call: conservatively pass tainted inputs through,
        // contribute no literal page text.
        Value v;
        for (const auto& arg : e.parts) {
            for (Piece& p : eval(*arg, in_sink)) {
                if (p.tainted) v.push_back(std::move(p));
            }
        }
        return v;
    }
};

void add_html_lines(const Statement& s, std::set<int>& lines) {
    int line = s.line;
    for (char c : s.expr->text) {
        if (c == '\n') {
            ++line;
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            lines.insert(line);
        }
    }
}

}  // namespace

TemplateAst parse_template(const std::string& source,
                           const std::string& name) {
    TemplateAst ast;
    ast.source_name = name;
    ast.segments = segment_source(source);
    Parser parser(build_token_stream(ast.segments));
    ast.statements = parser.parse_program();
    return ast;
}

namespace {

int lower_block(const StatementList& block, int cur, ControlFlowGraph& cfg,
                int& branch_counter) {
    for (const auto& stmt : block) {
        if (stmt->kind != Statement::Kind::If) {
            cfg.nodes[cur].stmts.push_back(stmt.get());
            continue;
        }
        cfg.nodes[cur].branch = stmt.get();
        cfg.nodes[cur].branch_no = ++branch_counter;
        int then_start = static_cast<int>(cfg.nodes.size());
        cfg.nodes.emplace_back();
        cfg.nodes[cur].then_succ = then_start;
        int then_end = lower_block(stmt->then_block, then_start, cfg,
                                   branch_counter);
        int else_start = static_cast<int>(cfg.nodes.size());
        cfg.nodes.emplace_back();
        cfg.nodes[cur].else_succ = else_start;
        int else_end = lower_block(stmt->else_block, else_start, cfg,
                                   branch_counter);
        int join = static_cast<int>(cfg.nodes.size());
        cfg.nodes.emplace_back();
        cfg.nodes[then_end].next = join;
        cfg.nodes[else_end].next = join;
        cur = join;
    }
    return cur;
}

}  // namespace

ControlFlowGraph build_cfg(const TemplateAst& ast) {
    ControlFlowGraph cfg;
    cfg.nodes.emplace_back();
    int branch_counter = 0;
    cfg.exit = lower_block(ast.statements, 0, cfg, branch_counter);
    return cfg;
}

namespace {

struct PathEnumerator {
    const ControlFlowGraph& cfg;
    std::size_t max_paths;
    std::size_t completed = 0;
    std::vector<PathStep> steps = {};
    std::vector<ExecutionPath> kept = {};

    void visit(int node_idx) {
        const CfgNode& node = cfg.nodes[node_idx];
        std::size_t mark = steps.size();
        for (const Statement* s : node.stmts) {
            PathStep step;
            step.kind = PathStep::Kind::Statement;
            step.stmt = s;
            step.line = s->line;
            steps.push_back(std::move(step));
        }
        if (node.branch) {
            for (bool value : {true, false}) {
                PathStep cap;
                cap.kind = PathStep::Kind::Capture;
                cap.capture_var = "e" + std::to_string(node.branch_no);
                cap.cond_text = node.branch->cond_text;
                cap.cond_value = value;
                cap.line = node.branch->line;
                steps.push_back(std::move(cap));
                visit(value ? node.then_succ : node.else_succ);
                steps.pop_back();
            }
        } else if (node.next != -1) {
            visit(node.next);
        } else {
            complete();
        }
        steps.resize(mark);
    }

    void complete() {
        ++completed;
        if (completed > max_paths) {
            throw AnalysisError(
                "path-explosion", 0,
                "more than " + std::to_string(max_paths) + " execution paths");
        }
        ExecutionPath path;
        path.steps = steps;
        for (const PathStep& step : path.steps) {
            if (step.kind == PathStep::Kind::Capture) {
                path.lines.insert(step.line);
                continue;
            }
            const Statement& s = *step.stmt;
            if (s.kind == Statement::Kind::Output && !s.is_sink) {
                add_html_lines(s, path.lines);
            } else {
                path.lines.insert(s.line);
            }
            if (s.kind == Statement::Kind::Output && s.is_sink) {
                path.sinks.push_back({s.line, s.expr.get()});
            }
        }
        if (path.sinks.empty()) return;  // not attackable, discard
        path.path_id = static_cast<int>(kept.size()) + 1;
        kept.push_back(std::move(path));
    }
};

}  // namespace

std::vector<ExecutionPath> enumerate_paths(const ControlFlowGraph& cfg,
                                           std::size_t max_paths) {
    PathEnumerator en{cfg, max_paths};
    en.visit(cfg.entry);
    return std::move(en.kept);
}

std::vector<SinkTaint> taint_analysis(const ExecutionPath& path,
                                      const AnalyzerConfig& config) {
    Interpreter interp(config);
    return interp.run(path).sinks;
}

std::vector<UnitTest> synthesize_unit_tests(const TemplateAst& ast,
                                            const ExecutionPath& path,
                                            const std::vector<SinkTaint>& taint,
                                            const AnalyzerConfig& config) {
    Interpreter interp(config);
    PathEval eval = interp.run(path);

    std::set<std::string> all_tainted;
    for (const SinkTaint& st : taint) {
        for (const std::string& v : st.variables) all_tainted.insert(v);
    }

    std::vector<UnitTest> tests;
    for (std::size_t si = 0; si < eval.sinks.size(); ++si) {
        const SinkTaint& st = eval.sinks[si];
        std::size_t target_event = eval.sink_events[si];
        for (const std::string& target : st.variables) {
            UnitTest ut;
            ut.template_name = ast.source_name;
            ut.path_id = path.path_id;
            ut.target_variable = target;
            ut.injection = st.injections.at(target);
            ut.encoder_chain = st.chains.at(target);
            ut.sink_line = st.sink_line;
            for (const std::string& other : all_tainted) {
                if (other != target) ut.constant_substitutions[other] = "1";
            }
            for (std::size_t ei = 0; ei < eval.events.size(); ++ei) {
                const OutputEvent& ev = eval.events[ei];
                for (const Piece& p : ev.value) {
                    OutputPiece piece;
                    if (!p.tainted) {
                        piece.kind = OutputPiece::Kind::Literal;
                        piece.text = p.text;
                    } else if (ei == target_event && p.carrier == target) {
                        piece.kind = OutputPiece::Kind::Injected;
                        piece.chain = p.chain;
                    } else {
                        piece.kind = OutputPiece::Kind::Constant;
                        piece.text = "1";
                    }
                    ut.output_plan.push_back(std::move(piece));
                }
            }
            tests.push_back(std::move(ut));
        }
    }
    return tests;
}

std::vector<UnitTest> analyze(const std::string& source,
                              const std::string& name,
                              const AnalyzerConfig& config) {
    TemplateAst ast = parse_template(source, name);
    ControlFlowGraph cfg = build_cfg(ast);
    std::vector<ExecutionPath> paths = enumerate_paths(cfg, config.max_paths);
    std::vector<UnitTest> tests;
    for (const ExecutionPath& path : paths) {
        std::vector<SinkTaint> taint = taint_analysis(path, config);
        std::vector<UnitTest> synthesized =
            synthesize_unit_tests(ast, path, taint, config);
        for (auto& ut : synthesized) tests.push_back(std::move(ut));
    }
    std::stable_sort(tests.begin(), tests.end(),
                     [](const UnitTest& a, const UnitTest& b) {
                         return std::tie(a.path_id, a.sink_line,
                                         a.target_variable) <
                                std::tie(b.path_id, b.sink_line,
                                         b.target_variable);
                     });
    return tests;
}

}  // namespace xssforge
