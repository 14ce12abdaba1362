// Context-tracking execution oracle for rendered unit test documents.
#include "xssforge/render_oracle.hpp"

#include <algorithm>
#include <cctype>

namespace xssforge {

namespace {

std::string fold(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// --- JS recognizer -----------------------------------------------------------

struct JsTok {
    enum class Kind { Str, Num, Ident, Punct, End, Error };
    Kind kind = Kind::End;
    std::string text;
};

// Lexes the recognized JS subset; an Error token marks the first position a
// browser would reject, everything after it is unusable.
std::vector<JsTok> js_lex(const std::string& src) {
    std::vector<JsTok> toks;
    std::size_t i = 0;
    auto error = [&]() {
        toks.push_back({JsTok::Kind::Error, ""});
        toks.push_back({JsTok::Kind::End, ""});
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            std::size_t close = src.find("*/", i + 2);
            if (close == std::string::npos) {
                error();
                return toks;
            }
            i = close + 2;
            continue;
        }
        if (c == '\'' || c == '"') {
            char quote = c;
            ++i;
            std::string content;
            bool closed = false;
            while (i < src.size()) {
                if (src[i] == '\\' && i + 1 < src.size()) {
                    content += src[i + 1];
                    i += 2;
                    continue;
                }
                if (src[i] == quote) {
                    ++i;
                    closed = true;
                    break;
                }
                content += src[i++];
            }
            if (!closed) {
                error();
                return toks;
            }
            toks.push_back({JsTok::Kind::Str, content});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t b = i;
            while (i < src.size() &&
                   std::isdigit(static_cast<unsigned char>(src[i]))) {
                ++i;
            }
            toks.push_back({JsTok::Kind::Num, src.substr(b, i - b)});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
            c == '$') {
            std::size_t b = i;
            while (i < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[i])) ||
                    src[i] == '_' || src[i] == '$')) {
                ++i;
            }
            toks.push_back({JsTok::Kind::Ident, src.substr(b, i - b)});
            continue;
        }
        if (c == '+' || c == '=' || c == '(' || c == ')' || c == ',' ||
            c == ';') {
            toks.push_back({JsTok::Kind::Punct, std::string(1, c)});
            ++i;
            continue;
        }
        error();
        return toks;
    }
    toks.push_back({JsTok::Kind::End, ""});
    return toks;
}

// Statement-list parser: attack(n) lines are committed only when their
// statement completes; the first error discards the in-flight statement and
// keeps everything committed before it.
class JsRecognizer {
  public:
    explicit JsRecognizer(std::vector<JsTok> toks) : toks_(std::move(toks)) {}

    std::set<int> run() {
        while (true) {
            const JsTok& t = cur();
            if (t.kind == JsTok::Kind::End) return committed_;
            if (t.kind == JsTok::Kind::Error) return committed_;
            if (is_punct(";")) {
                advance();
                continue;
            }
            pending_.clear();
            if (!parse_expr()) return committed_;
            if (is_punct(";")) {
                advance();
                commit();
                continue;
            }
            if (cur().kind == JsTok::Kind::End) {
                commit();
                return committed_;
            }
            return committed_;  // statement did not terminate cleanly
        }
    }

  private:
    std::vector<JsTok> toks_;
    std::size_t pos_ = 0;
    std::set<int> committed_;
    std::vector<int> pending_;

    const JsTok& cur() const {
        static const JsTok kEnd{};
        return pos_ < toks_.size() ? toks_[pos_] : kEnd;
    }
    const JsTok& peek(std::size_t n) const {
        static const JsTok kEnd{};
        return pos_ + n < toks_.size() ? toks_[pos_ + n] : kEnd;
    }
    void advance() { ++pos_; }
    bool is_punct(const char* p) const {
        return cur().kind == JsTok::Kind::Punct && cur().text == p;
    }
    void commit() {
        committed_.insert(pending_.begin(), pending_.end());
        pending_.clear();
    }

    bool parse_expr() {
        if (!parse_primary()) return false;
        while (is_punct("+") || is_punct("=")) {
            advance();
            if (!parse_primary()) return false;
        }
        return true;
    }

    bool parse_primary() {
        const JsTok& t = cur();
        if (t.kind == JsTok::Kind::Str || t.kind == JsTok::Kind::Num) {
            advance();
            return true;
        }
        if (t.kind == JsTok::Kind::Ident) {
            std::string name = t.text;
            advance();
            if (!is_punct("(")) return true;  // bare reference
            advance();
            // the payload shape: attack(<digits>)
            if (name == "attack" && cur().kind == JsTok::Kind::Num &&
                peek(1).kind == JsTok::Kind::Punct && peek(1).text == ")") {
                pending_.push_back(std::stoi(cur().text));
                advance();
                advance();
                return true;
            }
            if (is_punct(")")) {
                advance();
                return true;
            }
            if (!parse_expr()) return false;
            while (is_punct(",")) {
                advance();
                if (!parse_expr()) return false;
            }
            if (!is_punct(")")) return false;
            advance();
            return true;
        }
        if (is_punct("(")) {
            advance();
            if (!parse_expr()) return false;
            while (is_punct(",")) {
                advance();
                if (!parse_expr()) return false;
            }
            if (!is_punct(")")) return false;
            advance();
            return true;
        }
        return false;
    }
};

// --- HTML walk ---------------------------------------------------------------

// URI-bearing attribute names: the grammar's URIHOST terminals plus
// formaction, the modern spelling of the form override attribute.
const std::set<std::string> kUriAttrs = {
    "src",     "href",    "codebase", "cite",    "action",   "background",
    "data",    "classid", "longdesc", "profile", "usemap",   "formation",
    "icon",    "manifest", "poster",  "srcset",  "archive",  "formaction",
};

const std::set<std::string> kRawTextTags = {"script", "style", "title",
                                            "textarea"};

struct Attr {
    std::string name;  // folded
    std::string value;
};

struct JsJob {
    std::string source;
    FiredContext context;
};

bool tag_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

// Parses one tag starting at the '<'; returns the index just past the tag
// and fills name/attrs. Lenient: a stray '<' inside the tag closes it.
std::size_t parse_tag(const std::string& html, std::size_t i,
                      std::string& name, std::vector<Attr>& attrs,
                      bool& self_closing) {
    ++i;  // <
    std::size_t b = i;
    while (i < html.size() &&
           (std::isalnum(static_cast<unsigned char>(html[i])) ||
            html[i] == '-')) {
        ++i;
    }
    name = fold(html.substr(b, i - b));
    self_closing = false;
    while (i < html.size()) {
        char c = html[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '>') return i + 1;
        if (c == '<') return i;  // unclosed tag ends at the next tag
        if (c == '/') {
            if (i + 1 < html.size() && html[i + 1] == '>') {
                self_closing = true;
                return i + 2;
            }
            ++i;
            continue;
        }
        // attribute name
        std::size_t nb = i;
        while (i < html.size() && html[i] != '=' && html[i] != '>' &&
               html[i] != '<' && html[i] != '/' &&
               !std::isspace(static_cast<unsigned char>(html[i]))) {
            ++i;
        }
        Attr attr;
        attr.name = fold(html.substr(nb, i - nb));
        while (i < html.size() &&
               std::isspace(static_cast<unsigned char>(html[i]))) {
            ++i;
        }
        if (i < html.size() && html[i] == '=') {
            ++i;
            while (i < html.size() &&
                   std::isspace(static_cast<unsigned char>(html[i]))) {
                ++i;
            }
            if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
                char quote = html[i++];
                std::size_t vb = i;
                while (i < html.size() && html[i] != quote) ++i;
                attr.value = html.substr(vb, i - vb);
                if (i < html.size()) ++i;  // closing quote
            } else {
                std::size_t vb = i;
                while (i < html.size() && html[i] != '>' &&
                       !std::isspace(static_cast<unsigned char>(html[i]))) {
                    ++i;
                }
                attr.value = html.substr(vb, i - vb);
            }
        }
        if (!attr.name.empty()) attrs.push_back(std::move(attr));
    }
    return i;
}

void jobs_from_attrs(const std::vector<Attr>& attrs,
                     std::vector<JsJob>& jobs) {
    for (const Attr& a : attrs) {
        if (a.name.size() > 2 && a.name.compare(0, 2, "on") == 0) {
            jobs.push_back({a.value, FiredContext::EventHandler});
            continue;
        }
        if (kUriAttrs.count(a.name)) {
            if (auto body = uri_is_javascript(a.value)) {
                jobs.push_back({*body, FiredContext::UriJavascript});
            }
            continue;
        }
        if (a.name == "style") {
            for (const std::string& uri : css_extract_uris(a.value)) {
                if (auto body = uri_is_javascript(uri)) {
                    jobs.push_back({*body, FiredContext::CssUrlJavascript});
                }
            }
        }
    }
}

std::vector<JsJob> collect_jobs(const std::string& html) {
    std::vector<JsJob> jobs;
    std::string folded = fold(html);
    std::size_t i = 0;
    while (i < html.size()) {
        std::size_t lt = html.find('<', i);
        if (lt == std::string::npos) break;
        if (html.compare(lt, 4, "<!--") == 0) {
            std::size_t close = html.find("-->", lt + 4);
            i = close == std::string::npos ? html.size() : close + 3;
            continue;
        }
        if (lt + 1 < html.size() && html[lt + 1] == '/') {
            std::size_t gt = html.find('>', lt);
            i = gt == std::string::npos ? html.size() : gt + 1;
            continue;
        }
        if (lt + 1 >= html.size() || !tag_name_start(html[lt + 1])) {
            i = lt + 1;  // literal '<' in text
            continue;
        }
        std::string name;
        std::vector<Attr> attrs;
        bool self_closing = false;
        i = parse_tag(html, lt, name, attrs, self_closing);
        jobs_from_attrs(attrs, jobs);
        if (!self_closing && kRawTextTags.count(name)) {
            std::size_t content_begin = i;
            std::size_t close = folded.find("</" + name, i);
            std::size_t content_end =
                close == std::string::npos ? html.size() : close;
            std::string content =
                html.substr(content_begin, content_end - content_begin);
            if (name == "script") {
                jobs.push_back({content, FiredContext::ScriptBlock});
            } else if (name == "style") {
                for (const std::string& uri : css_extract_uris(content)) {
                    if (auto body = uri_is_javascript(uri)) {
                        jobs.push_back(
                            {*body, FiredContext::CssUrlJavascript});
                    }
                }
            }
            // title/textarea content is inert text
            if (close == std::string::npos) {
                i = html.size();
            } else {
                std::size_t gt = html.find('>', close);
                i = gt == std::string::npos ? html.size() : gt + 1;
            }
        }
    }
    return jobs;
}

}  // namespace

std::string to_string(FiredContext context) {
    switch (context) {
        case FiredContext::ScriptBlock: return "script-block";
        case FiredContext::EventHandler: return "event-handler";
        case FiredContext::UriJavascript: return "uri-javascript";
        case FiredContext::CssUrlJavascript: return "css-url-javascript";
    }
    return "unknown";
}

RenderedDocument render(const UnitTest& ut, const AttackString& attack,
                        const EncoderRegistry& registry) {
    std::string payload = "attack(" + std::to_string(ut.sink_line) + ")";
    std::string raw = render_attack(attack, payload);
    RenderedDocument doc;
    for (const OutputPiece& piece : ut.output_plan) {
        if (piece.kind == OutputPiece::Kind::Injected) {
            std::string encoded = apply_chain(registry, piece.chain, raw);
            doc.injection_offsets.push_back(
                {doc.text.size(), doc.text.size() + encoded.size()});
            doc.text += encoded;
        } else {
            doc.text += piece.text;
        }
    }
    return doc;
}

ExecutionResult detect_execution(const RenderedDocument& doc) {
    ExecutionResult result;
    for (const JsJob& job : collect_jobs(doc.text)) {
        std::set<int> lines = js_executes_payload(job.source);
        if (lines.empty()) continue;
        result.executed_lines.insert(lines.begin(), lines.end());
        result.fired_contexts.push_back(job.context);
        std::string note;
        note.reserve(64);
        note += to_string(job.context);
        note += " executed line(s) ";
        for (auto it = lines.begin(); it != lines.end(); ++it) {
            if (it != lines.begin()) note += ",";
            note += std::to_string(*it);
        }
        result.diagnostics.push_back(note);
    }
    return result;
}

std::vector<std::string> queued_event_handlers(const std::string& html) {
    std::vector<std::string> queued;
    for (const JsJob& job : collect_jobs(html)) {
        if (job.context == FiredContext::EventHandler) {
            queued.push_back(job.source);
        }
    }
    return queued;
}

std::set<int> js_executes_payload(const std::string& src) {
    JsRecognizer recognizer(js_lex(src));
    return recognizer.run();
}

std::optional<std::string> uri_is_javascript(const std::string& value) {
    static const std::string kScheme = "javascript:";
    std::string trimmed = trim(value);
    if (trimmed.size() < kScheme.size()) return std::nullopt;
    if (fold(trimmed.substr(0, kScheme.size())) != kScheme) {
        return std::nullopt;
    }
    return trimmed.substr(kScheme.size());
}

std::vector<std::string> css_extract_uris(const std::string& style) {
    std::vector<std::string> uris;
    std::string folded = fold(style);
    std::size_t i = 0;
    while (true) {
        std::size_t at = folded.find("url(", i);
        if (at == std::string::npos) break;
        std::size_t j = at + 4;
        while (j < style.size() &&
               std::isspace(static_cast<unsigned char>(style[j]))) {
            ++j;
        }
        if (j < style.size() && (style[j] == '\'' || style[j] == '"')) {
            char quote = style[j++];
            std::size_t vb = j;
            std::size_t vq = style.find(quote, vb);
            if (vq == std::string::npos) break;  // unterminated, stop
            uris.push_back(style.substr(vb, vq - vb));
            i = vq + 1;
        } else {
            std::size_t close = style.find(')', j);
            if (close == std::string::npos) break;
            uris.push_back(trim(style.substr(j, close - j)));
            i = close + 1;
        }
    }
    return uris;
}

}  // namespace xssforge
