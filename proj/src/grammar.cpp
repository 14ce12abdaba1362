// Grammar model: construction helpers, validation, and the textual rule
// format parser/serializer.
#include "xssforge/grammar.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xssforge {

namespace {

const std::map<std::string, std::string>& named_terminals() {
    static const std::map<std::string, std::string> table = {
        {"sq", "'"},  {"dq", "\""}, {"lp", "("},    {"rp", ")"},
        {"eq", "="},  {"plus", "+"}, {"colon", ":"}, {"semi", ";"},
    };
    return table;
}

bool is_nonterminal_token(const std::string& tok) {
    return !tok.empty() && tok[0] >= 'A' && tok[0] <= 'Z';
}

}  // namespace

Symbol terminal(const std::string& name, const std::string& text) {
    return Symbol{SymbolKind::Terminal, name, text};
}

Symbol literal_terminal(const std::string& text) {
    return Symbol{SymbolKind::Terminal, text, text};
}

Symbol nonterminal(const std::string& name) {
    return Symbol{SymbolKind::Nonterminal, name, ""};
}

Symbol payload() { return Symbol{SymbolKind::Payload, "PAYLOAD", ""}; }

Element elem(Symbol s) { return Element{std::move(s)}; }
Element elem(Group g) { return Element{std::move(g)}; }

const Rule* Grammar::find_rule(const std::string& head) const {
    for (const Rule& r : rules)
        if (r.head == head) return &r;
    return nullptr;
}

bool ValidationReport::empty() const {
    return undefined_nonterminals.empty() && duplicate_rules.empty() &&
           unreachable_rules.empty() && recursion_cycles.empty() &&
           payload_issues.empty();
}

std::string ValidationReport::summary() const {
    std::ostringstream out;
    auto emit = [&](const char* label, const std::vector<std::string>& v) {
        for (const std::string& s : v) out << label << ": " << s << "\n";
    };
    emit("undefined nonterminal", undefined_nonterminals);
    emit("duplicate rule", duplicate_rules);
    emit("unreachable rule", unreachable_rules);
    emit("recursion cycle", recursion_cycles);
    emit("payload", payload_issues);
    return out.str();
}

std::string terminal_text(const Symbol& s) {
    if (s.kind != SymbolKind::Terminal)
        throw std::invalid_argument("terminal_text: symbol '" + s.name +
                                    "' is not a terminal");
    return s.text;
}

namespace {

void collect_refs(const Sequence& seq, std::set<std::string>& refs,
                  bool& has_payload);

void collect_refs(const Element& e, std::set<std::string>& refs,
                  bool& has_payload) {
    if (e.is_symbol()) {
        const Symbol& s = e.symbol();
        if (s.kind == SymbolKind::Nonterminal) refs.insert(s.name);
        if (s.kind == SymbolKind::Payload) has_payload = true;
        return;
    }
    for (const Sequence& alt : e.group().alternatives)
        collect_refs(alt, refs, has_payload);
}

void collect_refs(const Sequence& seq, std::set<std::string>& refs,
                  bool& has_payload) {
    for (const Element& e : seq) collect_refs(e, refs, has_payload);
}

// DFS that reports one cycle per back edge, rendered head-to-head.
void find_cycles(const std::string& head,
                 const std::map<std::string, std::set<std::string>>& edges,
                 std::vector<std::string>& stack, std::set<std::string>& done,
                 std::vector<std::string>& cycles) {
    auto on_stack = std::find(stack.begin(), stack.end(), head);
    if (on_stack != stack.end()) {
        std::string text;
        for (auto it = on_stack; it != stack.end(); ++it) text += *it + " -> ";
        cycles.push_back(text + head);
        return;
    }
    if (done.count(head)) return;
    stack.push_back(head);
    auto it = edges.find(head);
    if (it != edges.end())
        for (const std::string& next : it->second)
            find_cycles(next, edges, stack, done, cycles);
    stack.pop_back();
    done.insert(head);
}

}  // namespace

ValidationReport validate(const Grammar& g) {
    ValidationReport report;

    std::set<std::string> heads;
    for (const Rule& r : g.rules) {
        if (!heads.insert(r.head).second) report.duplicate_rules.push_back(r.head);
    }

    std::map<std::string, std::set<std::string>> edges;
    std::map<std::string, bool> direct_payload;
    for (const Rule& r : g.rules) {
        std::set<std::string> refs;
        bool has_payload = false;
        for (const Sequence& alt : r.alternatives)
            collect_refs(alt, refs, has_payload);
        edges[r.head].insert(refs.begin(), refs.end());
        direct_payload[r.head] = direct_payload[r.head] || has_payload;
        for (const std::string& ref : refs)
            if (!heads.count(ref) && ref != r.head)
                report.undefined_nonterminals.push_back(ref);
    }
    if (!heads.count(g.start))
        report.undefined_nonterminals.push_back(g.start);
    std::sort(report.undefined_nonterminals.begin(),
              report.undefined_nonterminals.end());
    report.undefined_nonterminals.erase(
        std::unique(report.undefined_nonterminals.begin(),
                    report.undefined_nonterminals.end()),
        report.undefined_nonterminals.end());

    // Reachability from the start symbol.
    std::set<std::string> reachable;
    std::vector<std::string> work{g.start};
    while (!work.empty()) {
        std::string head = work.back();
        work.pop_back();
        if (!reachable.insert(head).second) continue;
        auto it = edges.find(head);
        if (it != edges.end())
            for (const std::string& next : it->second) work.push_back(next);
    }
    for (const Rule& r : g.rules)
        if (!reachable.count(r.head)) report.unreachable_rules.push_back(r.head);

    {
        std::vector<std::string> stack;
        std::set<std::string> done;
        find_cycles(g.start, edges, stack, done, report.recursion_cycles);
        for (const Rule& r : g.rules)
            find_cycles(r.head, edges, stack, done, report.recursion_cycles);
    }

    // The payload must be derivable from the start symbol.
    bool payload_reachable = false;
    for (const std::string& head : reachable)
        if (direct_payload.count(head) && direct_payload.at(head))
            payload_reachable = true;
    if (!payload_reachable) report.payload_issues.push_back("payload unreachable");

    return report;
}

// ---------------------------------------------------------------------------
// Textual rule format

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

Symbol symbol_for_token(const std::string& tok) {
    if (tok == "PAYLOAD") return payload();
    if (is_nonterminal_token(tok)) return nonterminal(tok);
    auto it = named_terminals().find(tok);
    if (it != named_terminals().end()) return terminal(tok, it->second);
    return literal_terminal(tok);
}

// Parses one alternative's token slice into a Sequence; recurses into groups.
Sequence parse_sequence(const std::vector<std::string>& toks, size_t& i,
                        size_t end, const std::string& head);

std::vector<Sequence> parse_alternatives(const std::vector<std::string>& toks,
                                         size_t begin, size_t end,
                                         const std::string& head) {
    std::vector<Sequence> alts;
    size_t i = begin;
    size_t alt_start = begin;
    int depth = 0;
    auto flush = [&](size_t upto) {
        size_t j = alt_start;
        alts.push_back(parse_sequence(toks, j, upto, head));
        if (j != upto)
            throw std::invalid_argument("rule " + head + ": unbalanced group");
    };
    while (i < end) {
        const std::string& t = toks[i];
        if (t == "(") depth++;
        if (t == ")" || t == ")*" || t == ")+") depth--;
        if (t == "|" && depth == 0) {
            flush(i);
            alt_start = i + 1;
        }
        ++i;
    }
    flush(end);
    return alts;
}

Sequence parse_sequence(const std::vector<std::string>& toks, size_t& i,
                        size_t end, const std::string& head) {
    Sequence seq;
    while (i < end) {
        const std::string& t = toks[i];
        if (t == ")" || t == ")*" || t == ")+" || t == "|") break;
        if (t == "(") {
            size_t depth = 1;
            size_t j = i + 1;
            while (j < end && depth > 0) {
                if (toks[j] == "(") depth++;
                if (toks[j] == ")" || toks[j] == ")*" || toks[j] == ")+") depth--;
                ++j;
            }
            if (depth != 0)
                throw std::invalid_argument("rule " + head + ": unbalanced group");
            const std::string& close = toks[j - 1];
            Group grp;
            grp.repeat = close == ")*"  ? Repeat::Star
                         : close == ")+" ? Repeat::Plus
                                         : Repeat::None;
            grp.alternatives = parse_alternatives(toks, i + 1, j - 1, head);
            seq.push_back(elem(std::move(grp)));
            i = j;
            continue;
        }
        // A bare nonterminal may carry a repetition suffix (ELEM*).
        if (t.size() > 1 && (t.back() == '*' || t.back() == '+') &&
            is_nonterminal_token(t)) {
            Group grp;
            grp.repeat = t.back() == '*' ? Repeat::Star : Repeat::Plus;
            grp.alternatives = {{elem(nonterminal(t.substr(0, t.size() - 1)))}};
            seq.push_back(elem(std::move(grp)));
            ++i;
            continue;
        }
        seq.push_back(elem(symbol_for_token(t)));
        ++i;
    }
    return seq;
}

}  // namespace

Grammar parse_grammar(const std::string& name, const std::string& start,
                      const std::string& rule_text) {
    Grammar g;
    g.name = name;
    g.start = start;
    std::istringstream in(rule_text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() < 2 || toks[1] != "::=")
            throw std::invalid_argument("rule line missing '::=': " + line);
        if (!is_nonterminal_token(toks[0]))
            throw std::invalid_argument("rule head must be a nonterminal: " +
                                        line);
        Rule r;
        r.head = toks[0];
        r.alternatives = parse_alternatives(toks, 2, toks.size(), r.head);
        g.rules.push_back(std::move(r));
    }
    return g;
}

namespace {

void serialize_sequence(const Sequence& seq, std::ostringstream& out);

void serialize_element(const Element& e, std::ostringstream& out) {
    if (e.is_symbol()) {
        out << e.symbol().name;
        return;
    }
    const Group& grp = e.group();
    out << "( ";
    for (size_t a = 0; a < grp.alternatives.size(); ++a) {
        if (a) out << " | ";
        serialize_sequence(grp.alternatives[a], out);
    }
    out << " )";
    if (grp.repeat == Repeat::Star) out << "*";
    if (grp.repeat == Repeat::Plus) out << "+";
}

void serialize_sequence(const Sequence& seq, std::ostringstream& out) {
    for (size_t i = 0; i < seq.size(); ++i) {
        if (i) out << " ";
        serialize_element(seq[i], out);
    }
}

}  // namespace

std::string serialize_grammar(const Grammar& g) {
    std::ostringstream out;
    for (const Rule& r : g.rules) {
        out << r.head << " ::=";
        for (size_t a = 0; a < r.alternatives.size(); ++a) {
            out << (a ? " | " : " ");
            std::ostringstream alt;
            serialize_sequence(r.alternatives[a], alt);
            out << alt.str();
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace xssforge
