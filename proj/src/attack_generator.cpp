// Bounded exhaustive derivation and the attack corpus pipeline.
#include "xssforge/attack_generator.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>

namespace xssforge {

std::string to_string(AttackContext c) {
    switch (c) {
        case AttackContext::UriJavascript: return "uri-javascript";
        case AttackContext::CssUrl: return "css-url";
        case AttackContext::EventHandler: return "event-handler";
        case AttackContext::ScriptBlock: return "script-block";
        case AttackContext::JsExpression: return "js-expression";
    }
    return "js-expression";
}

namespace {

struct Partial {
    std::vector<Symbol> tokens;
    std::size_t payloads = 0;
    bool redundant = false;
};

bool has_payload(const std::vector<Symbol>& tokens) {
    for (const Symbol& t : tokens)
        if (t.kind == SymbolKind::Payload) return true;
    return false;
}

std::size_t payload_count(const std::vector<Symbol>& tokens) {
    std::size_t n = 0;
    for (const Symbol& t : tokens)
        if (t.kind == SymbolKind::Payload) ++n;
    return n;
}

// Exhaustive expansion under a closure bound. Sentences end up filtered to
// exactly one payload, and payload count only grows under concatenation, so
// partials that already exceed one are dropped eagerly; that keeps the HTML
// grammar tractable. In drop_redundant mode partials whose sibling copies
// exceed the redundancy limit are discarded instead of flagged, which yields
// the same surviving set as flag-then-filter because the flag is sticky.
class Deriver {
  public:
    Deriver(const Grammar& g, std::size_t bound, bool drop_redundant)
        : grammar_(g), bound_(bound), drop_redundant_(drop_redundant) {}

    std::vector<Partial> expand_nonterminal(const std::string& head) {
        auto cached = cache_.find(head);
        if (cached != cache_.end()) return cached->second;
        const Rule* rule = grammar_.find_rule(head);
        if (!rule)
            throw std::invalid_argument("undefined nonterminal: " + head);
        std::vector<Partial> out;
        for (const Sequence& alt : rule->alternatives) {
            std::vector<Partial> exp = expand_sequence(alt);
            out.insert(out.end(), exp.begin(), exp.end());
        }
        cache_.emplace(head, out);
        return out;
    }

    std::vector<Partial> expand_sequence(const Sequence& seq) {
        std::vector<Partial> acc{Partial{}};
        for (const Element& e : seq) {
            std::vector<Partial> exp = expand_element(e);
            std::vector<Partial> next;
            next.reserve(acc.size() * exp.size());
            for (const Partial& a : acc)
                for (const Partial& b : exp) {
                    if (a.payloads + b.payloads > 1) continue;
                    if (drop_redundant_ && (a.redundant || b.redundant))
                        continue;
                    Partial p;
                    p.tokens = a.tokens;
                    p.tokens.insert(p.tokens.end(), b.tokens.begin(),
                                    b.tokens.end());
                    p.payloads = a.payloads + b.payloads;
                    p.redundant = a.redundant || b.redundant;
                    next.push_back(std::move(p));
                }
            acc = std::move(next);
        }
        return acc;
    }

  private:
    std::vector<Partial> expand_element(const Element& e) {
        if (e.is_symbol()) {
            const Symbol& s = e.symbol();
            if (s.kind == SymbolKind::Nonterminal)
                return expand_nonterminal(s.name);
            Partial p;
            p.tokens = {s};
            p.payloads = s.kind == SymbolKind::Payload ? 1 : 0;
            return {std::move(p)};
        }
        return expand_group(e.group());
    }

    // One copy of the group body: any alternative, fully expanded.
    std::vector<Partial> expand_unit(const Group& grp) {
        std::vector<Partial> out;
        for (const Sequence& alt : grp.alternatives) {
            std::vector<Partial> exp = expand_sequence(alt);
            out.insert(out.end(), exp.begin(), exp.end());
        }
        return out;
    }

    std::vector<Partial> expand_group(const Group& grp) {
        std::vector<Partial> units = expand_unit(grp);
        std::size_t min_copies = grp.repeat == Repeat::Plus ? 1 : 0;
        std::size_t max_copies =
            grp.repeat == Repeat::None ? 1 : bound_ + min_copies;
        if (grp.repeat == Repeat::None) min_copies = 1;

        // A repetition copy that derives no payload is a sibling construct:
        // it duplicates attack context available without it. Whole-construct
        // units (every alternative a single grammar symbol) are redundant
        // with one payload-free copy; mixed units such as an operator plus
        // operand contribute surrounding context, so only a second
        // payload-free copy is redundant.
        bool whole_construct = true;
        for (const Sequence& alt : grp.alternatives)
            if (alt.size() != 1 || !alt[0].is_symbol()) whole_construct = false;
        std::size_t free_limit = whole_construct ? 0 : 1;

        struct Chain {
            Partial partial;
            std::size_t free_copies = 0;
        };
        std::vector<Partial> out;
        std::vector<Chain> chains{Chain{}};
        for (std::size_t n = 0; n <= max_copies; ++n) {
            if (n >= min_copies)
                for (const Chain& c : chains) out.push_back(c.partial);
            if (n == max_copies) break;
            std::vector<Chain> next;
            next.reserve(chains.size() * units.size());
            for (const Chain& prefix : chains)
                for (const Partial& unit : units) {
                    if (prefix.partial.payloads + unit.payloads > 1) continue;
                    Chain c;
                    c.free_copies = prefix.free_copies;
                    bool redundant =
                        prefix.partial.redundant || unit.redundant;
                    if (unit.payloads == 0) {
                        ++c.free_copies;
                        if (c.free_copies > free_limit) redundant = true;
                    }
                    if (drop_redundant_ && redundant) continue;
                    c.partial.tokens = prefix.partial.tokens;
                    c.partial.tokens.insert(c.partial.tokens.end(),
                                            unit.tokens.begin(),
                                            unit.tokens.end());
                    c.partial.payloads =
                        prefix.partial.payloads + unit.payloads;
                    c.partial.redundant = redundant;
                    next.push_back(std::move(c));
                }
            chains = std::move(next);
        }
        return out;
    }

    const Grammar& grammar_;
    std::size_t bound_;
    bool drop_redundant_;
    std::map<std::string, std::vector<Partial>> cache_;
};

std::string token_sort_key(const std::vector<Symbol>& tokens) {
    std::string key;
    for (const Symbol& t : tokens) {
        key += t.kind == SymbolKind::Payload ? std::string("\x01") : t.text;
        key += '\x02';
    }
    return key;
}

std::vector<Sentence> derived_sentences(const Grammar& g,
                                        std::size_t closure_bound,
                                        bool drop_redundant) {
    ValidationReport report = validate(g);
    if (!report.empty())
        throw std::invalid_argument("grammar " + g.name + " is invalid:\n" +
                                    report.summary());

    Deriver deriver(g, closure_bound, drop_redundant);
    std::vector<Partial> expanded = deriver.expand_nonterminal(g.start);

    std::map<std::string, Sentence> unique;
    for (Partial& p : expanded) {
        if (p.payloads != 1) continue;
        std::string key = token_sort_key(p.tokens);
        auto it = unique.find(key);
        if (it == unique.end()) {
            Sentence s;
            s.tokens = std::move(p.tokens);
            s.origin = g.name;
            s.redundant_siblings = p.redundant;
            unique.emplace(std::move(key), std::move(s));
        } else if (it->second.redundant_siblings && !p.redundant) {
            it->second.redundant_siblings = false;
        }
    }

    std::vector<Sentence> out;
    out.reserve(unique.size());
    for (auto& [key, s] : unique) out.push_back(std::move(s));
    return out;
}

}  // namespace

std::vector<Sentence> derive_sentences(const Grammar& g,
                                       std::size_t closure_bound) {
    return derived_sentences(g, closure_bound, false);
}

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
}

std::size_t payload_index(const std::vector<Symbol>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i].kind == SymbolKind::Payload) return i;
    throw std::logic_error("token sequence has no payload");
}

AttackContext classify(const std::vector<Symbol>& tokens);

AttackString make_attack(const Sentence& s, std::size_t left,
                         std::size_t right) {
    AttackString a;
    a.tokens.assign(s.tokens.begin() + left, s.tokens.end() - right);
    a.grammar = s.origin;
    a.left_strip = left;
    a.right_strip = right;
    a.context_switch = classify(a.tokens);
    a.rendered = render_tokens(a.tokens, kPayloadPlaceholder);
    return a;
}

AttackContext classify(const std::vector<Symbol>& tokens) {
    // First interpreter-switch construct decides the classification; with no
    // construct the payload itself is the js-expression switch.
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Symbol& t = tokens[i];
        if (t.kind != SymbolKind::Terminal) continue;
        if (t.text == "url(") return AttackContext::CssUrl;
        if (t.text == "javascript:") return AttackContext::UriJavascript;
        if (t.text == "<script>") return AttackContext::ScriptBlock;
        if (t.text.rfind("on", 0) == 0 && i + 1 < tokens.size() &&
            tokens[i + 1].kind == SymbolKind::Terminal &&
            tokens[i + 1].text == "=")
            return AttackContext::EventHandler;
    }
    return AttackContext::JsExpression;
}

}  // namespace

std::size_t count_context_switches(const std::vector<Symbol>& tokens) {
    std::size_t count = 0;
    bool saw_construct = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Symbol& t = tokens[i];
        if (t.kind != SymbolKind::Terminal) continue;
        if (t.text == "url(" || t.text == "<script>") {
            ++count;
            saw_construct = true;
            continue;
        }
        if (t.text == "javascript:") {
            // A scheme immediately inside url( belongs to that switch.
            bool inside_url = false;
            for (std::size_t j = i; j-- > 0;) {
                const Symbol& prev = tokens[j];
                if (prev.kind == SymbolKind::Terminal &&
                    (prev.text == "'" || prev.text == "\""))
                    continue;
                inside_url = prev.kind == SymbolKind::Terminal &&
                             prev.text == "url(";
                break;
            }
            if (!inside_url) ++count;
            saw_construct = true;
            continue;
        }
        if (t.text.rfind("on", 0) == 0 && i + 1 < tokens.size() &&
            tokens[i + 1].kind == SymbolKind::Terminal &&
            tokens[i + 1].text == "=") {
            ++count;
            saw_construct = true;
        }
    }
    if (!saw_construct && has_payload(tokens)) return 1;
    return count;
}

std::string render_tokens(const std::vector<Symbol>& tokens,
                          const std::string& payload_text) {
    std::string out;
    for (const Symbol& t : tokens) {
        const std::string& text =
            t.kind == SymbolKind::Payload ? payload_text : t.text;
        if (text.empty()) continue;
        if (!out.empty() && is_word_char(out.back()) && is_word_char(text.front()))
            out += ' ';
        out += text;
    }
    return out;
}

std::string render_attack(const AttackString& a,
                          const std::string& payload_text) {
    return render_tokens(a.tokens, payload_text);
}

std::vector<AttackString> left_strips(const Sentence& s,
                                      const GeneratorOptions& opts) {
    if (payload_count(s.tokens) != 1)
        throw std::invalid_argument("left_strips: sentence must carry exactly one payload");
    std::size_t pos = payload_index(s.tokens);
    std::vector<AttackString> out;
    for (std::size_t i = 0; i <= pos; ++i) {
        if (!opts.include_payload_boundary && i == pos && pos > 0) continue;
        out.push_back(make_attack(s, i, 0));
    }
    return out;
}

std::vector<AttackString> right_strips(const AttackString& a,
                                       const GeneratorOptions& opts) {
    if (payload_count(a.tokens) != 1)
        throw std::invalid_argument("right_strips: attack must carry exactly one payload");
    std::size_t pos = payload_index(a.tokens);
    std::size_t after = a.tokens.size() - pos - 1;
    Sentence view;
    view.tokens = a.tokens;
    view.origin = a.grammar;
    std::vector<AttackString> out;
    for (std::size_t j = 0; j <= after; ++j) {
        if (!opts.include_payload_boundary && j == after && after > 0) continue;
        AttackString v = make_attack(view, 0, j);
        v.left_strip = a.left_strip;
        v.right_strip = a.right_strip + j;
        out.push_back(std::move(v));
    }
    return out;
}

namespace {

// Element-boundary markup around an attribute-level or CSS-level switch
// combines two switching mechanisms in one attack: creating the element and
// triggering the embedded switch. The attribute grammars already cover the
// embedded switch at every strip depth, so such windows are redundant. The
// script element is exempt because the element itself is the switch.
bool wraps_covered_switch(const AttackString& a) {
    if (a.context_switch == AttackContext::ScriptBlock) return false;
    static const std::set<std::string> kBoundary = {
        "<img",       ">",        "<style>",    "</style>", "<title>",
        "</title>",   "<textarea>", "</textarea>", "</script>",
    };
    for (const Symbol& t : a.tokens)
        if (t.kind == SymbolKind::Terminal && kBoundary.count(t.text))
            return true;
    return false;
}

std::vector<AttackString> grammar_attacks(const Grammar& g,
                                          const GeneratorOptions& opts) {
    std::vector<AttackString> out;
    for (const Sentence& s : derived_sentences(g, opts.closure_bound, true)) {
        for (const AttackString& lv : left_strips(s, opts))
            for (AttackString& a : right_strips(lv, opts)) {
                if (count_context_switches(a.tokens) != 1) continue;
                if (wraps_covered_switch(a)) continue;
                out.push_back(std::move(a));
            }
    }
    return out;
}

}  // namespace

std::vector<AttackString> generate_corpus(const std::vector<Grammar>& grammars,
                                          const GeneratorOptions& opts) {
    std::vector<AttackString> all;
    for (const Grammar& g : grammars) {
        std::vector<AttackString> part = grammar_attacks(g, opts);
        all.insert(all.end(), part.begin(), part.end());
    }
    std::sort(all.begin(), all.end(),
              [](const AttackString& a, const AttackString& b) {
                  return std::tie(a.rendered, a.grammar, a.left_strip,
                                  a.right_strip) <
                         std::tie(b.rendered, b.grammar, b.left_strip,
                                  b.right_strip);
              });
    all.erase(std::unique(all.begin(), all.end(),
                          [](const AttackString& a, const AttackString& b) {
                              return a.rendered == b.rendered;
                          }),
              all.end());
    return all;
}

std::set<std::string> stripped_attack_set(const Grammar& g, std::size_t bound,
                                          const GeneratorOptions& opts) {
    GeneratorOptions at_bound = opts;
    at_bound.closure_bound = bound;
    std::set<std::string> out;
    for (const AttackString& a : grammar_attacks(g, at_bound))
        out.insert(a.rendered);
    return out;
}

std::optional<std::size_t> find_closure_bound(const Grammar& g,
                                              std::size_t max_bound,
                                              const GeneratorOptions& opts) {
    std::set<std::string> prev = stripped_attack_set(g, 0, opts);
    for (std::size_t k = 0; k <= max_bound; ++k) {
        std::set<std::string> next = stripped_attack_set(g, k + 1, opts);
        if (next == prev) return k;
        prev = std::move(next);
    }
    return std::nullopt;
}

}  // namespace xssforge
