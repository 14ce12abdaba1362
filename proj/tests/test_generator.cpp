// Derivation engine, partial-sentence strips, context switches, rendering,
// and the corpus pipeline, checked against a brute-force reference.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "xssforge/attack_generator.hpp"
#include "xssforge/grammar.hpp"

using namespace xssforge;

namespace {

// Brute-force reference enumerator. Groups are unrolled into synthetic rules
// up to the closure bound, then sentential forms are rewritten leftmost-first
// until only terminals remain. Deliberately shares no machinery with the
// production deriver.
using FlatRules = std::map<std::string, std::vector<std::vector<Symbol>>>;

std::vector<Symbol> flatten_sequence(const Sequence& seq, std::size_t bound,
                                     FlatRules& rules, int& counter);

std::string flatten_group(const Group& grp, std::size_t bound,
                          FlatRules& rules, int& counter) {
    std::string unit = "#unit" + std::to_string(counter);
    std::string rep = "#rep" + std::to_string(counter);
    ++counter;
    for (const Sequence& alt : grp.alternatives)
        rules[unit].push_back(flatten_sequence(alt, bound, rules, counter));
    std::size_t lo = grp.repeat == Repeat::Plus ? 1 : 0;
    std::size_t hi = grp.repeat == Repeat::None ? 1 : bound + lo;
    if (grp.repeat == Repeat::None) lo = 1;
    for (std::size_t n = lo; n <= hi; ++n)
        rules[rep].push_back(
            std::vector<Symbol>(n, nonterminal(unit)));
    return rep;
}

std::vector<Symbol> flatten_sequence(const Sequence& seq, std::size_t bound,
                                     FlatRules& rules, int& counter) {
    std::vector<Symbol> out;
    for (const Element& e : seq) {
        if (e.is_symbol())
            out.push_back(e.symbol());
        else
            out.push_back(
                nonterminal(flatten_group(e.group(), bound, rules, counter)));
    }
    return out;
}

std::string token_key(const std::vector<Symbol>& tokens) {
    std::string key;
    for (const Symbol& t : tokens) {
        key += t.kind == SymbolKind::Payload ? std::string("<P>") : t.text;
        key += '\x1f';
    }
    return key;
}

std::set<std::string> oracle_sentences(const Grammar& g, std::size_t bound) {
    FlatRules rules;
    int counter = 0;
    for (const Rule& r : g.rules)
        for (const Sequence& alt : r.alternatives)
            rules[r.head].push_back(
                flatten_sequence(alt, bound, rules, counter));

    std::set<std::string> out;
    std::deque<std::vector<Symbol>> work;
    work.push_back({nonterminal(g.start)});
    while (!work.empty()) {
        std::vector<Symbol> form = std::move(work.front());
        work.pop_front();
        std::size_t nt = form.size();
        std::size_t payloads = 0;
        for (std::size_t i = 0; i < form.size(); ++i) {
            if (form[i].kind == SymbolKind::Nonterminal && nt == form.size())
                nt = i;
            if (form[i].kind == SymbolKind::Payload) ++payloads;
        }
        if (payloads > 1) continue;
        if (nt == form.size()) {
            if (payloads == 1) out.insert(token_key(form));
            continue;
        }
        for (const std::vector<Symbol>& alt : rules.at(form[nt].name)) {
            std::vector<Symbol> next(form.begin(), form.begin() + nt);
            next.insert(next.end(), alt.begin(), alt.end());
            next.insert(next.end(), form.begin() + nt + 1, form.end());
            work.push_back(std::move(next));
        }
    }
    return out;
}

std::set<std::string> production_sentences(const Grammar& g,
                                           std::size_t bound) {
    std::set<std::string> out;
    for (const Sentence& s : derive_sentences(g, bound))
        out.insert(token_key(s.tokens));
    return out;
}

Sentence find_sentence(const Grammar& g, std::size_t bound,
                       const std::string& rendered) {
    for (const Sentence& s : derive_sentences(g, bound))
        if (render_tokens(s.tokens, kPayloadPlaceholder) == rendered) return s;
    FAIL("no sentence renders as ", rendered);
    return {};
}

}  // namespace

TEST_CASE("derivation matches the brute-force reference on toy grammars") {
    struct Case {
        const char* name;
        const char* text;
    };
    static const Case kToys[] = {
        {"alts", "S ::= a PAYLOAD b | PAYLOAD c"},
        {"star", "S ::= ( x | y )* PAYLOAD"},
        {"plus-nested", "S ::= Pre+ PAYLOAD\nPre ::= p | q r"},
        {"nested-group", "S ::= ( a ( b )* )* PAYLOAD"},
        {"payload-filter", "S ::= P P | P | lit\nP ::= PAYLOAD"},
    };
    for (const Case& c : kToys) {
        CAPTURE(c.name);
        Grammar g = parse_grammar(c.name, "S", c.text);
        for (std::size_t bound = 0; bound <= 3; ++bound) {
            CAPTURE(bound);
            CHECK(production_sentences(g, bound) == oracle_sentences(g, bound));
        }
    }
}

TEST_CASE("derivation matches the brute-force reference on builtins") {
    struct Case {
        const char* grammar;
        std::size_t bound;
    };
    static const Case kCases[] = {
        {"uri", 2}, {"css", 2}, {"event", 2}, {"js", 2}, {"html", 1},
    };
    for (const Case& c : kCases) {
        CAPTURE(c.grammar);
        Grammar g = builtin_grammar(c.grammar);
        CHECK(production_sentences(g, c.bound) ==
              oracle_sentences(g, c.bound));
    }
}

TEST_CASE("builtin sentence counts at bound 2 stay frozen") {
    struct Case {
        const char* grammar;
        std::size_t sentences;
    };
    // Counts confirmed by the brute-force reference above.
    static const Case kCases[] = {
        {"uri", 51},   // 17 host attributes times 3 quoting forms
        {"css", 18},   // 3 quoting forms times 6 property names
        {"event", 3},  // onclick times 3 quoting forms
        {"js", 34},    // payload plus 0..2 additive literal operands
    };
    for (const Case& c : kCases) {
        CAPTURE(c.grammar);
        CHECK(derive_sentences(builtin_grammar(c.grammar), 2).size() ==
              c.sentences);
    }
}

TEST_CASE("left strips keep the payload and peel one token at a time") {
    Grammar uri = builtin_grammar("uri");
    Sentence s = find_sentence(uri, 2, "src=\"javascript:%%PAYLOAD%%\"");
    REQUIRE(s.tokens.size() == 6);

    GeneratorOptions opts;
    std::vector<AttackString> lefts = left_strips(s, opts);
    REQUIRE(lefts.size() == 5);  // 1 + tokens before the payload
    CHECK(lefts[0].rendered == "src=\"javascript:%%PAYLOAD%%\"");
    CHECK(lefts[1].rendered == "=\"javascript:%%PAYLOAD%%\"");
    CHECK(lefts[2].rendered == "\"javascript:%%PAYLOAD%%\"");
    CHECK(lefts[3].rendered == "javascript:%%PAYLOAD%%\"");
    CHECK(lefts[4].rendered == "%%PAYLOAD%%\"");
    for (std::size_t i = 0; i < lefts.size(); ++i) {
        CHECK(lefts[i].left_strip == i);
        CHECK(lefts[i].right_strip == 0);
    }
}

TEST_CASE("right strips apply on top of every left variant") {
    Grammar uri = builtin_grammar("uri");
    Sentence s = find_sentence(uri, 2, "src=\"javascript:%%PAYLOAD%%\"");

    GeneratorOptions opts;
    std::vector<AttackString> lefts = left_strips(s, opts);
    std::set<std::string> windows;
    for (const AttackString& lv : lefts) {
        std::vector<AttackString> rights = right_strips(lv, opts);
        REQUIRE(rights.size() == 2);  // 1 + tokens after the payload
        CHECK(rights[1].right_strip == 1);
        for (const AttackString& a : rights) windows.insert(a.rendered);
    }
    CHECK(windows.size() == 10);
    CHECK(windows.count("javascript:%%PAYLOAD%%") == 1);
    CHECK(windows.count("%%PAYLOAD%%") == 1);
}

TEST_CASE("payload boundary windows can be excluded") {
    Grammar uri = builtin_grammar("uri");
    Sentence s = find_sentence(uri, 2, "src=\"javascript:%%PAYLOAD%%\"");

    GeneratorOptions opts;
    opts.include_payload_boundary = false;
    std::vector<AttackString> lefts = left_strips(s, opts);
    CHECK(lefts.size() == 4);  // bare-payload left window dropped
    for (const AttackString& lv : lefts) {
        std::vector<AttackString> rights = right_strips(lv, opts);
        CHECK(rights.size() == 1);  // trailing quote always kept
    }
}

TEST_CASE("strips demand exactly one payload") {
    Sentence none;
    none.tokens = {literal_terminal("a")};
    GeneratorOptions opts;
    CHECK_THROWS_AS((void)left_strips(none, opts), std::invalid_argument);
    Sentence two;
    two.tokens = {payload(), payload()};
    CHECK_THROWS_AS((void)left_strips(two, opts), std::invalid_argument);
}

TEST_CASE("context switch counting recognizes each construct once") {
    struct Case {
        const char* name;
        std::vector<Symbol> tokens;
        std::size_t switches;
    };
    static const Case kCases[] = {
        {"uri scheme",
         {literal_terminal("src"), literal_terminal("="), literal_terminal("\""),
          literal_terminal("javascript:"), payload(), literal_terminal("\"")},
         1},
        {"css url wraps the scheme",
         {literal_terminal("url("), literal_terminal("'"), literal_terminal("javascript:"), payload(),
          literal_terminal("'"), literal_terminal(")")},
         1},
        {"stripping url( promotes the scheme",
         {literal_terminal("javascript:"), payload(), literal_terminal("'"), literal_terminal(")")},
         1},
        {"event handler",
         {literal_terminal("onclick"), literal_terminal("="), literal_terminal("\""), payload(),
          literal_terminal("\"")},
         1},
        {"script block", {literal_terminal("<script>"), payload(), literal_terminal("</script>")}, 1},
        {"bare payload is one switch", {payload()}, 1},
        {"payload with literals only",
         {literal_terminal("\""), literal_terminal("1"), literal_terminal("\""), literal_terminal("+"),
          payload()},
         1},
        {"scheme inside an event value counts twice",
         {literal_terminal("onclick"), literal_terminal("="), literal_terminal("javascript:"),
          payload()},
         2},
        {"no payload and no construct", {literal_terminal("x"), literal_terminal("y")}, 0},
    };
    for (const Case& c : kCases) {
        CAPTURE(c.name);
        CHECK(count_context_switches(c.tokens) == c.switches);
    }
}

TEST_CASE("rendering inserts spaces only between word-character boundaries") {
    struct Case {
        const char* name;
        std::vector<Symbol> tokens;
        const char* rendered;
    };
    static const Case kCases[] = {
        {"tag then attribute",
         {literal_terminal("<img"), literal_terminal("src"), literal_terminal("="), literal_terminal("\""),
          literal_terminal("javascript:"), payload(), literal_terminal("\"")},
         "<img src=\"javascript:%%PAYLOAD%%\""},
        {"js concatenation stays tight",
         {literal_terminal("\""), literal_terminal("1"), literal_terminal("\""), literal_terminal("+"),
          payload(), literal_terminal("+"), literal_terminal("\""), literal_terminal("1"),
          literal_terminal("\"")},
         "\"1\"+%%PAYLOAD%%+\"1\""},
        {"css declaration",
         {literal_terminal(";"), literal_terminal("background-image"), literal_terminal(":"),
          literal_terminal("url("), literal_terminal("'"), literal_terminal("javascript:"), payload(),
          literal_terminal("'"), literal_terminal(")"), literal_terminal(";")},
         ";background-image:url('javascript:%%PAYLOAD%%');"},
        {"adjacent words get one space",
         {literal_terminal("cue-after"), literal_terminal("x_1")},
         "cue-after x_1"},
    };
    for (const Case& c : kCases) {
        CAPTURE(c.name);
        CHECK(render_tokens(c.tokens, kPayloadPlaceholder) == c.rendered);
    }
}

TEST_CASE("render_attack substitutes concrete payload text") {
    Grammar uri = builtin_grammar("uri");
    Sentence s = find_sentence(uri, 2, "src=\"javascript:%%PAYLOAD%%\"");
    GeneratorOptions opts;
    AttackString a = left_strips(s, opts)[0];
    CHECK(render_attack(a, "attack(3)") == "src=\"javascript:attack(3)\"");
}

TEST_CASE("sibling repetition copies are flagged and pruned from the corpus") {
    Grammar html = builtin_grammar("html");
    bool saw_flagged = false;
    for (const Sentence& s : derive_sentences(html, 2)) {
        std::string r = render_tokens(s.tokens, kPayloadPlaceholder);
        if (r.find("<title>") != std::string::npos) {
            CHECK(s.redundant_siblings);
            saw_flagged = true;
        }
        if (r == "<script>%%PAYLOAD%%</script>")
            CHECK(!s.redundant_siblings);
    }
    CHECK(saw_flagged);

    GeneratorOptions opts;
    for (const AttackString& a : generate_corpus({html}, opts))
        CHECK(a.rendered.find("<title>") == std::string::npos);
}

TEST_CASE("mixed repetition units keep one payload-free sibling") {
    Grammar js = builtin_grammar("js");
    GeneratorOptions opts;
    std::set<std::string> rendered;
    for (const AttackString& a : generate_corpus({js}, opts))
        rendered.insert(a.rendered);
    CHECK(rendered.count("\"1\"+%%PAYLOAD%%+\"1\"") == 1);
    // Two payload-free operands add nothing over one.
    CHECK(rendered.count("%%PAYLOAD%%+\"1\"+\"1\"") == 0);
}

TEST_CASE("corpus strings are deduplicated and sorted") {
    GeneratorOptions opts;
    std::vector<AttackString> corpus = generate_corpus(builtin_grammars(), opts);
    REQUIRE(!corpus.empty());
    for (std::size_t i = 1; i < corpus.size(); ++i)
        CHECK(corpus[i - 1].rendered < corpus[i].rendered);
    for (const AttackString& a : corpus)
        CHECK(count_context_switches(a.tokens) == 1);
}

TEST_CASE("corpus carries the canonical per-context attacks") {
    GeneratorOptions opts;
    std::set<std::string> rendered;
    for (const AttackString& a : generate_corpus(builtin_grammars(), opts))
        rendered.insert(a.rendered);
    static const char* kMustHave[] = {
        ";background-image:url('javascript:%%PAYLOAD%%');",
        "\"+%%PAYLOAD%%+\"",
        "'+%%PAYLOAD%%+'",
        "javascript:%%PAYLOAD%%",
        "onclick=\"%%PAYLOAD%%\"",
        "<script>%%PAYLOAD%%</script>",
        "%%PAYLOAD%%",
    };
    for (const char* s : kMustHave) {
        CAPTURE(s);
        CHECK(rendered.count(s) == 1);
    }
}

TEST_CASE("element markup around a covered switch is pruned") {
    // Wrapping src=javascript: or style=url(...) in <img ...> combines the
    // element-creation mechanism with a switch the attribute grammars already
    // cover; only the script element survives as its own mechanism.
    GeneratorOptions opts;
    for (const AttackString& a : generate_corpus(builtin_grammars(), opts)) {
        CAPTURE(a.rendered);
        CHECK(a.rendered.find("<img") == std::string::npos);
        CHECK(a.rendered.find("<style>") == std::string::npos);
        CHECK(a.rendered.find('>') ==
              (a.context_switch == AttackContext::ScriptBlock
                   ? a.rendered.find('>')
                   : std::string::npos));
    }
}

TEST_CASE("corpus size at bound 2 stays frozen") {
    GeneratorOptions opts;
    std::vector<AttackString> corpus = generate_corpus(builtin_grammars(), opts);
    CHECK(corpus.size() == 544);

    struct Case {
        const char* grammar;
        std::size_t stripped;
    };
    static const Case kPerGrammar[] = {
        {"URI", 100}, {"CSS", 330}, {"EVENT", 17}, {"HTML", 440}, {"JS", 105},
    };
    for (const Case& c : kPerGrammar) {
        CAPTURE(c.grammar);
        CHECK(stripped_attack_set(builtin_grammar(c.grammar), 2, opts).size() ==
              c.stripped);
    }
}

TEST_CASE("stripped attack sets grow monotonically with the bound") {
    for (const Grammar& g : builtin_grammars()) {
        CAPTURE(g.name);
        GeneratorOptions opts;
        std::set<std::string> prev;
        for (std::size_t k = 0; k <= 3; ++k) {
            std::set<std::string> cur = stripped_attack_set(g, k, opts);
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(),
                                prev.end()));
            prev = std::move(cur);
        }
    }
}

TEST_CASE("closure bounds reach a fixed point at or below two") {
    struct Case {
        const char* grammar;
        std::size_t bound;
    };
    // Fixed points confirmed against stripped-set equality by hand and by
    // the monotonicity sweep above.
    static const Case kCases[] = {
        {"uri", 0}, {"css", 1}, {"event", 0}, {"html", 1}, {"js", 2},
    };
    GeneratorOptions opts;
    for (const Case& c : kCases) {
        CAPTURE(c.grammar);
        Grammar g = builtin_grammar(c.grammar);
        auto found = find_closure_bound(g, 4, opts);
        REQUIRE(found.has_value());
        CHECK(*found == c.bound);
        CHECK(stripped_attack_set(g, 2, opts) ==
              stripped_attack_set(g, 3, opts));
    }
}

TEST_CASE("find_closure_bound reports failure when the cap is too small") {
    GeneratorOptions opts;
    CHECK(!find_closure_bound(builtin_grammar("js"), 0, opts).has_value());
    CHECK(find_closure_bound(builtin_grammar("uri"), 0, opts).has_value());
}
