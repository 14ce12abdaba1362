// Attack grammar model: symbols, rules with bounded repetition groups, and
// the textual rule format used to describe the built-in grammars.
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace xssforge {

enum class SymbolKind { Terminal, Nonterminal, Payload };

// A terminal carries the exact text it renders as. The payload symbol is the
// single injection marker a derivation must produce exactly once.
struct Symbol {
    SymbolKind kind = SymbolKind::Terminal;
    std::string name;  // rule-text spelling ("sq", "URIHOST", "PAYLOAD", ...)
    std::string text;  // terminals only: concrete output text

    bool operator==(const Symbol&) const = default;
};

Symbol terminal(const std::string& name, const std::string& text);
Symbol literal_terminal(const std::string& text);  // name == text
Symbol nonterminal(const std::string& name);
Symbol payload();

enum class Repeat { None, Star, Plus };

struct Element;
using Sequence = std::vector<Element>;

// A parenthesised group of alternatives, optionally repeated. Star expands to
// 0..bound copies at derivation time, plus to one mandatory copy plus 0..bound.
struct Group {
    Repeat repeat = Repeat::None;
    std::vector<Sequence> alternatives;

    bool operator==(const Group&) const = default;
};

struct Element {
    std::variant<Symbol, Group> node;

    bool is_symbol() const { return std::holds_alternative<Symbol>(node); }
    const Symbol& symbol() const { return std::get<Symbol>(node); }
    const Group& group() const { return std::get<Group>(node); }

    bool operator==(const Element&) const = default;
};

Element elem(Symbol s);
Element elem(Group g);

// One defining rule per nonterminal head; top-level alternatives model the
// `|` operator of the rule text.
struct Rule {
    std::string head;
    std::vector<Sequence> alternatives;

    bool operator==(const Rule&) const = default;
};

struct Grammar {
    std::string name;   // URI, CSS, EVENT, HTML or JS for the built-ins
    std::string start;
    std::vector<Rule> rules;

    const Rule* find_rule(const std::string& head) const;

    bool operator==(const Grammar&) const = default;
};

// Structural problems found by validate(). An empty report means the grammar
// is usable for derivation.
struct ValidationReport {
    std::vector<std::string> undefined_nonterminals;
    std::vector<std::string> duplicate_rules;
    std::vector<std::string> unreachable_rules;
    std::vector<std::string> recursion_cycles;  // rendered as "A -> B -> A"
    std::vector<std::string> payload_issues;

    bool empty() const;
    std::string summary() const;
};

ValidationReport validate(const Grammar& g);

// Concrete text of a terminal symbol; throws std::invalid_argument for
// nonterminals and the payload marker.
std::string terminal_text(const Symbol& s);

// Textual rule format: one rule per line, `HEAD ::= alt1 | alt2`, groups in
// parentheses with an optional * or + suffix, tokens separated by spaces.
// Uppercase-initial tokens are nonterminals (PAYLOAD is the payload marker);
// everything else is a terminal, either one of the named punctuation tokens
// (sq dq lp rp eq plus colon semi) or a literal spelled as itself.
Grammar parse_grammar(const std::string& name, const std::string& start,
                      const std::string& rule_text);
std::string serialize_grammar(const Grammar& g);

// The five built-in attack grammars. Construction failure is a defect and
// throws std::logic_error.
const std::vector<Grammar>& builtin_grammars();
const Grammar& builtin_grammar(const std::string& name);

}  // namespace xssforge
