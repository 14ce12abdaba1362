// The five built-in attack grammars. Each one describes how an injected
// string can switch the browser into a new interpreter context: URI schemes,
// CSS url() properties, event-handler attributes, whole HTML elements, and
// JavaScript additive expressions.
#include "xssforge/grammar.hpp"

#include <cctype>
#include <stdexcept>

namespace xssforge {

namespace {

// Attribute names whose values are URIs. "formation" is kept as published
// alongside the conventional "formaction" spelling, which the execution
// oracle also recognises; the grammar itself lists the published 17 names.
constexpr const char* kUriGrammar = R"(
URIATTRIB ::= URIHOST eq URIVAL
URIHOST ::= src | href | codebase | cite | action | background | data | classid | longdesc | profile | usemap | formation | icon | manifest | poster | srcset | archive
URIVAL ::= sq URI sq | dq URI dq | URI
URI ::= javascript: PAYLOAD
)";

// Style attributes. A property declaration carries a leading semicolon so a
// partial attack string can close an interrupted declaration at the
// injection point before starting its own, which is how the url() attack
// reads in practice. url() arguments are generated single-quoted.
constexpr const char* kCssGrammar = R"(
STYLEATTRIB ::= style eq STYLEVAL
STYLEVAL ::= ( sq STYLE sq ) | ( dq STYLE dq ) | ( STYLE )
STYLE ::= CSSPROP*
CSSPROP ::= semi PROPNAME colon PROPVAL semi
PROPNAME ::= background-image | list-style-image | content | cursor | cue-after | cue-before
PROPVAL ::= url( sq URI sq rp
URI ::= javascript: PAYLOAD
)";

constexpr const char* kEventGrammar = R"(
EVENTATTRIB ::= EVENTNAME eq EVENTVAL
EVENTNAME ::= onclick
EVENTVAL ::= sq PAYLOAD sq | dq PAYLOAD dq | PAYLOAD
)";

// Whole-element integration grammar: img stands in for every attribute-bearing
// tag, and the attribute rules reuse the URI, CSS and EVENT grammars. The
// raw-text elements (title, textarea) derive the fixed literal 1.
constexpr const char* kHtmlGrammar = R"(
HTML ::= ELEM*
ELEM ::= TEXT | STYLEELEM | SCRIPT | IMG
TEXT ::= TITLE | TAREA
TITLE ::= <title> CDATA </title>
TAREA ::= <textarea> CDATA </textarea>
CDATA ::= 1
STYLEELEM ::= <style> CSSPROP* </style>
SCRIPT ::= <script> PAYLOAD </script>
IMG ::= <img ATTRIBLIST >
ATTRIBLIST ::= ATTRIBUTE*
ATTRIBUTE ::= URIATTRIB | STYLEATTRIB | EVENTATTRIB
URIATTRIB ::= URIHOST eq URIVAL
URIHOST ::= src | href | codebase | cite | action | background | data | classid | longdesc | profile | usemap | formation | icon | manifest | poster | srcset | archive
URIVAL ::= sq URI sq | dq URI dq | URI
URI ::= javascript: PAYLOAD
STYLEATTRIB ::= style eq STYLEVAL
STYLEVAL ::= ( sq STYLE sq ) | ( dq STYLE dq ) | ( STYLE )
STYLE ::= CSSPROP*
CSSPROP ::= semi PROPNAME colon PROPVAL semi
PROPNAME ::= background-image | list-style-image | content | cursor | cue-after | cue-before
PROPVAL ::= url( sq URI sq rp
EVENTATTRIB ::= EVENTNAME eq EVENTVAL
EVENTNAME ::= onclick
EVENTVAL ::= sq PAYLOAD sq | dq PAYLOAD dq | PAYLOAD
)";

// Additive JavaScript expressions; the payload takes the place of one
// primary expression among string or number literals.
constexpr const char* kJsGrammar = R"(
AdditiveExp ::= PrimaryExp AdditivePart
AdditivePart ::= ( plus PrimaryExp )*
PrimaryExp ::= PAYLOAD | Literal
Literal ::= dq 1 dq | sq 1 sq | 1
)";

std::vector<Grammar> build_all() {
    std::vector<Grammar> all;
    all.push_back(parse_grammar("URI", "URIATTRIB", kUriGrammar));
    all.push_back(parse_grammar("CSS", "STYLEATTRIB", kCssGrammar));
    all.push_back(parse_grammar("EVENT", "EVENTATTRIB", kEventGrammar));
    all.push_back(parse_grammar("HTML", "HTML", kHtmlGrammar));
    all.push_back(parse_grammar("JS", "AdditiveExp", kJsGrammar));
    for (const Grammar& g : all) {
        ValidationReport report = validate(g);
        if (!report.empty())
            throw std::logic_error("built-in grammar " + g.name +
                                   " is invalid:\n" + report.summary());
    }
    return all;
}

}  // namespace

const std::vector<Grammar>& builtin_grammars() {
    static const std::vector<Grammar> all = build_all();
    return all;
}

const Grammar& builtin_grammar(const std::string& name) {
    auto fold = [](const std::string& s) {
        std::string out;
        for (char c : s)
            out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return out;
    };
    for (const Grammar& g : builtin_grammars())
        if (g.name == fold(name)) return g;
    throw std::invalid_argument("unknown grammar: " + name);
}

}  // namespace xssforge
