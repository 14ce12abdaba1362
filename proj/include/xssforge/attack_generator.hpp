// Attack string generation: bounded exhaustive derivation, partial-sentence
// stripping, context-switch filtering and the deduplicated attack corpus.
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xssforge/grammar.hpp"

namespace xssforge {

// Placeholder kept in corpus text until a concrete payload is rendered in.
inline constexpr const char* kPayloadPlaceholder = "%%PAYLOAD%%";

// A complete derived sentence. `redundant_siblings` marks derivations where a
// repetition group produced payload-free sibling copies that only duplicate
// context already covered by shorter sentences; the corpus stage prunes them.
struct Sentence {
    std::vector<Symbol> tokens;
    std::string origin;                     // grammar name
    std::vector<std::string> derivation;    // rule heads in application order
    bool redundant_siblings = false;

    bool operator==(const Sentence& other) const {
        return tokens == other.tokens && origin == other.origin;
    }
};

// The interpreter-switch construct an attack string relies on.
enum class AttackContext {
    UriJavascript,
    CssUrl,
    EventHandler,
    ScriptBlock,
    JsExpression,
};

std::string to_string(AttackContext c);

struct AttackString {
    std::vector<Symbol> tokens;
    std::string grammar;
    AttackContext context_switch = AttackContext::JsExpression;
    std::size_t left_strip = 0;
    std::size_t right_strip = 0;
    std::string rendered;  // placeholder form, exactly one %%PAYLOAD%%
};

struct GeneratorOptions {
    std::size_t closure_bound = 2;
    // Keep the fully stripped variants whose first/last token is the payload
    // itself (no context tokens on that side).
    bool include_payload_boundary = true;
};

// Every complete sentence derivable with each repetition group expanded
// 0..bound times (one mandatory copy first for +), alternatives enumerated
// exhaustively. Sentences with other than exactly one payload are discarded;
// the result is deduplicated on the token sequence and ordered
// deterministically. Throws std::invalid_argument for invalid grammars.
std::vector<Sentence> derive_sentences(const Grammar& g, std::size_t closure_bound);

// Partial sentences: variants with 0..n leading tokens removed, stopping
// before the payload would be removed. |result| == 1 + tokens before payload.
std::vector<AttackString> left_strips(const Sentence& s,
                                      const GeneratorOptions& opts = {});

// Same from the right. |result| == 1 + tokens after the payload.
std::vector<AttackString> right_strips(const AttackString& a,
                                       const GeneratorOptions& opts = {});

// Number of interpreter-switch constructs in a token sequence. A javascript:
// scheme directly inside url( counts together with it as one switch; a bare
// payload with no construct counts as the terminal js-expression switch.
std::size_t count_context_switches(const std::vector<Symbol>& tokens);

// Token sequence rendered to text. A single space is inserted only where two
// adjacent tokens would otherwise fuse into one lexeme.
std::string render_tokens(const std::vector<Symbol>& tokens,
                          const std::string& payload_text);

// Attack text with the payload placeholder replaced by concrete payload text.
std::string render_attack(const AttackString& a, const std::string& payload_text);

// Union over the given grammars of all stripped variants of all derived
// sentences, filtered to exactly one context switch, deduplicated on rendered
// text and sorted lexicographically by it. Runs are deterministic.
std::vector<AttackString> generate_corpus(const std::vector<Grammar>& grammars,
                                          const GeneratorOptions& opts = {});

// Set of rendered attack strings a single grammar contributes at a bound;
// this is the quantity the closure fixed point is measured on.
std::set<std::string> stripped_attack_set(const Grammar& g, std::size_t bound,
                                          const GeneratorOptions& opts = {});

// Smallest k <= max_bound whose stripped attack set equals the one at k+1;
// nullopt when no fixed point is reached by max_bound.
std::optional<std::size_t> find_closure_bound(const Grammar& g,
                                              std::size_t max_bound,
                                              const GeneratorOptions& opts = {});

}  // namespace xssforge
