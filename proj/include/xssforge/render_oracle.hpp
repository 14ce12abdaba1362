// Execution-based attack confirmation: assemble the page a unit test would
// emit, then decide via context tracking whether attack(n) would run.
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xssforge/attack_generator.hpp"
#include "xssforge/encoders.hpp"
#include "xssforge/template_analyzer.hpp"

namespace xssforge {

struct ByteRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct RenderedDocument {
    std::string text;
    std::vector<ByteRange> injection_offsets;
};

enum class FiredContext {
    ScriptBlock,
    EventHandler,
    UriJavascript,
    CssUrlJavascript,
};

std::string to_string(FiredContext context);

struct ExecutionResult {
    std::set<int> executed_lines;
    std::vector<FiredContext> fired_contexts;  // one entry per firing probe
    std::vector<std::string> diagnostics;
};

// Instantiates the payload as attack(sinkLine), encodes each injected piece
// through its chain, and splices everything into the output plan. Pure text
// assembly.
RenderedDocument render(const UnitTest& ut, const AttackString& attack,
                        const EncoderRegistry& registry);

// Lenient HTML walk feeding the JS recognizer from script blocks, event
// handlers (every on* attribute is a triggered onclick), javascript: URIs
// in URI-bearing attributes, and url() values in style attributes/blocks.
ExecutionResult detect_execution(const RenderedDocument& doc);

// Event normalization observable: the handler bodies that would be queued,
// in document order, one entry per on* attribute occurrence.
std::vector<std::string> queued_event_handlers(const std::string& html);

// Line arguments of every attack(n) call lying outside strings/comments in
// a prefix of src that parses as complete statements. Lex/parse failure
// before an attack call means no execution, like a browser SyntaxError.
std::set<int> js_executes_payload(const std::string& src);

// Trimmed, case-folded scheme test; returns the text after javascript: or
// nothing. Entities and embedded control characters are not decoded.
std::optional<std::string> uri_is_javascript(const std::string& value);

// Every url(...) argument in the style text, optional quotes stripped.
std::vector<std::string> css_extract_uris(const std::string& style);

}  // namespace xssforge
