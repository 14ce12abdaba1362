// Scan orchestration: evaluate every unit test against the attack corpus,
// aggregate deduplicated findings, and serialize reports and corpora.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "xssforge/attack_generator.hpp"
#include "xssforge/template_analyzer.hpp"

namespace xssforge {

// Configuration, CLI usage, and file-format failures; template-level
// analysis errors are reported inside the report instead.
class ScanError : public std::runtime_error {
  public:
    explicit ScanError(const std::string& message)
        : std::runtime_error(message) {}
};

enum class ScanMode { Execute, Baseline };
enum class ReportFormat { Text, Json };

struct ScanConfig {
    std::vector<std::string> template_paths;
    AnalyzerConfig analyzer;
    std::size_t closure_bound = 2;
    std::string corpus_path;  // empty: generate the built-in corpus
    ScanMode mode = ScanMode::Execute;
    std::size_t worker_count = 1;
    ReportFormat format = ReportFormat::Text;
    bool fail_fast = false;
};

struct TemplateInput {
    std::string name;
    std::string source;
};

// One deduplicated vulnerable sink: all firing attacks aggregate here.
struct Finding {
    std::string template_name;
    int sink_line = 0;
    std::string variable;
    std::vector<std::string> encoder_chain;
    std::string context;       // fired context, or the attack's own switch
                               // kind in baseline mode
    std::string first_attack;  // placeholder form of the first firing attack
    std::size_t firing_attacks = 0;
};

struct TemplateError {
    std::string template_name;
    std::string message;
};

struct VulnerabilityReport {
    std::vector<Finding> findings;  // sorted by (template, sinkLine, variable)
    std::vector<TemplateError> errors;
    std::size_t templates_scanned = 0;
};

// Pure core: analyze each template, evaluate unit tests x corpus on a
// bounded worker pool, merge deterministically. Execute mode records a
// finding iff the oracle reports execution; baseline mode iff the raw
// payload-instantiated attack text appears verbatim in the rendered page.
VulnerabilityReport scan_templates(const ScanConfig& config,
                                   const std::vector<TemplateInput>& templates,
                                   const std::vector<AttackString>& corpus);

// File-facing wrapper: reads config.template_paths and the corpus (from
// config.corpus_path, or generated from the built-in grammars at
// config.closure_bound). Throws ScanError on configuration problems.
VulnerabilityReport scan(const ScanConfig& config);

// scan() with the mode forced to substring reflection.
VulnerabilityReport baseline_substring_scan(const ScanConfig& config);

// text: aligned human-readable rows. json: stable schema, byte-identical
// for equal reports; the empty report serializes exactly as
// {"findings":[],"summary":{"templates":0,"findings":0}}.
std::string report_render(const VulnerabilityReport& report,
                          ReportFormat format);

// Line-delimited corpus records {rendered, grammar, contextSwitch,
// leftStrip, rightStrip}; the payload placeholder stays literal.
std::string corpus_to_jsonl(const std::vector<AttackString>& corpus);
std::vector<AttackString> corpus_from_jsonl(const std::string& jsonl);

// Config document {"sources":[...], "encoders":{"alias":"builtin"},
// "maxPaths":N}: sources append to the taint list, encoder entries register
// aliases for the built-ins, maxPaths caps path enumeration. Unknown keys
// are rejected.
void apply_scan_config(const std::string& json_text, AnalyzerConfig& config);

}  // namespace xssforge
