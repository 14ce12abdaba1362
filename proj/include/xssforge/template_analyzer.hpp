// Mini template dialect: parsing, control flow, taint, unit test synthesis.
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "xssforge/encoders.hpp"

namespace xssforge {

// Analysis failure with a source position; what() carries the detail.
class AnalysisError : public std::runtime_error {
  public:
    AnalysisError(std::string kind, int line, const std::string& detail)
        : std::runtime_error(kind + " at line " + std::to_string(line) +
                             (detail.empty() ? "" : ": " + detail)),
          kind_(std::move(kind)),
          line_(line) {}
    const std::string& kind() const { return kind_; }
    int line() const { return line_; }

  private:
    std::string kind_;
    int line_;
};

struct Expr {
    enum class Kind { Literal, Variable, Call, Concat };
    Kind kind = Kind::Literal;
    // literal text, variable name (possibly dotted), or callee name.
    std::string text;
    std::vector<std::unique_ptr<Expr>> parts;  // call args or concat parts
    int line = 0;
};

struct Statement {
    enum class Kind { Declare, Assign, If, Output };
    Kind kind = Kind::Output;
    int line = 0;
    std::string var;              // declare/assign target
    std::unique_ptr<Expr> expr;   // rhs or output value
    std::string cond_text;        // if: raw condition source
    std::vector<std::unique_ptr<Statement>> then_block;
    std::vector<std::unique_ptr<Statement>> else_block;
    bool is_sink = false;         // output: expression sink vs page text
};

struct Segment {
    enum class Kind { HtmlText, Scriptlet, ExprSink };
    Kind kind = Kind::HtmlText;
    std::string text;  // page text, statement source, or sink expression
    int line = 0;      // 1-based line where the segment starts
};

struct TemplateAst {
    std::string source_name;
    std::vector<Segment> segments;
    // The whole template normalized to one statement list: page text and
    // sinks become output statements in document order.
    std::vector<std::unique_ptr<Statement>> statements;
};

struct CfgNode {
    std::vector<const Statement*> stmts;   // straight-line prefix
    const Statement* branch = nullptr;     // terminating if, when present
    int branch_no = 0;                     // 1-based, names the capture var
    int then_succ = -1;
    int else_succ = -1;
    int next = -1;                         // fallthrough successor
};

struct ControlFlowGraph {
    std::vector<CfgNode> nodes;
    int entry = 0;
    int exit = 0;
};

struct PathStep {
    enum class Kind { Statement, Capture };
    Kind kind = Kind::Statement;
    const Statement* stmt = nullptr;  // Statement steps
    std::string capture_var;          // Capture steps: e1, e2, ...
    std::string cond_text;
    bool cond_value = false;
    int line = 0;
};

struct SinkRef {
    int line = 0;
    const Expr* expr = nullptr;
};

struct ExecutionPath {
    int path_id = 0;
    std::vector<PathStep> steps;
    std::vector<SinkRef> sinks;
    // Source lines the path covers; page-text lines count only where the
    // text has non-whitespace content.
    std::set<int> lines;
};

struct TaintConfig {
    std::set<std::string> sources = {"request.getParameter"};
};

struct AnalyzerConfig {
    TaintConfig taint;
    EncoderRegistry encoders = EncoderRegistry::with_builtins();
    std::size_t max_paths = 512;
};

// The argument position where the attack parameter enters: the first
// encoder application on the variable's dataflow, or the sink itself when
// the value arrives unencoded (encoder empty).
struct InjectionPoint {
    int line = 0;
    std::string encoder;
};

// Per-sink taint summary for one path. Chains are ordered first-applied
// first; variables keep first-occurrence order within the sink value.
struct SinkTaint {
    int sink_line = 0;
    std::vector<std::string> variables;
    std::map<std::string, std::vector<std::string>> chains;
    std::map<std::string, InjectionPoint> injections;
};

struct OutputPiece {
    enum class Kind { Literal, Injected, Constant };
    Kind kind = Kind::Literal;
    std::string text;                // Literal/Constant content
    std::vector<std::string> chain;  // Injected: encoders, first-applied first
};

struct UnitTest {
    std::string template_name;
    int path_id = 0;
    std::string target_variable;
    InjectionPoint injection;
    std::vector<std::string> encoder_chain;
    int sink_line = 0;
    std::map<std::string, std::string> constant_substitutions;
    std::vector<OutputPiece> output_plan;
};

TemplateAst parse_template(const std::string& source, const std::string& name);

ControlFlowGraph build_cfg(const TemplateAst& ast);

// All root-to-exit straight-line paths, then-branch first, and with each
// branch condition replaced by a boolean capture. Paths without sinks are
// discarded; exceeding max_paths raises path-explosion.
std::vector<ExecutionPath> enumerate_paths(const ControlFlowGraph& cfg,
                                           std::size_t max_paths = 512);

std::vector<SinkTaint> taint_analysis(const ExecutionPath& path,
                                      const AnalyzerConfig& config);

// One UnitTest per (sink, tainted variable); other tainted variables are
// held at the constant "1".
std::vector<UnitTest> synthesize_unit_tests(const TemplateAst& ast,
                                            const ExecutionPath& path,
                                            const std::vector<SinkTaint>& taint,
                                            const AnalyzerConfig& config);

// parse -> cfg -> paths -> taint -> synthesize, ordered by
// (path_id, sink_line, variable).
std::vector<UnitTest> analyze(const std::string& source,
                              const std::string& name,
                              const AnalyzerConfig& config);

}  // namespace xssforge
