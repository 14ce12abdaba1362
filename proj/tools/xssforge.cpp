// xssforge CLI: corpus generation, template analysis, and scanning.
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xssforge/attack_generator.hpp"
#include "xssforge/scan_driver.hpp"
#include "xssforge/template_analyzer.hpp"

namespace {

using namespace xssforge;

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScanError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string basename_of(const std::string& path) {
    std::size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string chain_text(const std::vector<std::string>& chain) {
    std::string out;
    for (const std::string& name : chain) {
        if (!out.empty()) out += ",";
        out += name;
    }
    return "[" + out + "]";
}

int run_generate(std::size_t bound, const std::vector<std::string>& names,
                 const std::string& output) {
    GeneratorOptions opts;
    opts.closure_bound = bound;
    std::vector<Grammar> grammars;
    if (names.empty()) {
        grammars = builtin_grammars();
    } else {
        for (const std::string& name : names)
            grammars.push_back(builtin_grammar(name));
    }

    std::vector<AttackString> corpus = generate_corpus(grammars, opts);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw ScanError("cannot write " + output);
    out << corpus_to_jsonl(corpus);
    if (!out) throw ScanError("write failed: " + output);

    for (const Grammar& g : grammars) {
        std::size_t count = 0;
        for (const AttackString& a : corpus)
            if (a.grammar == g.name) ++count;
        auto fixed = find_closure_bound(g, bound, opts);
        std::string verdict = fixed
            ? "fixed point at bound " + std::to_string(*fixed)
            : "no fixed point by bound " + std::to_string(bound);
        std::printf("%-8s %4zu attacks  (%s)\n", g.name.c_str(), count,
                    verdict.c_str());
    }
    std::printf("%zu attack strings at bound %zu -> %s\n", corpus.size(),
                bound, output.c_str());
    return 0;
}

int run_analyze(const std::vector<std::string>& paths) {
    bool failed = false;
    for (const std::string& path : paths) {
        std::string name = basename_of(path);
        std::vector<UnitTest> uts;
        try {
            uts = analyze(read_file_or_throw(path), name, AnalyzerConfig{});
        } catch (const std::exception& e) {
            std::fprintf(stderr, "ERROR %s: %s\n", name.c_str(), e.what());
            failed = true;
            continue;
        }
        std::printf("%s: %zu unit test%s\n", name.c_str(), uts.size(),
                    uts.size() == 1 ? "" : "s");
        for (const UnitTest& ut : uts) {
            std::string at = ut.injection.encoder.empty()
                ? "at sink"
                : "line " + std::to_string(ut.injection.line) + " (" +
                      ut.injection.encoder + ")";
            std::printf("  path %d  sink line %d  variable %s  chain %s"
                        "  injection %s",
                        ut.path_id, ut.sink_line, ut.target_variable.c_str(),
                        chain_text(ut.encoder_chain).c_str(), at.c_str());
            if (!ut.constant_substitutions.empty()) {
                std::printf("  constants");
                for (const auto& [var, value] : ut.constant_substitutions)
                    std::printf(" %s=%s", var.c_str(), value.c_str());
            }
            std::printf("\n");
        }
    }
    return failed ? 2 : 0;
}

int run_scan(ScanConfig config, const std::string& config_path) {
    if (!config_path.empty())
        apply_scan_config(read_file_or_throw(config_path), config.analyzer);
    VulnerabilityReport report = scan(config);
    std::string rendered = report_render(report, config.format);
    std::fputs(rendered.c_str(), stdout);
    if (config.format == ReportFormat::Json) std::fputs("\n", stdout);
    return report.findings.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grammar-based XSS scanner for mini-JSP templates"};
    app.require_subcommand(1);

    std::size_t bound = 2;
    std::vector<std::string> grammar_names;
    std::string output;
    CLI::App* gen = app.add_subcommand(
        "generate-attacks", "derive the attack corpus and write it as JSONL");
    gen->add_option("--bound", bound, "closure bound for repetition groups")
        ->capture_default_str();
    gen->add_option("--grammar", grammar_names,
                    "restrict to named grammars (URI CSS EVENT HTML JS)");
    gen->add_option("-o,--output", output, "corpus output file")->required();

    std::vector<std::string> analyze_paths;
    CLI::App* ana = app.add_subcommand(
        "analyze", "print the XSS unit tests synthesized per template");
    ana->add_option("templates", analyze_paths, "template files")
        ->required()
        ->expected(-1);

    ScanConfig config;
    std::string mode = "execute";
    std::string format = "text";
    std::string config_path;
    std::string session;
    CLI::App* scan_cmd = app.add_subcommand(
        "scan", "evaluate every unit test against the attack corpus");
    scan_cmd->add_option("--mode", mode, "execute: oracle-confirmed; "
                         "baseline: substring reflection")
        ->check(CLI::IsMember({"execute", "baseline"}))
        ->capture_default_str();
    scan_cmd->add_option("--corpus", config.corpus_path,
                         "attack corpus JSONL (default: generate built-ins)");
    scan_cmd->add_option("--config", config_path,
                         "JSON config with sources/encoders/maxPaths");
    scan_cmd->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    scan_cmd->add_option("--workers", config.worker_count,
                         "worker thread count")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
        ->capture_default_str();
    scan_cmd->add_flag("--fail-fast", config.fail_fast,
                       "stop each unit test at its first firing attack");
    scan_cmd->add_option("--session", session,
                         "accepted for driver-shape compatibility; ignored");
    scan_cmd->add_option("templates", config.template_paths, "template files")
        ->required()
        ->expected(-1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_generate(bound, grammar_names, output);
        if (ana->parsed()) return run_analyze(analyze_paths);
        config.mode = mode == "baseline" ? ScanMode::Baseline
                                         : ScanMode::Execute;
        config.format = format == "json" ? ReportFormat::Json
                                         : ReportFormat::Text;
        return run_scan(std::move(config), config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
