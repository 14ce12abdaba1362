// Scan orchestration over unit tests x attack corpus with a worker pool.
#include "xssforge/scan_driver.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "xssforge/render_oracle.hpp"

namespace xssforge {

namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<AttackContext> context_from_string(const std::string& s) {
    if (s == "uri-javascript") return AttackContext::UriJavascript;
    if (s == "css-url") return AttackContext::CssUrl;
    if (s == "event-handler") return AttackContext::EventHandler;
    if (s == "script-block") return AttackContext::ScriptBlock;
    if (s == "js-expression") return AttackContext::JsExpression;
    return std::nullopt;
}

// One evaluation job: a unit test scanned against the whole corpus.
struct Job {
    std::size_t template_index = 0;
    UnitTest ut;
};

struct JobResult {
    std::size_t firing_attacks = 0;
    std::size_t first_attack = 0;  // corpus index of the first firing attack
    std::string context;           // context recorded for the finding
};

JobResult evaluate_job(const Job& job, const std::vector<AttackString>& corpus,
                       const ScanConfig& config) {
    JobResult result;
    const std::string payload =
        "attack(" + std::to_string(job.ut.sink_line) + ")";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const AttackString& attack = corpus[i];
        RenderedDocument doc =
            render(job.ut, attack, config.analyzer.encoders);
        bool fired = false;
        std::string context;
        if (config.mode == ScanMode::Execute) {
            ExecutionResult r = detect_execution(doc);
            fired = !r.executed_lines.empty();
            if (fired) context = to_string(r.fired_contexts.front());
        } else {
            std::string raw = render_attack(attack, payload);
            fired = doc.text.find(raw) != std::string::npos;
            if (fired) context = to_string(attack.context_switch);
        }
        if (!fired) continue;
        if (result.firing_attacks == 0) {
            result.first_attack = i;
            result.context = context;
        }
        ++result.firing_attacks;
        if (config.fail_fast) break;
    }
    return result;
}

}  // namespace

VulnerabilityReport scan_templates(const ScanConfig& config,
                                   const std::vector<TemplateInput>& templates,
                                   const std::vector<AttackString>& corpus) {
    VulnerabilityReport report;
    report.templates_scanned = templates.size();

    std::vector<Job> jobs;
    for (std::size_t t = 0; t < templates.size(); ++t) {
        try {
            std::vector<UnitTest> uts = analyze(
                templates[t].source, templates[t].name, config.analyzer);
            for (UnitTest& ut : uts) jobs.push_back({t, std::move(ut)});
        } catch (const AnalysisError& e) {
            report.errors.push_back({templates[t].name, e.what()});
        }
    }

    // Workers grab job indices atomically; results land in preallocated
    // slots, so the merge below never depends on scheduling.
    std::vector<JobResult> results(jobs.size());
    auto work = [&](std::atomic<std::size_t>& next) {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
            results[i] = evaluate_job(jobs[i], corpus, config);
        }
    };
    std::size_t workers =
        std::min<std::size_t>(std::max<std::size_t>(config.worker_count, 1),
                              jobs.empty() ? 1 : jobs.size());
    std::atomic<std::size_t> next{0};
    if (workers <= 1) {
        work(next);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] { work(next); });
        }
        for (std::thread& th : pool) th.join();
    }

    // Dedup on (template, sinkLine, variable): several paths may expose the
    // same sink, and many attacks may fire; the sink is the fixable unit.
    std::map<std::tuple<std::string, int, std::string>, std::size_t> by_key;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (results[i].firing_attacks == 0) continue;
        const Job& job = jobs[i];
        const std::string& tname = templates[job.template_index].name;
        auto key = std::make_tuple(tname, job.ut.sink_line,
                                   job.ut.target_variable);
        auto it = by_key.find(key);
        if (it == by_key.end()) {
            Finding f;
            f.template_name = tname;
            f.sink_line = job.ut.sink_line;
            f.variable = job.ut.target_variable;
            f.encoder_chain = job.ut.encoder_chain;
            f.context = results[i].context;
            f.first_attack = corpus[results[i].first_attack].rendered;
            f.firing_attacks = results[i].firing_attacks;
            by_key.emplace(key, report.findings.size());
            report.findings.push_back(std::move(f));
        } else {
            report.findings[it->second].firing_attacks +=
                results[i].firing_attacks;
        }
    }
    std::sort(report.findings.begin(), report.findings.end(),
              [](const Finding& a, const Finding& b) {
                  return std::tie(a.template_name, a.sink_line, a.variable) <
                         std::tie(b.template_name, b.sink_line, b.variable);
              });
    return report;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScanError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<AttackString> load_corpus(const ScanConfig& config) {
    if (config.corpus_path.empty()) {
        GeneratorOptions opts;
        opts.closure_bound = config.closure_bound;
        return generate_corpus(builtin_grammars(), opts);
    }
    return corpus_from_jsonl(read_file(config.corpus_path));
}

std::string template_display_name(const std::string& path) {
    std::size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

VulnerabilityReport scan(const ScanConfig& config) {
    std::vector<TemplateInput> templates;
    for (const std::string& path : config.template_paths) {
        templates.push_back({template_display_name(path), read_file(path)});
    }
    return scan_templates(config, templates, load_corpus(config));
}

VulnerabilityReport baseline_substring_scan(const ScanConfig& config) {
    ScanConfig baseline = config;
    baseline.mode = ScanMode::Baseline;
    return scan(baseline);
}

namespace {

std::string join_chain(const std::vector<std::string>& chain) {
    std::string out;
    for (const std::string& name : chain) {
        if (!out.empty()) out += ",";
        out += name;
    }
    return out;
}

}  // namespace

std::string report_render(const VulnerabilityReport& report,
                          ReportFormat format) {
    if (format == ReportFormat::Json) {
        ordered_json doc;
        doc["findings"] = ordered_json::array();
        for (const Finding& f : report.findings) {
            ordered_json j;
            j["template"] = f.template_name;
            j["sinkLine"] = f.sink_line;
            j["variable"] = f.variable;
            j["encoderChain"] = f.encoder_chain;
            j["context"] = f.context;
            j["attack"] = f.first_attack;
            j["firingAttacks"] = f.firing_attacks;
            doc["findings"].push_back(std::move(j));
        }
        if (!report.errors.empty()) {
            doc["errors"] = ordered_json::array();
            for (const TemplateError& e : report.errors) {
                doc["errors"].push_back(
                    {{"template", e.template_name}, {"message", e.message}});
            }
        }
        doc["summary"] = {{"templates", report.templates_scanned},
                          {"findings", report.findings.size()}};
        return doc.dump();
    }

    std::ostringstream out;
    for (const TemplateError& e : report.errors) {
        out << "ERROR " << e.template_name << ": " << e.message << "\n";
    }
    for (const Finding& f : report.findings) {
        out << f.template_name << "  line " << f.sink_line << "  "
            << f.variable << "  [" << join_chain(f.encoder_chain) << "]  "
            << f.context << "  " << f.firing_attacks << " firing attack"
            << (f.firing_attacks == 1 ? "" : "s") << "  first: "
            << f.first_attack << "\n";
    }
    out << report.findings.size() << " finding"
        << (report.findings.size() == 1 ? "" : "s") << " in "
        << report.templates_scanned << " template"
        << (report.templates_scanned == 1 ? "" : "s") << "\n";
    return out.str();
}

std::string corpus_to_jsonl(const std::vector<AttackString>& corpus) {
    std::string out;
    for (const AttackString& a : corpus) {
        ordered_json j;
        j["rendered"] = a.rendered;
        j["grammar"] = a.grammar;
        j["contextSwitch"] = to_string(a.context_switch);
        j["leftStrip"] = a.left_strip;
        j["rightStrip"] = a.right_strip;
        out += j.dump();
        out += "\n";
    }
    return out;
}

std::vector<AttackString> corpus_from_jsonl(const std::string& jsonl) {
    std::vector<AttackString> corpus;
    std::istringstream in(jsonl);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw ScanError("corpus line " + std::to_string(line_no) + ": " +
                            e.what());
        }
        if (!j.is_object() || !j.contains("rendered") ||
            !j.contains("grammar") || !j.contains("contextSwitch") ||
            !j.contains("leftStrip") || !j.contains("rightStrip") ||
            !j["rendered"].is_string() || !j["grammar"].is_string() ||
            !j["contextSwitch"].is_string() ||
            !j["leftStrip"].is_number_unsigned() ||
            !j["rightStrip"].is_number_unsigned()) {
            throw ScanError("corpus line " + std::to_string(line_no) +
                            ": malformed record");
        }
        AttackString a;
        a.rendered = j["rendered"].get<std::string>();
        a.grammar = j["grammar"].get<std::string>();
        auto context = context_from_string(j["contextSwitch"].get<std::string>());
        if (!context) {
            throw ScanError("corpus line " + std::to_string(line_no) +
                            ": unknown contextSwitch");
        }
        a.context_switch = *context;
        a.left_strip = j["leftStrip"].get<std::size_t>();
        a.right_strip = j["rightStrip"].get<std::size_t>();
        std::size_t at = a.rendered.find(kPayloadPlaceholder);
        std::size_t len = std::string(kPayloadPlaceholder).size();
        if (at == std::string::npos ||
            a.rendered.find(kPayloadPlaceholder, at + len) !=
                std::string::npos) {
            throw ScanError("corpus line " + std::to_string(line_no) +
                            ": rendered must carry the placeholder once");
        }
        // No corpus token abuts the placeholder with a word character, so
        // prefix/payload/suffix tokens reproduce the original rendering.
        std::string prefix = a.rendered.substr(0, at);
        std::string suffix = a.rendered.substr(at + len);
        if (!prefix.empty()) a.tokens.push_back(literal_terminal(prefix));
        a.tokens.push_back(payload());
        if (!suffix.empty()) a.tokens.push_back(literal_terminal(suffix));
        corpus.push_back(std::move(a));
    }
    return corpus;
}

void apply_scan_config(const std::string& json_text, AnalyzerConfig& config) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const ordered_json::parse_error& e) {
        throw ScanError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ScanError("config: expected an object");
    for (const auto& [key, value] : doc.items()) {
        if (key == "sources") {
            if (!value.is_array()) {
                throw ScanError("config: sources must be an array");
            }
            for (const auto& s : value) {
                if (!s.is_string()) {
                    throw ScanError("config: sources must hold strings");
                }
                config.taint.sources.insert(s.get<std::string>());
            }
        } else if (key == "encoders") {
            if (!value.is_object()) {
                throw ScanError("config: encoders must map alias to builtin");
            }
            for (const auto& [alias, builtin] : value.items()) {
                if (!builtin.is_string()) {
                    throw ScanError("config: encoder target must be a string");
                }
                try {
                    config.encoders.add_alias(alias,
                                              builtin.get<std::string>());
                } catch (const UnknownEncoderError& e) {
                    throw ScanError(std::string("config: ") + e.what());
                }
            }
        } else if (key == "maxPaths") {
            if (!value.is_number_unsigned() || value.get<std::size_t>() == 0) {
                throw ScanError("config: maxPaths must be a positive integer");
            }
            config.max_paths = value.get<std::size_t>();
        } else {
            throw ScanError("config: unknown key \"" + key + "\"");
        }
    }
}

}  // namespace xssforge
