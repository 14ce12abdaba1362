// Analyzer behavior frozen on the motivating templates: segmentation,
// control flow, path line sets, taint chains, and synthesized plans.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "xssforge/template_analyzer.hpp"

#include <set>
#include <string>
#include <vector>

using namespace xssforge;

namespace {

// Two inputs, an event-handler sink and an html-body sink, no branching.
const char* kLinkPage =
    "<% String pid = (String)request.getParameter(\"pid\"); %>\n"
    "<% String addr = (String)request.getParameter(\"addr\"); %>\n"
    "<a href=\"javascript:void(0)\" onclick=\"action('"
    "<%= escapeHtml(pid) %>')\"> mylink </a>\n"
    "<p> <%= escapeHtml(addr) %>\n";

// One input reaching sinks in both arms of a branch.
const char* kOrderPage =
    "<% String ordID = request.getParameter(\"order\");\n"
    "ordID = escapeHtml(ordID);\n"
    "if(editMode){ %>\n"
    "<a onclick=\"edit('<%= ordID %>')\" href=\"#\"> Edit Order </a>\n"
    "<% } else { %>\n"
    "<span> Order:<%= ordID %> </span>\n"
    "<% } %>\n";

// Chained encoders applied across sequential assignments.
const char* kProfilePage =
    "<% List<Profile> prf;\n"
    "prf = searchProfile(customerID);\n"
    "String fName = escapeHtml(prf.Name);\n"
    "fName = escapeJavaScript(fName); %>\n"
    "<%= \"Full Name:\" + fName %>\n";

AnalyzerConfig profile_config() {
    AnalyzerConfig config;
    config.taint.sources.insert("searchProfile");
    return config;
}

std::string plan_skeleton(const UnitTest& ut) {
    std::string out;
    for (const OutputPiece& p : ut.output_plan) {
        if (p.kind == OutputPiece::Kind::Injected) {
            out += "{INJ}";
        } else {
            out += p.text;
        }
    }
    return out;
}

std::string literals_only(const UnitTest& ut) {
    std::string out;
    for (const OutputPiece& p : ut.output_plan) {
        if (p.kind == OutputPiece::Kind::Literal) out += p.text;
    }
    return out;
}

}  // namespace

TEST_CASE("segmentation covers the source in order") {
    TemplateAst ast = parse_template(kOrderPage, "order");
    REQUIRE(ast.segments.size() == 10);
    using K = Segment::Kind;
    const std::vector<K> kinds = {K::Scriptlet, K::HtmlText, K::ExprSink,
                                  K::HtmlText,  K::Scriptlet, K::HtmlText,
                                  K::ExprSink,  K::HtmlText, K::Scriptlet,
                                  K::HtmlText};
    std::vector<int> sink_lines;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        CHECK(ast.segments[i].kind == kinds[i]);
        if (ast.segments[i].kind == K::ExprSink) {
            sink_lines.push_back(ast.segments[i].line);
        }
    }
    CHECK(sink_lines == std::vector<int>{4, 6});
    // Segment lines are monotonically non-decreasing.
    for (std::size_t i = 1; i < ast.segments.size(); ++i) {
        CHECK(ast.segments[i].line >= ast.segments[i - 1].line);
    }
}

TEST_CASE("plain markup is a single text segment") {
    TemplateAst ast = parse_template("<p>hello", "t");
    REQUIRE(ast.segments.size() == 1);
    CHECK(ast.segments[0].kind == Segment::Kind::HtmlText);
    CHECK(ast.segments[0].text == "<p>hello");
    REQUIRE(ast.statements.size() == 1);
    CHECK(ast.statements[0]->kind == Statement::Kind::Output);
    CHECK_FALSE(ast.statements[0]->is_sink);
}

TEST_CASE("delimiter and statement errors carry their line") {
    struct Case {
        std::string source;
        std::string kind;
        int line;
    };
    const std::vector<Case> cases = {
        {"<% if(x){ %>", "unbalanced-delimiter", 1},
        {"a\n<% String x = request.getParameter(\"a\");",
         "unbalanced-delimiter", 2},
        {"text\nmore %> text", "unbalanced-delimiter", 2},
        {"<% } %>", "unbalanced-delimiter", 1},
        {"<% for(i){ %>x<% } %>", "statement-syntax-error", 1},
        {"<% while(x){ %>x<% } %>", "statement-syntax-error", 1},
        {"<% String; %>", "statement-syntax-error", 1},
        {"<% frobnicate(x); %>", "statement-syntax-error", 1},
        {"<%  %>irrelevant<%= %>", "statement-syntax-error", 1},
        {"<% if(x = 1){ %>y<% } %>", "statement-syntax-error", 1},
        {"<% String s = \"unterminated; %>", "statement-syntax-error", 1},
    };
    for (const auto& c : cases) {
        CAPTURE(c.source);
        try {
            parse_template(c.source, "t");
            FAIL_CHECK("expected AnalysisError for: " << c.source);
        } catch (const AnalysisError& e) {
            CHECK(e.kind() == c.kind);
            CHECK(e.line() == c.line);
        }
    }
}

TEST_CASE("conditions may compare but not assign") {
    CHECK_NOTHROW(parse_template("<% if(mode == \"edit\"){ %>x<% } %>", "t"));
    CHECK_NOTHROW(parse_template(
        "<% if(a != 1 && (b || c)){ %>x<% } else { %>y<% } %>", "t"));
}

TEST_CASE("cfg has one branch node for a single if") {
    TemplateAst ast = parse_template(kOrderPage, "order");
    ControlFlowGraph cfg = build_cfg(ast);
    int branches = 0;
    for (const CfgNode& n : cfg.nodes) {
        if (n.branch) ++branches;
    }
    CHECK(branches == 1);
    CHECK(cfg.entry == 0);
    CHECK(cfg.nodes[cfg.exit].branch == nullptr);
    CHECK(cfg.nodes[cfg.exit].next == -1);
}

TEST_CASE("branch shapes: nested vs sequential ifs") {
    // One if nested in another's then-arm: 2 branch nodes, 3 full paths.
    const char* nested =
        "<% if(a){ %><% if(b){ %><%= request.getParameter(\"x\") %>"
        "<% } %><% } %>";
    TemplateAst n_ast = parse_template(nested, "n");
    ControlFlowGraph n_cfg = build_cfg(n_ast);
    int n_branches = 0;
    for (const CfgNode& node : n_cfg.nodes) {
        if (node.branch) ++n_branches;
    }
    CHECK(n_branches == 2);
    // Only the true/true path reaches the sink.
    CHECK(enumerate_paths(n_cfg).size() == 1);

    // Two sequential ifs: 2 branch nodes, 4 full paths, all with the sink.
    const char* sequential =
        "<% if(a){ %>x<% } %><% if(b){ %>y<% } %>"
        "<%= request.getParameter(\"x\") %>";
    TemplateAst s_ast = parse_template(sequential, "s");
    ControlFlowGraph s_cfg = build_cfg(s_ast);
    int s_branches = 0;
    for (const CfgNode& node : s_cfg.nodes) {
        if (node.branch) ++s_branches;
    }
    CHECK(s_branches == 2);
    CHECK(enumerate_paths(s_cfg).size() == 4);
}

TEST_CASE("branch paths carry boolean captures and exact line sets") {
    TemplateAst ast = parse_template(kOrderPage, "order");
    ControlFlowGraph cfg = build_cfg(ast);
    std::vector<ExecutionPath> paths = enumerate_paths(cfg);
    REQUIRE(paths.size() == 2);

    CHECK(paths[0].path_id == 1);
    CHECK(paths[1].path_id == 2);
    CHECK(paths[0].lines == std::set<int>{1, 2, 3, 4});
    CHECK(paths[1].lines == std::set<int>{1, 2, 3, 6});

    for (const ExecutionPath& p : paths) {
        int captures = 0;
        for (const PathStep& step : p.steps) {
            if (step.kind != PathStep::Kind::Capture) continue;
            ++captures;
            CHECK(step.capture_var == "e1");
            CHECK(step.cond_text == "editMode");
            CHECK(step.line == 3);
        }
        CHECK(captures == 1);
        REQUIRE(p.sinks.size() == 1);
    }
    CHECK(paths[0].sinks[0].line == 4);
    CHECK(paths[1].sinks[0].line == 6);
}

TEST_CASE("straight-line template yields one path with two sinks") {
    TemplateAst ast = parse_template(kLinkPage, "link");
    std::vector<ExecutionPath> paths = enumerate_paths(build_cfg(ast));
    REQUIRE(paths.size() == 1);
    REQUIRE(paths[0].sinks.size() == 2);
    CHECK(paths[0].sinks[0].line == 3);
    CHECK(paths[0].sinks[1].line == 4);
}

TEST_CASE("sink-free branches are discarded") {
    const char* page =
        "<% String q = request.getParameter(\"q\");\n"
        "if(show){ %>\n"
        "<%= escapeHtml(q) %>\n"
        "<% } else { %>\n"
        "static text only\n"
        "<% } %>\n";
    std::vector<ExecutionPath> paths =
        enumerate_paths(build_cfg(parse_template(page, "t")));
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].sinks[0].line == 3);
}

TEST_CASE("path explosion raises at the cap") {
    std::string page = "<%= request.getParameter(\"q\") %>";
    for (int i = 0; i < 10; ++i) {
        page += "<% if(c){ %>x<% } %>";
    }
    TemplateAst ast = parse_template(page, "t");
    ControlFlowGraph cfg = build_cfg(ast);
    CHECK(enumerate_paths(cfg, 1024).size() == 1024);
    try {
        enumerate_paths(cfg, 512);
        FAIL_CHECK("expected path-explosion");
    } catch (const AnalysisError& e) {
        CHECK(e.kind() == "path-explosion");
    }
}

TEST_CASE("taint follows assignments and records the chain") {
    TemplateAst ast = parse_template(kOrderPage, "order");
    std::vector<ExecutionPath> paths = enumerate_paths(build_cfg(ast));
    AnalyzerConfig config;
    std::vector<SinkTaint> taint = taint_analysis(paths[0], config);
    REQUIRE(taint.size() == 1);
    CHECK(taint[0].sink_line == 4);
    CHECK(taint[0].variables == std::vector<std::string>{"ordID"});
    CHECK(taint[0].chains.at("ordID") ==
          std::vector<std::string>{"escapeHtml"});
    CHECK(taint[0].injections.at("ordID").line == 2);
    CHECK(taint[0].injections.at("ordID").encoder == "escapeHtml");
}

TEST_CASE("chained encoders accumulate first-applied first") {
    TemplateAst ast = parse_template(kProfilePage, "profile");
    std::vector<ExecutionPath> paths = enumerate_paths(build_cfg(ast));
    REQUIRE(paths.size() == 1);
    std::vector<SinkTaint> taint = taint_analysis(paths[0], profile_config());
    REQUIRE(taint.size() == 1);
    CHECK(taint[0].sink_line == 5);
    CHECK(taint[0].variables == std::vector<std::string>{"fName"});
    CHECK(taint[0].chains.at("fName") ==
          std::vector<std::string>{"escapeHtml", "escapeJavaScript"});
    CHECK(taint[0].injections.at("fName").line == 3);
    CHECK(taint[0].injections.at("fName").encoder == "escapeHtml");
}

TEST_CASE("literal sinks carry no taint") {
    std::vector<UnitTest> tests =
        analyze("<%= \"hi\" + 42 %>", "t", AnalyzerConfig{});
    CHECK(tests.empty());
}

TEST_CASE("unknown host calls propagate taint conservatively") {
    const char* page =
        "<% String a = request.getParameter(\"q\");\n"
        "String b = substring(a, 1); %>\n"
        "<%= b %>\n";
    std::vector<UnitTest> tests = analyze(page, "t", AnalyzerConfig{});
    REQUIRE(tests.size() == 1);
    CHECK(tests[0].target_variable == "b");
    CHECK(tests[0].encoder_chain.empty());
    // Unencoded: the attack enters directly at the sink.
    CHECK(tests[0].injection.line == 3);
    CHECK(tests[0].injection.encoder.empty());
}

TEST_CASE("direct source call in a sink is its own carrier") {
    const char* page =
        "<div> <%= escapeHtml(request.getParameter(\"atk\")) %> </div>\n";
    std::vector<UnitTest> tests = analyze(page, "t", AnalyzerConfig{});
    REQUIRE(tests.size() == 1);
    CHECK(tests[0].target_variable == "request.getParameter");
    CHECK(tests[0].encoder_chain == std::vector<std::string>{"escapeHtml"});
    CHECK(tests[0].sink_line == 1);
    CHECK(plan_skeleton(tests[0]) == "<div> {INJ} </div>\n");
}

TEST_CASE("host output statements are sinks") {
    const char* page = "<% String q = request.getParameter(\"q\");\n"
                       "out.write(q); %>\n";
    std::vector<UnitTest> tests = analyze(page, "t", AnalyzerConfig{});
    REQUIRE(tests.size() == 1);
    CHECK(tests[0].target_variable == "q");
    CHECK(tests[0].sink_line == 2);
    CHECK(tests[0].encoder_chain.empty());
    CHECK(tests[0].injection.encoder.empty());
}

TEST_CASE("branching template synthesizes one test per arm") {
    std::vector<UnitTest> tests = analyze(kOrderPage, "order",
                                          AnalyzerConfig{});
    REQUIRE(tests.size() == 2);
    CHECK(tests[0].path_id == 1);
    CHECK(tests[0].sink_line == 4);
    CHECK(tests[0].target_variable == "ordID");
    CHECK(tests[1].path_id == 2);
    CHECK(tests[1].sink_line == 6);
    CHECK(tests[1].target_variable == "ordID");
    CHECK(plan_skeleton(tests[0]) ==
          "\n<a onclick=\"edit('{INJ}')\" href=\"#\"> Edit Order </a>\n\n");
    CHECK(plan_skeleton(tests[1]) == "\n<span> Order:{INJ} </span>\n\n");
    // Path preservation: with the injection removed, the literals are the
    // page text the branch emits on its own.
    CHECK(literals_only(tests[0]) ==
          "\n<a onclick=\"edit('')\" href=\"#\"> Edit Order </a>\n\n");
}

TEST_CASE("two sinks on one path become two unit tests") {
    std::vector<UnitTest> tests = analyze(kLinkPage, "link",
                                          AnalyzerConfig{});
    REQUIRE(tests.size() == 2);

    CHECK(tests[0].target_variable == "pid");
    CHECK(tests[0].sink_line == 3);
    CHECK(tests[0].encoder_chain == std::vector<std::string>{"escapeHtml"});
    CHECK(tests[0].injection.line == 3);
    CHECK(tests[0].injection.encoder == "escapeHtml");
    CHECK(tests[0].constant_substitutions ==
          std::map<std::string, std::string>{{"addr", "1"}});

    CHECK(tests[1].target_variable == "addr");
    CHECK(tests[1].sink_line == 4);
    CHECK(tests[1].constant_substitutions ==
          std::map<std::string, std::string>{{"pid", "1"}});

    // The other sink's value renders as the constant 1 in each plan.
    CHECK(plan_skeleton(tests[0]) ==
          "\n\n<a href=\"javascript:void(0)\" onclick=\"action('{INJ}')\">"
          " mylink </a>\n<p> 1\n");
    CHECK(plan_skeleton(tests[1]) ==
          "\n\n<a href=\"javascript:void(0)\" onclick=\"action('1')\">"
          " mylink </a>\n<p> {INJ}\n");
}

TEST_CASE("multiple variables in one sink are tested one at a time") {
    AnalyzerConfig config;
    const char* separate =
        "<% String var1 = request.getParameter(\"a\");\n"
        "String var2 = request.getParameter(\"b\"); %>\n"
        "<%= escapeHtml(var1) + \"constant\" + escapeHtml(var2) %>\n";
    std::vector<UnitTest> tests = analyze(separate, "t", config);
    REQUIRE(tests.size() == 2);
    CHECK(tests[0].target_variable == "var1");
    CHECK(tests[0].constant_substitutions ==
          std::map<std::string, std::string>{{"var2", "1"}});
    CHECK(plan_skeleton(tests[0]) == "\n{INJ}constant1\n");
    CHECK(tests[1].target_variable == "var2");
    CHECK(plan_skeleton(tests[1]) == "\n1constant{INJ}\n");

    // One encoder around the whole concatenation: substitution happens at
    // the variable occurrence, pre-concatenation.
    const char* joined =
        "<% String var1 = request.getParameter(\"a\");\n"
        "String var2 = request.getParameter(\"b\"); %>\n"
        "<%= escapeHtml(var1 + \"constant\" + var2) %>\n";
    tests = analyze(joined, "t", config);
    REQUIRE(tests.size() == 2);
    CHECK(tests[0].target_variable == "var1");
    CHECK(tests[0].encoder_chain == std::vector<std::string>{"escapeHtml"});
    CHECK(tests[1].target_variable == "var2");
    CHECK(plan_skeleton(tests[0]) == "\n{INJ}constant1\n");
}

TEST_CASE("switch desugars to one path per case plus default") {
    const char* page =
        "<% String v = request.getParameter(\"v\");\n"
        "v = escapeHtml(v);\n"
        "switch(mode){\n"
        "case 1: %>\n"
        "A:<%= v %>\n"
        "<% break;\n"
        "case 2: %>\n"
        "B:<%= v %>\n"
        "<% break;\n"
        "default: %>\n"
        "C:<%= v %>\n"
        "<% } %>\n";
    std::vector<UnitTest> tests = analyze(page, "t", AnalyzerConfig{});
    REQUIRE(tests.size() == 3);
    CHECK(tests[0].sink_line == 5);
    CHECK(tests[1].sink_line == 8);
    CHECK(tests[2].sink_line == 11);
    for (const UnitTest& ut : tests) {
        CHECK(ut.encoder_chain == std::vector<std::string>{"escapeHtml"});
    }
}

TEST_CASE("analysis output is deterministic") {
    AnalyzerConfig config;
    std::vector<UnitTest> a = analyze(kLinkPage, "link", config);
    std::vector<UnitTest> b = analyze(kLinkPage, "link", config);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].target_variable == b[i].target_variable);
        CHECK(a[i].sink_line == b[i].sink_line);
        CHECK(a[i].path_id == b[i].path_id);
        CHECK(a[i].encoder_chain == b[i].encoder_chain);
        CHECK(plan_skeleton(a[i]) == plan_skeleton(b[i]));
    }
}

TEST_CASE("empty and sink-free templates analyze to nothing") {
    CHECK(analyze("", "t", AnalyzerConfig{}).empty());
    CHECK(analyze("<p>static</p>", "t", AnalyzerConfig{}).empty());
    CHECK(analyze("<% String a = \"x\"; %><%= a %>", "t",
                  AnalyzerConfig{})
              .empty());
}
