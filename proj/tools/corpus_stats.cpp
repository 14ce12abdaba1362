// Prints per-grammar derivation and corpus statistics. Development aid for
// sizing the attack corpus and watching closure fixed points.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "xssforge/attack_generator.hpp"
#include "xssforge/grammar.hpp"

int main(int argc, char** argv) {
    using namespace xssforge;
    std::size_t bound = 2;
    bool dump = false;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--dump") {
            dump = true;
        } else if (arg == "--bound" && i + 1 < argc) {
            bound = static_cast<std::size_t>(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--bound N] [--dump]\n", argv[0]);
            return 2;
        }
    }

    GeneratorOptions opts;
    opts.closure_bound = bound;

    std::vector<Grammar> grammars = builtin_grammars();
    std::printf("%-8s %10s %10s %10s %8s\n", "grammar", "sentences", "kept",
                "stripped", "bound");
    for (const Grammar& g : grammars) {
        std::vector<Sentence> sentences = derive_sentences(g, bound);
        std::size_t kept = 0;
        for (const Sentence& s : sentences)
            if (!s.redundant_siblings) ++kept;
        std::set<std::string> stripped = stripped_attack_set(g, bound, opts);
        auto fixed = find_closure_bound(g, 4, opts);
        std::printf("%-8s %10zu %10zu %10zu %8s\n", g.name.c_str(),
                    sentences.size(), kept, stripped.size(),
                    fixed ? std::to_string(*fixed).c_str() : "none");
    }

    std::vector<AttackString> corpus = generate_corpus(grammars, opts);
    std::printf("corpus: %zu distinct attack strings at bound %zu\n",
                corpus.size(), bound);
    if (dump)
        for (const AttackString& a : corpus)
            std::printf("%-8s %zu/%zu %-14s %s\n", a.grammar.c_str(),
                        a.left_strip, a.right_strip,
                        to_string(a.context_switch).c_str(),
                        a.rendered.c_str());
    return 0;
}
