// Context-specific output encoders and the name registry templates refer to.
#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace xssforge {

// HTML body: & first, then < > ". The single quote deliberately passes
// through; that asymmetry is what makes quoted event-handler sinks
// exploitable.
std::string escape_html(const std::string& s);

// JavaScript string literal: backslash-escape \ first, then ' ", the slash
// of a closing </ sequence, and control characters.
std::string escape_js(const std::string& s);

// Percent-encode every byte outside the RFC 3986 unreserved set.
std::string escape_url(const std::string& s);

// CSS identifier escape: \XX plus a terminating space for every character
// outside [A-Za-z0-9].
std::string escape_css(const std::string& s);

struct Encoder {
    std::string name;
    std::function<std::string(const std::string&)> transform;
};

class UnknownEncoderError : public std::runtime_error {
  public:
    explicit UnknownEncoderError(const std::string& name)
        : std::runtime_error("unknown encoder: " + name), name_(name) {}
    const std::string& name() const { return name_; }

  private:
    std::string name_;
};

// Name registry seeded with the four built-ins; project-specific template
// names map onto built-ins via aliases from the config file.
class EncoderRegistry {
  public:
    static EncoderRegistry with_builtins();

    void add_alias(const std::string& name, const std::string& builtin);
    const Encoder& by_name(const std::string& name) const;
    bool contains(const std::string& name) const;

  private:
    std::map<std::string, Encoder> encoders_;
};

// chain is ordered first-applied first: sequential sanitizing assignments
// append in source order, and the innermost call of a nested expression
// comes first. apply_chain runs left to right, exactly as the host code
// would execute.
std::string apply_chain(const EncoderRegistry& registry,
                        const std::vector<std::string>& chain,
                        const std::string& text);

}  // namespace xssforge
