// Output encoders mirroring the escaping functions real view layers call.
#include "xssforge/encoders.hpp"

#include <cstdio>

namespace xssforge {

namespace {

bool is_unreserved(unsigned char c) {
    // RFC 3986 unreserved: ALPHA / DIGIT / "-" / "." / "_" / "~".
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' ||
           c == '~';
}

bool is_css_plain(unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9');
}

void append_hex_byte(std::string& out, char prefix, unsigned char c) {
    char buf[4];
    std::snprintf(buf, sizeof buf, "%c%02X", prefix, c);
    out += buf;
}

}  // namespace

std::string escape_html(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string escape_js(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\'': out += "\\'"; break;
            case '"': out += "\\\""; break;
            case '/':
                // Only the slash that would close a </script>-style tag
                // needs breaking; a lone slash is harmless.
                if (i > 0 && s[i - 1] == '<') {
                    out += "\\/";
                } else {
                    out += '/';
                }
                break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04X",
                                  static_cast<unsigned char>(c));
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string escape_url(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        auto b = static_cast<unsigned char>(c);
        if (is_unreserved(b)) {
            out += c;
        } else {
            append_hex_byte(out, '%', b);
        }
    }
    return out;
}

std::string escape_css(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        auto b = static_cast<unsigned char>(c);
        if (is_css_plain(b)) {
            out += c;
        } else {
            // Trailing space terminates the escape so a following hex
            // digit is not swallowed into it.
            append_hex_byte(out, '\\', b);
            out += ' ';
        }
    }
    return out;
}

EncoderRegistry EncoderRegistry::with_builtins() {
    EncoderRegistry r;
    r.encoders_["escapeHtml"] = {"escapeHtml", escape_html};
    r.encoders_["escapeJavaScript"] = {"escapeJavaScript", escape_js};
    r.encoders_["escapeURL"] = {"escapeURL", escape_url};
    r.encoders_["escapeCSS"] = {"escapeCSS", escape_css};
    return r;
}

void EncoderRegistry::add_alias(const std::string& name,
                                const std::string& builtin) {
    auto it = encoders_.find(builtin);
    if (it == encoders_.end()) throw UnknownEncoderError(builtin);
    encoders_[name] = {name, it->second.transform};
}

const Encoder& EncoderRegistry::by_name(const std::string& name) const {
    auto it = encoders_.find(name);
    if (it == encoders_.end()) throw UnknownEncoderError(name);
    return it->second;
}

bool EncoderRegistry::contains(const std::string& name) const {
    return encoders_.find(name) != encoders_.end();
}

std::string apply_chain(const EncoderRegistry& registry,
                        const std::vector<std::string>& chain,
                        const std::string& text) {
    std::string out = text;
    for (const std::string& name : chain) {
        out = registry.by_name(name).transform(out);
    }
    return out;
}

}  // namespace xssforge
