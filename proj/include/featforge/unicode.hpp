#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 / codepoint-classification helpers. Category coverage is a
// curated range table over the blocks that matter for news text (ASCII,
// Latin-1, general punctuation, currency/arrows/math symbols, Bangla and the
// other common Indic digit rows, CJK punctuation, fullwidth forms), not the
// full Unicode character database.

namespace featforge::uni {

inline constexpr char32_t kReplacement = 0xFFFD;
inline constexpr char32_t kBanglaDanda = 0x0964;
inline constexpr char32_t kBanglaDoubleDanda = 0x0965;

// Decodes one codepoint starting at s[i]; advances i past it.
inline char32_t decode_at(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) { ++i; return b0; }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { ++i; return kReplacement; }
    if (i + len > s.size()) { ++i; return kReplacement; }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) { ++i; return kReplacement; }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return kReplacement;
    return cp;
}

inline std::vector<char32_t> decode(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) out.push_back(decode_at(s, i));
    return out;
}

inline void encode_to(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size() * 3);
    for (char32_t cp : cps) encode_to(cp, out);
    return out;
}

inline std::size_t scalar_count(std::string_view s) {
    std::size_t n = 0, i = 0;
    while (i < s.size()) { decode_at(s, i); ++n; }
    return n;
}

inline bool is_whitespace(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decimal digits (category Nd) for the scripts we care about.
inline bool is_digit(char32_t cp) {
    return (cp >= '0' && cp <= '9') ||
           (cp >= 0x0660 && cp <= 0x0669) ||  // Arabic-Indic
           (cp >= 0x06F0 && cp <= 0x06F9) ||  // Extended Arabic-Indic
           (cp >= 0x0966 && cp <= 0x096F) ||  // Devanagari
           (cp >= 0x09E6 && cp <= 0x09EF) ||  // Bangla
           (cp >= 0xFF10 && cp <= 0xFF19);    // Fullwidth
}

// Category P* over common blocks, plus the Bangla danda pair (which is Po
// anyway but called out separately by the cleaning rules).
inline bool is_punctuation(char32_t cp) {
    if (cp < 0x80) {
        switch (cp) {
            case '!': case '"': case '#': case '%': case '&': case '\'':
            case '(': case ')': case '*': case ',': case '-': case '.':
            case '/': case ':': case ';': case '?': case '@': case '[':
            case '\\': case ']': case '_': case '{': case '}':
                return true;
            default: return false;
        }
    }
    if (cp == kBanglaDanda || cp == kBanglaDoubleDanda) return true;
    if (cp == 0xA1 || cp == 0xA7 || cp == 0xAB || cp == 0xB6 || cp == 0xB7 ||
        cp == 0xBB || cp == 0xBF)
        return true;
    if (cp >= 0x2010 && cp <= 0x2027) return true;   // dashes, quotes, bullets
    if (cp >= 0x2030 && cp <= 0x205E) return true;   // permille .. misc punct
    if (cp >= 0x3001 && cp <= 0x3003) return true;   // CJK comma/stop
    if (cp == 0x3008 || cp == 0x3009 || cp == 0x300A || cp == 0x300B ||
        cp == 0x300C || cp == 0x300D || cp == 0x300E || cp == 0x300F)
        return true;
    if (cp >= 0xFF01 && cp <= 0xFF0F) return true;   // fullwidth punct run
    if (cp >= 0xFF1A && cp <= 0xFF20) return true;
    if (cp == 0x060C || cp == 0x061B || cp == 0x061F) return true;  // Arabic
    return false;
}

// Categories S* and C* (except whitespace): symbols, controls, format chars.
inline bool is_symbol_or_control(char32_t cp) {
    if (cp < 0x20 || cp == 0x7F) return !is_whitespace(cp);
    if (cp < 0x80) {
        switch (cp) {
            case '$': case '+': case '<': case '=': case '>': case '^':
            case '`': case '|': case '~':
                return true;
            default: return false;
        }
    }
    if (cp >= 0x80 && cp <= 0x9F) return true;            // C1 controls
    if (cp == 0xA2 || cp == 0xA3 || cp == 0xA4 || cp == 0xA5 ||
        cp == 0xA6 || cp == 0xA8 || cp == 0xA9 || cp == 0xAC ||
        cp == 0xAE || cp == 0xAF || cp == 0xB0 || cp == 0xB1 ||
        cp == 0xB4 || cp == 0xB8 || cp == 0xD7 || cp == 0xF7)
        return true;
    if (cp >= 0x200B && cp <= 0x200F) return true;        // zero-width/marks
    if (cp >= 0x202A && cp <= 0x202E) return true;        // bidi controls
    if (cp == 0x2060 || cp == 0xFEFF) return true;
    if (cp >= 0x20A0 && cp <= 0x20BF) return true;        // currency
    if (cp >= 0x2100 && cp <= 0x2BFF) return true;        // letterlike..misc symbols
    if (cp == 0x09F2 || cp == 0x09F3) return true;        // Bangla rupee signs
    if (cp == 0xFFFD) return true;
    if (cp >= 0xE000 && cp <= 0xF8FF) return true;        // private use
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return true;      // emoji
    return false;
}

// Canonical composition for the pairs that actually occur in this corpus
// domain: Bangla two-part vowel signs and the common Latin diacritics.
// Anything outside the table passes through unchanged (inputs are expected
// to already be NFC in practice).
inline char32_t compose_pair(char32_t base, char32_t mark) {
    if (base == 0x09C7 && mark == 0x09BE) return 0x09CB;  // Bangla O
    if (base == 0x09C7 && mark == 0x09D7) return 0x09CC;  // Bangla AU
    struct Row { char32_t mark; const char* bases; const char32_t* composed; };
    static constexpr char32_t kGrave[] = {0xC0, 0xC8, 0xCC, 0xD2, 0xD9, 0xE0, 0xE8, 0xEC, 0xF2, 0xF9};
    static constexpr char32_t kAcute[] = {0xC1, 0xC9, 0xCD, 0xD3, 0xDA, 0xE1, 0xE9, 0xED, 0xF3, 0xFA};
    static constexpr char32_t kCirc[]  = {0xC2, 0xCA, 0xCE, 0xD4, 0xDB, 0xE2, 0xEA, 0xEE, 0xF4, 0xFB};
    static constexpr char32_t kUml[]   = {0xC4, 0xCB, 0xCF, 0xD6, 0xDC, 0xE4, 0xEB, 0xEF, 0xF6, 0xFC};
    static const Row rows[] = {
        {0x300, "AEIOUaeiou", kGrave},
        {0x301, "AEIOUaeiou", kAcute},
        {0x302, "AEIOUaeiou", kCirc},
        {0x308, "AEIOUaeiou", kUml},
    };
    for (const auto& r : rows) {
        if (mark != r.mark) continue;
        for (int k = 0; r.bases[k]; ++k)
            if (base == static_cast<char32_t>(r.bases[k])) return r.composed[k];
    }
    return 0;
}

inline std::vector<char32_t> nfc_normalize(std::vector<char32_t> cps) {
    std::vector<char32_t> out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        if (!out.empty()) {
            if (char32_t c = compose_pair(out.back(), cp); c != 0) {
                out.back() = c;
                continue;
            }
        }
        out.push_back(cp);
    }
    return out;
}

inline std::string nfc_normalize(std::string_view s) {
    return encode(nfc_normalize(decode(s)));
}

}  // namespace featforge::uni
