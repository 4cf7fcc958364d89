#include "flor/script/lexer.hpp"

#include "flor/error.hpp"

#include <cctype>
#include <set>

namespace flor::script {

bool is_keyword(const std::string& word) {
    static const std::set<std::string> kw{"for",  "in",   "with", "if",   "elif", "else",
                                          "and",  "or",   "not",  "pass", "true", "false",
                                          "none"};
    return kw.count(word) > 0;
}

static bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<Token> lex(const std::string& source) {
    std::vector<Token> toks;
    std::vector<int> indents{0};
    size_t i = 0;
    int line = 1;
    const size_t n = source.size();

    auto error_at = [&](const std::string& msg) {
        fail("line " + std::to_string(line) + ": " + msg);
    };

    while (i <= n) {
        // measure indentation of this line
        int indent = 0;
        size_t line_start = i;
        while (i < n && (source[i] == ' ' || source[i] == '\t')) {
            if (source[i] == '\t') error_at("tabs are not allowed in indentation");
            ++indent;
            ++i;
        }
        bool blank = (i >= n) || source[i] == '\n' || source[i] == '\r' || source[i] == '#';
        if (blank) {
            // skip the whole line without indentation effects
            while (i < n && source[i] != '\n') ++i;
            if (i < n) {
                ++i;
                ++line;
                continue;
            }
            break;
        }

        if (indent > indents.back()) {
            indents.push_back(indent);
            toks.push_back({TokKind::Indent, "", 0, 0, line, indent + 1});
        } else {
            while (indent < indents.back()) {
                indents.pop_back();
                toks.push_back({TokKind::Dedent, "", 0, 0, line, indent + 1});
            }
            if (indent != indents.back()) error_at("inconsistent indentation");
        }

        // tokens within the line
        while (i < n && source[i] != '\n') {
            char c = source[i];
            int col = static_cast<int>(i - line_start) + 1;
            if (c == ' ') {
                ++i;
                continue;
            }
            if (c == '\t') error_at("tabs are not allowed");
            if (c == '#') {
                while (i < n && source[i] != '\n') ++i;
                break;
            }
            if (name_start(c)) {
                size_t start = i;
                while (i < n && name_char(source[i])) ++i;
                std::string word = source.substr(start, i - start);
                toks.push_back({is_keyword(word) ? TokKind::Keyword : TokKind::Name, word, 0, 0,
                                line, col});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                size_t start = i;
                bool is_float = false;
                while (i < n && std::isdigit(static_cast<unsigned char>(source[i]))) ++i;
                if (i + 1 < n && source[i] == '.' &&
                    std::isdigit(static_cast<unsigned char>(source[i + 1]))) {
                    is_float = true;
                    ++i;
                    while (i < n && std::isdigit(static_cast<unsigned char>(source[i]))) ++i;
                }
                if (i < n && (source[i] == 'e' || source[i] == 'E')) {
                    size_t save = i;
                    ++i;
                    if (i < n && (source[i] == '+' || source[i] == '-')) ++i;
                    if (i < n && std::isdigit(static_cast<unsigned char>(source[i]))) {
                        is_float = true;
                        while (i < n && std::isdigit(static_cast<unsigned char>(source[i]))) ++i;
                    } else {
                        i = save;
                    }
                }
                std::string num = source.substr(start, i - start);
                Token t{is_float ? TokKind::Float : TokKind::Int, num, 0, 0, line, col};
                if (is_float)
                    t.float_val = std::stod(num);
                else
                    t.int_val = std::stoll(num);
                toks.push_back(std::move(t));
                continue;
            }
            if (c == '"' || c == '\'') {
                char quote = c;
                ++i;
                std::string text;
                bool closed = false;
                while (i < n && source[i] != '\n') {
                    if (source[i] == '\\' && i + 1 < n) {
                        char esc = source[i + 1];
                        switch (esc) {
                            case 'n': text += '\n'; break;
                            case 't': text += '\t'; break;
                            case '\\': text += '\\'; break;
                            case '"': text += '"'; break;
                            case '\'': text += '\''; break;
                            default: text += esc;
                        }
                        i += 2;
                        continue;
                    }
                    if (source[i] == quote) {
                        closed = true;
                        ++i;
                        break;
                    }
                    text += source[i];
                    ++i;
                }
                if (!closed) error_at("unterminated string literal");
                toks.push_back({TokKind::Str, text, 0, 0, line, col});
                continue;
            }
            // operators / punctuation
            static const char* two_char[] = {"==", "!=", "<=", ">=", "//"};
            std::string op(1, c);
            if (i + 1 < n) {
                std::string pair = source.substr(i, 2);
                for (const char* cand : two_char)
                    if (pair == cand) op = pair;
            }
            static const std::string singles = "+-*/%<>=(),[]:";
            if (op.size() == 1 && singles.find(c) == std::string::npos)
                error_at(std::string("unexpected character '") + c + "'");
            toks.push_back({TokKind::Op, op, 0, 0, line, col});
            i += op.size();
        }
        toks.push_back({TokKind::Newline, "", 0, 0, line, 0});
        if (i < n) {
            ++i;  // consume '\n'
            ++line;
        } else {
            break;
        }
    }
    while (indents.size() > 1) {
        indents.pop_back();
        toks.push_back({TokKind::Dedent, "", 0, 0, line, 1});
    }
    toks.push_back({TokKind::End, "", 0, 0, line, 1});
    return toks;
}

}  // namespace flor::script
