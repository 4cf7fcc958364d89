#pragma once

#include <string>
#include <vector>

namespace flor::script {

enum class TokKind { Name, Keyword, Int, Float, Str, Op, Newline, Indent, Dedent, End };

struct Token {
    TokKind kind;
    std::string text;
    long long int_val = 0;
    double float_val = 0;
    int line = 0, col = 0;
};

// Indentation-aware tokenizer. `#` starts a comment; blank lines are
// ignored; tabs in leading whitespace are rejected.
std::vector<Token> lex(const std::string& source);

bool is_keyword(const std::string& word);

}  // namespace flor::script
