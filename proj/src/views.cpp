#include "flor/views.hpp"

#include "flor/error.hpp"
#include "flor/util.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <map>
#include <memory>
#include <set>

namespace flor {

int Table::col_index(const std::string& name) const {
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

const std::vector<std::string> kDims{"projid", "tstamp", "filename"};

// Insert `name` into the ordered loop-column list right after `after`.
void place_loop_col(std::vector<std::string>& order, const std::string& name,
                    const std::string& after) {
    if (std::find(order.begin(), order.end(), name) != order.end()) return;
    if (after.empty()) {
        order.insert(order.begin(), name);
        return;
    }
    auto it = std::find(order.begin(), order.end(), after);
    order.insert(it == order.end() ? order.end() : it + 1, name);
}

// One table per requested variable: its logs rows with the loop context
// unrolled to a column per loop_name (the fixpoint of the ctx climb).
Table per_name_table(Logstore& store, const std::string& name,
                     const std::map<long long, LoopRow>& loops) {
    auto rows = store.logs_for_name(name);
    std::vector<std::string> loop_order;
    struct Unrolled {
        RunKey run;
        std::vector<std::pair<std::string, long long>> coords;  // outer -> inner
        std::string value;
    };
    std::vector<Unrolled> unrolled;
    for (const auto& r : rows) {
        Unrolled u;
        u.run = r.run;
        u.value = r.value;
        std::optional<long long> ctx = r.ctx_id;
        std::vector<std::pair<std::string, long long>> inner_out;
        while (ctx) {  // iterate to the fixpoint: all ctx resolved
            auto it = loops.find(*ctx);
            if (it == loops.end())
                fail("logs row for '" + name + "' references unknown ctx " + std::to_string(*ctx));
            inner_out.emplace_back(it->second.loop_name, it->second.loop_iteration);
            ctx = it->second.parent_ctx_id;
        }
        u.coords.assign(inner_out.rbegin(), inner_out.rend());
        std::string prev;
        for (const auto& [ln, li] : u.coords) {
            place_loop_col(loop_order, ln, prev);
            prev = ln;
        }
        unrolled.push_back(std::move(u));
    }

    Table t;
    t.cols = kDims;
    t.cols.insert(t.cols.end(), loop_order.begin(), loop_order.end());
    t.cols.push_back(name);
    for (const auto& u : unrolled) {
        std::vector<Table::Cell> row(t.cols.size());
        row[0] = u.run.projid;
        row[1] = u.run.tstamp;
        row[2] = u.run.filename;
        for (const auto& [ln, li] : u.coords) {
            int idx = t.col_index(ln);
            row[static_cast<size_t>(idx)] = util::format_int(li);
        }
        row.back() = u.value;
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string key_of(const std::vector<Table::Cell>& row, const std::vector<int>& idx) {
    std::string key;
    for (int i : idx) {
        const auto& cell = row[static_cast<size_t>(i)];
        key += cell ? *cell : std::string("\x01");
        key += '\x1f';
    }
    return key;
}

// Full outer join on the shared columns.
Table outer_join(const Table& left, const Table& right) {
    std::vector<std::string> shared;
    for (const auto& c : left.cols)
        if (right.col_index(c) >= 0) shared.push_back(c);

    Table out;
    out.cols = left.cols;
    std::vector<std::string> right_only;
    for (const auto& c : right.cols)
        if (left.col_index(c) < 0) {
            out.cols.push_back(c);
            right_only.push_back(c);
        }

    std::vector<int> lkey, rkey;
    for (const auto& c : shared) {
        lkey.push_back(left.col_index(c));
        rkey.push_back(right.col_index(c));
    }
    std::multimap<std::string, size_t> rindex;
    for (size_t i = 0; i < right.rows.size(); ++i)
        rindex.emplace(key_of(right.rows[i], rkey), i);

    std::vector<bool> rmatched(right.rows.size(), false);
    for (const auto& lrow : left.rows) {
        auto [b, e] = rindex.equal_range(key_of(lrow, lkey));
        if (b == e) {
            auto row = lrow;
            row.resize(out.cols.size());
            out.rows.push_back(std::move(row));
            continue;
        }
        for (auto it = b; it != e; ++it) {
            rmatched[it->second] = true;
            auto row = lrow;
            row.resize(out.cols.size());
            const auto& rrow = right.rows[it->second];
            for (const auto& c : right_only)
                row[static_cast<size_t>(out.col_index(c))] =
                    rrow[static_cast<size_t>(right.col_index(c))];
            out.rows.push_back(std::move(row));
        }
    }
    for (size_t i = 0; i < right.rows.size(); ++i) {
        if (rmatched[i]) continue;
        std::vector<Table::Cell> row(out.cols.size());
        const auto& rrow = right.rows[i];
        for (const auto& c : right.cols)
            row[static_cast<size_t>(out.col_index(c))] =
                rrow[static_cast<size_t>(right.col_index(c))];
        out.rows.push_back(std::move(row));
    }
    return out;
}

bool cell_less(const Table::Cell& a, const Table::Cell& b) {
    if (!a || !b) return !a && b;  // nulls first
    auto na = util::parse_double(*a);
    auto nb = util::parse_double(*b);
    if (na && nb) return *na < *nb;
    return *a < *b;
}

}  // namespace

Table dataframe(Logstore& store, const std::vector<std::string>& names) {
    if (names.empty()) fail("dataframe requires at least one variable name");
    auto loop_names = store.known_loop_names();
    for (const auto& n : names)
        if (loop_names.count(n))
            fail("'" + n + "' names both a loop and a logged value; rename one of them");

    auto loops = store.loops_by_ctx();
    Table merged;
    bool first = true;
    std::vector<std::string> requested(names);
    for (const auto& name : requested) {
        Table t = per_name_table(store, name, loops);
        merged = first ? std::move(t) : outer_join(merged, t);
        first = false;
    }

    // dimensions first, requested variables last in request order
    std::vector<std::string> final_cols = kDims;
    for (const auto& c : merged.cols) {
        if (std::find(kDims.begin(), kDims.end(), c) != kDims.end()) continue;
        if (std::find(requested.begin(), requested.end(), c) != requested.end()) continue;
        final_cols.push_back(c);
    }
    for (const auto& n : requested)
        if (std::find(final_cols.begin(), final_cols.end(), n) == final_cols.end())
            final_cols.push_back(n);

    Table out;
    out.cols = final_cols;
    for (const auto& row : merged.rows) {
        std::vector<Table::Cell> rearranged(final_cols.size());
        for (size_t i = 0; i < final_cols.size(); ++i) {
            int src = merged.col_index(final_cols[i]);
            if (src >= 0) rearranged[i] = row[static_cast<size_t>(src)];
        }
        out.rows.push_back(std::move(rearranged));
    }

    size_t dim_count = out.cols.size() - requested.size();
    std::sort(out.rows.begin(), out.rows.end(),
              [&](const std::vector<Table::Cell>& a, const std::vector<Table::Cell>& b) {
                  for (size_t i = 0; i < dim_count; ++i) {
                      if (a[i] == b[i]) continue;
                      return cell_less(a[i], b[i]);
                  }
                  return false;
              });
    return out;
}

// --- predicate parsing -----------------------------------------------------

namespace {

struct PredTok {
    enum Kind { Column, Number, Str, Op, And, Or, LParen, RParen, End } kind;
    std::string text;
};

bool col_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '.';
}

std::vector<PredTok> pred_lex(const std::string& s) {
    std::vector<PredTok> toks;
    size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '(') {
            toks.push_back({PredTok::LParen, "("});
            ++i;
            continue;
        }
        if (c == ')') {
            toks.push_back({PredTok::RParen, ")"});
            ++i;
            continue;
        }
        if (c == '\'' || c == '"') {
            char q = c;
            size_t end = s.find(q, i + 1);
            if (end == std::string::npos) fail("unterminated string in predicate");
            toks.push_back({PredTok::Str, s.substr(i + 1, end - i - 1)});
            i = end + 1;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            size_t start = i++;
            while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.' ||
                                    s[i] == 'e' || s[i] == 'E' || s[i] == '-' || s[i] == '+'))
                ++i;
            toks.push_back({PredTok::Number, s.substr(start, i - start)});
            continue;
        }
        if (c == '=' || c == '!' || c == '<' || c == '>') {
            std::string op(1, c);
            if (i + 1 < s.size() && s[i + 1] == '=') op += '=';
            if (op == "==") op = "=";
            if (op == "!") fail("bad operator '!' in predicate");
            toks.push_back({PredTok::Op, op});
            i += op.size() == 1 ? 1 : 2;
            if (op == "=" && i < s.size() && s[i] == '=') ++i;  // tolerate '=='
            continue;
        }
        if (col_char(c)) {
            size_t start = i;
            while (i < s.size() && col_char(s[i])) ++i;
            std::string word = s.substr(start, i - start);
            if (word == "and")
                toks.push_back({PredTok::And, word});
            else if (word == "or")
                toks.push_back({PredTok::Or, word});
            else
                toks.push_back({PredTok::Column, word});
            continue;
        }
        fail(std::string("unexpected character '") + c + "' in predicate");
    }
    toks.push_back({PredTok::End, ""});
    return toks;
}

struct PredNode {
    enum Kind { Cmp, And, Or } kind;
    std::string column, op, literal;
    bool literal_is_number = false;
    std::unique_ptr<PredNode> lhs, rhs;
};

class PredParser {
public:
    explicit PredParser(std::vector<PredTok> toks) : toks_(std::move(toks)) {}
    std::unique_ptr<PredNode> parse() {
        auto node = or_expr();
        if (toks_[pos_].kind != PredTok::End) fail("trailing tokens in predicate");
        return node;
    }

private:
    std::vector<PredTok> toks_;
    size_t pos_ = 0;

    std::unique_ptr<PredNode> or_expr() {
        auto left = and_expr();
        while (toks_[pos_].kind == PredTok::Or) {
            ++pos_;
            auto node = std::make_unique<PredNode>();
            node->kind = PredNode::Or;
            node->lhs = std::move(left);
            node->rhs = and_expr();
            left = std::move(node);
        }
        return left;
    }
    std::unique_ptr<PredNode> and_expr() {
        auto left = atom();
        while (toks_[pos_].kind == PredTok::And) {
            ++pos_;
            auto node = std::make_unique<PredNode>();
            node->kind = PredNode::And;
            node->lhs = std::move(left);
            node->rhs = atom();
            left = std::move(node);
        }
        return left;
    }
    std::unique_ptr<PredNode> atom() {
        if (toks_[pos_].kind == PredTok::LParen) {
            ++pos_;
            auto node = or_expr();
            if (toks_[pos_].kind != PredTok::RParen) fail("missing ')' in predicate");
            ++pos_;
            return node;
        }
        if (toks_[pos_].kind != PredTok::Column) fail("expected a column name in predicate");
        auto node = std::make_unique<PredNode>();
        node->kind = PredNode::Cmp;
        node->column = toks_[pos_++].text;
        if (toks_[pos_].kind != PredTok::Op) fail("expected a comparison operator in predicate");
        node->op = toks_[pos_++].text;
        if (toks_[pos_].kind == PredTok::Number) {
            node->literal = toks_[pos_++].text;
            node->literal_is_number = true;
        } else if (toks_[pos_].kind == PredTok::Str) {
            node->literal = toks_[pos_++].text;
        } else {
            fail("expected a literal after '" + node->op + "' in predicate");
        }
        return node;
    }
};

void collect_columns(const PredNode& node, std::vector<std::string>& out) {
    if (node.kind == PredNode::Cmp) {
        if (std::find(out.begin(), out.end(), node.column) == out.end()) out.push_back(node.column);
        return;
    }
    collect_columns(*node.lhs, out);
    collect_columns(*node.rhs, out);
}

bool eval_pred(const PredNode& node, const Table& view, const std::vector<Table::Cell>& row,
               bool& warned) {
    if (node.kind == PredNode::And)
        return eval_pred(*node.lhs, view, row, warned) && eval_pred(*node.rhs, view, row, warned);
    if (node.kind == PredNode::Or)
        return eval_pred(*node.lhs, view, row, warned) || eval_pred(*node.rhs, view, row, warned);

    int idx = view.col_index(node.column);
    const auto& cell = row[static_cast<size_t>(idx)];
    if (!cell) return false;  // comparisons on null cells are false

    int cmp;
    auto cell_num = util::parse_double(*cell);
    auto lit_num = node.literal_is_number ? util::parse_double(node.literal) : std::nullopt;
    if (cell_num && lit_num) {
        cmp = *cell_num < *lit_num ? -1 : (*cell_num > *lit_num ? 1 : 0);
    } else {
        if (node.literal_is_number && !warned) {
            std::cerr << "warning: comparing text cell in column '" << node.column
                      << "' with a number; falling back to textual comparison\n";
            warned = true;
        }
        int c = cell->compare(node.literal);
        cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    if (node.op == "=") return cmp == 0;
    if (node.op == "!=") return cmp != 0;
    if (node.op == "<") return cmp < 0;
    if (node.op == "<=") return cmp <= 0;
    if (node.op == ">") return cmp > 0;
    if (node.op == ">=") return cmp >= 0;
    fail("unknown predicate operator '" + node.op + "'");
}

}  // namespace

std::vector<std::string> predicate_columns(const std::string& predicate) {
    std::vector<std::string> out;
    if (util::trim(predicate).empty()) return out;
    auto tree = PredParser(pred_lex(predicate)).parse();
    collect_columns(*tree, out);
    return out;
}

Table filter_view(const Table& view, const std::string& predicate) {
    if (util::trim(predicate).empty()) return view;
    auto tree = PredParser(pred_lex(predicate)).parse();
    std::vector<std::string> cols;
    collect_columns(*tree, cols);
    for (const auto& c : cols)
        if (view.col_index(c) < 0) fail("unknown column '" + c + "' in predicate");
    Table out;
    out.cols = view.cols;
    bool warned = false;
    for (const auto& row : view.rows)
        if (eval_pred(*tree, view, row, warned)) out.rows.push_back(row);
    return out;
}

std::string to_csv(const Table& view) {
    auto quote = [](const std::string& field) {
        bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
        if (!needs) return field;
        std::string out = "\"";
        for (char c : field) {
            if (c == '"') out += '"';
            out += c;
        }
        out += '"';
        return out;
    };
    std::string out;
    for (size_t i = 0; i < view.cols.size(); ++i) {
        if (i) out += ',';
        out += quote(view.cols[i]);
    }
    out += "\r\n";
    for (const auto& row : view.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            if (row[i]) out += quote(*row[i]);
        }
        out += "\r\n";
    }
    return out;
}

}  // namespace flor
