#pragma once

#include "flor/logstore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flor {

// Pivoted wide table: dimension columns first (projid, tstamp, filename,
// then one column per loop name, outer to inner), requested variables last
// in request order. A null cell means "never materialized".
struct Table {
    using Cell = std::optional<std::string>;
    std::vector<std::string> cols;
    std::vector<std::vector<Cell>> rows;

    int col_index(const std::string& name) const;
};

Table dataframe(Logstore& store, const std::vector<std::string>& names);

// Predicate grammar:
//   expr := expr ('and'|'or') expr | '(' expr ')' | column op literal
//   op ∈ {=, !=, <, <=, >, >=}; literals are single-quoted strings or numerals.
// Numeric comparison when both sides parse as numbers, else lexicographic;
// comparisons on null cells are false. Empty predicate is the identity.
Table filter_view(const Table& view, const std::string& predicate);

// Column names referenced by a predicate (planner uses this to decide what
// to materialize before evaluating).
std::vector<std::string> predicate_columns(const std::string& predicate);

std::string to_csv(const Table& view);  // RFC-4180, header row

}  // namespace flor
