// Malformed queries with the position of the first violation (1-based).
#pragma once

#include <array>

namespace oracle {

struct Malformed {
    const char* text;
    int line;
    int col;
};

inline constexpr std::array<Malformed, 50> kMalformedQueries{{
    {"", 1, 1},
    {"SELECT", 1, 7},
    {"SELECT FROM WHERE", 1, 8},
    {"SELECT * v", 1, 10},
    {"SELECT * FROM", 1, 14},
    {"SELECT * FROM WHERE", 1, 15},
    {"SELECT * FROM v", 1, 16},
    {"SELECT * FROM v WHERE", 1, 22},
    {"SELECT * FROM v WHERE = 0", 1, 23},
    {"SELECT * FROM v WHERE m 0", 1, 25},
    {"SELECT * FROM v WHERE m = ", 1, 27},
    {"SELECT * FROM v WHERE m = x", 1, 27},
    {"SELECT * FROM v WHERE m = 0", 1, 28},
    {"SELECT * FROM v WHERE m = 0 BECAUSE", 1, 36},
    {"SELECT * FROM v WHERE m = 0 BECAUSE OR k", 1, 37},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k OR", 1, 41},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k AND", 1, 42},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k AND OR j", 1, 43},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k RISING FALLING", 1, 46},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH", 1, 43},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH BANDWIDTH", 1, 53},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH BANDWIDTH 20", 1, 54},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH BANDWIDTH = ", 1, 56},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH SPEED = 2", 1, 44},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH DELTA = 2, DELTA = 3", 1, 55},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH ALPHA = 0.1,", 1, 56},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k extra", 1, 39},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k;", 1, 38},
    {"SELECT *, a FROM v WHERE m = 0 BECAUSE k", 1, 9},
    {"SELECT a, FROM v WHERE m = 0 BECAUSE k", 1, 11},
    {"SELECT a b FROM v WHERE m = 0 BECAUSE k", 1, 10},
    {"SELECT * FROM select WHERE m = 0 BECAUSE k", 1, 15},
    {"SELECT * FROM v WHERE m == 0 BECAUSE k", 1, 26},
    {"SELECT * FROM v WHERE m =< 0 BECAUSE k", 1, 26},
    {"SELECT * FROM v WHERE m ! 0 BECAUSE k", 1, 25},
    {"SELECT * FROM v WHERE m = 1.2.3 BECAUSE k", 1, 27},
    {"SELECT * FROM v WHERE m = 1e BECAUSE k", 1, 27},
    {"SELECT * FROM v WHERE m = - BECAUSE k", 1, 27},
    {"SELECT * FROM v WHERE m = 12abc BECAUSE k", 1, 27},
    {"SELECT * FROM v WHERE m = 0 BECAUSE 9k", 1, 37},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k$", 1, 38},
    {"SELECT * FROM v WHERE m = 0 BECAUSE rising", 1, 37},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH BANDWIDTH = 1e999", 1, 56},
    {"SELECT *\nFROM v\nWHERE m = 0\nBECAUSE", 4, 8},
    {"SELECT *\nFROM v\nWHERE m = x\nBECAUSE k", 3, 11},
    {"select * from v where m = 0 because k or or j", 1, 42},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k WITH BANDWIDTH = 20 DELTA = 5", 1, 59},
    {"SELECT * FROM v WHERE m = 0 BECAUSE (k)", 1, 37},
    {"SELECT * FROM v WHERE m = 0 BECAUSE k AND j RISING OR", 1, 54},
    {"\n\n  SELECT * FROM v WHERE m 5", 3, 27},
}};

}  // namespace oracle
