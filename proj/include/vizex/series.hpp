#pragma once

#include <span>
#include <string>
#include <vector>

namespace vizex {

struct SeriesPoint {
    int frame = 0;
    double value = 0.0;
    bool operator==(const SeriesPoint&) const = default;
};

using Series = std::vector<SeriesPoint>;

// CSV with header `frame,value`; values printed with shortest round-trip form.
std::string series_to_csv(std::span<const SeriesPoint> points);

// Points with from <= frame <= to.
Series slice_series(std::span<const SeriesPoint> points, int from, int to);

std::string format_double(double v);

}  // namespace vizex
