#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace nfb {

// Round to the nearest double that prints with at most 9 significant digits.
// This is the wire precision; values that cross the engine boundary are kept
// in this form so logs replay bit-exactly.
double normalize_number(double x);

std::uint64_t fnv1a64(std::string_view bytes);

double mean(std::span<const double> xs);

// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_sd(std::span<const double> xs);

}  // namespace nfb
